import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Reduced parameter sets: every CLI experiment finishes in a few seconds.
SMALL_CONFIGS = {
    "exterior-check": {"exterior.pairs": 5, "exterior.matrices": 5, "exterior.tensors": 6,
                       "exterior.samples": 8},
    "metrics": {"metrics.pairs": 30},
    "gauge": {"gauge.pairs": 6, "gauge.distance_pairs": 3, "gauge.starts": 4, "gauge.iterations": 40,
              "gauge.contraction_instances": 3, "gauge.contraction_pairs": 10, "gauge.subspace_checks": 1},
    "spectral-gap": {"spectral.random_instances": 2, "spectral.bracket_instances": 3},
    "lyapunov": {"lyapunov.t_values": [0, 0.3], "lyapunov.n_steps": 2000, "lyapunov.burn_in": 100},
    "sec6": {"sec6.n_steps": 2000, "sec6.burn_in": 100, "sec6.agreement_t": [0, 0.3],
             "sec6.closed_form_samples": 20000, "sec6.mapping_samples": 2000,
             "sec6.mapping_t_grid": [0, 0.5j]},
}


def small_config(experiment, seed=3):
    return {"run.seed": seed, **SMALL_CONFIGS[experiment]}
