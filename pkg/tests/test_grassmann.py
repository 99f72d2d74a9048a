import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conegap.errors import DimensionMismatch
from conegap.exterior import plucker_norm, wedge
from conegap.grassmann import (Subspace, aligned_representatives, d_delta, d_hausdorff, d_wedge,
                               principal_angles, right_decomposition)
from conegap.linalg import random_frame, random_matrix

from conftest import seeds


def line(*v):
    return Subspace.from_columns(np.array(v, dtype=complex).reshape(-1, 1))


E1, E2 = line(1, 0), line(0, 1)
DIAG = line(1, 1)


def random_pair(seed, n, p):
    rng = np.random.default_rng(seed)
    return Subspace(random_frame(rng, n, p)), Subspace(random_frame(rng, n, p))


def test_subspace_rejects_non_frames():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0], [1.0]]))


def test_principal_angle_examples():
    assert np.allclose(principal_angles(E1, E1).angles, 0)
    assert principal_angles(E1, E2).max == pytest.approx(math.pi / 2)
    assert principal_angles(E1, DIAG).max == pytest.approx(math.pi / 4)


def test_principal_angles_dimension_check():
    with pytest.raises(DimensionMismatch):
        principal_angles(E1, Subspace(np.eye(3)[:, :1]))


def test_small_angles_are_accurate():
    eps = 1e-9
    assert principal_angles(E1, line(1, eps)).max == pytest.approx(eps, rel=1e-6)


def test_distance_examples():
    assert d_hausdorff(E1, E1) == 0 and d_delta(E1, E1) == 0 and d_wedge(E1, E1) == 0
    assert d_hausdorff(E1, E2) == pytest.approx(math.sqrt(2))
    assert d_hausdorff(E1, DIAG) == pytest.approx(0.76536686, abs=1e-8)
    assert d_delta(E1, E2) == pytest.approx(1)
    assert d_delta(E1, DIAG) == pytest.approx(0.70710678, abs=1e-8)
    assert d_wedge(E1, E2) == pytest.approx(math.sqrt(2))


def test_d_wedge_with_angles_zero_and_pi_over_3():
    v = Subspace(np.eye(4)[:, :2].astype(complex))
    w = Subspace.from_columns(np.array([[1, 0], [0, 0.5], [0, math.sqrt(3) / 2], [0, 0]]))
    assert d_wedge(v, w) == pytest.approx(1.0, abs=1e-12)


def _sphere_hausdorff(v, w, k=4000, seed=0):
    """Sampled Hausdorff distance between unit spheres (lower-bound oracle)."""
    rng = np.random.default_rng(seed)

    def sphere(s):
        c = random_matrix(rng, s.p, k)
        x = s.frame @ c
        return x / np.linalg.norm(x, axis=0)

    def one_sided(a, b):
        # min over unit y in b of ||x - y||^2 = 2 - 2 ||proj_b x||
        proj = np.linalg.norm(b.frame.conj().T @ a, axis=0)
        return np.max(np.sqrt(np.maximum(2 - 2 * proj, 0)))

    return max(one_sided(sphere(v), w), one_sided(sphere(w), v))


def test_hausdorff_matches_sphere_sampling_for_lines():
    for v, w in [(E1, E2), (E1, DIAG)]:
        assert _sphere_hausdorff(v, w) == pytest.approx(d_hausdorff(v, w), abs=1e-9)


@given(seeds, st.sampled_from([(4, 2), (5, 2), (6, 3)]))
def test_hausdorff_upper_bounds_sampled_oracle(seed, shape):
    v, w = random_pair(seed, *shape)
    sampled = _sphere_hausdorff(v, w, k=500, seed=seed)
    assert sampled <= d_hausdorff(v, w) + 1e-9
    assert sampled >= 0.5 * d_hausdorff(v, w)


@given(seeds, st.sampled_from([(4, 2), (6, 3)]))
def test_d_wedge_matches_phase_scan(seed, shape):
    v, w = random_pair(seed, *shape)
    vh, wh = v.plucker(), w.plucker()
    phases = np.exp(2j * np.pi * np.arange(10_000) / 10_000)
    scan = np.min(np.linalg.norm(vh.coords[None, :] - phases[:, None] * wh.coords[None, :], axis=1))
    assert d_wedge(v, w) == pytest.approx(scan, abs=1e-6)
    a, b = aligned_representatives(v, w)
    assert plucker_norm(a - b) == pytest.approx(d_wedge(v, w), abs=1e-10)


@given(seeds, st.sampled_from([(4, 1), (5, 2), (6, 3)]))
def test_metric_axioms(seed, shape):
    rng = np.random.default_rng(seed)
    u, v, w = (Subspace(random_frame(rng, *shape)) for _ in range(3))
    for d in (d_hausdorff, d_wedge):
        assert d(u, v) == d(v, u)
        assert d(u, w) <= d(u, v) + d(v, w) + 1e-9


@given(seeds, st.sampled_from([1, 2, 3]), st.sampled_from([4, 6, 8]), st.booleans())
def test_metric_equivalence_and_sandwich(seed, p, n, near):
    rng = np.random.default_rng(seed)
    v = Subspace(random_frame(rng, n, p))
    w = Subspace.from_columns(v.frame + 1e-3 * random_matrix(rng, n, p)) if near else \
        Subspace(random_frame(rng, n, p))
    dh, dd, dw = d_hausdorff(v, w), d_delta(v, w), d_wedge(v, w)
    assert dw <= 2 * p * math.factorial(p) * dh + 1e-12
    assert dd <= dh + 1e-12 <= 2 * dd + 2e-12
    assert dw >= 0.01 * dh


def test_right_decomposition(rng):
    v = Subspace.from_columns(np.eye(4)[:, [2, 0]])
    cols = right_decomposition(v)
    assert len(cols) == 2
    assert np.allclose(np.abs(np.vdot(cols[0], cols[1])), 0)
    for x in cols:
        assert np.linalg.norm(x) == pytest.approx(1)
        assert np.linalg.norm(x[[1, 3]]) == 0


@given(seeds, st.sampled_from([(5, 2), (6, 3), (7, 4)]))
def test_right_decomposition_norm_and_coordinate_bound(seed, shape):
    rng = np.random.default_rng(seed)
    v = Subspace(random_frame(rng, *shape))
    cols = np.column_stack(right_decomposition(v))
    assert plucker_norm(wedge(cols)) == pytest.approx(1, abs=1e-10)
    u = v.frame @ random_matrix(rng, v.p, 1)[:, 0]
    u /= np.linalg.norm(u)
    a = np.linalg.lstsq(cols, u, rcond=None)[0]
    assert np.all(np.abs(a) <= 2.0 ** np.arange(v.p) + 1e-12)


def test_cauchy_sequence_of_decomposables_converges(rng):
    target = Subspace(random_frame(rng, 6, 2))
    g = random_matrix(rng, 6, 2)
    reps = []
    for k in range(40):
        reps.append(Subspace.from_columns(target.frame + 0.5 ** k * g))
    limit = target.plucker()
    _, last = aligned_representatives(target, reps[-1])
    assert plucker_norm(last - limit) <= 1e-8
    # consecutive distances shrink geometrically (Cauchy by construction)
    steps = [d_wedge(a, b) for a, b in zip(reps[10:], reps[11:])]
    assert all(b <= 0.6 * a for a, b in zip(steps, steps[1:]))
