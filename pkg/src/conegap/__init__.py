"""Projective cones of p-dimensional subspaces, Grassmannian metrics, spectral gaps
and Lyapunov exponents of random complex matrix products."""

from .cone import (ProjectiveCone, check_maps_cone, cone_distance, d1, diameter_bound,
                   gauge_delta, gauge_region, image_aperture_bound, radial_gauge_oracle,
                   rho_for_aperture, subspace_aperture, subspace_in_cone, subspace_rho)
from .errors import *  # noqa: F401,F403
from .exterior import (WedgeTensor, compound_matrix, compound_operator_norm, pair,
                       plucker_norm, wedge, wedge1_lower, wedge2_upper)
from .grassmann import Subspace, d_delta, d_hausdorff, d_wedge, principal_angles
from .randprod import (NoiseModel, benettin, benettin_orders, chi3_closed_form,
                       gauge_cocycle_estimate, harmonicity_check, running_log_det,
                       sec6_cone, sec6_family, verify_sec6_cone_mapping)
from .spectral import (c_functional, operator_norm_bracket, power_iterate_subspace,
                       spectral_gap_report)

__version__ = "0.1.0"
