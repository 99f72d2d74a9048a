"""p-dimensional subspaces of C^n and the distances between them.

Every metric routes through principal angles. Under the Euclidean norm the
sphere-based distances have closed forms in the angles:

    d_H(V, W)     = 2 sin(theta_max / 2)
    delta(V, W)   = sin(theta_max)
    d_wedge(V, W) = sqrt(2 - 2 prod cos(theta_i))
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .exterior import wedge
from .linalg import FRAME_TOL, as_cmatrix, is_frame, qr_orthonormalize


@dataclass(frozen=True)
class Subspace:
    """A subspace stored as an n x p orthonormal frame (non-canonical)."""

    frame: np.ndarray

    def __post_init__(self):
        q = as_cmatrix(self.frame, "frame")
        if not is_frame(q, FRAME_TOL):
            raise ValueError("frame columns are not orthonormal; use Subspace.from_columns")
        object.__setattr__(self, "frame", q)

    @classmethod
    def from_columns(cls, columns):
        """Span of the given (independent) columns."""
        return cls(qr_orthonormalize(columns)[0])

    @property
    def n(self):
        return self.frame.shape[0]

    @property
    def p(self):
        return self.frame.shape[1]

    def projector(self):
        return self.frame @ self.frame.conj().T

    def plucker(self):
        """Unit Plücker representative wedge(frame)."""
        return wedge(self.frame)


@dataclass(frozen=True)
class PrincipalAngles:
    angles: np.ndarray

    @property
    def max(self):
        return float(self.angles[-1]) if self.angles.size else 0.0


def _check_pair(v, w):
    if v.n != w.n or v.p != w.p:
        raise DimensionMismatch(f"subspaces of shape {v.frame.shape} and {w.frame.shape}")


def principal_angles(v, w):
    """Ascending principal angles in [0, pi/2].

    Cosines come from svd(Qv* Qw) and sines from the part of Qw orthogonal to
    V; combining both keeps small and near-right angles accurate.
    """
    _check_pair(v, w)
    # both orders, averaged: floating-point addition commutes, so d(V, W) == d(W, V) exactly
    angles = 0.5 * (_one_sided_angles(v.frame, w.frame) + _one_sided_angles(w.frame, v.frame))
    return PrincipalAngles(angles)


def _one_sided_angles(qv, qw):
    overlap = qv.conj().T @ qw
    cos = np.clip(np.linalg.svd(overlap, compute_uv=False), 0.0, 1.0)   # descending
    sin = np.clip(np.linalg.svd(qw - qv @ overlap, compute_uv=False), 0.0, 1.0)
    sin = np.sort(sin)                                                  # ascending
    return np.sort(np.clip(np.arctan2(sin, cos), 0.0, np.pi / 2))


def d_hausdorff(v, w):
    """Hausdorff distance between the unit spheres of V and W."""
    return float(2.0 * np.sin(principal_angles(v, w).max / 2.0))


def d_delta(v, w):
    """Largest distance from a unit vector of one space to the other space."""
    return float(np.sin(principal_angles(v, w).max))


def d_wedge(v, w):
    """min over unit phases of the Plücker distance between unit representatives."""
    theta = principal_angles(v, w).angles
    # 1 - prod cos, without cancellation for small angles
    one_minus = -np.expm1(np.sum(np.log1p(-2.0 * np.sin(theta / 2.0) ** 2))) if theta.size else 0.0
    if not np.isfinite(one_minus):        # some angle is exactly pi/2
        one_minus = 1.0
    return float(np.sqrt(max(0.0, 2.0 * one_minus)))


def aligned_representatives(v, w):
    """Unit Plücker representatives (v_hat, w_hat) with the phase of w_hat chosen to minimise the distance."""
    vh, wh = v.plucker(), w.plucker()
    inner = np.vdot(wh.coords, vh.coords)
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return vh, wh * phase


def right_decomposition(v):
    """Orthonormal frame columns; with l_i = <., x_i> they form a right decomposition."""
    return [v.frame[:, i].copy() for i in range(v.p)]
