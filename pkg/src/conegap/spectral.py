"""Spectral gap from cone contraction: the fixed p-space, its eigenvalues and the functional c.

A map T that sends C_{pi,a} into itself, and strictly contracts it, has a
unique T-invariant p-dimensional subspace V inside the cone. Iterating
T on any p-space of the cone converges to V. Then lambda = lambda_1 ... lambda_p
is a simple dominant eigenvalue of the compound map on Λ^p, with eigenvector
h = wedge(basis of V) and left eigenvector c.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cone import (check_maps_cone, image_aperture_bound, rho_for_aperture,
                   subspace_aperture, subspace_rho)
from .errors import (ConeExit, ConeMembership, DefectiveLambda, GapViolated,
                     NotContracting, NotInvariant)
from .exterior import (compound_matrix, compound_operator_norm,
                       m_hat, pair, wedge)
from .grassmann import Subspace, d_hausdorff
from .linalg import as_cmatrix, eigenvalues, qr_orthonormalize

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


def power_iterate_subspace(t, cone, v0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                           check_samples=200):
    """Iterate V -> T V (QR-normalised) from V0 (default: span F) until d_H steps drop below tol.

    Returns (V, history) where history holds the d_H distance of every step.
    """
    t = as_cmatrix(t, "T")
    v = Subspace(cone.F) if v0 is None else (v0 if isinstance(v0, Subspace) else Subspace.from_columns(v0))
    if subspace_aperture(cone, v) > cone.a * (1 + 1e-12):
        raise ConeMembership("starting subspace is not inside the cone")
    if check_samples and not check_maps_cone(t, cone, cone, check_samples).sampled_ok:
        raise ConeExit("T does not map the cone into itself on sampled vectors")
    history = []
    q = v.frame
    for _ in range(max_iter):
        q_next, _ = qr_orthonormalize(t @ q)
        nxt = Subspace(q_next)
        step = d_hausdorff(v, nxt)
        history.append(step)
        if subspace_aperture(cone, nxt) > cone.a * (1 + 1e-9):
            raise ConeExit(f"iterate {len(history)} left the cone")
        v, q = nxt, q_next
        if step <= tol:
            return v, history
    raise NotContracting(
        f"no convergence after {max_iter} steps (last step {history[-1]:.3e})")


def restricted_eigs(t, v, rtol=1e-6):
    """Eigenvalues of T restricted to the invariant subspace V, by descending modulus."""
    t = as_cmatrix(t, "T")
    q = v.frame
    tq = t @ q
    residual = np.linalg.norm(tq - q @ (q.conj().T @ tq), 2)
    scale = np.linalg.norm(t, 2)
    if residual > rtol * scale:
        raise NotInvariant(f"subspace is not invariant: residual {residual:.3e} vs {rtol * scale:.3e}")
    return eigenvalues(q.conj().T @ tq)


def _remove_matched(values, taken):
    """Drop from `values` the entries closest to each element of `taken`."""
    rest = list(values)
    for lam in taken:
        k = int(np.argmin([abs(lam - r) for r in rest]))
        rest.pop(k)
    return np.array(rest, dtype=np.complex128)


@dataclass(frozen=True)
class GapReport:
    V: Subspace
    top_eigs: np.ndarray
    lambda_product: complex
    subdominant_modulus: float
    observed_ratio: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)
    spectrum: np.ndarray = field(default=None, repr=False)


def spectral_gap_report(t, cone, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, v0=None):
    """Fixed subspace, its eigenvalues, and a dense-spectrum check that the gap is strict."""
    t = as_cmatrix(t, "T")
    v, history = power_iterate_subspace(t, cone, v0, tol, max_iter)
    top = restricted_eigs(t, v)
    spectrum = eigenvalues(t)
    rest = _remove_matched(spectrum, top)
    sub = float(np.max(np.abs(rest))) if rest.size else 0.0
    lam_p = float(np.min(np.abs(top)))
    scale = max(1.0, float(np.max(np.abs(spectrum))))
    if sub >= lam_p - 1e-12 * scale:
        raise GapViolated(f"|lambda_(p+1)| = {sub:.12g} is not below |lambda_p| = {lam_p:.12g}")
    return GapReport(v, top, complex(np.prod(top)), sub, sub / lam_p, len(history), True,
                     history, spectrum)


def convergence_slope(history, floor=1e-13):
    """Least-squares slope of log(step) against the step index, over steps above `floor`."""
    h = np.asarray(history, dtype=float)
    k = np.nonzero(h > floor)[0]
    if k.size < 2:
        return -math.inf
    return float(np.polyfit(k, np.log(h[k]), 1)[0])


# ------------------------------------------------------------- c tensor


@dataclass(frozen=True)
class CTensor:
    """Linear functional on Λ^p C^n under the bilinear pairing."""

    n: int
    p: int
    coords: np.ndarray

    def __call__(self, u):
        return pair(self.coords, u)


def c_functional(t, cone, v, lam=None):
    """Left eigenvector of the compound map for lambda = prod(restricted eigenvalues), with c(h) = 1.

    h = wedge(frame of V). Raises DefectiveLambda when lambda is not a simple
    eigenvalue of the compound map.
    """
    t = as_cmatrix(t, "T")
    p = v.p
    top = restricted_eigs(t, v)
    lam = complex(np.prod(top)) if lam is None else complex(lam)
    mu = np.linalg.eigvals(t)
    products = np.array([np.prod(mu[list(idx)]) for idx in itertools.combinations(range(t.shape[0]), p)])
    scale = max(1.0, float(np.max(np.abs(products))))
    if np.count_nonzero(np.abs(products - lam) <= 1e-8 * scale) > 1:
        raise DefectiveLambda(f"lambda = {lam:.6g} is a repeated eigenvalue of the compound map")
    c_hat = compound_matrix(t, p)
    _, s, vh = np.linalg.svd(c_hat.T - lam * np.eye(c_hat.shape[0]))
    coords = np.conj(vh[-1])
    h = wedge(v.frame)
    norm = np.sum(coords * h.coords)
    if abs(norm) <= 1e-14 * np.linalg.norm(coords):
        raise DefectiveLambda("left eigenvector is orthogonal to h")
    return CTensor(v.n, p, coords / norm)


def simple_tensor_factors(c, v):
    """Rows l_i with l_i(x) = c(h_1 ∧ ... ∧ x ∧ ... ∧ h_p) (x in slot i), h = frame of V."""
    n, p = v.n, v.p
    h = v.frame
    rows = np.empty((p, n), dtype=np.complex128)
    eye = np.eye(n, dtype=np.complex128)
    for i in range(p):
        for j in range(n):
            cols = h.copy()
            cols[:, i] = eye[:, j]
            rows[i, j] = c(wedge(cols))
    return rows


def simple_tensor_error(c, v):
    """Plücker distance between c and l_1 ∧ ... ∧ l_p built from c."""
    rows = simple_tensor_factors(c, v)
    return float(np.linalg.norm(wedge(rows.T).coords - c.coords))


def spectral_projector(c, v):
    """P = H L with H the frame of V and L the rows l_i; a rank-p projection onto V."""
    return v.frame @ simple_tensor_factors(c, v)


@dataclass(frozen=True)
class DecayFit:
    C: float
    eta: float
    errors: np.ndarray


def decay_fit(t, c, v, lam, u, n_terms=30, floor=1e-13):
    """Fit ||lambda^-k T^k u - c(u) h|| ~ C eta^k for k = 1..n_terms (points above `floor` only)."""
    t = as_cmatrix(t, "T")
    c_hat = compound_matrix(t, v.p)
    h = wedge(v.frame).coords
    target = c(u) * h
    x = u.coords.copy()
    errs = np.empty(n_terms)
    for k in range(n_terms):
        x = c_hat @ x / lam
        errs[k] = np.linalg.norm(x - target)
    ref = max(1.0, float(np.linalg.norm(target)))
    keep = np.nonzero(errs > floor * ref)[0]
    if keep.size < 2:
        return DecayFit(float(errs[0]) if errs.size else 0.0, 0.0, errs)
    slope, intercept = np.polyfit(keep + 1, np.log(errs[keep]), 1)
    return DecayFit(float(math.exp(intercept)), float(math.exp(slope)), errs)


# --------------------------------------------------- norm bracket on 𝓜


@dataclass(frozen=True)
class NormBracket:
    lower: float
    value: float
    upper: float

    @property
    def holds(self):
        scale = max(1.0, abs(self.value))
        return self.lower <= self.value * (1 + 1e-12) + 1e-12 * scale and \
            self.value <= self.upper * (1 + 1e-12) + 1e-12 * scale


def class_rho(t, cone, w):
    """rho usable for both W (W in C[rho]) and the image T(C) (inside C[rho])."""
    return min(subspace_rho(cone, w), rho_for_aperture(image_aperture_bound(t, cone), cone.a))


def operator_norm_bracket(t, cone, w, rho=None):
    """Bracket of ||Λ^p T|| by |m_hat(T x) / m_hat(x)| for a representative x of W in C[rho].

    lower = ratio / K^p and upper = p! (2^(p-1) K^2 / rho^p)^p ratio, with
    m = F*, K = sqrt(1 + a^2).
    """
    t = as_cmatrix(t, "T")
    p = cone.p
    rho = class_rho(t, cone, w) if rho is None else rho
    if not rho > 0:
        raise ConeMembership("no positive rho: W or T(C) touches the cone boundary")
    k = math.sqrt(1.0 + cone.a ** 2)
    m = cone.F.conj().T
    x = wedge(w.frame)
    tx = wedge(t @ w.frame)
    ratio = abs(m_hat(m, tx) / m_hat(m, x))
    lower = ratio / k ** p
    upper = math.factorial(p) * (2 ** (p - 1) * k * k / rho ** p) ** p * ratio
    return NormBracket(lower, compound_operator_norm(t, p), upper)


def dominant_tensor(v):
    """h = wedge(frame of V) as a WedgeTensor."""
    return wedge(v.frame)

