"""Dense complex linear-algebra kernels.

Everything here is a thin, validated layer over LAPACK (through numpy). The
other modules only ever talk to these functions, so the conventions fixed here
(QR phase, eigenvalue ordering) are the ones the whole package relies on.
"""

import functools

import numpy as np

from .errors import DimensionMismatch, NoConvergence, RankDeficient

FRAME_TOL = 1e-10
MAX_EIG_DIM = 32


def as_cmatrix(a, name="matrix"):
    """Return `a` as a finite 2-d complex128 array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_cvector(x, name="vector"):
    v = np.array(x, dtype=np.complex128).reshape(-1)
    if v.size == 0:
        raise DimensionMismatch(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def qr_orthonormalize(columns):
    """Thin QR with the diagonal of R made real and positive.

    Returns ``(Q, R)`` with ``Q`` an n x p frame. Fixing the phases of R makes
    the frame unique, so successive iterates can be compared directly.
    """
    a = as_cmatrix(columns, "columns")
    n, p = a.shape
    if p > n:
        raise RankDeficient(f"{p} columns in dimension {n} cannot be independent")
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
        raise RankDeficient(f"columns are rank deficient (smallest singular value {sv[-1]:.3e})")
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    phase = d / np.abs(d)
    q = q * phase[None, :]
    r = np.conj(phase)[:, None] * r
    # clean the imaginary round-off on the diagonal
    idx = np.arange(p)
    r[idx, idx] = np.abs(r[idx, idx])
    return q, r


def singular_values(m):
    """Singular values in descending order (``min(rows, cols)`` of them)."""
    return np.linalg.svd(as_cmatrix(m), compute_uv=False)


def spectral_norm(m):
    return float(singular_values(m)[0])


def _modulus_order(values, rtol=1e-10):
    vals = np.asarray(values, dtype=np.complex128)
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    tol = rtol * scale

    def cmp(i, j):
        a, b = vals[i], vals[j]
        if abs(abs(a) - abs(b)) > tol:
            return -1 if abs(a) > abs(b) else 1
        if abs(a.real - b.real) > tol:
            return -1 if a.real > b.real else 1
        if abs(a.imag - b.imag) > tol:
            return -1 if a.imag > b.imag else 1
        return 0

    return sorted(range(len(vals)), key=functools.cmp_to_key(cmp))


def sort_by_modulus(values):
    """Descending modulus; ties broken by descending real, then imaginary part."""
    vals = np.asarray(values, dtype=np.complex128)
    return vals[_modulus_order(vals)]


def eigenvalues(m):
    """Eigenvalues of a square matrix (n <= 32), sorted by descending modulus."""
    a = as_cmatrix(m)
    n, k = a.shape
    if n != k:
        raise DimensionMismatch(f"eigenvalues need a square matrix, got {a.shape}")
    if n > MAX_EIG_DIM:
        raise DimensionMismatch(f"eigenvalue solver is limited to n <= {MAX_EIG_DIM}, got {n}")
    try:
        vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed: {exc}", residual=float("nan")) from exc
    return sort_by_modulus(vals)


def is_frame(q, tol=FRAME_TOL):
    q = np.asarray(q)
    if q.ndim != 2 or q.shape[1] > q.shape[0]:
        return False
    gram = q.conj().T @ q
    return bool(np.max(np.abs(gram - np.eye(q.shape[1]))) <= tol)


def random_matrix(rng, rows, cols=None):
    """Standard complex Gaussian matrix."""
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_frame(rng, n, p):
    return qr_orthonormalize(random_matrix(rng, n, p))[0]


def orth_complement(q):
    """Orthonormal basis of the orthogonal complement of span(q)."""
    q = as_cmatrix(q)
    n, p = q.shape
    if p == n:
        return np.zeros((n, 0), dtype=np.complex128)
    u, _, _ = np.linalg.svd(q, full_matrices=True)
    return u[:, p:]
