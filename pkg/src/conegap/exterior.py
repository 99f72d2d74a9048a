"""Exterior powers of C^n: wedge tensors, compound matrices and wedge norms.

Tensors in Λ^p C^n are stored as coordinate vectors on the basis
e_I = e_{i1} ∧ ... ∧ e_{ip}, with multi-indices I in lexicographic order.
Functionals on Λ^p are stored the same way and act through the bilinear
pairing ``sum_I c_I u_I`` (no conjugation), so ``wedge(L.T)`` is the
coordinate vector of l_1 ∧ ... ∧ l_p when the rows of ``L`` are the l_i.
"""

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import as_cmatrix, as_cvector

MAX_COMPOUND_DIM = 1820


@functools.lru_cache(maxsize=None)
def multi_indices(n, p):
    """All strictly increasing p-tuples in range(n), lexicographic, as an (N, p) array."""
    if not 0 <= p <= n:
        raise DimensionMismatch(f"need 0 <= p <= n, got p={p}, n={n}")
    combos = list(itertools.combinations(range(n), p))
    idx = np.array(combos, dtype=np.intp).reshape(len(combos), p)
    idx.setflags(write=False)
    return idx


@functools.lru_cache(maxsize=None)
def _rank_table(n, p):
    return {tuple(int(i) for i in row): r for r, row in enumerate(multi_indices(n, p))}


def index_rank(indices, n):
    """Lexicographic rank of a strictly increasing multi-index."""
    key = tuple(int(i) for i in indices)
    if any(b <= a for a, b in zip(key, key[1:])):
        raise ValueError(f"multi-index {key} is not strictly increasing")
    try:
        return _rank_table(n, len(key))[key]
    except KeyError:
        raise DimensionMismatch(f"multi-index {key} out of range for n={n}") from None


@dataclass(frozen=True)
class WedgeTensor:
    """Element of Λ^p C^n in the lexicographic multi-index basis."""

    n: int
    p: int
    coords: np.ndarray

    def __post_init__(self):
        c = as_cvector(self.coords, "coords")
        if c.size != math.comb(self.n, self.p):
            raise DimensionMismatch(
                f"Λ^{self.p} C^{self.n} has {math.comb(self.n, self.p)} coordinates, got {c.size}")
        object.__setattr__(self, "coords", c)

    def _check(self, other):
        if (self.n, self.p) != (other.n, other.p):
            raise DimensionMismatch(f"Λ^{self.p}C^{self.n} vs Λ^{other.p}C^{other.n}")

    def __add__(self, other):
        self._check(other)
        return WedgeTensor(self.n, self.p, self.coords + other.coords)

    def __sub__(self, other):
        self._check(other)
        return WedgeTensor(self.n, self.p, self.coords - other.coords)

    def __mul__(self, scalar):
        return WedgeTensor(self.n, self.p, self.coords * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return WedgeTensor(self.n, self.p, self.coords / complex(scalar))

    def __neg__(self):
        return WedgeTensor(self.n, self.p, -self.coords)

    @classmethod
    def zero(cls, n, p):
        return cls(n, p, np.zeros(math.comb(n, p), dtype=np.complex128))

    @classmethod
    def basis(cls, n, indices):
        t = cls.zero(n, len(indices))
        t.coords[index_rank(indices, n)] = 1.0
        return t


def _columns(vectors):
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return as_cmatrix(vectors, "vectors")
    vecs = [as_cvector(v) for v in vectors]
    if not vecs:
        raise DimensionMismatch("need at least one vector")
    if len({v.size for v in vecs}) != 1:
        raise DimensionMismatch("vectors have different dimensions")
    return np.stack(vecs, axis=1)


def _minors(x, idx):
    """det(x[I, :]) for every row multi-index I in idx; x is n x p."""
    if idx.shape[1] == 0:
        return np.ones(idx.shape[0], dtype=np.complex128)
    return np.linalg.det(x[idx])


def wedge(vectors):
    """x_1 ∧ ... ∧ x_p.

    `vectors` is either a sequence of p vectors or an n x p array whose
    columns are the factors. Coordinate I is the p x p minor at rows I.
    """
    x = _columns(vectors)
    n, p = x.shape
    if p > n:
        raise DimensionMismatch(f"cannot wedge {p} vectors in dimension {n}")
    # a repeated factor gives two equal columns in every minor: exactly zero
    if any(np.array_equal(x[:, i], x[:, j]) for i in range(p) for j in range(i)):
        return WedgeTensor.zero(n, p)
    return WedgeTensor(n, p, _minors(x, multi_indices(n, p)))


def pair(functional, u):
    """Bilinear pairing of a functional's coordinates with a tensor."""
    c = functional.coords if isinstance(functional, WedgeTensor) else as_cvector(functional)
    if c.size != u.coords.size:
        raise DimensionMismatch("functional and tensor live in different exterior powers")
    return complex(np.sum(c * u.coords))


def compound_matrix(m, p):
    """p-th compound: entry (I, J) is det m[I, J]."""
    a = as_cmatrix(m)
    n, k = a.shape
    if n != k:
        raise DimensionMismatch(f"compound_matrix needs a square matrix, got {a.shape}")
    if not 1 <= p <= n:
        raise DimensionMismatch(f"need 1 <= p <= n, got p={p}, n={n}")
    idx = multi_indices(n, p)
    size = idx.shape[0]
    if size > MAX_COMPOUND_DIM:
        raise DimensionMismatch(f"compound of size {size} exceeds the cap {MAX_COMPOUND_DIM}")
    rows = a[idx]                                  # (N, p, n)
    out = np.empty((size, size), dtype=np.complex128)
    chunk = max(1, 2_000_000 // (size * p * p))
    for start in range(0, size, chunk):
        block = rows[start:start + chunk][:, :, idx]   # (c, p, N, p)
        out[start:start + chunk] = np.linalg.det(np.swapaxes(block, 1, 2))
    return out


def apply_compound(c, u):
    """Apply a compound matrix to a tensor."""
    return WedgeTensor(u.n, u.p, np.asarray(c) @ u.coords)


def plucker_norm(u):
    return float(np.linalg.norm(u.coords))


def _functional_values(ls, u):
    """<l_1 ∧ ... ∧ l_p, u> for a stack of (p, n) functional matrices."""
    idx = multi_indices(u.n, u.p)
    minors = np.linalg.det(np.swapaxes(ls[..., idx], -3, -2))   # (..., N)
    return minors @ u.coords


@functools.lru_cache(maxsize=None)
def _cofactor_layout(n, p):
    """For each (I, t): rank of I without its t-th entry, and the dropped index I_t."""
    idx = multi_indices(n, p)
    table = _rank_table(n, p - 1)
    reduced = np.empty((idx.shape[0], p), dtype=np.intp)
    for r, row in enumerate(idx):
        for t in range(p):
            reduced[r, t] = table[tuple(int(i) for k, i in enumerate(row) if k != t)]
    scatter = np.zeros((idx.shape[0] * p, n))
    scatter[np.arange(idx.shape[0] * p), idx.reshape(-1)] = 1.0
    signs = np.array([(-1.0) ** t for t in range(p)])
    return reduced, scatter, signs


def _row_gradient(ls, i, u):
    """g with <l_1∧...∧l_p, u> = sum_j ls[:, i, j] g[:, j] (Laplace expansion along row i)."""
    n, p = u.n, u.p
    reduced, scatter, signs = _cofactor_layout(n, p)
    others = np.delete(ls, i, axis=1)                     # (S, p-1, n)
    if p == 1:
        sub = np.ones((ls.shape[0], 1), dtype=np.complex128)
        terms = np.broadcast_to(u.coords[None, :, None], (ls.shape[0], u.coords.size, 1))
    else:
        sub_idx = multi_indices(n, p - 1)
        sub = np.linalg.det(np.swapaxes(others[..., sub_idx], -3, -2))   # (S, N')
        terms = sub[:, reduced] * (u.coords[None, :, None] * signs[None, None, :])
    g = terms.reshape(ls.shape[0], -1) @ scatter
    return g * (-1.0) ** i


def _ascend(ls, u, iterations, rtol=1e-13):
    """Block coordinate ascent of |<l_1∧...∧l_p, u>| over unit rows, for a stack of starts.

    The pairing is linear in each row, so the best unit row given the others
    is the normalised conjugate of the row gradient; no update decreases |f|.
    """
    p = u.p
    value = np.abs(_functional_values(ls, u))
    for _ in range(iterations):
        previous = value
        for i in range(p):
            g = _row_gradient(ls, i, u)
            norm = np.linalg.norm(g, axis=1)
            ok = norm > 0
            ls[ok, i, :] = np.conj(g[ok]) / norm[ok, None]
            value = np.where(ok, norm, value)
        if np.all(value - previous <= rtol * np.maximum(value, 1e-300)):
            break
    return value


def wedge1_lower(u, samples=64, refine=True, seed=0, iterations=200):
    """Certified lower bound on the sup-over-unit-functionals wedge norm.

    Starts: the dual of the largest basis coordinate, then `samples` random
    unit functional tuples drawn from `seed` (a prefix-stable stream, so the
    result is non-decreasing in `samples`). Every returned value is attained
    by an explicit tuple of unit functionals.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not np.any(u.coords):
        return 0.0
    n, p = u.n, u.p
    idx = multi_indices(n, p)
    starts = np.empty((samples + 1, p, n), dtype=np.complex128)
    starts[0] = 0.0
    starts[0, np.arange(p), idx[int(np.argmax(np.abs(u.coords)))]] = 1.0
    rng = np.random.default_rng(seed)
    for s in range(1, samples + 1):
        z = rng.standard_normal((p, n)) + 1j * rng.standard_normal((p, n))
        starts[s] = z / np.linalg.norm(z, axis=1, keepdims=True)
    if refine:
        values = _ascend(starts, u, iterations)
    else:
        values = np.abs(_functional_values(starts, u))
    return float(np.max(values))


@functools.lru_cache(maxsize=None)
def _givens_pairs(n, p, j, k):
    """Multi-indices touched by a rotation in the (j, k) plane.

    Returns (ranks containing j but not k, matching ranks with j -> k, signs).
    The sign is the parity of moving k into j's slot.
    """
    table = _rank_table(n, p)
    rj, rk, sign = [], [], []
    lo, hi = min(j, k), max(j, k)
    for row in multi_indices(n, p):
        s = set(int(i) for i in row)
        if j in s and k not in s:
            other = tuple(sorted((s - {j}) | {k}))
            between = sum(1 for i in s if lo < i < hi)
            rj.append(table[tuple(int(i) for i in row)])
            rk.append(table[other])
            sign.append(-1.0 if between % 2 else 1.0)
    return np.array(rj, dtype=np.intp), np.array(rk, dtype=np.intp), np.array(sign)


def apply_compound_givens(coords, n, p, j, k, alpha, beta):
    """Apply the compound of G = [[alpha, -conj(beta)], [beta, conj(alpha)]] acting on (e_j, e_k).

    G must be in SU(2) (|alpha|^2 + |beta|^2 = 1), so indices holding both j
    and k are left unchanged.
    """
    rj, rk, s = _givens_pairs(n, p, j, k)
    out = np.array(coords, dtype=np.complex128, copy=True)
    cj, ck = coords[rj], coords[rk]
    out[rj] = alpha * cj - np.conj(beta) * s * ck
    out[rk] = beta * s * cj + np.conj(alpha) * ck
    return out


_ANGLES = np.array([np.pi / 4, -np.pi / 4, np.pi / 8, -np.pi / 8, np.pi / 32, -np.pi / 32])
_GIVENS_ALPHA = np.repeat(np.cos(_ANGLES), 2).astype(np.complex128)
_GIVENS_BETA = np.repeat(np.sin(_ANGLES), 2) * np.tile([1.0, 1.0j], _ANGLES.size)


def wedge2_upper(u, refine=True, max_sweeps=100):
    """Upper bound on the inf-over-decompositions wedge norm.

    Any unitary basis change U turns u into sum_I c'_I (Ue)_I with each basis
    wedge a product of unit vectors, so sum |c'_I| bounds the norm from above.
    Starts from U = I and greedily accepts plane rotations that lower the sum.
    """
    c = u.coords.copy()
    best = float(np.sum(np.abs(c)))
    if not refine or u.p in (0, u.n) or best == 0.0:
        return best
    n, p = u.n, u.p
    a = _GIVENS_ALPHA[:, None]
    b = _GIVENS_BETA[:, None]
    for _ in range(max_sweeps):
        improved = False
        for j in range(n):
            for k in range(j + 1, n):
                rj, rk, s = _givens_pairs(n, p, j, k)
                cj, ck = c[rj][None, :], c[rk][None, :]
                new_j = a * cj - np.conj(b) * s * ck
                new_k = b * s * cj + np.conj(a) * ck
                untouched = best - np.sum(np.abs(c[rj])) - np.sum(np.abs(c[rk]))
                totals = untouched + np.sum(np.abs(new_j), axis=1) + np.sum(np.abs(new_k), axis=1)
                pick = int(np.argmin(totals))
                if totals[pick] < best * (1 - 1e-12):
                    c = c.copy()
                    c[rj], c[rk] = new_j[pick], new_k[pick]
                    best = float(np.sum(np.abs(c)))
                    improved = True
        if not improved:
            break
    return best


@dataclass(frozen=True)
class ApertureMap:
    """Linear map m: C^n -> C^p stored as a p x n matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_cmatrix(self.matrix, "aperture map"))

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]

    def __call__(self, x):
        return self.matrix @ as_cvector(x)


def m_hat(m, u):
    """The determinant functional x_1∧...∧x_p -> det(m x_1, ..., m x_p), extended linearly."""
    mat = m.matrix if isinstance(m, ApertureMap) else as_cmatrix(m)
    if mat.shape != (u.p, u.n):
        raise DimensionMismatch(f"m has shape {mat.shape}, tensor needs ({u.p}, {u.n})")
    return complex(_minors(mat.T, multi_indices(u.n, u.p)) @ u.coords)


def compound_operator_norm(m, p):
    """Operator norm of Λ^p m for the Plücker norm (largest singular value of the compound)."""
    a = as_cmatrix(m)
    if a.shape[0] > 16:
        raise DimensionMismatch(f"compound_operator_norm is limited to n <= 16, got {a.shape[0]}")
    return float(np.linalg.svd(compound_matrix(a, p), compute_uv=False)[0])
