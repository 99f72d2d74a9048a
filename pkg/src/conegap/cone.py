"""The cones C_{pi,a} = {x : ||(I - pi)x|| <= a ||pi x||} and their projective gauge.

pi = F F* is the orthogonal projection onto the span of an n x p frame F.
Writing x_F = F* x and x_G = (I - pi) x, the set E(x, y) = {z : zx - y not in C}
is {z : A|z|^2 - 2 Re(conj(B) z) + C0 > 0} with

    A  = ||x_G||^2 - a^2 ||x_F||^2
    B  = <x_G, y_G> - a^2 <x_F, y_F>        (<u, v> = sum conj(u_i) v_i)
    C0 = ||y_G||^2 - a^2 ||y_F||^2

For x inside the cone A < 0 and E(x, y) is an open disk, so the gauge
log(sup|E| / inf|E|) has a closed form.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import ConeMembership, DimensionMismatch, InvalidAperturePair
from .exterior import ApertureMap
from .grassmann import Subspace
from .linalg import FRAME_TOL, as_cmatrix, as_cvector, is_frame, orth_complement

MEMBERSHIP_RTOL = 1e-12


@dataclass(frozen=True)
class ProjectiveCone:
    """C_{pi,a} for pi the orthogonal projection onto span(F)."""

    F: np.ndarray
    a: float

    def __post_init__(self):
        f = as_cmatrix(self.F, "F")
        if not is_frame(f, FRAME_TOL):
            raise ValueError("F must have orthonormal columns")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"aperture must be positive and finite, got {self.a}")
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "a", float(self.a))

    @classmethod
    def coordinate(cls, n, p, a):
        """Cone around the span of the first p coordinate vectors."""
        return cls(np.eye(n, p, dtype=np.complex128), a)

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def p(self):
        return self.F.shape[1]

    def with_aperture(self, a):
        return ProjectiveCone(self.F, a)

    def split(self, x):
        """(x_F, x_G): coordinates F* x in C^p and the component orthogonal to F."""
        x = as_cvector(x)
        if x.size != self.n:
            raise DimensionMismatch(f"vector of length {x.size} for a cone in C^{self.n}")
        xf = self.F.conj().T @ x
        return xf, x - self.F @ xf

    def margin(self, x):
        """a ||pi x|| - ||(I - pi) x||; non-negative exactly on the cone."""
        xf, xg = self.split(x)
        return float(self.a * np.linalg.norm(xf) - np.linalg.norm(xg))

    def contains(self, x, rtol=MEMBERSHIP_RTOL):
        """margin >= 0, up to rtol * ||x|| to absorb round-off on the boundary."""
        return self.margin(x) >= -rtol * float(np.linalg.norm(as_cvector(x)))

    def contains_rho(self, x, rho):
        """Sufficient test for the ball B(x, rho ||x||) to lie in the cone."""
        if rho <= 0:
            raise ValueError("rho must be positive")
        xf, xg = self.split(x)
        nx = float(np.linalg.norm(as_cvector(x)))
        nf, ng = float(np.linalg.norm(xf)), float(np.linalg.norm(xg))
        return nf > rho * nx and ng + rho * nx <= self.a * (nf - rho * nx)


# ---------------------------------------------------------------- gauge


@dataclass(frozen=True)
class GaugeRegion:
    """E(x, y) = {z : A|z|^2 - 2 Re(conj(B) z) + C0 > 0}, classified."""

    A: float
    B: complex
    C0: float
    kind: str                       # "empty", "disk", "halfplane" or "degenerate"
    center: complex = 0j
    radius: float = 0.0

    def indicator(self, z):
        """True where z lies in the region (vectorised over z)."""
        z = np.asarray(z)
        return self.A * np.abs(z) ** 2 - 2.0 * np.real(np.conj(self.B) * z) + self.C0 > 0


def _collinear(x, y, rtol=1e-12):
    s = np.linalg.svd(np.stack([x, y], axis=1), compute_uv=False)
    return s[1] <= rtol * s[0]


def _region_from_parts(xf, xg, yf, yg, a, collinear=False):
    a2 = a * a
    A = float(np.vdot(xg, xg).real - a2 * np.vdot(xf, xf).real)
    B = complex(np.vdot(xg, yg) - a2 * np.vdot(xf, yf))
    C0 = float(np.vdot(yg, yg).real - a2 * np.vdot(yf, yf).real)
    if collinear:
        return GaugeRegion(A, B, C0, "empty")
    scale = max(np.vdot(xf, xf).real, np.vdot(xg, xg).real, 1e-300) * (1.0 + a2)
    if abs(A) <= 1e-13 * scale:
        ybound = math.sqrt(max(np.vdot(yf, yf).real, np.vdot(yg, yg).real)) * math.sqrt(1.0 + a2)
        if abs(B) <= 1e-13 * math.sqrt(scale) * ybound:
            return GaugeRegion(A, B, C0, "degenerate")
        return GaugeRegion(A, B, C0, "halfplane")
    if A > 0:
        return GaugeRegion(A, B, C0, "degenerate")
    center = B / A
    disc = abs(B) ** 2 / A ** 2 - C0 / A
    if disc <= 0:
        return GaugeRegion(A, B, C0, "empty")
    return GaugeRegion(A, B, C0, "disk", center, math.sqrt(disc))


def _require_member(cone, v, name):
    if not np.any(v) or not cone.contains(v):
        raise ConeMembership(f"{name} is not a non-zero vector of the cone (margin {cone.margin(v):.3e})")


def gauge_region(cone, x, y):
    """Conic-section description of E(x, y) = {z : zx - y not in C}."""
    x, y = as_cvector(x, "x"), as_cvector(y, "y")
    _require_member(cone, x, "x")
    _require_member(cone, y, "y")
    xf, xg = cone.split(x)
    yf, yg = cone.split(y)
    return _region_from_parts(xf, xg, yf, yg, cone.a, _collinear(x, y))


def _delta_of_region(region):
    if region.kind == "empty":
        return 0.0
    if region.kind != "disk":
        return math.inf
    c = abs(region.center)
    r = region.radius
    if c <= r:
        return math.inf
    # log((c + r) / (c - r)) written to stay accurate for small r / c
    return float(2.0 * math.atanh(r / c))


def gauge_delta(cone, x, y):
    """Projective gauge log(sup|E(x,y)| / inf|E(x,y)|); 0 when E is empty."""
    return _delta_of_region(gauge_region(cone, x, y))


def d1(cone, x, y):
    """Sectional gauge: 0 when span(x, y) lies in the cone, else the gauge of the section."""
    return gauge_delta(cone, x, y)


# ------------------------------------------------------- subspace data


def _as_subspace(v):
    return v if isinstance(v, Subspace) else Subspace.from_columns(v)


def subspace_aperture(cone, v):
    """Smallest a' with V inside C_{pi,a'} (inf if V meets ker pi).

    In the basis X of V normalised by F* X = I, a vector is X b with
    pi-part F b and orthogonal part (X - F) b, so the aperture is sigma_max(X - F).
    """
    v = _as_subspace(v)
    if v.n != cone.n or v.p != cone.p:
        raise DimensionMismatch(f"subspace {v.frame.shape} vs cone frame {cone.F.shape}")
    fq = cone.F.conj().T @ v.frame
    s = np.linalg.svd(fq, compute_uv=False)
    if s[-1] <= 1e-14:
        return math.inf
    x = v.frame @ np.linalg.inv(fq)
    return float(np.linalg.svd(x - cone.F, compute_uv=False)[0])


def subspace_in_cone(cone, v, rtol=MEMBERSHIP_RTOL):
    return subspace_aperture(cone, v) <= cone.a * (1.0 + rtol)


def subspace_rho(cone, v):
    """A rho such that every unit x in V passes contains_rho(cone, x, rho).

    The closed form is tight for the extreme vectors of V, so it is shrunk by
    a relative 1e-9 to keep the membership test robust to round-off.
    """
    return rho_for_aperture(subspace_aperture(cone, v), cone.a) * (1.0 - 1e-9)


def diameter_bound(a_inner, a_outer):
    """2 log((a_outer + a_inner) / (a_outer - a_inner)): the gauge diameter of C_{pi,a_inner} in C_{pi,a_outer}."""
    if not (0 <= a_inner < a_outer) or not math.isfinite(a_outer):
        raise InvalidAperturePair(f"need 0 <= a_inner < a_outer, got ({a_inner}, {a_outer})")
    return 2.0 * math.log((a_outer + a_inner) / (a_outer - a_inner))


# ------------------------------------------------------- cone distance


@dataclass(frozen=True)
class ConeDistanceEstimate:
    lower: float
    upper: float
    evaluations: int


def _projective_coeffs(params, p):
    """C^p representative from 2p - 1 reals (first coordinate real)."""
    out = np.empty(p, dtype=np.complex128)
    out[0] = params[0]
    out[1:] = params[1:p] + 1j * params[p:2 * p - 1]
    return out


def cone_distance(cone, v, w, starts=32, iterations=300, seed=0):
    """Bracket sup_{x in V*, y in W*} d1(x, y).

    `lower` is the best value found by multistart Nelder-Mead over projective
    coordinates of x and y; the starts come from a prefix-stable stream, so
    more starts never lower it. `upper` is the diameter bound when both spaces
    sit strictly inside the cone, otherwise inf.
    """
    v, w = _as_subspace(v), _as_subspace(w)
    apertures = []
    for name, s in (("V", v), ("W", w)):
        ap = subspace_aperture(cone, s)
        if not ap <= cone.a * (1.0 + MEMBERSHIP_RTOL):
            raise ConeMembership(f"{name} is not contained in the cone (aperture {ap:.6g} > {cone.a:.6g})")
        apertures.append(ap)
    inner = max(apertures)
    upper = diameter_bound(inner, cone.a) if inner < cone.a else math.inf

    p = cone.p
    a2 = cone.a ** 2
    fh = cone.F.conj().T
    vf, vg = fh @ v.frame, v.frame - cone.F @ (fh @ v.frame)
    wf, wg = fh @ w.frame, w.frame - cone.F @ (fh @ w.frame)
    same = np.linalg.svd(np.concatenate([v.frame, w.frame], axis=1), compute_uv=False)
    # A, B, C0 as quadratic / sesquilinear forms in the frame coefficients
    form_a = vg.conj().T @ vg - a2 * (vf.conj().T @ vf)
    form_b = vg.conj().T @ wg - a2 * (vf.conj().T @ wf)
    form_c = wg.conj().T @ wg - a2 * (wf.conj().T @ wf)
    evaluations = 0

    def value(params):
        nonlocal evaluations
        evaluations += 1
        al = _projective_coeffs(params[:2 * p - 1], p)
        be = _projective_coeffs(params[2 * p - 1:], p)
        na, nb = np.vdot(al, al).real, np.vdot(be, be).real
        if na == 0.0 or nb == 0.0:
            return 0.0
        A = np.vdot(al, form_a @ al).real
        if A >= -1e-13 * (1.0 + a2) * na:     # x on the boundary: unbounded region
            return math.inf
        B = np.vdot(al, form_b @ be)
        disc = (B.real ** 2 + B.imag ** 2) / A ** 2 - np.vdot(be, form_c @ be).real / A
        if disc <= 0.0:
            return 0.0
        ratio = math.sqrt(disc) / abs(B / A)
        return 2.0 * math.atanh(ratio) if ratio < 1.0 else math.inf

    if same[p] <= 1e-12 * same[0]:          # V = W: every pair spans a subspace of V
        return ConeDistanceEstimate(0.0, upper, 0)

    rng = np.random.default_rng(seed)
    best = 0.0
    dim = 4 * p - 2
    for _ in range(starts):
        x0 = rng.standard_normal(dim)
        f0 = value(x0)
        best = max(best, f0)
        if p == 1 or not math.isfinite(f0):
            if not math.isfinite(f0):
                break
            continue
        res = minimize(lambda q: -min(value(q), 1e300), x0, method="Nelder-Mead",
                       options={"maxiter": iterations, "xatol": 1e-10, "fatol": 1e-12})
        best = max(best, -float(res.fun))
    return ConeDistanceEstimate(best, upper, evaluations)


# ----------------------------------------------------- aperture & maps


def aperture_map(cone):
    """m = F* (norm 1) and K = sqrt(1 + a^2), so ||x|| <= K |m(x)| on the cone."""
    return ApertureMap(cone.F.conj().T.copy()), math.sqrt(1.0 + cone.a ** 2)


@dataclass(frozen=True)
class MapsConeReport:
    sampled_ok: bool
    certified: bool
    worst_margin: float


def sample_cone_vectors(cone, count, rng, boundary_fraction=0.5):
    """Unit vectors of the cone, a fraction of them on its boundary (columns of an n x count array)."""
    n, p = cone.n, cone.p
    comp = orth_complement(cone.F)
    alpha = rng.standard_normal((p, count)) + 1j * rng.standard_normal((p, count))
    alpha /= np.linalg.norm(alpha, axis=0)
    if comp.shape[1] == 0:
        return cone.F @ alpha
    g = rng.standard_normal((comp.shape[1], count)) + 1j * rng.standard_normal((comp.shape[1], count))
    g /= np.linalg.norm(g, axis=0)
    ratio = cone.a * rng.uniform(0.0, 1.0, count)
    ratio[: int(boundary_fraction * count)] = cone.a
    x = cone.F @ alpha + (comp @ g) * ratio
    return x / np.linalg.norm(x, axis=0)


def _relative_margins(cone, xs):
    fh = cone.F.conj().T
    xf = fh @ xs
    xg = xs - cone.F @ xf
    norms = np.linalg.norm(xs, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = (cone.a * np.linalg.norm(xf, axis=0) - np.linalg.norm(xg, axis=0)) / norms
    return np.where(norms > 0, rel, -np.inf)


def check_maps_cone(t, src, dst, samples=1000, seed=0):
    """Does T map C_{pi,b} (src) into C_{pi,a} (dst)?

    worst_margin is the smallest relative margin margin_dst(Tx) / ||Tx|| over
    the sampled unit x of src. `certified` is the block-norm sufficient
    condition ||G T F|| + b ||G T G|| <= a (sigma_min(F* T F) - b ||F* T G||).
    """
    t = as_cmatrix(t, "T")
    if t.shape != (src.n, src.n) or dst.n != src.n or dst.p != src.p:
        raise DimensionMismatch("T, src and dst dimensions disagree")
    if np.linalg.norm(src.F @ src.F.conj().T - dst.F @ dst.F.conj().T) > 1e-9:
        raise DimensionMismatch("src and dst must share the projection")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    xs = sample_cone_vectors(src, samples, rng)
    rel = _relative_margins(dst, t @ xs)
    worst = float(np.min(rel))
    sampled_ok = bool(worst >= -MEMBERSHIP_RTOL)

    bound = image_aperture_bound(t, src)
    certified = bound <= dst.a
    return MapsConeReport(sampled_ok, bool(certified), worst)


def image_aperture_bound(t, cone):
    """Certified a' with T(C_{pi,b}) inside C_{pi,a'} (inf when no bound follows).

    For x = f + g with ||g|| <= b ||f||, the triangle inequality gives
    ||G T x|| <= (||G T F|| + b ||G T G||) ||f|| and
    ||F* T x|| >= (sigma_min(F* T F) - b ||F* T G||) ||f||.
    """
    t = as_cmatrix(t, "T")
    f = cone.F
    comp = orth_complement(f)
    b = cone.a
    smin = float(np.linalg.svd(f.conj().T @ t @ f, compute_uv=False)[-1])
    if comp.shape[1] == 0:
        return 0.0 if smin > 0 else math.inf
    tgf = np.linalg.norm(comp.conj().T @ t @ f, 2)
    tgg = np.linalg.norm(comp.conj().T @ t @ comp, 2)
    tfg = np.linalg.norm(f.conj().T @ t @ comp, 2)
    right = smin - b * tfg
    if right <= 0:
        return math.inf
    return float((tgf + b * tgg) / right)


def rho_for_aperture(a_inner, a):
    """rho with C_{pi,a_inner} inside C_{pi,a}[rho] (0 if a_inner >= a)."""
    if not a_inner < a:
        return 0.0
    return (a - a_inner) / ((1.0 + a) * math.sqrt(1.0 + a_inner * a_inner))


# ------------------------------------------------------------- oracle


def _excess_grid(parts, a, z):
    """Membership margin ||(I - pi) w|| - a ||pi w|| for w = z x - y, on an array of z.

    `parts` holds the Gram scalars (||x||^2, <x, y>, ||y||^2) of the F and G
    components, so each point costs O(1).
    """
    def norm(xx, xy, yy):
        return np.sqrt(np.maximum(np.abs(z) ** 2 * xx - 2 * (z * xy).real + yy, 0.0))
    return norm(*parts[1]) - a * norm(*parts[0])


def radial_gauge_oracle(cone, x, y, n_angles=360, n_radii=240, r_span=(1e-6, 1e6), starts=8):
    """log(sup|E| / inf|E|) from the membership margin alone (no closed form).

    E = {z : z x - y not in the cone}. Along a ray from 0 both squared norms in
    the margin are quadratic in r, so each ray meets E in at most one interval.
    Its end points are roots of the margin around the ray's polished peak, and
    are optimised over the arc of angles whose rays meet E. Returns 0 when no
    point of E is found and inf when E reaches the edge of the radial range.
    """
    x, y = as_cvector(x), as_cvector(y)
    xf, yf = cone.F.conj().T @ x, cone.F.conj().T @ y
    xg, yg = x - cone.F @ xf, y - cone.F @ yf
    # Gram scalars (||x||^2, vdot(y, x), ||y||^2) of the F and G parts
    parts = [(np.vdot(u, u).real, np.vdot(v, u), np.vdot(v, v).real) for u, v in ((xf, yf), (xg, yg))]
    log_r = np.linspace(math.log(r_span[0]), math.log(r_span[1]), n_radii)
    radii = np.exp(log_r)
    phis = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    grid = _excess_grid(parts, cone.a, np.outer(np.exp(1j * phis), radii))   # (angles, radii)
    if (grid[:, 0] > 0).any() or (grid[:, -1] > 0).any():
        return math.inf

    def excess(r, phi):
        z = r * complex(math.cos(phi), math.sin(phi))
        g, f = z * xg - yg, z * xf - yf
        return math.sqrt(np.vdot(g, g).real) - cone.a * math.sqrt(np.vdot(f, f).real)

    def ray(phi):
        """(peak margin, r at the peak, grid margins) along the ray at angle phi."""
        row = _excess_grid(parts, cone.a, radii * np.exp(1j * phi))
        i = int(np.argmax(row))
        lo, hi = log_r[max(i - 1, 0)], log_r[min(i + 1, n_radii - 1)]
        res = minimize_scalar(lambda s: -excess(math.exp(s), phi), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        at_grid = excess(radii[i], phi)
        if -res.fun > at_grid:
            return float(-res.fun), math.exp(float(res.x)), row
        return at_grid, float(radii[i]), row

    def peak(phi):
        return ray(phi)[0]

    # a point of E: from the grid, else by polishing the most promising cells
    row_max = grid.max(axis=1)
    if (row_max > 0).any() and peak(float(phis[int(np.argmax(row_max))])) > 0:
        k_hit = int(np.argmax(row_max))
        phi_hit = float(phis[k_hit])
    else:
        k_hit = phi_hit = None
        for k in np.argsort(row_max)[::-1][:starts]:
            s0 = log_r[int(np.argmax(grid[k]))]
            res = minimize(lambda v: -excess(math.exp(v[1]), v[0]), [phis[k], s0],
                           method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
            if -res.fun > 0:
                phi_hit = float(res.x[0])
                break
    if phi_hit is None:
        return 0.0

    # the hit angles form an arc around phi_hit; walk the grid outwards, then solve for its ends
    step = 2 * np.pi / n_angles
    arc = []
    for sign in (-1, 1):
        inside, k = phi_hit, 1
        while k <= n_angles:
            phi = phi_hit + sign * k * step
            # trust the grid only strictly inside its arc of hits; check the edge directly
            on_grid = k_hit is not None and row_max[(k_hit + sign * k) % n_angles] > 0 \
                and row_max[(k_hit + sign * (k + 1)) % n_angles] > 0
            if not (on_grid or peak(phi) > 0):
                break
            inside = phi
            k += 1
        if k > n_angles:                    # every ray meets E
            return math.inf
        outside = phi_hit + sign * k * step
        lo, hi = (inside, outside) if sign > 0 else (outside, inside)
        arc.append(brentq(peak, lo, hi, xtol=1e-13))

    def ends(phi):
        """(r_in, r_out) for the ray at angle phi, or None if it misses E."""
        top, r_star, row = ray(phi)
        if top <= 0:
            return None
        # nearest grid radii on either side where the (direct) margin is not positive
        left = next(r for r in radii[radii < r_star][::-1] if excess(r, phi) <= 0)
        right = next(r for r in radii[radii > r_star] if excess(r, phi) <= 0)
        r_in = brentq(excess, left, r_star, args=(phi,), xtol=1e-300, rtol=1e-15)
        r_out = brentq(excess, r_star, right, args=(phi,), xtol=1e-300, rtol=1e-15)
        return r_in, r_out

    def r_in(phi):
        e = ends(phi)
        return e[0] if e else r_span[1]

    def r_out(phi):
        e = ends(phi)
        return -e[1] if e else 0.0

    opts = {"xatol": 1e-9}
    inner = minimize_scalar(r_in, bounds=tuple(arc), method="bounded", options=opts)
    outer = minimize_scalar(r_out, bounds=tuple(arc), method="bounded", options=opts)
    return float(math.log(-float(outer.fun) / float(inner.fun)))
