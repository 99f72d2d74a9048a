"""Random products of cone-contracting matrices and their Lyapunov exponents.

chi_p(t) = lim (1/n) log ||Λ^p (M_{n-1}(t) ... M_0(t))|| for i.i.d. noise xi_k in the
closed unit disk. Two estimators are provided:

* `benettin`: propagate a frame, re-orthonormalise every step, sum log R_ii.
* `gauge_cocycle_estimate`: propagate a p-space normalised by m = F* and
  average log |m_hat(M_hat w)|, the cocycle whose integral equals chi_p.

Both are vectorised over a batch of t values driven by the same noise
sequence (common random numbers), which is what makes the mean-value
harmonicity test sharp.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cone import ProjectiveCone, check_maps_cone, sample_cone_vectors
from .errors import ApertureDegenerate, ConeExit, DimensionMismatch, DomainExit, SingularStep
from .exterior import compound_operator_norm, wedge
from .linalg import as_cmatrix

N_BATCHES = 20
CHUNK = 2048
CONE_CHECK_EVERY = 64


# ------------------------------------------------------------------ noise


@dataclass(frozen=True)
class NoiseModel:
    """i.i.d. noise in the closed unit disk.

    kind is "disk" (uniform by area), "circle" (uniform on |xi| = radius) or
    "fixed" (cycles through `samples`). Draw i uses outputs 2i and 2i + 1 of
    a PCG64 stream seeded with `seed`, so any index can be produced directly.
    """

    kind: str = "disk"
    seed: int = 0
    radius: float = 1.0
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in ("disk", "circle", "fixed"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "circle" and not 0 <= self.radius <= 1:
            raise ValueError("circle radius must be in [0, 1]")
        if self.kind == "fixed":
            vals = tuple(complex(s) for s in self.samples)
            if not vals or any(abs(s) > 1 for s in vals):
                raise ValueError("fixed samples must be non-empty and inside the closed unit disk")
            object.__setattr__(self, "samples", vals)

    @classmethod
    def uniform_disk(cls, seed):
        return cls("disk", seed)

    @classmethod
    def uniform_circle(cls, seed, radius=1.0):
        return cls("circle", seed, radius)

    @classmethod
    def fixed(cls, samples):
        return cls("fixed", 0, 1.0, tuple(samples))


def sample_block(model, start, count):
    """xi_start, ..., xi_{start+count-1}."""
    if model.kind == "fixed":
        vals = np.array(model.samples, dtype=np.complex128)
        return vals[np.arange(start, start + count) % vals.size]
    bits = np.random.PCG64(model.seed)
    bits.advance(2 * start)
    u = np.random.Generator(bits).random(2 * count).reshape(count, 2)
    phase = np.exp(2j * np.pi * u[:, 1])
    if model.kind == "disk":
        return np.sqrt(u[:, 0]) * phase
    return model.radius * phase


def sample_xi(model, index):
    return complex(sample_block(model, index, 1)[0])


def resolve_noise(noise, seed):
    """The noise model to use: `seed` (when given) overrides the model's own seed; default uniform disk."""
    if noise is None:
        return NoiseModel.uniform_disk(0 if seed is None else seed)
    return noise if seed is None else replace(noise, seed=seed)


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class MatrixFamily:
    """(t, xi) -> n x n matrix; `generator` broadcasts over array-valued t and xi."""

    n: int
    generator: object
    name: str = "family"
    derivative: object = None

    def __call__(self, t, xi):
        t = np.asarray(t, dtype=np.complex128)
        xi = np.asarray(xi, dtype=np.complex128)
        return self.generator(t, xi)

    def dt(self, t, xi):
        if self.derivative is None:
            raise NotImplementedError(f"{self.name} has no t-derivative")
        return self.derivative(np.asarray(t, dtype=np.complex128), np.asarray(xi, dtype=np.complex128))


def _stack(rows):
    """Assemble a broadcast matrix from nested lists of equally-shaped arrays."""
    shape = np.broadcast_shapes(*(np.shape(e) for row in rows for e in row))
    out = np.empty(shape + (len(rows), len(rows[0])), dtype=np.complex128)
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            out[..., i, j] = e
    return out


def _sec6(t, xi):
    zero = np.zeros(np.broadcast_shapes(t.shape, xi.shape))
    return _stack([[10 + t * xi, t + xi, 1j * t + zero],
                   [t + xi, 6 + zero, xi + zero],
                   [1j * xi + zero, zero, 1 + zero]])


def _sec6_dt(t, xi):
    zero = np.zeros(np.broadcast_shapes(t.shape, xi.shape))
    return _stack([[xi + zero, 1 + zero, 1j + zero],
                   [1 + zero, zero, zero],
                   [zero, zero, zero]])


def sec6_family():
    """The 3 x 3 example [[10 + t xi, t + xi, i t], [t + xi, 6, xi], [i xi, 0, 1]]."""
    return MatrixFamily(3, _sec6, "sec6", _sec6_dt)


def sec6_cone(p=2):
    """Cone used with the 3 x 3 example: a = 1 around the first p coordinates."""
    if p not in (1, 2):
        raise ValueError("the example cone is defined for p in {1, 2}")
    return ProjectiveCone.coordinate(3, p, 1.0)


def constant_family(matrix, name="constant"):
    m = as_cmatrix(matrix)

    def gen(t, xi):
        shape = np.broadcast_shapes(t.shape, xi.shape)
        return np.broadcast_to(m, shape + m.shape).copy()

    def deriv(t, xi):
        return np.zeros(np.broadcast_shapes(t.shape, xi.shape) + m.shape, dtype=np.complex128)

    return MatrixFamily(m.shape[0], gen, name, deriv)


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class LyapunovEstimate:
    """Estimate of chi^(p), the sum of the first p exponents."""

    p: int
    value: float
    stderr: float
    n_steps: int
    burn_in: int
    seed: int
    t: complex = 0j


def _batch_stats(batch_sums, n_steps):
    """Mean and batch-means standard error from per-batch sums (last axis = batch)."""
    sizes = np.diff(np.linspace(0, n_steps, N_BATCHES + 1).round().astype(int))
    means = batch_sums / sizes
    value = batch_sums.sum(axis=-1) / n_steps
    stderr = means.std(axis=-1, ddof=1) / math.sqrt(N_BATCHES)
    return value, stderr


def _batch_index(n_steps):
    edges = np.linspace(0, n_steps, N_BATCHES + 1).round().astype(int)
    return np.searchsorted(edges, np.arange(n_steps), side="right") - 1


def _drive(family, ts, noise, n_total, step):
    """Feed M(t_b, xi_k) for k = 0..n_total-1 to step(k, matrices of shape (B, n, n))."""
    ts = np.asarray(ts, dtype=np.complex128).reshape(-1)
    for start in range(0, n_total, CHUNK):
        count = min(CHUNK, n_total - start)
        xi = sample_block(noise, start, count)
        mats = family(ts[:, None], xi[None, :])            # (B, count, n, n)
        for j in range(count):
            step(start + j, mats[:, j])


def _check_steps(n_steps, burn_in):
    if n_steps < 100:
        raise ValueError("n_steps must be >= 100")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")


def benettin_orders(family, ts, p, n_steps, burn_in=0, seed=None, noise=None):
    """QR (Benettin) estimates of chi^(1), ..., chi^(p) for every t in `ts`.

    Returns a list over t of lists over orders 1..p. One frame serves every
    order, since the first k columns of the QR of a frame are the QR of its
    first k columns.
    """
    _check_steps(n_steps, burn_in)
    n = family.n
    if not 1 <= p <= n:
        raise DimensionMismatch(f"need 1 <= p <= n, got p={p}, n={n}")
    noise = resolve_noise(noise, seed)
    ts = np.atleast_1d(np.asarray(ts, dtype=np.complex128))
    q = np.broadcast_to(np.eye(n, p, dtype=np.complex128), (ts.size, n, p)).copy()
    sums = np.zeros((ts.size, p, N_BATCHES))
    batch = _batch_index(n_steps)

    def step(k, mats):
        nonlocal q
        q, r = np.linalg.qr(mats @ q)
        d = np.diagonal(r, axis1=-2, axis2=-1)
        mod = np.abs(d)
        if np.any(mod < 1e-300):
            raise SingularStep(f"R diagonal {mod.min():.3e} at step {k}")
        q = q * (d / mod)[:, None, :]
        if k >= burn_in:
            sums[:, :, batch[k - burn_in]] += np.log(mod)

    _drive(family, ts, noise, burn_in + n_steps, step)
    cumulative = np.cumsum(sums, axis=1)
    value, stderr = _batch_stats(cumulative, n_steps)
    return [[LyapunovEstimate(k + 1, float(value[b, k]), float(stderr[b, k]), n_steps, burn_in,
                              noise.seed, complex(ts[b])) for k in range(p)]
            for b in range(ts.size)]


def benettin(family, t, p, n_steps, burn_in=0, seed=None, noise=None):
    """QR-accumulation estimate of chi^(p)(t)."""
    return benettin_orders(family, [t], p, n_steps, burn_in, seed, noise)[0][p - 1]


def running_log_det(family, t, n_steps, burn_in=0, seed=None, noise=None):
    """(1/n) sum log |det M_k(t)| over the same steps benettin averages."""
    noise = resolve_noise(noise, seed)
    xi = sample_block(noise, burn_in, n_steps)
    _, logdet = np.linalg.slogdet(family(np.complex128(t), xi))
    return float(np.mean(logdet))


# --------------------------------------------------------- gauge cocycle


def spot_check_cone(family, ts, cone, noise, draws=100, samples=64):
    """Raise ConeExit unless the first `draws` matrices map sampled cone vectors into the cone."""
    xi = sample_block(noise, 0, draws)
    for t in np.atleast_1d(ts):
        mats = family(np.complex128(t), xi)
        for k in range(draws):
            rep = check_maps_cone(mats[k], cone, cone, samples=samples, seed=k)
            if not rep.sampled_ok:
                raise ConeExit(f"draw {k} at t={complex(t)} leaves the cone (margin {rep.worst_margin:.3e})")


def gauge_cocycle_orbit(family, ts, cone, n_steps, burn_in=0, seed=None, noise=None, spot_check=True):
    """Gauge-cocycle estimates of chi^(p) (p = cone.p) for every t in `ts`.

    The p-space w_k is carried by the basis X_k with F* X_k = I, so that
    m_hat(w_k) = 1 and m_hat(M_hat_k w_k) = det(F* M_k X_k).
    """
    _check_steps(n_steps, burn_in)
    if cone.n != family.n:
        raise DimensionMismatch("cone and family dimensions differ")
    noise = resolve_noise(noise, seed)
    ts = np.atleast_1d(np.asarray(ts, dtype=np.complex128))
    if spot_check:
        spot_check_cone(family, ts, cone, noise)
    f = cone.F
    fh = f.conj().T
    x = np.broadcast_to(f, (ts.size,) + f.shape).copy()
    sums = np.zeros((ts.size, N_BATCHES))
    batch = _batch_index(n_steps)

    def step(k, mats):
        nonlocal x
        y = mats @ x
        g = fh @ y                                    # F* Y, shape (B, p, p)
        det = np.linalg.det(g)
        mod = np.abs(det)
        if np.any(mod < 1e-12):
            raise ApertureDegenerate(f"|m_hat| = {mod.min():.3e} at step {k}")
        x = np.linalg.solve(np.swapaxes(g, -1, -2), np.swapaxes(y, -1, -2))
        x = np.swapaxes(x, -1, -2)                    # Y (F* Y)^-1
        if k >= burn_in:
            sums[:, batch[k - burn_in]] += np.log(mod)
        if k % CONE_CHECK_EVERY == 0:
            ap = np.linalg.norm(x - f, ord=2, axis=(-2, -1))
            if np.any(ap > cone.a * (1 + 1e-9)):
                raise ConeExit(f"iterate left the cone at step {k} (aperture {ap.max():.6g})")

    _drive(family, ts, noise, burn_in + n_steps, step)
    value, stderr = _batch_stats(sums, n_steps)
    return [LyapunovEstimate(cone.p, float(value[b]), float(stderr[b]), n_steps, burn_in,
                             noise.seed, complex(ts[b])) for b in range(ts.size)]


def gauge_cocycle_estimate(family, t, cone, p, n_steps, burn_in=0, seed=None, noise=None):
    """Average of log |m_hat(M_hat_k w_k)| along the forward orbit of the p-space w."""
    if p != cone.p:
        raise DimensionMismatch(f"order {p} differs from the cone dimension {cone.p}")
    return gauge_cocycle_orbit(family, [t], cone, n_steps, burn_in, seed, noise)[0]


def pim_distances(family, t, cone, w0, w1, n_steps, seed=None, noise=None):
    """Plücker distance between the m_hat-normalised images of two p-spaces under the same draws.

    Both spaces are given by n x p bases; the result has one entry per step.
    """
    noise = resolve_noise(noise, seed)
    fh = cone.F.conj().T
    xs = [as_cmatrix(w0) @ np.linalg.inv(fh @ as_cmatrix(w0)),
          as_cmatrix(w1) @ np.linalg.inv(fh @ as_cmatrix(w1))]
    out = np.empty(n_steps)
    xi = sample_block(noise, 0, n_steps)
    mats = family(np.complex128(t), xi)
    for k in range(n_steps):
        for i in range(2):
            y = mats[k] @ xs[i]
            xs[i] = y @ np.linalg.inv(fh @ y)
        out[k] = np.linalg.norm(wedge(xs[0]).coords - wedge(xs[1]).coords)
    return out


# ---------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class HarmonicityReport:
    residual: float
    scale: float
    pooled_stderr: float
    passed: bool
    center: LyapunovEstimate
    circle: list = field(repr=False)


def harmonicity_check(family, p, t0, r, n_circle, n_steps, burn_in=0, seed=None, noise=None,
                      estimator="benettin", cone=None):
    """Mean-value test of chi_p on the circle |t - t0| = r, with common random numbers."""
    t0 = complex(t0)
    if n_circle < 8:
        raise ValueError("n_circle must be >= 8")
    if not r > 0 or abs(t0) + r >= 1:
        raise DomainExit(f"closed disk B({t0}, {r}) is not inside the unit disk")
    ts = np.concatenate([[t0], t0 + r * np.exp(2j * np.pi * np.arange(n_circle) / n_circle)])
    if estimator == "benettin":
        ests = [row[p - 1] for row in benettin_orders(family, ts, p, n_steps, burn_in, seed, noise)]
    elif estimator == "gauge":
        if cone is None or cone.p != p:
            raise ValueError("the gauge estimator needs a cone of dimension p")
        ests = gauge_cocycle_orbit(family, ts, cone, n_steps, burn_in, seed, noise)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return harmonicity_from_estimates(ests[0], ests[1:])


def harmonicity_from_estimates(center, circle):
    """Mean-value residual from precomputed estimates at the centre and on the circle."""
    circle_vals = np.array([e.value for e in circle])
    residual = abs(center.value - circle_vals.mean())
    scale = float(circle_vals.max() - circle_vals.min())
    pooled = math.sqrt(np.mean([e.stderr ** 2 for e in [center, *circle]]))
    passed = residual <= max(0.02 * scale, 4.0 * pooled)
    return HarmonicityReport(float(residual), scale, pooled, bool(passed), center, list(circle))


def chi3_closed_form(t, noise, n_samples, family=None):
    """Monte Carlo mean of log |det M(t, xi)| (= chi^(3) for 3 x 3 families)."""
    family = sec6_family() if family is None else family
    xi = sample_block(noise, 0, n_samples)
    _, logdet = np.linalg.slogdet(family(np.complex128(t), xi))
    stderr = float(logdet.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return LyapunovEstimate(family.n, float(logdet.mean()), stderr, n_samples, 0, noise.seed, complex(t))


@dataclass(frozen=True)
class Sec6MappingReport:
    mapping_ok: bool
    min_margin: float
    min_abs_det: float
    violation: tuple = None


def verify_sec6_cone_mapping(samples, t_grid, seed, a_src=1.0, a_dst=0.85, chunk=20000):
    """Sample (t, xi, x) with x a unit vector of C_{pi,a_src}; check M x lies in C_{pi,a_dst}.

    t cycles through t_grid, xi is uniform in the disk and half of the x lie
    on the cone boundary. min_margin is the smallest margin_dst(Mx) / ||Mx||.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=np.complex128))
    if np.any(np.abs(t_grid) > 1):
        raise DomainExit("t_grid must lie in the closed unit disk")
    fam = sec6_family()
    src = ProjectiveCone.coordinate(3, 2, a_src)
    rng = np.random.default_rng(seed)
    noise = NoiseModel.uniform_disk(seed)
    min_margin, min_det, violation = math.inf, math.inf, None
    for start in range(0, samples, chunk):
        count = min(chunk, samples - start)
        ts = t_grid[np.arange(start, start + count) % t_grid.size]
        xi = sample_block(noise, start, count)
        mats = fam(ts, xi)
        xs = sample_cone_vectors(src, count, rng)              # (3, count)
        ys = np.einsum("kij,jk->ik", mats, xs)
        yf, yg = ys[:2], ys[2:]
        rel = (a_dst * np.linalg.norm(yf, axis=0) - np.linalg.norm(yg, axis=0)) / np.linalg.norm(ys, axis=0)
        dets = np.abs(np.linalg.det(mats))
        k = int(np.argmin(rel))
        if rel[k] < min_margin:
            min_margin = float(rel[k])
            if min_margin < 0:
                violation = (complex(ts[k]), complex(xi[k]), xs[:, k].tolist())
        min_det = min(min_det, float(dets.min()))
    return Sec6MappingReport(min_margin >= 0, min_margin, min_det, violation)


def derivative_constant(family, p, ts, samples, seed=0):
    """Sampled sup of ||Λ^(p-1) M|| ||dM/dt|| / ||Λ^p M|| over t in ts and uniform xi."""
    noise = NoiseModel.uniform_disk(seed)
    xi = sample_block(noise, 0, samples)
    worst = 0.0
    for t in np.atleast_1d(ts):
        mats = family(np.complex128(t), xi)
        ders = family.dt(np.complex128(t), xi)
        for m, d in zip(mats, ders):
            lower = compound_operator_norm(m, p - 1) if p > 1 else 1.0
            worst = max(worst, lower * np.linalg.norm(d, 2) / compound_operator_norm(m, p))
    return float(worst)
