"""Acceptance criteria, each at its stated tolerance and time budget.

Every test prints one `PASS`/`FAIL` line (visible with `-v`, since output
capture is bypassed for these lines).
"""

import json
import math
import time

import numpy as np
import pytest

from conegap import cli
from conegap import cone as cn
from conegap import exterior as ex
from conegap import grassmann as gr
from conegap import spectral as sp
from conegap.experiments import nested_subspace, random_contracting_map
from conegap.linalg import random_frame, random_matrix, singular_values

from conftest import SMALL_CONFIGS, small_config

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, elapsed, budget, detail=""):
        status = "PASS" if ok and elapsed < budget else "FAIL"
        with capsys.disabled():
            print(f"\n[{status}] criterion {number:2d}: {title} ({elapsed:.2f} s / {budget} s) {detail}")
        assert ok, detail
        assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
    return emit


def test_01_compound_multiplicativity(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for p in (2, 3):
        for _ in range(50):
            a, b = random_matrix(rng, 6), random_matrix(rng, 6)
            lhs = ex.compound_matrix(a @ b, p)
            rhs = ex.compound_matrix(a, p) @ ex.compound_matrix(b, p)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    elapsed = time.perf_counter() - start
    report(1, "compound multiplicativity", worst <= 1e-9, elapsed, 2, f"max err {worst:.2e}")


def test_02_operator_norm_identity(report):
    rng = np.random.default_rng(102)
    start = time.perf_counter()
    worst, below = 0.0, True
    for p in (1, 2, 3):
        for _ in range(100):
            m = random_matrix(rng, 6)
            s = singular_values(m)
            norm = ex.compound_operator_norm(m, p)
            worst = max(worst, abs(norm - np.prod(s[:p])) / np.prod(s[:p]))
            below &= norm <= s[0] ** p * (1 + 1e-12)
    elapsed = time.perf_counter() - start
    report(2, "operator norm = product of singular values", worst <= 1e-8 and below, elapsed, 5,
           f"max rel err {worst:.2e}")


def test_03_norm_bracket(report):
    rng = np.random.default_rng(103)
    start = time.perf_counter()
    ok, worst = True, 0.0
    for k in range(200):
        p, n = (2, 3)[k % 2], (4, 5, 6)[k % 3]
        u = ex.WedgeTensor(n, p, random_matrix(rng, math.comb(n, p), 1).ravel())
        lower, upper = ex.wedge1_lower(u, seed=k), ex.wedge2_upper(u)
        ok &= lower <= p ** (p / 2) * upper + 1e-9
        worst = max(worst, lower / (p ** (p / 2) * upper))
    elapsed = time.perf_counter() - start
    report(3, "wedge1 <= p^(p/2) wedge2", ok, elapsed, 10, f"max ratio {worst:.3f}")


def test_04_metric_equivalence(report):
    rng = np.random.default_rng(104)
    start = time.perf_counter()
    ok, c_hat = True, {}
    for k in range(500):
        n, p = (4, 6, 8)[k % 3], (1, 2, 3)[(k // 3) % 3]
        v = gr.Subspace(random_frame(rng, n, p))
        if k % 2:
            w = gr.Subspace.from_columns(v.frame + 10.0 ** rng.uniform(-6, 0) * random_matrix(rng, n, p))
        else:
            w = gr.Subspace(random_frame(rng, n, p))
        dh, dw = gr.d_hausdorff(v, w), gr.d_wedge(v, w)
        ok &= dw <= 2 * p * math.factorial(p) * dh + 1e-12
        if dh > 0:
            c_hat[p] = min(c_hat.get(p, math.inf), dw / dh)
    elapsed = time.perf_counter() - start
    ok &= all(c > 0.01 for c in c_hat.values())
    detail = "c_hat " + ", ".join(f"p={p}: {c:.3f}" for p, c in sorted(c_hat.items()))
    report(4, "d_wedge <= 2 p p! d_hausdorff", ok, elapsed, 10, detail)


def test_05_gauge_closed_form(report):
    rng = np.random.default_rng(105)
    start = time.perf_counter()
    worst = 0.0
    for k in range(200):
        n, p = (3, 4, 6)[k % 3], (1, 2)[(k // 3) % 2]
        cone = cn.ProjectiveCone.coordinate(n, p, float(rng.uniform(0.3, 2.0)))
        xs = cn.sample_cone_vectors(cone, 2, rng, boundary_fraction=0.0)
        closed = cn.gauge_delta(cone, xs[:, 0], xs[:, 1])
        oracle = cn.radial_gauge_oracle(cone, xs[:, 0], xs[:, 1])
        worst = max(worst, abs(closed - oracle))
    worked = cn.gauge_delta(cn.ProjectiveCone.coordinate(2, 1, 1.0), [1, 0], [1, 0.5])
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and abs(worked - math.log(3)) <= 1e-9
    report(5, "gauge closed form vs radial oracle", ok, elapsed, 10,
           f"max err {worst:.2e}, worked {worked:.12f}")


def test_06_diameter_bound(report):
    rng = np.random.default_rng(106)
    a_in, a_out = 0.5, 1.0
    bound = cn.diameter_bound(a_in, a_out)
    start = time.perf_counter()
    best, ok = 0.0, True
    for k in range(100):
        n, p = (3, 4, 6)[k % 3], (1, 2)[(k // 3) % 2]
        cone = cn.ProjectiveCone.coordinate(n, p, a_out)
        v, w = nested_subspace(rng, cone, a_in), nested_subspace(rng, cone, a_in)
        est = cn.cone_distance(cone, v, w, starts=16, iterations=200, seed=k)
        ok &= est.lower <= bound
        best = max(best, est.lower)
    elapsed = time.perf_counter() - start
    report(6, "cone distance within diameter bound", ok, elapsed, 30,
           f"max lower {best:.3f} vs bound {bound:.3f}")


def test_07_contraction_factor(report):
    rng = np.random.default_rng(107)
    start = time.perf_counter()
    ok, worst, inst = True, 0.0, 0
    while inst < 50:
        n, p = (3, 4, 6)[inst % 3], (1, 2)[(inst // 3) % 2]
        b = float(rng.uniform(0.5, 2.0))
        t = random_contracting_map(rng, n, p)
        src = cn.ProjectiveCone.coordinate(n, p, b)
        a = cn.image_aperture_bound(t, src)
        if not a < b or not cn.check_maps_cone(t, src, src.with_aperture(a)).certified:
            continue
        xs = cn.sample_cone_vectors(src, 100, rng, 0.3)
        ys = cn.sample_cone_vectors(src, 100, rng, 0.3)
        for i in range(100):
            before = cn.d1(src, xs[:, i], ys[:, i])
            after = cn.d1(src, t @ xs[:, i], t @ ys[:, i])
            ok &= after <= (a / b) * before + 1e-8
            if 0 < before < math.inf:
                worst = max(worst, after / before / (a / b))
        inst += 1
    elapsed = time.perf_counter() - start
    report(7, "pairwise contraction by a/b", ok, elapsed, 30, f"max ratio to a/b {worst:.3f}")


@pytest.fixture(scope="module")
def spectral_instances():
    """30 cone-preserving perturbations of diagonal spectra, n in 4..12, p in {2, 3}."""
    rng = np.random.default_rng(108)
    out = []
    while len(out) < 30:
        n, p = int(rng.integers(4, 13)), (2, 3)[len(out) % 2]
        t = random_contracting_map(rng, n, p, strength=0.1)
        cone = cn.ProjectiveCone.coordinate(n, p, 1.0)
        if cn.image_aperture_bound(t, cone) < cone.a:
            out.append((t, cone))
    return out


def test_08_spectral_gap(report, spectral_instances):
    start = time.perf_counter()
    ok, worst_eig, worst_slack = True, 0.0, -math.inf
    for t, cone in spectral_instances:
        rep = sp.spectral_gap_report(t, cone)
        oracle = np.linalg.eigvals(t)
        oracle = oracle[np.argsort(-np.abs(oracle), kind="stable")]
        err = max(min(abs(z - oracle[: cone.p])) for z in rep.top_eigs)
        rest = np.abs(oracle[cone.p:])
        ok &= err <= 1e-7 and bool(np.all(rest < np.min(np.abs(rep.top_eigs))))
        a = cn.image_aperture_bound(t, cone)
        slope = sp.convergence_slope(rep.history)
        ok &= slope <= math.log(a / cone.a) + 0.05
        worst_eig = max(worst_eig, err)
        worst_slack = max(worst_slack, slope - math.log(a / cone.a))
    elapsed = time.perf_counter() - start
    report(8, "spectral gap certification", ok, elapsed, 60,
           f"max eig err {worst_eig:.2e}, max slope - log(a/b) {worst_slack:.3f}")


def test_09_c_tensor(report, spectral_instances):
    rng = np.random.default_rng(109)
    start = time.perf_counter()
    ok, worst = True, {"eig": 0.0, "norm": 0.0, "simple": 0.0, "eta": 0.0}
    for t, cone in spectral_instances:
        rep = sp.spectral_gap_report(t, cone)
        c = sp.c_functional(t, cone, rep.V)
        lam = rep.lambda_product
        u = ex.wedge(random_matrix(rng, cone.n, cone.p))
        tu = ex.WedgeTensor(cone.n, cone.p, ex.compound_matrix(t, cone.p) @ u.coords)
        eig = abs(c(tu) - lam * c(u)) / max(1.0, abs(lam) * float(np.linalg.norm(u.coords)))
        norm = abs(c(ex.wedge(rep.V.frame)) - 1)
        simple = sp.simple_tensor_error(c, rep.V)
        eta = sp.decay_fit(t, c, rep.V, lam, u).eta
        ok &= eig <= 1e-8 and norm <= 1e-8 and simple <= 1e-7 and eta < 1
        for key, value in zip(worst, (eig, norm, simple, eta)):
            worst[key] = max(worst[key], value)
    elapsed = time.perf_counter() - start
    report(9, "c tensor eigen/normalisation/simple/decay", ok, elapsed, 30,
           ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


def test_10_norm_bracket(report, spectral_instances):
    rng = np.random.default_rng(110)
    start = time.perf_counter()
    ok = True
    for k in range(50):
        t, cone = spectral_instances[k % len(spectral_instances)]
        w = nested_subspace(rng, cone, cone.a)
        ok &= sp.operator_norm_bracket(t, cone, w).holds
    elapsed = time.perf_counter() - start
    report(10, "compound norm bracket on W in C[rho]", ok, elapsed, 10)


def test_11_sec6_reproduction(report, tmp_path):
    config = cli.load_config("configs/sec6.ini")
    assert config["run.seed"] == 42 and config["sec6.n_steps"] == 100_000
    start = time.perf_counter()
    result, _, json_path = cli.run("sec6", config, out=tmp_path)
    elapsed = time.perf_counter() - start
    found = {a.name: a for a in result.assertions}
    hard = ["p3_log_det_identity", "estimator_agreement", "chi3_closed_form", "harmonicity_chi2"]
    summary = json.loads(json_path.read_text())["assertions"]
    flags = {name: found[name].passed for name in ("cone_mapping", "det_at_least_43")}
    detail = (f"identity err {summary['p3_log_det_identity']['abs_error']:.1e}, "
              f"min |det| {summary['det_at_least_43']['min_abs_det']:.2f}, flags {flags}")
    report(11, "sec6 reproduction (seed 42, 1e5 steps)", all(found[n].passed for n in hard), elapsed,
           300, detail)


def test_12_determinism(report, tmp_path):
    start = time.perf_counter()
    mismatched = []
    for experiment in SMALL_CONFIGS:
        first = cli.run(experiment, small_config(experiment), out=tmp_path / experiment / "a")[1:]
        second = cli.run(experiment, small_config(experiment), out=tmp_path / experiment / "b")[1:]
        mismatched += [p.name for p, q in zip(first, second) if p.read_bytes() != q.read_bytes()]
    elapsed = time.perf_counter() - start
    report(12, "byte-identical reruns of every experiment", not mismatched, elapsed, math.inf,
           f"mismatched {mismatched}" if mismatched else "")
