"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the whole suite takes a few minutes (two end-to-end pipeline runs
plus ten partition/zero-set cross-checks dominate).
"""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from toruslock.certify import certify_annulus, mode_lock_pipeline, verify_certificate
from toruslock.curves import build_curves, tilt_verticals, verify_pair
from toruslock.dynamics import (GOLDEN_MEAN, Omega, QpfSystem,
                                exact_integer_rotation,
                                fibred_rotation_number,
                                rotation_number_circle)
from toruslock.fields import arnold_field, constant_field, field_from_obj
from toruslock.genericity import genericity_report, genericize
from toruslock.locking import (QStepTarget, conjugacy_witness, interval_surgery,
                               normalizing_integer)
from toruslock.partition import refine_partition
from toruslock.plmaps import PLLift
from toruslock.pwa import PwaField, pwa_approximate, triangulate
from toruslock.staircase import arnold_family, detect_plateaus, sweep_family
from toruslock.zeroset import extract_zero_set, sweep_zero_set

# frozen brute-force oracle: 10^7-step orbit average of the unforced Arnold
# map (K=0.5, tau=0.2) from x=0
ARNOLD_RHO_ORACLE = 0.18552768530344294

GOLDEN = Omega.irrational(GOLDEN_MEAN)


def _report(num, text):
    print(f"\n[ACCEPTANCE {num}] PASS: {text}")


# -- 1: rotation-number accuracy ------------------------------------------------

def test_criterion_1_rotation_accuracy():
    rng = np.random.default_rng(42)
    for alpha in rng.uniform(-1.0, 1.0, 20):
        est = rotation_number_circle(PLLift.rotation(alpha))
        assert est.value == alpha and est.half_width == 0.0

    sys = QpfSystem(GOLDEN, arnold_field(tau=0.2, K=0.5, b=0.0))

    class Lift:
        def __call__(self, x):
            return sys.step(0.0, x)

    t0 = time.time()
    est = rotation_number_circle(Lift(), n_max=10**5, target_halfwidth=2e-5)
    dt = time.time() - t0
    defect = abs(est.value - ARNOLD_RHO_ORACLE)
    assert est.iterations == 10**5
    assert defect <= 2.0 / 10**5
    assert dt < 5.0
    _report(1, f"rigid exact 20/20; Arnold |est - oracle| = {defect:.2e} "
               f"<= 2e-5 in {dt:.2f} s")


# -- 2: tongue boundaries ---------------------------------------------------------

def test_criterion_2_tongue_boundary():
    from toruslock.tongues import tongue_boundary
    times = {}
    for K in (0.25, 0.5):
        def fam(alpha, tau, K=K):
            def lift(x):
                x = np.asarray(x, dtype=float)
                return x + tau + K / (2 * math.pi) * np.sin(2 * math.pi * x)
            return lift
        t0 = time.time()
        tb = tongue_boundary(fam, [0.0], target=0, tol=1e-9)
        times[K] = time.time() - t0
        want = K / (2 * math.pi)
        assert abs(tb.tau_plus[0] - want) < 1e-6
        assert abs(tb.tau_minus[0] + want) < 1e-6
        assert times[K] < 1.0
    _report(2, f"tau± = ±K/2pi to 1e-6; runtimes "
               f"{times[0.25]:.2f} s / {times[0.5]:.2f} s")


# -- 3: staircase plateau ----------------------------------------------------------

def test_criterion_3_staircase_plateau():
    fam = arnold_family(GOLDEN, K=0.5, b=0.0)
    taus = np.linspace(-0.2, 0.2, 401)
    cell = float(taus[1] - taus[0])
    data = sweep_family(fam, taus, n_max=10_000)   # monotonicity asserted inside
    plats = detect_plateaus(data, level_tol=3e-4)
    main = max(plats, key=lambda p: p.width)
    assert main.level_rational == 0
    width = main.width + cell          # samples cover half a cell on each side
    want = 0.5 / math.pi
    assert abs(width - want) <= cell + 1e-4
    _report(3, f"rho=0 plateau width {width:.6f} vs K/pi = {want:.6f} "
               f"(defect {abs(width - want):.2e} <= cell + 1e-4)")


# -- 4: conjugacy invariance ---------------------------------------------------------

def test_criterion_4_conjugacy_invariance():
    rng = np.random.default_rng(3)
    checked = 0
    from toruslock.pwa import auto_grid_size
    for p, q in ((1, 2), (1, 3), (2, 5)):
        n = auto_grid_size(q, p, requested=16)
        tri = triangulate(q, (p, q), n, seed=int(10 * p + q))
        vals = rng.uniform(-0.4 / n, 0.4 / n, (n, n))
        vals[:, 0] = 0.0     # every fibre map fixes x = 0: rho(F^q) = 0 exactly
        pf = PwaField(tri, vals)
        sys = QpfSystem(Omega.rational(p, q), pf)
        for theta in rng.uniform(0, 1, 16):
            rho0 = exact_integer_rotation(sys.q_lift(float(theta)))
            assert rho0 is not None
            for j in range(1, q):
                conjugacy_witness(sys, float(theta), j, tol=1e-9)
                rhoj = exact_integer_rotation(sys.q_lift(float(theta) + j / q))
                assert rhoj is not None
                assert abs(rho0 - rhoj) <= 1e-9
                checked += 1
    _report(4, f"{checked} fibre pairs: first-return rotation numbers agree "
               "exactly and the conjugacy identity holds to 1e-9")


# -- 5: surgery correctness -----------------------------------------------------------

def test_criterion_5_surgery_correctness():
    sys = QpfSystem(Omega.rational(1, 3),
                    arnold_field(tau=0.07, K=0.35, b=0.05))
    m0 = normalizing_integer(sys)
    a, b = 0.1, 0.4
    mid = 0.5 * (a + b)

    def tent(t):
        t = np.asarray(t, dtype=float)
        t = a + (t - a) - np.floor(t - a)
        return np.clip(1.0 - np.abs(t - mid) / (mid - a), 0.0, 1.0)

    target = QStepTarget(sys, m0, shift=lambda t: -0.01 * float(tent(t)))
    out = interval_surgery(sys, (a, b), target, verify_tol=1e-9)
    thetas = a + (b - a) * (np.arange(16) + 0.5) / 16
    xs = np.arange(16) / 16
    worst = 0.0
    for t in thetas:
        got = out.fibre_apply(float(t), xs, 3) - xs
        want = np.asarray(target.lift(float(t), xs))
        worst = max(worst, float(np.abs(got - want).max()))
    assert worst < 1e-9
    for t in np.concatenate((np.linspace(0.41, 1.09, 23),)):
        assert np.array_equal(out.field.lift(float(t), xs),
                              sys.field.lift(float(t), xs))
    _report(5, f"f~^q = psi on 16x16 samples (defect {worst:.2e} < 1e-9); "
               "field bitwise unchanged off the interval")


# -- 6: partition / zero-set oracle equivalence -------------------------------------

def test_criterion_6_partition_sign_oracle():
    from shapely.geometry import Point
    from shapely.geometry import Polygon as ShPolygon
    from shapely.strtree import STRtree

    cases = [(1, 1, 12), (2, 1, 12), (3, 1, 16), (4, 2, 17), (5, 2, 17),
             (6, 2, 21), (7, 3, 20), (8, 3, 20), (9, 3, 22), (10, 3, 32)]
    probs = np.arange(128) / 128 + 1.0 / 371.0
    total_bad = 0
    for seed, q, n in cases:
        p = 1 if q < 3 else (1 if seed % 2 else 2)
        if math.gcd(p, q) != 1:
            p = 1
        tri = triangulate(q, (p, q), n, seed=seed)
        rng = np.random.default_rng(seed)
        f = arnold_field(tau=rng.uniform(-0.2, 0.2), K=rng.uniform(0.1, 0.5),
                         b=rng.uniform(0, 0.1))
        pf = pwa_approximate(f, tri, probe_grid=32)
        part = refine_partition(pf, (p, q))
        assert abs(float(part.areas().sum()) - 1.0) < 1e-9
        sysq = QpfSystem(Omega.rational(p, q), pf)
        tree = STRtree([ShPolygon(poly) for poly in part.polygons])
        band = 1e-6
        bad = 0
        for th in probs[::4]:
            direct = sysq.fibre_apply(th, probs, q) - probs - part.m0
            for x, d in zip(probs, direct):
                if abs(d) <= band:
                    continue
                hits = tree.query(Point(th, x))
                pid = None
                for h in hits:
                    if tree.geometries[int(h)].buffer(1e-12).contains(Point(th, x)):
                        pid = int(h)
                        break
                if pid is None:
                    continue
                if np.sign(part.normalized_value_at(pid, (th, x))) != np.sign(d):
                    bad += 1
        total_bad += bad
        assert bad == 0, f"sign mismatches on seeded system {seed}"
    _report(6, f"10 systems: areas sum to 1 within 1e-9 and "
               f"{total_bad} sign mismatches outside the margin band")


# -- 7: genericity post-conditions ---------------------------------------------------

def test_criterion_7_genericity_postconditions():
    from fractions import Fraction as Fr
    systems = []
    tri0 = triangulate(1, (0, 1), 8, seed=6)
    systems.append((PwaField(tri0, np.zeros((8, 8))), Fr(0, 1)))
    tri2 = triangulate(2, (1, 2), 17, seed=2)
    systems.append((pwa_approximate(arnold_field(tau=0.24, K=0.35, b=0.03),
                                    tri2), Fr(1, 2)))
    tri3 = triangulate(3, (1, 3), 20, seed=3)
    systems.append((pwa_approximate(arnold_field(tau=0.1, K=0.3, b=0.05),
                                    tri3), Fr(1, 3)))
    for pf, om in systems:
        out = genericize(pf, om, seed=1, nudge_budget=1e-3)
        rep = genericity_report(out, om)
        assert rep["bad_vertices"] == []
        assert rep["bad_polygons"] == []
        arr = extract_zero_set(rep["partition"])
        ts = sorted(cv.theta for cv in arr.cvs)
        for t1, t2 in zip(ts, ts[1:]):
            assert t2 - t1 > 1e-9
    _report(7, "all partition vertices above margin_v, all polygons above "
               "margin_s, critical vertices on distinct fibres (exhaustive)")


# -- 8: curve-builder invariants ------------------------------------------------------

def _corridor_arr():
    n = 9
    tri = triangulate(1, (0, 1), n, seed=4)
    prof = np.where(tri.rows < 0.5, 1.0 - 4 * tri.rows,
                    -3.0 + 4 * tri.rows) * 0.1
    pf = PwaField(tri, np.tile(prof, (n, 1)))
    return sweep_zero_set(QpfSystem(Omega.rational(0, 1), pf), 0, n_columns=128)


def _band_arr():
    n = 32
    tri = triangulate(1, (0, 1), n, seed=8)
    TH, X = np.meshgrid(tri.cols, tri.rows, indexing="ij")
    g = np.clip(1 - np.abs(TH - 0.5) / 0.3, 0, 1)
    v = np.sin(2 * np.pi * (2 * X - TH - 0.137)) \
        + 1.6 * g * (1 + np.cos(2 * np.pi * (X - 0.313))) / 2
    pf = PwaField(tri, 0.04 * v)
    return sweep_zero_set(QpfSystem(Omega.rational(0, 1), pf), 0, n_columns=256)


def test_criterion_8_curve_invariants():
    arr_c = _corridor_arr()
    pair_c = build_curves(arr_c, seed=3)
    assert pair_c.closure == (1, 0)
    assert sum(v is not None for v in pair_c.verticals) == 0
    assert verify_pair(arr_c, pair_c) > 0

    arr_b = _band_arr()
    pair_b = build_curves(arr_b, seed=2)
    eps = pair_b.epsilon_spacing
    m_rcv = len({round(cv.theta, 6) for cv in arr_b.cvs if cv.side == "r"})
    assert len(pair_b.targets) <= m_rcv + 1
    assert sum(v is not None for v in pair_b.verticals) == 1
    for piece, (t_star, _) in zip(pair_b.pieces, pair_b.targets[1:]):
        assert piece.thetas[-1] - piece.thetas[0] > eps / 3          # (i)
        assert abs(piece.thetas[-1] - (t_star - eps / 10)) < 1e-9    # theta_i
    stars = [t for t, _ in pair_b.targets]
    assert all(b > a for a, b in zip(stars, stars[1:]))              # (ii)
    v = pair_b.verticals[0]
    assert v.side == "-" and v.b > v.a                               # (iii)
    assert verify_pair(arr_b, pair_b, skip_near_vertical=eps / 5) > 0
    _report(8, f"corridor pair (1,0) with no verticals; band pair closes in "
               f"{len(pair_b.targets)} targets (M+1 = {m_rcv + 1}) with one "
               "minus-side vertical; properties (i)-(iii) hold")


# -- 9 and 10: end-to-end certificates --------------------------------------------------

@pytest.fixture(scope="module")
def pipelines():
    out = {}
    for name, field, eps, seed in (
            ("rigid", constant_field(0.25), 0.2, 11),
            ("arnold", arnold_field(tau=0.0, K=0.5, b=0.1), 0.3, 7)):
        sys_in = QpfSystem(GOLDEN, field)
        t0 = time.time()
        res = mode_lock_pipeline(sys_in, eps, seed=seed, n_grid=64)
        out[name] = (res, time.time() - t0, eps)
    return out


def test_criterion_9_end_to_end(pipelines):
    lines = []
    rng = np.random.default_rng(99)
    for name, (res, dt, eps) in pipelines.items():
        cert = res.certificate
        assert cert.margin > 1e-7
        assert res.perturbation < eps
        assert dt < 60.0

        obj = json.loads(json.dumps(cert.to_obj()))
        rep = verify_certificate(obj)
        assert rep["ok"] and rep["defect"] <= 1e-12

        field = field_from_obj(cert.field_obj)
        q = cert.p_iterate
        eta = cert.margin / (4.0 * q)
        tri = field.tri
        TH, X = np.meshgrid(tri.cols, tri.rows, indexing="ij")
        ok_trials = 0
        for _ in range(20):
            a, b2, p1, p2 = rng.uniform(-1, 1, 4)
            bump = 0.5 * eta * (a * np.sin(2 * np.pi * (X + p1))
                                + b2 * np.cos(2 * np.pi * (TH + p2)))
            pert = PwaField(tri, field.values + bump, field.lift_offset)
            cert2 = certify_annulus(pert, cert.omega_prime, q, cert.m0,
                                    cert.curve_plus, cert.curve_minus,
                                    min_margin=cert.min_margin,
                                    base_pq=cert.base_pq)
            assert cert2.margin > 0
            ok_trials += 1
        assert ok_trials == 20
        lines.append(f"{name}: margin {cert.margin:.3g}, perturbation "
                     f"{res.perturbation:.3g} < {eps}, reverified to 1e-12, "
                     f"20/20 perturbation trials, {dt:.1f} s")
    _report(9, "; ".join(lines))


def test_criterion_10_rotation_consistency(pipelines):
    lines = []
    for name, (res, dt, eps) in pipelines.items():
        cert = res.certificate
        sys_cert = QpfSystem(Omega.irrational(cert.omega_prime),
                             field_from_obj(cert.field_obj))
        est = fibred_rotation_number(sys_cert, 0.0, n_max=10_000,
                                     target_halfwidth=2e-4)
        claimed = float(cert.claimed_rotation)
        defect = abs(est.value - claimed)
        assert defect <= 2.0 / 10_000
        lines.append(f"{name}: |estimate - {claimed:.9g}| = {defect:.2e}")
    _report(10, "; ".join(lines))
