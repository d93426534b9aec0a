import json
import math
from fractions import Fraction

import numpy as np
import pytest

from toruslock.certify import (LockCertificate, certify_annulus, map_graph,
                               pick_shift, verify_certificate)
from toruslock.dynamics import Omega, QpfSystem
from toruslock.errors import CertificationInfeasibleError, InvalidAnnulusError
from toruslock.fields import constant_field
from toruslock.pwa import PwaField, pwa_approximate, triangulate

TS2 = np.array([0.0, 1.0])


def contraction_field(n=32, K=0.8, seed=9):
    tri = triangulate(1, (0, 1), n, seed=seed)
    prof = -(K / (2 * math.pi)) * np.sin(2 * math.pi * tri.rows)
    return PwaField(tri, np.tile(prof, (n, 1)))


def hline(x, k=1, m=0):
    return {"ts": TS2 * k, "xs": np.array([x, x + m], dtype=float),
            "k": k, "m": m}


def test_map_graph_exact_vs_field():
    pf = contraction_field()
    ts = np.linspace(0.0, 1.0, 7)
    xs = 0.3 + 0.05 * np.sin(2 * np.pi * ts)
    ts2, imgs = map_graph(pf, ts, xs, base_off=0.37)
    # exactness at the refined breakpoints
    src = np.interp(ts2, ts, xs)
    want = src + pf.lift(ts2 + 0.37, src)
    assert np.abs(imgs - want).max() < 1e-12
    # and in between (each sub-edge maps affinely)
    mid_t = 0.5 * (ts2[:-1] + ts2[1:])
    mid_src = np.interp(mid_t, ts, xs)
    mid_img = np.interp(mid_t, ts2, imgs)
    want_mid = mid_src + pf.lift(mid_t + 0.37, mid_src)
    assert np.abs(mid_img - want_mid).max() < 1e-10


def test_contraction_certificate():
    # cobweb oracle: boundary points at 0.6 and 1.4 move strictly toward 1.0
    pf = contraction_field()
    cert = certify_annulus(pf, 0.5477, 1, 0, hline(0.6), hline(1.4))
    assert cert.margin > 0.05
    assert cert.claimed_rotation == Fraction(0)


def test_identity_fails():
    pf = pwa_approximate(constant_field(0.0), contraction_field().tri)
    with pytest.raises(CertificationInfeasibleError):
        certify_annulus(pf, 0.37, 1, 0, hline(0.6), hline(1.4))


def test_rigid_irrational_rotation_fails():
    pf = pwa_approximate(constant_field(0.2137), contraction_field().tri)
    with pytest.raises(CertificationInfeasibleError):
        certify_annulus(pf, 0.37, 1, 0, hline(0.6), hline(1.4))


def test_homotopy_mismatch_rejected():
    pf = contraction_field()
    with pytest.raises(InvalidAnnulusError):
        certify_annulus(pf, 0.5, 1, 0, hline(0.6, m=1), hline(1.4, m=0))


def test_unordered_curves_rejected():
    pf = contraction_field()
    with pytest.raises(InvalidAnnulusError):
        certify_annulus(pf, 0.5, 1, 0, hline(1.4), hline(0.6))


def test_reverification_pure():
    pf = contraction_field()
    cert = certify_annulus(pf, 0.5477, 1, 0, hline(0.6), hline(1.4))
    obj = json.loads(json.dumps(cert.to_obj()))
    rep = verify_certificate(obj)
    assert rep["ok"]
    assert rep["defect"] <= 1e-12


def test_openness_under_field_perturbation():
    pf = contraction_field()
    cert = certify_annulus(pf, 0.5477, 1, 0, hline(0.6), hline(1.4))
    eta = cert.margin / 4.0
    rng = np.random.default_rng(5)
    tri = pf.tri
    for _ in range(10):
        # admissible C0 perturbation of size < eta: smooth random profile
        a, b, ph1, ph2 = rng.uniform(-1, 1, 4)
        scale = eta / 2.0
        TH, X = np.meshgrid(tri.cols, tri.rows, indexing="ij")
        bump = scale * (a * np.sin(2 * np.pi * (X + ph1))
                        + b * np.cos(2 * np.pi * (TH + ph2)))
        pert = PwaField(tri, pf.values + bump)
        cert2 = certify_annulus(pert, 0.5477, 1, 0, hline(0.6), hline(1.4))
        assert cert2.margin > 0


def test_pick_shift_corridor():
    # corridor pair on a locked two-circle system
    from toruslock.curves import build_curves
    from toruslock.zeroset import sweep_zero_set
    n = 9
    tri = triangulate(1, (0, 1), n, seed=4)
    prof = np.where(tri.rows < 0.5, 1.0 - 4 * tri.rows,
                    -3.0 + 4 * tri.rows) * 0.1
    pf = PwaField(tri, np.tile(prof, (n, 1)))
    sys = QpfSystem(Omega.rational(0, 1), pf)
    arr = sweep_zero_set(sys, 0, n_columns=128)
    pair = build_curves(arr, seed=1)
    s, omega_prime, tilted, cert = pick_shift(sys, pair, m0=0)
    assert s > 0
    assert omega_prime == pytest.approx(s / 2.0, abs=1e-15)
    assert cert.margin > 1e-7
    assert cert.claimed_rotation == Fraction(0)


def test_shift_too_large_rejected():
    # requesting a shift far beyond the measured slack on the pinched band
    from toruslock.curves import build_curves
    from toruslock.zeroset import sweep_zero_set
    n = 32
    tri = triangulate(1, (0, 1), n, seed=8)
    TH, X = np.meshgrid(tri.cols, tri.rows, indexing="ij")
    g = np.clip(1 - np.abs(TH - 0.5) / 0.3, 0, 1)
    v = np.sin(2 * np.pi * (2 * X - TH - 0.137)) \
        + 1.6 * g * (1 + np.cos(2 * np.pi * (X - 0.313))) / 2
    pf = PwaField(tri, 0.04 * v)
    sys = QpfSystem(Omega.rational(0, 1), pf)
    arr = sweep_zero_set(sys, 0, n_columns=256)
    pair = build_curves(arr, seed=2)
    with pytest.raises(CertificationInfeasibleError):
        pick_shift(sys, pair, m0=0, s_init=0.3, max_tries=1)
