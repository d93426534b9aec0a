import numpy as np
import pytest

from toruslock.curves import (build_curves, continue_to_target,
                              shadow_interval, tilt_verticals, verify_pair)
from toruslock.dynamics import Omega, QpfSystem
from toruslock.errors import (CriticalFibreError, DomainError,
                              TiltTooLargeError)
from toruslock.pwa import PwaField, triangulate
from toruslock.zeroset import sweep_zero_set


def corridor_arrangement():
    """Two horizontal zero circles at x = 1/4 and 3/4 (negative between)."""
    n = 9
    tri = triangulate(1, (0, 1), n, seed=4)
    prof = np.where(tri.rows < 0.5, 1.0 - 4 * tri.rows,
                    -3.0 + 4 * tri.rows) * 0.1
    pf = PwaField(tri, np.tile(prof, (n, 1)))
    return sweep_zero_set(QpfSystem(Omega.rational(0, 1), pf), 0,
                          n_columns=128)


def band_arrangement():
    """Pinched two-strand band: one right and one left critical vertex, the
    negative region spans every fibre but is inessential (diamond-like)."""
    n = 32
    tri = triangulate(1, (0, 1), n, seed=8)
    TH, X = np.meshgrid(tri.cols, tri.rows, indexing="ij")
    g = np.clip(1 - np.abs(TH - 0.5) / 0.3, 0, 1)
    v = np.sin(2 * np.pi * (2 * X - TH - 0.137)) \
        + 1.6 * g * (1 + np.cos(2 * np.pi * (X - 0.313))) / 2
    pf = PwaField(tri, 0.04 * v)
    return sweep_zero_set(QpfSystem(Omega.rational(0, 1), pf), 0,
                          n_columns=256)


# -- shadow intervals ----------------------------------------------------------

def test_shadow_interval_corridor():
    arr = corridor_arrangement()
    lo, hi = shadow_interval(arr, 0.1, 0.5)
    assert hi == pytest.approx(0.25, abs=1e-9)
    assert lo == pytest.approx(-0.25, abs=1e-9)


def test_shadow_rejects_positive_point():
    arr = corridor_arrangement()
    with pytest.raises(DomainError):
        shadow_interval(arr, 0.1, 0.1)


def test_shadow_rejects_critical_fibre():
    arr = band_arrangement()
    cv = arr.cvs[0]
    with pytest.raises(CriticalFibreError):
        shadow_interval(arr, cv.theta, 0.5)


def test_shadow_band_below_lower_edge():
    arr = band_arrangement()
    cut = arr.fibre(0.05)
    neg = [k for k in range(len(cut.xs)) if cut.sign_above[k] < 0]
    k = neg[0]
    x_hat = 0.5 * (cut.xs[k] + cut.xs[k + 1])
    lo, hi = shadow_interval(arr, 0.05, x_hat)
    assert hi == pytest.approx(cut.xs[k], abs=1e-12)
    assert arr.fibre(0.05).sign_at(0.5 * (lo + hi)) > 0


# -- continuation ---------------------------------------------------------------

def test_continue_corridor_periodic():
    arr = corridor_arrangement()
    res = continue_to_target(arr, (0.1, 0.5, 0.0))
    assert res[0] == "periodic"
    _, k, m, piece, margin = res
    assert (k, m) == (1, 0)
    assert np.allclose(piece.minus, 0.5, atol=1e-9)   # corridor midline
    assert margin == pytest.approx(0.25, abs=1e-9)


def test_continue_band_blocks_at_rcv():
    arr = band_arrangement()
    rcv = next(c for c in arr.cvs if c.side == "r")
    start = rcv.theta - 0.45
    cut = arr.fibre(start)
    neg = [k for k in range(len(cut.xs)) if cut.sign_above[k] < 0
           and abs(cut.xs[k] - rcv.x) < 0.3]
    k = neg[0]
    x_hat = 0.5 * (cut.xs[k] + cut.xs[k + 1])
    lo, hi = shadow_interval(arr, start, x_hat)
    res = continue_to_target(arr, (start, x_hat, 0.5 * (lo + hi)))
    assert res[0] == "blocked"
    _, theta_star, x_star, case, piece, margin = res
    # the blocking vertex is a lift copy of the unique right critical vertex
    assert abs((theta_star - rcv.theta) - round(theta_star - rcv.theta)) < 1e-6
    assert theta_star > start
    assert abs((x_star - rcv.x) - round(x_star - rcv.x)) < 1e-4


# -- curve pairs -----------------------------------------------------------------

def test_build_corridor_pair():
    arr = corridor_arrangement()
    pair = build_curves(arr, seed=3)
    assert pair.closure == (1, 0)
    assert sum(v is not None for v in pair.verticals) == 0
    assert pair.meta["branch"] == "periodic"
    assert verify_pair(arr, pair) > 0


def test_build_band_pair_properties():
    arr = band_arrangement()
    pair = build_curves(arr, seed=2)
    eps = pair.epsilon_spacing
    # one vertical jump on the minus side, closed within two targets
    assert sum(v is not None for v in pair.verticals) == 1
    assert pair.verticals[0].side == "-"
    assert len(pair.targets) <= 2
    assert pair.closure[0] >= 1
    # (i): every piece spans more than eps/3 and ends eps/10 short of its
    # blocking vertex (the first stored target is the junction the closed
    # pair starts from, so piece i pairs with target i+1)
    for piece, (t_star, _) in zip(pair.pieces, pair.targets[1:]):
        assert piece.thetas[-1] - piece.thetas[0] > eps / 3
        assert piece.thetas[-1] == pytest.approx(t_star - eps / 10, abs=1e-9)
    # (ii): target abscissae increase strictly
    stars = [t for t, _ in pair.targets]
    assert all(b > a for a, b in zip(stars, stars[1:]))
    # (iii): junction endpoints match on the vertical side
    v = pair.verticals[0]
    assert v.b > v.a
    assert verify_pair(arr, pair, skip_near_vertical=eps / 5) > 0


def test_build_band_margin_positive():
    arr = band_arrangement()
    pair = build_curves(arr, seed=2)
    assert pair.margin > 0
    assert pair.meta["seam_defect"] < 1e-2


# -- tilting ---------------------------------------------------------------------

def test_tilt_noop_without_verticals():
    arr = corridor_arrangement()
    pair = build_curves(arr, seed=1)
    assert tilt_verticals(pair, 0.01, max_slope=1.0) is pair


def test_tilt_rejects_zero():
    arr = band_arrangement()
    pair = build_curves(arr, seed=2)
    with pytest.raises(TiltTooLargeError):
        tilt_verticals(pair, 0.0, max_slope=arr.max_slope)


def test_tilt_graph_form_and_margin():
    arr = band_arrangement()
    pair = build_curves(arr, seed=2)
    tilted = tilt_verticals(pair, 0.01, max_slope=arr.max_slope)
    for side in ("-", "+"):
        ts, xs = tilted.graph(side)
        assert np.all(np.diff(ts) > 0)
    assert tilted.margin >= pair.margin - tilted.meta["margin_shrink"] - 1e-12
    assert tilted.meta["tilted"]
