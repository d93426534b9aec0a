import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toruslock.errors import RepresentationError
from toruslock.plmaps import PLLift


def random_pl(rng, n=6, amp=0.3):
    xs = np.sort(rng.uniform(0, 1, n))
    xs[0] = 0.0
    ys = np.sort(xs + rng.uniform(-amp, amp, n))
    # keep the wrap slope positive: compress the value range under one period
    span = ys[-1] - ys[0]
    if span >= 0.95:
        ys = ys[0] + (ys - ys[0]) * (0.95 / span)
    return PLLift(xs, ys)


def test_eval_degree_one():
    G = PLLift([0.0, 0.5], [0.1, 0.7])
    x = np.array([-1.3, 0.2, 0.9, 2.4])
    assert np.allclose(G(x + 1.0), G(x) + 1.0, atol=1e-12)


def test_eval_linear_pieces():
    G = PLLift([0.0, 0.5], [0.1, 0.7])
    assert G(0.25) == pytest.approx(0.4)
    assert G(0.75) == pytest.approx(0.9)  # wrap piece toward (1, 1.1)


def test_canonical_inserts_zero():
    G = PLLift([0.25, 0.75], [0.35, 0.85])
    assert G.xs[0] == 0.0
    assert G(0.0) == pytest.approx(0.1)


def test_monotonicity_enforced():
    with pytest.raises(RepresentationError):
        PLLift([0.0, 0.5], [0.7, 0.1])


def test_inverse_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        G = random_pl(rng)
        x = rng.uniform(-2, 2, 17)
        assert np.allclose(G.inverse()(G(x)), x, atol=1e-10)
        assert np.allclose(G(G.inverse()(x)), x, atol=1e-10)


def test_compose_matches_pointwise():
    rng = np.random.default_rng(1)
    for _ in range(20):
        G, H = random_pl(rng), random_pl(rng)
        C = H.compose(G)
        x = rng.uniform(-1, 2, 29)
        assert np.allclose(C(x), H(G(x)), atol=1e-10)


def test_displacement_extrema_exact():
    G = PLLift([0.0, 0.25, 0.5, 0.75], [0.05, 0.45, 0.55, 0.8])
    lo, hi = G.displacement_extrema()
    xs = np.linspace(0, 1, 10001)
    d = G(xs) - xs
    assert lo <= d.min() + 1e-12 and hi >= d.max() - 1e-12
    assert lo == pytest.approx(d.min(), abs=1e-9)
    assert hi == pytest.approx(d.max(), abs=1e-9)


def test_rotation_and_identity():
    R = PLLift.rotation(0.3)
    assert R(0.4) == pytest.approx(0.7)
    I = PLLift.identity()
    assert I(1.23) == pytest.approx(1.23)
    assert R.compose(I)(0.2) == pytest.approx(R(0.2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(-0.9, 0.9))
def test_shift_displacement(seed, c):
    rng = np.random.default_rng(seed)
    G = random_pl(rng)
    lo, hi = G.displacement_extrema()
    lo2, hi2 = G.shift(c).displacement_extrema()
    assert lo2 == pytest.approx(lo + c, abs=1e-12)
    assert hi2 == pytest.approx(hi + c, abs=1e-12)


def test_iterate():
    G = PLLift([0.0, 0.5], [0.2, 0.6])
    G3 = G.iterate(3)
    x = np.array([0.1, 0.8, 1.4])
    assert np.allclose(G3(x), G(G(G(x))), atol=1e-10)
