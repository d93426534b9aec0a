import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toruslock.dynamics import (GOLDEN_MEAN, Omega, QpfSystem,
                                fibred_rotation_number,
                                rotation_number_circle,
                                uniform_convergence_probe)
from toruslock.errors import BudgetExceededError, DomainError
from toruslock.fields import arnold_field, constant_field
from toruslock.plmaps import PLLift

# frozen brute-force oracle: orbit average of the unforced Arnold map
# (K=0.5, tau=0.2) over 10^7 iterates from x=0
ARNOLD_RHO_ORACLE = 0.18552768530344294
# frozen Birkhoff-sum oracle: mean of 0.1 sin(2 pi theta) along 10^6 steps of
# the golden rotation (equidistribution forces 0)
THETA_FORCING_MEAN = 3.4826420806206155e-09


def golden_sys(field):
    return QpfSystem(Omega.irrational(GOLDEN_MEAN), field)


# -- fibre_apply -------------------------------------------------------------

def test_fibre_apply_constant():
    sys = golden_sys(constant_field(0.25))
    assert sys.fibre_apply(0.37, 0.0, 4) == pytest.approx(1.0, abs=1e-12)


def test_fibre_apply_identity_case():
    sys = golden_sys(arnold_field(tau=0.1, K=0.3, b=0.2))
    x = np.array([0.0, 0.4, 1.7])
    assert np.allclose(sys.fibre_apply(0.2, x, 0), x)


def test_fibre_apply_arnold_fixed_point():
    # sin(0) = 0 and no forcing: x = 0 stays put
    sys = golden_sys(arnold_field(tau=0.0, K=0.9, b=0.0))
    assert sys.fibre_apply(0.123, 0.0, 10) == pytest.approx(0.0, abs=1e-12)


def test_fibre_apply_inverse_consistency():
    sys = golden_sys(arnold_field(tau=0.07, K=0.6, b=0.15))
    x = np.array([0.11, 0.52, 0.93])
    for n in (1, 3, 5):
        y = sys.fibre_apply(0.3, x, n)
        back = sys.fibre_apply(0.3 + n * sys.omega.value, y, -n)
        assert np.allclose(back, x, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 7), st.integers(0, 7))
def test_cocycle_law(seed, n, m):
    rng = np.random.default_rng(seed)
    sys = golden_sys(arnold_field(tau=rng.uniform(-0.2, 0.2),
                                  K=rng.uniform(0, 0.8),
                                  b=rng.uniform(-0.2, 0.2)))
    theta = rng.uniform(0, 1)
    x = rng.uniform(0, 1)
    w = sys.omega.value
    lhs = sys.fibre_apply(theta, x, n + m)
    rhs = sys.fibre_apply(theta + n * w, sys.fibre_apply(theta, x, n), m)
    assert abs(lhs - rhs) < 1e-9


def test_degree_one_property():
    sys = golden_sys(arnold_field(tau=0.1, K=0.5, b=0.1))
    x = np.array([0.2, 0.7])
    assert np.allclose(sys.step(0.3, x + 1.0), sys.step(0.3, x) + 1.0, atol=1e-12)


def test_twist_monotone_in_tau():
    taus = np.linspace(-0.3, 0.3, 7)
    theta, x, n = 0.21, 0.4, 12
    vals = []
    for t in taus:
        sys = golden_sys(arnold_field(tau=t, K=0.5, b=0.1))
        vals.append(float(sys.fibre_apply(theta, x, n)))
    assert np.all(np.diff(vals) > 0)


# -- rotation_number_circle --------------------------------------------------

def test_rigid_rotation_exact():
    rng = np.random.default_rng(7)
    for alpha in rng.uniform(-1, 1, 20):
        est = rotation_number_circle(PLLift.rotation(alpha))
        assert est.value == alpha
        assert est.half_width == 0.0


def test_unforced_arnold_fixed_point_rho_zero():
    # PL-sampled unforced Arnold lift with tau=0 keeps the fixed point at 0
    G = PLLift.from_function(lambda x: x + 0.5 / (2 * math.pi) * np.sin(2 * math.pi * x), 512)
    est = rotation_number_circle(G, n_max=4000, target_halfwidth=1e-3)
    assert abs(est.value) <= est.half_width


def test_unforced_arnold_against_oracle():
    sys = golden_sys(arnold_field(tau=0.2, K=0.5, b=0.0))

    class Lift:
        def __call__(self, x):
            return sys.step(0.0, x)  # theta plays no role when b=0

    est = rotation_number_circle(Lift(), n_max=10**5, target_halfwidth=2e-5)
    assert est.iterations == 10**5
    assert abs(est.value - ARNOLD_RHO_ORACLE) <= 2.0 / 10**5


def test_displacement_bound_three_points():
    G = PLLift.from_function(lambda x: x + 0.2 + 0.1 * np.sin(2 * math.pi * x), 256)
    est = rotation_number_circle(G, n_max=2000, target_halfwidth=1e-3)
    assert est.per_theta_spread <= 2.0 / est.iterations + 1e-12


# -- fibred_rotation_number --------------------------------------------------

def test_fibred_constant_golden():
    est = fibred_rotation_number(golden_sys(constant_field(0.3)))
    assert est.value == 0.3
    assert est.half_width == 0.0


def test_fibred_theta_forcing_mean_zero():
    sys = golden_sys(arnold_field(tau=0.0, K=0.0, b=0.1))
    est = fibred_rotation_number(sys, 0.0, n_max=10**5, target_halfwidth=2e-5)
    assert abs(est.value) < 1e-4
    assert abs(THETA_FORCING_MEAN) < 1e-8  # oracle sanity


def test_fibred_rational_constant():
    sys = QpfSystem(Omega.rational(1, 2), constant_field(0.25))
    est = fibred_rotation_number(sys, 0.0, n_max=1000)
    assert est.value == pytest.approx(0.25, abs=1e-12)


def test_q_lift_rational_exact_for_constant():
    sys = QpfSystem(Omega.rational(2, 5), constant_field(0.1))
    G = sys.q_lift(0.3)
    assert isinstance(G, PLLift)
    lo, hi = G.displacement_extrema()
    assert lo == pytest.approx(0.5, abs=1e-12)
    assert hi == pytest.approx(0.5, abs=1e-12)


def test_q_lift_requires_rational():
    sys = golden_sys(constant_field(0.1))
    with pytest.raises(DomainError):
        sys.q_lift(0.0)


# -- uniform convergence probe ------------------------------------------------

def test_probe_constant_fields():
    limit = golden_sys(constant_field(0.3))
    seq = [QpfSystem(Omega.irrational(GOLDEN_MEAN + 0.01 / (k + 1)),
                     constant_field(0.3)) for k in range(3)]
    assert uniform_convergence_probe(seq, limit, eps=1e-2) == (1, 1)


def test_probe_vacuous_tolerance():
    limit = golden_sys(arnold_field(tau=0.0, K=0.4, b=0.05))
    seq = [golden_sys(arnold_field(tau=0.0, K=0.4, b=0.05))]
    assert uniform_convergence_probe(seq, limit, eps=10.0) == (1, 1)


def test_probe_arnold_golden_convergents():
    limit = golden_sys(arnold_field(tau=0.13, K=0.4, b=0.05))
    convergents = [(2, 3), (3, 5), (5, 8), (8, 13), (13, 21), (21, 34)]
    seq = [QpfSystem(Omega.irrational(p / q), arnold_field(tau=0.13, K=0.4, b=0.05))
           for p, q in convergents]
    m0, n0 = uniform_convergence_probe(seq, limit, eps=1e-2, m_max=512)
    assert 1 <= n0 <= len(seq) and m0 >= 1


def test_probe_budget_exceeded():
    limit = golden_sys(arnold_field(tau=0.0, K=0.4, b=0.05))
    seq = [golden_sys(arnold_field(tau=0.0, K=0.4, b=0.05))]
    with pytest.raises(BudgetExceededError):
        uniform_convergence_probe(seq, limit, eps=1e-12, m_max=4)
