import math

import numpy as np
import pytest

from toruslock.dynamics import GOLDEN_MEAN, Omega, QpfSystem, fibred_rotation_number
from toruslock.errors import (NotATwistFamilyError, PossiblyLockedAlready,
                              TargetUnreachableError)
from toruslock.fields import arnold_field, constant_field
from toruslock.tongues import (convergents, displacement_extrema,
                               rationalize_base, step_family, tongue_boundary)

K_OVER_2PI = {0.25: 0.25 / (2 * math.pi), 0.5: 0.5 / (2 * math.pi)}


def unforced_family(K):
    def fam(alpha, tau):
        def lift(x):
            x = np.asarray(x, dtype=float)
            return x + tau + K / (2 * math.pi) * np.sin(2 * math.pi * x)
        return lift
    return fam


@pytest.mark.parametrize("K", [0.25, 0.5])
def test_tongue_analytic_oracle(K):
    # a fixed point of x + tau + (K/2pi) sin(2pi x) exists iff |tau| <= K/2pi
    tb = tongue_boundary(unforced_family(K), [0.0], target=0, tol=1e-9)
    assert tb.tau_plus[0] == pytest.approx(K_OVER_2PI[K], abs=1e-6)
    assert tb.tau_minus[0] == pytest.approx(-K_OVER_2PI[K], abs=1e-6)


def test_tongue_degenerate_rigid():
    tb = tongue_boundary(unforced_family(0.0), [0.0], target=0, tol=1e-10,
                         check_twist=False)
    assert abs(tb.tau_plus[0]) < 1e-9
    assert abs(tb.tau_minus[0]) < 1e-9


def test_tongue_width_monotone_in_K():
    w = {K: tongue_boundary(unforced_family(K), [0.0], target=0,
                            tol=1e-9).width() for K in (0.25, 0.5)}
    assert w[0.25] < w[0.5]
    assert w[0.5] == pytest.approx(0.5 / math.pi, abs=1e-6)


def test_bisection_bracket_invariant():
    K = 0.5
    fam = unforced_family(K)
    tb = tongue_boundary(fam, [0.0], target=0, tol=1e-8)
    tol = tb.bisection_tol
    tp = tb.tau_plus[0]
    assert displacement_extrema(fam(0.0, tp + tol))[0] > 0
    assert displacement_extrema(fam(0.0, tp - tol))[0] <= 0
    tm = tb.tau_minus[0]
    assert displacement_extrema(fam(0.0, tm - tol))[1] <= 0 + 1e-15
    assert displacement_extrema(fam(0.0, tm + tol))[1] > 0


def test_twist_violation_detected():
    def antifam(alpha, tau):
        def lift(x):
            return np.asarray(x, dtype=float) - tau
        return lift
    with pytest.raises(NotATwistFamilyError):
        tongue_boundary(antifam, [0.0], target=0)


def test_target_unreachable():
    # clamped parameter dependence: displacement saturates far below the target
    def clamped(alpha, tau):
        def lift(x):
            x = np.asarray(x, dtype=float)
            return x + np.clip(tau, -0.1, 0.1)
        return lift
    with pytest.raises(TargetUnreachableError):
        tongue_boundary(clamped, [0.0], target=5, bracket=(-0.01, 0.01),
                        check_twist=False)


def test_convergents_golden():
    got = [(c.numerator, c.denominator) for c in convergents(GOLDEN_MEAN)]
    assert (13, 21) in got and (8, 13) in got and (21, 34) in got


# -- rationalization ----------------------------------------------------------

def rigid_golden():
    return QpfSystem(Omega.irrational(GOLDEN_MEAN), constant_field(0.25))


def test_rationalize_rigid_example():
    res = rationalize_base(rigid_golden(), eps=0.1, n_theta=8)
    assert (res.p_over_q.numerator, res.p_over_q.denominator) == (13, 21)
    assert res.m0 == 5
    # the tongue of a rigid family is a single point: tau = m0/q - c
    want = 5.0 / 21.0 - 0.25
    assert np.allclose(res.tau_plus.vals, want, atol=1e-8)
    assert res.delta > 0.09


def test_rationalize_result_locks_fibres():
    res = rationalize_base(rigid_golden(), eps=0.1, n_theta=8)
    sys2 = res.apply(rigid_golden())
    for theta in (0.0, 0.137, 0.69, 0.93):
        est = fibred_rotation_number(sys2, theta, n_max=2000)
        assert est.value == pytest.approx(5.0 / 21.0, abs=1e-8)
    # direct first-return fixed-point criterion at sampled fibres
    for theta in (0.05, 0.44):
        lo, hi = displacement_extrema(sys2.q_lift(theta), 512)
        assert lo - 5 <= 1e-8 and hi - 5 >= -1e-8


def test_rationalize_tau_periodicity():
    res = rationalize_base(rigid_golden(), eps=0.1, n_theta=8)
    q = res.p_over_q.denominator
    th = np.array([0.013, 0.027])
    for j in (1, 2, 5):
        assert np.allclose(res.tau_plus(th), res.tau_plus(th + j / q),
                           atol=2e-8)


def test_step_family_rotation_identity():
    # rho(G_{tau,theta}) = q rho(p/q, Phi + tau, theta) on samples
    sys = QpfSystem(Omega.irrational(GOLDEN_MEAN),
                    arnold_field(tau=0.1, K=0.4, b=0.05))
    om = Omega.rational(2, 5)
    fam = step_family(sys, om)
    from toruslock.dynamics import rotation_number_circle
    from toruslock.fields import PeriodicPL, ThetaShiftField
    for theta, tau in ((0.11, 0.03), (0.57, -0.08)):
        G = fam(theta, tau)
        rho_g = rotation_number_circle(G, n_max=4000,
                                       target_halfwidth=1e-3)
        shifted = QpfSystem(om, ThetaShiftField(sys.field, PeriodicPL.const(tau)))
        rho_f = fibred_rotation_number(shifted, theta, n_max=4000 * 5)
        assert abs(rho_g.value - 5 * rho_f.value) < 5 * (rho_g.half_width
                                                         + rho_f.half_width) + 1e-9


def test_possibly_locked_signal():
    # unforced Arnold with a fixed point: eps below the tongue width leaves
    # no certified margin to move the rotation number
    sys = QpfSystem(Omega.irrational(GOLDEN_MEAN),
                    arnold_field(tau=0.0, K=0.5, b=0.0))
    with pytest.raises(PossiblyLockedAlready):
        rationalize_base(sys, eps=0.05, n_theta=8)
