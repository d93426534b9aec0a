"""Arnold-tongue boundaries and rationalization of the base rotation.

The boundary functions tau^-(alpha) <= tau^+(alpha) of the tongue with
integer target rotation number m0 are located by monotone bisection in tau:
rho(G) = m0 for a circle lift G exactly when the displacement extrema of
G - m0 straddle zero, so each boundary is the root of a monotone scalar
function of tau (min displacement for tau^+, max displacement for tau^-).

Rationalization replaces a (nominally irrational) base rotation by a
continued-fraction convergent p/q and adds a 1/q-periodic theta-correction
tau^+ that pins the fibre-wise rotation number to m0/q for every theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import Omega, QpfSystem, fibred_rotation_number
from .errors import (BudgetExceededError, DomainError, NotATwistFamilyError,
                     PossiblyLockedAlready, TargetUnreachableError)
from .fields import PeriodicPL, ThetaShiftField, TranslationField
from .plmaps import PLLift
from .util import pool_map

__all__ = ["TongueBoundary", "RationalizationResult", "displacement_extrema",
           "tongue_boundary", "rationalize_base", "step_family"]

X_GRID_DEFAULT = 4096


def displacement_extrema(G, x_grid: int = X_GRID_DEFAULT):
    """(min, max) over x of G(x) - x.

    Exact at breakpoints for PL lifts; otherwise a uniform grid refined by
    bounded local search around the best grid points.
    """
    if isinstance(G, PLLift):
        return G.displacement_extrema()
    xs = np.arange(x_grid) / x_grid
    d = np.asarray(G(xs)) - xs
    h = 1.0 / x_grid
    out = []
    for sign, idx in ((1.0, int(d.argmin())), (-1.0, int(d.argmax()))):
        x0 = xs[idx]
        res = minimize_scalar(lambda x: sign * (float(G(x)) - x),
                              bounds=(x0 - 2 * h, x0 + 2 * h), method="bounded",
                              options={"xatol": 1e-12})
        out.append(sign * min(sign * d[idx], res.fun))
    return out[0], -(-out[1])


def _bisect_monotone(g, lo, hi, tol, max_expand=8):
    """Root of an increasing g by bisection; returns the final midpoint.

    The bracket is expanded geometrically if g has no sign change on [lo, hi].
    On return g(mid + tol) > 0 and g(mid - tol) <= 0.
    """
    glo, ghi = g(lo), g(hi)
    k = 0
    while glo > 0.0 and k < max_expand:
        lo -= (hi - lo)
        glo = g(lo)
        k += 1
    while ghi <= 0.0 and k < max_expand * 2:
        hi += (hi - lo)
        ghi = g(hi)
        k += 1
    if glo > 0.0 or ghi <= 0.0:
        raise TargetUnreachableError(
            f"no sign change in bracket [{lo}, {hi}] (g: {glo:.3g}..{ghi:.3g})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class TongueBoundary:
    target: Fraction
    alphas: np.ndarray
    tau_minus: np.ndarray
    tau_plus: np.ndarray
    bisection_tol: float

    def width(self) -> float:
        return float(np.max(self.tau_plus - self.tau_minus))


def _twist_check(family, alphas, taus, xs):
    for a in alphas:
        for x in xs:
            vals = [float(np.asarray(family(a, t)(x))) for t in taus]
            if not all(v2 > v1 for v1, v2 in zip(vals, vals[1:])):
                raise NotATwistFamilyError(
                    f"displacement not increasing in tau at alpha={a}, x={x}")


def tongue_boundary(family, alpha_grid, target: int, tol: float = 1e-10,
                    x_grid: int = X_GRID_DEFAULT, bracket=(-1.0, 1.0),
                    sides=("minus", "plus"), check_twist: bool = True) -> TongueBoundary:
    """Boundaries tau^{-/+}(alpha) of the tongue rho(G_{alpha,tau}) = target.

    ``family(alpha, tau)`` must return a circle lift (PL or callable); the
    family must be a twist family (verified by sampling unless disabled).
    """
    alpha_grid = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    if check_twist:
        probe = alpha_grid[:: max(1, len(alpha_grid) // 3)][:3]
        _twist_check(family, probe, np.linspace(bracket[0], bracket[1], 4),
                     (0.0, 0.37))
    t_minus = np.full_like(alpha_grid, np.nan)
    t_plus = np.full_like(alpha_grid, np.nan)

    def solve_one(a):
        def g_min(tau):
            return displacement_extrema(family(a, tau), x_grid)[0] - target

        def g_max(tau):
            return displacement_extrema(family(a, tau), x_grid)[1] - target

        tp = _bisect_monotone(g_min, bracket[0], bracket[1], tol) \
            if "plus" in sides else np.nan
        tm = _bisect_monotone(g_max, bracket[0], bracket[1], tol) \
            if "minus" in sides else np.nan
        return tm, tp

    for i, (tm, tp) in enumerate(pool_map(solve_one, alpha_grid)):
        t_minus[i], t_plus[i] = tm, tp
    if "minus" in sides and "plus" in sides:
        if np.any(t_minus > t_plus + 2 * tol):
            raise TargetUnreachableError("tau_minus exceeds tau_plus")
    return TongueBoundary(target=Fraction(target), alphas=alpha_grid,
                          tau_minus=t_minus, tau_plus=t_plus,
                          bisection_tol=tol)


# --------------------------------------------------------------------------
# the q-step twist family driving rationalization
# --------------------------------------------------------------------------

class _StepLift:
    """Lift of R_tau o F_{theta+(q-1)w} o ... o R_tau o F_theta."""

    def __init__(self, field, theta, w, q, tau):
        self.field, self.theta, self.w, self.q, self.tau = field, theta, w, q, tau

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        for i in range(self.q):
            x = x + self.field.lift(self.theta + i * self.w, x) + self.tau
        return x


def step_family(sys: QpfSystem, omega_new: Omega):
    """Family (theta, tau) -> lift of the tau-shifted q-step fibre map.

    Uses exact PL composition when the field supports it.
    """
    if not omega_new.is_rational:
        raise DomainError("step family needs a rational base")
    q, w = omega_new.q, omega_new.value
    field = sys.field

    def family(theta, tau):
        pls = [field.fibre_pl(theta + i * w) for i in range(q)]
        if all(p is not None for p in pls):
            out = pls[0].shift(tau)
            for p in pls[1:]:
                out = p.shift(tau).compose(out)
            return out
        return _StepLift(field, theta, w, q, tau)

    return family


def convergents(x: float, q_cap: int = 10**6):
    """Continued-fraction convergents p/q of x with q <= q_cap."""
    out = []
    a = math.floor(x)
    h_prev, k_prev, h, k = 1, 0, a, 1
    frac = x - a
    for _ in range(64):
        if 1 <= k <= q_cap:
            out.append(Fraction(h, k))
        if frac <= 1e-15:
            break
        x = 1.0 / frac
        a = math.floor(x)
        frac = x - a
        h_prev, k_prev, h, k = h, k, a * h + h_prev, a * k + k_prev
        if k > q_cap:
            break
    return out


@dataclass
class RationalizationResult:
    p_over_q: Fraction
    m0: int
    tau_plus: PeriodicPL
    delta: float
    epsilon_used: float
    rho_input: float

    @property
    def target(self) -> Fraction:
        return Fraction(self.m0, self.p_over_q.denominator)

    def apply(self, sys: QpfSystem) -> QpfSystem:
        """The rationalized system (p/q, Phi + tau^+)."""
        om = Omega.rational(self.p_over_q.numerator, self.p_over_q.denominator)
        return QpfSystem(om, ThetaShiftField(sys.field, self.tau_plus))

    def to_obj(self):
        return {"p": self.p_over_q.numerator, "q": self.p_over_q.denominator,
                "m0": self.m0, "delta": repr(float(self.delta)),
                "epsilon_used": repr(float(self.epsilon_used)),
                "rho_input": repr(float(self.rho_input)),
                "tau_plus": self.tau_plus.to_obj()}

    @staticmethod
    def from_obj(obj):
        return RationalizationResult(
            p_over_q=Fraction(int(obj["p"]), int(obj["q"])),
            m0=int(obj["m0"]), tau_plus=PeriodicPL.from_obj(obj["tau_plus"]),
            delta=float(obj["delta"]), epsilon_used=float(obj["epsilon_used"]),
            rho_input=float(obj["rho_input"]))


def rationalize_base(sys: QpfSystem, eps: float,
                     not_locked_margin_probe: int = 50_000,
                     n_theta: int = 256, tol: float = 1e-10,
                     x_grid: int = X_GRID_DEFAULT,
                     q_cap: int = 10**6,
                     prox_probe: int = 4096) -> RationalizationResult:
    """Replace the base rotation by a convergent p/q and pin the fibre
    rotation numbers to m0/q by a 1/q-periodic correction tau^+.

    Steps: certify a margin delta with rho(Phi - eps) + delta < rho(Phi) <
    rho(Phi + eps) - delta; pick the first convergent with 1/q < delta/2
    passing the finite-time proximity test; choose m0 minimizing
    |rho - m0/q|; solve the tongue boundary tau^+ of the q-step twist family
    fibre by fibre.  Raises PossiblyLockedAlready when delta <= 0 within
    estimation error (nothing to prove: the input may already be locked).
    """
    if sys.omega.is_rational:
        raise DomainError("rationalize_base expects a (nominally) irrational base")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")

    n_est = not_locked_margin_probe
    est0 = fibred_rotation_number(sys, 0.0, n_max=n_est)
    est_p = fibred_rotation_number(
        QpfSystem(sys.omega, ThetaShiftField(sys.field, PeriodicPL.const(eps))),
        0.0, n_max=n_est)
    est_m = fibred_rotation_number(
        QpfSystem(sys.omega, ThetaShiftField(sys.field, PeriodicPL.const(-eps))),
        0.0, n_max=n_est)
    gap_lo = (est0.value - est0.half_width) - (est_m.value + est_m.half_width)
    gap_hi = (est_p.value - est_p.half_width) - (est0.value + est0.half_width)
    delta = min(gap_lo, gap_hi)
    if delta <= 0.0:
        raise PossiblyLockedAlready(
            f"no certified margin around rho = {est0.value:.6g} "
            f"(gaps {gap_lo:.3g}, {gap_hi:.3g})")

    # first convergent with 1/q < delta/2 passing the proximity test
    chosen = None
    for conv in convergents(sys.omega.value, q_cap):
        q = conv.denominator
        if q <= 2.0 / delta:
            continue
        if _proximity_ok(sys, conv, delta, prox_probe):
            chosen = conv
            break
    if chosen is None:
        raise BudgetExceededError(
            f"no convergent with q <= {q_cap} satisfies the proximity test")

    q = chosen.denominator
    m0 = int(round(est0.value * q))
    # tie-break toward the smaller distance; round() already does this, the
    # exact half-integer tie is broken toward even by float rounding
    if abs(est0.value - m0 / q) >= delta / 2:
        raise TargetUnreachableError(
            f"no integer m0 with |rho - m0/{q}| < delta/2 = {delta / 2:.3g}")

    om_new = Omega.rational(chosen.numerator, chosen.denominator)
    family = step_family(sys, om_new)
    thetas = np.arange(n_theta) / (n_theta * q)
    tb = tongue_boundary(family, thetas, m0, tol=tol, x_grid=x_grid,
                         bracket=(-min(1.0, 2 * eps), min(1.0, 2 * eps)),
                         sides=("plus",), check_twist=False)
    tau_plus = PeriodicPL(thetas, tb.tau_plus, period=1.0 / q)
    if tau_plus.abs_max() >= eps:
        raise PossiblyLockedAlready(
            f"|tau^+| = {tau_plus.abs_max():.3g} >= eps = {eps}; the tongue "
            "reaches past the perturbation budget")
    return RationalizationResult(p_over_q=chosen, m0=m0, tau_plus=tau_plus,
                                 delta=delta, epsilon_used=eps,
                                 rho_input=est0.value)


def _proximity_ok(sys: QpfSystem, conv: Fraction, delta: float,
                  n_probe: int) -> bool:
    """Finite-time check that fibre rotation numbers of (p/q, Phi + tau)
    stay within delta/2 of rho(omega, Phi + tau) for tau in [-1, 1]."""
    taus = (-1.0, -0.5, 0.0, 0.5, 1.0)
    om_new = Omega.rational(conv.numerator, conv.denominator)
    for tau in taus:
        shifted = ThetaShiftField(sys.field, PeriodicPL.const(tau))
        rho_irr = fibred_rotation_number(QpfSystem(sys.omega, shifted), 0.0,
                                         n_max=n_probe)
        for theta in (0.0, 0.31, 0.77):
            rho_rat = fibred_rotation_number(QpfSystem(om_new, shifted), theta,
                                             n_max=n_probe)
            tol = delta / 2 - rho_rat.half_width - rho_irr.half_width
            if tol <= 0.0 or abs(rho_rat.value - rho_irr.value) >= tol:
                return False
    return True
