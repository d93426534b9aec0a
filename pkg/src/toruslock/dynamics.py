"""Forced circle maps, their iterates and rotation-number estimates.

A system is a base rotation omega together with a translation field; it acts
on the torus by (theta, x) -> (theta + omega, x + phi(theta, x)).  Rational
base rotations are stored exactly (numerator/denominator in lowest terms),
irrational ones as binary64 carrying a "nominally irrational" tag -- nothing
here tries to decide irrationality of a float.

Rotation numbers are estimated from finite orbits with the elementary
certificate |(G^n(x) - x)/n - rho| <= 2/n valid for every lift G of an
orientation-preserving circle homeomorphism.  Rigid rotations are detected
(constant displacement at the sample points) and reported exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, DomainError
from .fields import TranslationField
from .plmaps import PLLift
from .util import wrap01

__all__ = ["Omega", "QpfSystem", "RotnumEstimate", "rotation_number_circle",
           "fibred_rotation_number", "uniform_convergence_probe"]


@dataclass(frozen=True)
class Omega:
    """Base rotation number: exact rational or tagged-irrational float."""

    value: float
    exact: Fraction | None = None

    @staticmethod
    def rational(p: int, q: int) -> "Omega":
        fr = Fraction(p, q)
        return Omega(float(fr), fr)

    @staticmethod
    def irrational(x: float) -> "Omega":
        return Omega(float(x), None)

    @property
    def is_rational(self) -> bool:
        return self.exact is not None

    @property
    def p(self) -> int:
        return self.exact.numerator

    @property
    def q(self) -> int:
        return self.exact.denominator

    def to_obj(self):
        if self.is_rational:
            return {"num": self.p, "den": self.q}
        return {"value": repr(self.value), "tag": "irrational"}

    @staticmethod
    def from_obj(obj):
        if "num" in obj:
            return Omega.rational(int(obj["num"]), int(obj["den"]))
        return Omega.irrational(float(obj["value"]))


GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RotnumEstimate:
    value: float
    half_width: float
    iterations: int
    per_theta_spread: float = 0.0
    certified: bool = True


class QpfSystem:
    """Base rotation plus translation field; immutable after construction."""

    def __init__(self, omega: Omega, field: TranslationField):
        self.omega = omega
        self.field = field
        self._fibre_cache: dict[float, PLLift] = {}
        self._qlift_cache: dict[float, PLLift] = {}

    # -- single fibre steps -------------------------------------------------

    def step(self, theta, x):
        """Image of lifted fibre points under F_theta."""
        return np.asarray(x, dtype=float) + self.field.lift(theta, x)

    def step_inverse(self, theta, y):
        """Preimage under F_theta (theta is the source fibre)."""
        pl = self.fibre_pl(theta)
        if pl is not None:
            return pl.inverse()(y)
        return self.field.fibre_inverse(theta, y)

    def fibre_pl(self, theta) -> PLLift | None:
        """Cached exact PL lift of F_theta, when the field supports it."""
        key = float(theta)
        pl = self._fibre_cache.get(key)
        if pl is None:
            pl = self.field.fibre_pl(key)
            if pl is not None:
                if len(self._fibre_cache) > 120000:
                    self._fibre_cache.clear()
                self._fibre_cache[key] = pl
        return pl

    # -- iterates -----------------------------------------------------------

    def fibre_apply(self, theta, x, n: int):
        """F^n_theta(x) for any signed n.

        Positive n composes forward along theta, theta+omega, ...; negative n
        uses F^n_theta = (F^{|n|}_{theta + n omega})^{-1}, stepping backwards
        with exact PL inversion (PWA) or monotone bisection (closed form).
        """
        x = np.asarray(x, dtype=float)
        w = self.omega.value
        if n >= 0:
            for i in range(n):
                x = self.step(theta + i * w, x)
        else:
            for i in range(1, -n + 1):
                x = self.step_inverse(theta - i * w, x)
        return x

    def q_lift(self, theta) -> PLLift | "_OrbitLift":
        """Lift of the first-return fibre map F^q_theta (rational base).

        Exact PL when the field supports per-fibre PL extraction; otherwise a
        functional q-step lift.
        """
        if not self.omega.is_rational:
            raise DomainError("q_lift needs a rational base rotation")
        key = float(theta)
        cached = self._qlift_cache.get(key)
        if cached is not None:
            return cached
        q, w = self.omega.q, self.omega.value
        pls = [self.fibre_pl(theta + i * w) for i in range(q)]
        if all(p is not None for p in pls):
            out = pls[0]
            for p in pls[1:]:
                out = p.compose(out)
            if len(self._qlift_cache) > 120000:
                self._qlift_cache.clear()
            self._qlift_cache[key] = out
            return out
        return _OrbitLift(self, theta, q)

    def q_displacement(self, theta, x):
        """F^q_theta(x) - x on lifted points (rational base)."""
        if not self.omega.is_rational:
            raise DomainError("q_displacement needs a rational base rotation")
        return self.fibre_apply(theta, x, self.omega.q) - np.asarray(x, dtype=float)


class _OrbitLift:
    """Functional lift of F^q_theta for closed-form fields."""

    def __init__(self, sys: QpfSystem, theta: float, q: int):
        self.sys, self.theta, self.q = sys, float(theta), int(q)

    def __call__(self, x):
        return self.sys.fibre_apply(self.theta, x, self.q)


# --------------------------------------------------------------------------
# rotation numbers
# --------------------------------------------------------------------------

_PROBE_XS = np.array([0.0, 0.1, 0.25, 0.37, 0.5, 0.62, 0.73, 0.88,
                      0.05, 0.33, 0.47, 0.59, 0.71, 0.83, 0.91, 0.17, 0.29])
_BASE_XS = np.array([0.0, 1.0 / 3.0, 0.7])


def rotation_number_circle(G, n_max: int = 100_000,
                           target_halfwidth: float = 1e-4) -> RotnumEstimate:
    """Estimate rho(G) for a circle-homeomorphism lift G.

    Rigid rotations are detected by exactly constant displacement at the
    probe points and reported with half_width 0.  Otherwise the orbit bound
    |(G^n(x) - x)/n - rho| <= 2/n is used; the estimate is flagged
    non-certified when 2/n_max still exceeds target_halfwidth.
    """
    if isinstance(G, PLLift):
        # rigid rotations have exactly constant breakpoint displacement
        d = G.ys - G.xs
        if float(d.max()) == float(d.min()):
            return RotnumEstimate(value=float(d[0]), half_width=0.0,
                                  iterations=1, per_theta_spread=0.0,
                                  certified=True)
    else:
        d = np.asarray(G(_PROBE_XS)) - _PROBE_XS
        if float(d.max()) == float(d.min()):
            return RotnumEstimate(value=float(d[0]), half_width=0.0,
                                  iterations=1, per_theta_spread=0.0,
                                  certified=True)
    n = min(int(n_max), max(1, int(math.ceil(2.0 / target_halfwidth))))
    x = _BASE_XS.copy()
    for _ in range(n):
        x = np.asarray(G(x))
    vals = (x - _BASE_XS) / n
    value = float(vals[0])
    spread = float(vals.max() - vals.min())
    hw = 2.0 / n
    return RotnumEstimate(value=value, half_width=hw, iterations=n,
                          per_theta_spread=spread, certified=hw <= target_halfwidth)


def exact_integer_rotation(G: PLLift):
    """The integer m with rho(G) = m, if G has an m-translated fixed point.

    For PL lifts this is decidable: rho(G) = m iff the displacement extrema
    straddle m.  Returns None when rho is not witnessed to be an integer.
    """
    lo, hi = G.displacement_extrema()
    m = math.floor(hi)
    if lo <= m <= hi:
        return m
    return None


def fibred_rotation_number(sys: QpfSystem, theta0: float = 0.0,
                           n_max: int = 100_000, theta_samples: int = 1,
                           target_halfwidth: float = 1e-4) -> RotnumEstimate:
    """Fibre-direction rotation number of the system, estimated at theta0.

    Rational base: computed as rho(F^q_theta0)/q through the first-return
    map, inheriting its certificate.  Irrational base: plain orbit average,
    with the spread over theta_samples starting fibres reported; such
    estimates are never marked certified (no uniform finite-time bound).
    """
    if sys.omega.is_rational:
        q = sys.omega.q
        G = sys.q_lift(theta0)
        est = rotation_number_circle(G, max(1, n_max // q),
                                     target_halfwidth * q)
        spread = est.per_theta_spread / q
        if theta_samples > 1:
            vals = []
            for j in range(theta_samples):
                Gj = sys.q_lift(theta0 + j / theta_samples)
                vals.append(rotation_number_circle(
                    Gj, max(1, n_max // (4 * q)), target_halfwidth * q).value / q)
            spread = max(spread, float(np.ptp(vals)))
        return RotnumEstimate(value=est.value / q, half_width=est.half_width / q,
                              iterations=est.iterations * q,
                              per_theta_spread=spread, certified=est.certified)

    n = min(int(n_max), max(1, int(math.ceil(2.0 / target_halfwidth))))
    thetas = theta0 + np.arange(max(1, theta_samples)) / max(1, theta_samples)
    xs = np.zeros_like(thetas)
    # rigid detection: the displacement must be constant along base orbits,
    # so probe several orbit fibres, not just the starting one
    orbit_thetas = (theta0 + sys.omega.value * np.arange(17.0))[:, None]
    probe = sys.field.lift(orbit_thetas, _PROBE_XS[None, :])
    if float(probe.max()) == float(probe.min()):
        return RotnumEstimate(value=float(probe.flat[0]), half_width=0.0,
                              iterations=1, per_theta_spread=0.0, certified=True)
    w = sys.omega.value
    t = thetas.copy()
    for _ in range(n):
        xs = xs + sys.field.lift(t, xs)
        t = t + w
    vals = xs / n
    return RotnumEstimate(value=float(vals[0]), half_width=2.0 / n, iterations=n,
                          per_theta_spread=float(np.abs(vals - vals[0]).max()),
                          certified=False)


def uniform_convergence_probe(sys_seq, limit_sys: QpfSystem, eps: float,
                              m_max: int = 64, theta_samples: int = 8,
                              x_samples: int = 4, n_limit: int = 200_000):
    """First indices (m0, n0) at which the sampled finite-time displacement
    test |(F^m_{n,theta}(x) - x)/m - rho| < eps passes on the sample grid.

    Diagnostic only: the test is sampled, not proven.  Pairs are scanned in
    order of increasing m + n (then smaller m), 1-indexed.
    """
    if limit_sys.omega.is_rational:
        raise DomainError("limit system must have (nominally) irrational base")
    rho = fibred_rotation_number(limit_sys, 0.0, n_max=n_limit).value
    thetas = np.arange(theta_samples) / theta_samples
    xs0 = np.arange(x_samples) / x_samples
    T, X0 = np.meshgrid(thetas, xs0, indexing="ij")

    def passes(m, n_idx):
        sysn = sys_seq[n_idx]
        t = T.copy()
        x = X0.copy()
        for _ in range(m):
            x = x + sysn.field.lift(t, x)
            t = t + sysn.omega.value
        return bool(np.all(np.abs((x - X0) / m - rho) < eps))

    N = len(sys_seq)
    for s in range(2, m_max + N + 1):
        for m in range(max(1, s - N), min(m_max, s - 1) + 1):
            n = s - m
            if 1 <= n <= N and passes(m, n - 1):
                return (m, n)
    raise BudgetExceededError(
        f"no (m0, n0) within m <= {m_max}, n <= {N} met eps = {eps}")
