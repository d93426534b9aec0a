"""Parameter sweeps of twist families: rotation-number staircases.

A twist family is a parameterized field tau -> phi_tau whose lift increases
strictly in tau at every point, which forces tau -> rho(f_tau) to be
monotone; mode-locking plateaus show up as maximal runs of parameter samples
sharing a rotation-number estimate within tolerance.  The family-splice
operation replaces one member by a nearby mode-locked system through convex
lift combinations on a parameter interval, keeping the family within an
epsilon tube and preserving the twist condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .dynamics import Omega, QpfSystem, fibred_rotation_number
from .errors import DomainError, NotATwistFamilyError, ToruslockError
from .fields import TranslationField, arnold_field, interpolate
from .util import circle_dist, wrap01

__all__ = ["TwistFamily", "StaircaseData", "Plateau", "arnold_family",
           "sweep_family", "detect_plateaus", "interpolate_family"]


@dataclass
class TwistFamily:
    omega: Omega
    field_of: object                  # callable tau -> TranslationField
    label: str = "family"

    def system(self, tau: float) -> QpfSystem:
        return QpfSystem(self.omega, self.field_of(float(tau)))

    def check_twist(self, taus=None, n_points: int = 5, n_steps: int = 8):
        """Sampled twist condition: the n-step lift displacement must be
        strictly increasing in tau at every probe."""
        if taus is None:
            taus = np.linspace(-0.1, 0.1, 5)
        probes = [(0.17, 0.31), (0.62, 0.05), (0.89, 0.71), (0.42, 0.55),
                  (0.05, 0.93)][:n_points]
        for theta, x in probes:
            vals = []
            for t in taus:
                vals.append(float(self.system(t).fibre_apply(theta, x, n_steps)))
            if not all(b > a for a, b in zip(vals, vals[1:])):
                raise NotATwistFamilyError(
                    f"displacement not strictly increasing in tau at "
                    f"(theta, x) = ({theta}, {x})")


def arnold_family(omega: Omega, K: float, b: float, tau0: float = 0.0,
                  label: str = "arnold") -> TwistFamily:
    return TwistFamily(omega=omega,
                       field_of=lambda tau: arnold_field(tau=tau0 + tau, K=K, b=b),
                       label=label)


@dataclass
class Plateau:
    tau_lo: float
    tau_hi: float
    level: float
    level_rational: Fraction
    n_samples: int
    certified: bool = False

    @property
    def width(self) -> float:
        return self.tau_hi - self.tau_lo


@dataclass
class StaircaseData:
    taus: np.ndarray
    rho: np.ndarray
    half_width: np.ndarray
    plateaus: list = dc_field(default_factory=list)

    def to_rows(self):
        return [(float(t), float(r), float(h))
                for t, r, h in zip(self.taus, self.rho, self.half_width)]


def sweep_family(family: TwistFamily, tau_grid, n_max: int = 10_000,
                 theta0: float = 0.0, check: bool = True,
                 target_halfwidth: float = 1e-4) -> StaircaseData:
    """Fibred rotation-number estimates along the parameter grid.

    The twist condition is verified on samples first, and the resulting
    staircase is checked to be monotone up to twice the largest half-width.
    """
    taus = np.asarray(tau_grid, dtype=float)
    if check:
        span = float(taus.max() - taus.min()) or 0.2
        family.check_twist(np.linspace(taus.min(), taus.max(), 4)
                           if len(taus) > 1 else None)
    rho = np.empty_like(taus)
    hw = np.empty_like(taus)
    for i, t in enumerate(taus):
        est = fibred_rotation_number(family.system(t), theta0, n_max=n_max,
                                     target_halfwidth=target_halfwidth)
        rho[i] = est.value
        hw[i] = est.half_width
    slack = 2.0 * float(hw.max()) if len(hw) else 0.0
    drops = np.diff(rho) < -slack
    if np.any(drops):
        i = int(np.argmax(drops))
        raise NotATwistFamilyError(
            f"staircase decreases by {rho[i] - rho[i + 1]:.3g} at "
            f"tau = {taus[i + 1]:.6g} beyond the half-width slack")
    return StaircaseData(taus=taus, rho=rho, half_width=hw)


def detect_plateaus(data: StaircaseData, level_tol: float = 3e-4,
                    min_samples: int = 2, certify_fn=None,
                    min_certify_cells: int = 3) -> list:
    """Maximal runs of consecutive samples whose estimates agree within
    level_tol and whose half-widths cover the in-run spread.

    certify_fn, when given, is called with the run-midpoint system parameter
    for plateaus wider than min_certify_cells grid cells; its boolean result
    lands in the plateau record.
    """
    out = []
    n = len(data.taus)
    cell = float(np.median(np.diff(data.taus))) if n > 1 else 0.0
    i = 0
    while i < n:
        j = i
        lo = hi = data.rho[i]
        while j + 1 < n:
            lo2 = min(lo, data.rho[j + 1])
            hi2 = max(hi, data.rho[j + 1])
            cover = level_tol + float(data.half_width[i:j + 2].max())
            if hi2 - lo2 <= cover:
                lo, hi = lo2, hi2
                j += 1
            else:
                break
        if j > i and (j - i + 1) >= min_samples:
            level = float(np.median(data.rho[i:j + 1]))
            plat = Plateau(tau_lo=float(data.taus[i]),
                           tau_hi=float(data.taus[j]),
                           level=level,
                           level_rational=Fraction(level).limit_denominator(10**6),
                           n_samples=j - i + 1)
            if certify_fn is not None and cell > 0 \
                    and plat.width > min_certify_cells * cell:
                mid = 0.5 * (plat.tau_lo + plat.tau_hi)
                try:
                    plat.certified = bool(certify_fn(mid))
                except ToruslockError:
                    plat.certified = False
            out.append(plat)
            i = j + 1
        else:
            i += 1
    data.plateaus = out
    return out


def family_distance(fam_a: TwistFamily, fam_b: TwistFamily, taus,
                    n: int = 32) -> float:
    """Sampled sup distance over (tau, theta, x), including the base offset."""
    d = circle_dist(fam_a.omega.value, fam_b.omega.value)
    worst = float(d)
    for t in taus:
        worst = max(worst, fam_a.field_of(t).d0(fam_b.field_of(t), n))
    return worst


def interpolate_family(family: TwistFamily, tau_n: float, f_hat: QpfSystem,
                       interval, eps: float, n_check: int = 32) -> TwistFamily:
    """Splice a nearby system into the family at parameter tau_n.

    Off the interval the fields are unchanged (only the base becomes that of
    f_hat); on [a, tau_n] and [tau_n, b] the lifts interpolate linearly
    between the frozen endpoint fields and f_hat's field.  Both closeness
    preconditions (f_hat and the swept members within eps/3 of f_{tau_n})
    are verified on samples, as is the twist condition of the result.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < tau_n < b:
        raise DomainError("tau_n must lie in the interior of the interval")
    phi_n = family.field_of(tau_n)
    d_hat = max(float(circle_dist(f_hat.omega.value, family.omega.value)),
                f_hat.field.d0(phi_n, n_check))
    if d_hat > eps / 3.0:
        raise DomainError(
            f"f_hat is {d_hat:.3g} away from the tau_n member, "
            f"beyond eps/3 = {eps / 3.0:.3g}")
    for t in (a, b):
        d_t = family.field_of(t).d0(phi_n, n_check)
        if d_t > eps / 3.0:
            raise DomainError(
                f"family member at tau = {t} is {d_t:.3g} from tau_n, "
                f"beyond eps/3")

    phi_a = family.field_of(a)
    phi_b = family.field_of(b)
    hat_field = f_hat.field

    def field_of(tau: float) -> TranslationField:
        if tau <= a or tau >= b:
            return family.field_of(tau)
        if tau <= tau_n:
            t = (tau - a) / (tau_n - a)
            return interpolate(phi_a, hat_field, t)
        t = (tau - tau_n) / (b - tau_n)
        return interpolate(hat_field, phi_b, t)

    out = TwistFamily(omega=f_hat.omega, field_of=field_of,
                      label=family.label + "+spliced")
    out.check_twist(np.linspace(a, b, 5))
    d_new = family_distance(out, TwistFamily(f_hat.omega, family.field_of),
                            np.linspace(a, b, 7), n_check)
    if d_new > eps:
        raise DomainError(f"spliced family moved {d_new:.3g} > eps = {eps}")
    return out
