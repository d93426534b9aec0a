"""Fibre locking: surgeries that give every first-return fibre map both
strictly positive and strictly negative displacement.

For a rational base p/q the fibre maps of f^q along one base orbit are all
conjugate, so perturbations can be confined to a fundamental interval of
length 1/q and transported by conjugacy.  ``interval_surgery`` realizes an
arbitrary admissible target psi for the q-step translation on such an
interval by setting f~_theta = (f^{q-1}_{theta+omega})^{-1} o g_theta there
and leaving f untouched elsewhere; the q-step map then equals g exactly.

``lock_all_fibres`` drives the sign profile gamma^+/gamma^- (sup / -inf of
the normalized q-step displacement per fibre) strictly positive everywhere:
a seeded single-hump surgery removes identity fibres, then two averaging
surgeries on a covering pair of intervals mix gamma^+ and gamma^- along
every base orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .dynamics import Omega, QpfSystem, rotation_number_circle
from .errors import (BoundaryMismatchError, CompositionDriftError, DomainError,
                     IntervalTooWideError, Phase1IncompleteError,
                     RepresentationError)
from .fields import TranslationField
from .plmaps import PLLift
from .tongues import displacement_extrema
from .util import wrap01

__all__ = ["conjugacy_witness", "interval_surgery", "lock_all_fibres",
           "FibreSignProfile", "LockOutcome", "sign_profile",
           "normalizing_integer", "system_distance", "QStepTarget"]


# --------------------------------------------------------------------------
# normalized q-step displacement and sign profiles
# --------------------------------------------------------------------------

def normalizing_integer(sys: QpfSystem, theta: float = 0.1234) -> int:
    """The integer m0 subtracted from the q-step lift so each fibre's
    displacement straddles zero (the rotation number of F^q, which is the
    same integer on every fibre once the system is fibre-wise rationalized).
    """
    G = sys.q_lift(theta)
    est = rotation_number_circle(G, n_max=4096, target_halfwidth=0.2)
    return int(round(est.value))


def q_displacement_extrema(sys: QpfSystem, theta: float, m0: int,
                           x_grid: int = 512):
    """(min, max) over x of the normalized q-step displacement at theta."""
    G = sys.q_lift(theta)
    lo, hi = displacement_extrema(G, x_grid)
    return lo - m0, hi - m0


@dataclass
class FibreSignProfile:
    theta_grid: np.ndarray
    gamma_plus: np.ndarray     # sup_x of the normalized q-step displacement
    gamma_minus: np.ndarray    # -inf_x of the same
    m0: int

    def min_margins(self):
        return float(self.gamma_plus.min()), float(self.gamma_minus.min())

    def all_positive(self, floor: float = 0.0) -> bool:
        lo_p, lo_m = self.min_margins()
        return lo_p > floor and lo_m > floor


def sign_profile(sys: QpfSystem, m0: int, thetas, x_grid: int = 512) -> FibreSignProfile:
    thetas = np.asarray(thetas, dtype=float)
    gp = np.empty_like(thetas)
    gm = np.empty_like(thetas)
    for i, t in enumerate(thetas):
        lo, hi = q_displacement_extrema(sys, float(t), m0, x_grid)
        gp[i], gm[i] = hi, -lo
    return FibreSignProfile(thetas, gp, gm, m0)


# --------------------------------------------------------------------------
# conjugacy along base orbits
# --------------------------------------------------------------------------

class OrbitMap:
    """Fibre map F^n_theta packaged with its inverse."""

    def __init__(self, sys: QpfSystem, theta: float, n: int):
        self.sys, self.theta, self.n = sys, float(theta), int(n)

    def __call__(self, x):
        return self.sys.fibre_apply(self.theta, x, self.n)

    def inverse(self, y):
        w = self.sys.omega.value
        return self.sys.fibre_apply(self.theta + self.n * w, y, -self.n)


def conjugacy_witness(sys: QpfSystem, theta: float, j: int,
                      n_check: int = 32, tol: float = 1e-9) -> OrbitMap:
    """The map h = f^{js}_theta conjugating f^q_theta to f^q_{theta+j/q},
    where s inverts p modulo q.  Verified on sample points before returning.
    """
    if not sys.omega.is_rational:
        raise DomainError("conjugacy needs a rational base")
    p, q = sys.omega.p, sys.omega.q
    if q == 1:
        raise DomainError("q = 1 admits no nontrivial fibre shift j")
    if not 1 <= j <= q - 1:
        raise DomainError(f"j must lie in [1, {q - 1}], got {j}")
    if math.gcd(p, q) != 1:
        raise DomainError("p and q must be coprime")
    s = pow(p, -1, q)
    h = OrbitMap(sys, theta, j * s)
    xs = np.arange(n_check) / n_check
    lhs = sys.fibre_apply(theta + j / q, xs, q)
    rhs = h(sys.fibre_apply(theta, h.inverse(xs), q))
    diff = lhs - rhs
    shift = round(float(np.median(diff)))
    if float(np.abs(diff - shift).max()) > tol:
        raise CompositionDriftError(
            f"conjugacy defect {np.abs(diff - shift).max():.3g} exceeds {tol}")
    return h


# --------------------------------------------------------------------------
# interval surgery
# --------------------------------------------------------------------------

class SurgeryField(TranslationField):
    """Field of the surgered system: f~ = (f^{q-1}_{.+w})^{-1} o g on [a, b),
    unchanged outside.  Evaluates lazily through the base system.
    """

    kind = "surgery"

    def __init__(self, base_sys: QpfSystem, a: float, b: float, psi):
        self.base_sys = base_sys
        self.a, self.b = float(a), float(b)
        self.psi = psi
        self.q = base_sys.omega.q
        self.report: dict = {}

    def _in_interval(self, theta):
        r = wrap01(np.asarray(theta, dtype=float) - self.a)
        return r < (self.b - self.a) - 1e-15

    def _tilde_step(self, theta, x):
        """F~_theta(x) for a single theta inside the interval."""
        sys = self.base_sys
        w = sys.omega.value
        z = np.asarray(x, dtype=float) + self.psi.lift(theta, x)
        for i in range(self.q - 1, 0, -1):
            z = sys.step_inverse(theta + i * w, z)
        return z

    def lift(self, theta, x):
        theta_b, x_b = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                           np.asarray(x, dtype=float))
        out = np.array(self.base_sys.field.lift(theta_b, x_b), dtype=float,
                       copy=True)
        if out.ndim == 0:
            if bool(self._in_interval(theta_b)):
                return self._tilde_step(float(theta_b), float(x_b)) - float(x_b)
            return out
        mask = np.broadcast_to(self._in_interval(theta_b), out.shape)
        if np.any(mask):
            flat_t = theta_b[mask]
            flat_x = x_b[mask]
            res = np.empty_like(flat_x)
            for tv in np.unique(flat_t):
                sel = flat_t == tv
                res[sel] = self._tilde_step(float(tv), flat_x[sel]) - flat_x[sel]
            out[mask] = res
        return out

    def fibre_pl(self, theta):
        t = float(theta)
        if not bool(self._in_interval(t)):
            return self.base_sys.field.fibre_pl(t)
        g = self.psi.fibre_pl(t)
        if g is None:
            return None
        sys = self.base_sys
        w = sys.omega.value
        chain = None
        for i in range(1, self.q):
            step = sys.fibre_pl(t + i * w)
            if step is None:
                return None
            chain = step if chain is None else step.compose(chain)
        if chain is None:          # q == 1: f~ = g directly
            return g
        return chain.inverse().compose(g)

    def sup_abs_bound(self):
        return self.base_sys.field.sup_abs_bound() + 2.0


class QStepTarget:
    """Admissible target for the q-step translation on a base interval:

        Psi(theta, x) = (1 - beta(theta)) D(theta, x) + beta(theta) hump(x)
                        - shift(theta) + m0

    where D is the current normalized q-step displacement, beta and shift are
    PL in theta, and hump is a fixed PL single-hump profile with exact zeros.
    """

    def __init__(self, base_sys: QpfSystem, m0: int, beta=None, shift=None,
                 hump_amp: float = 0.0):
        self.base_sys, self.m0 = base_sys, int(m0)
        self.beta = beta if beta is not None else (lambda t: np.zeros_like(np.asarray(t, float)))
        self.shift = shift if shift is not None else (lambda t: np.zeros_like(np.asarray(t, float)))
        self.hump_amp = float(hump_amp)
        n = 64
        self._hump_xs = np.arange(n) / n
        self._hump_vals = np.sin(2 * np.pi * self._hump_xs)
        self._hump_vals[0] = 0.0
        self._hump_vals[n // 2] = 0.0

    def _hump(self, x):
        r = wrap01(np.asarray(x, dtype=float))
        xs = np.concatenate((self._hump_xs, [1.0]))
        vs = np.concatenate((self._hump_vals, [self._hump_vals[0]]))
        return self.hump_amp * np.interp(r, xs, vs)

    def _norm_disp(self, theta: float, x):
        x = np.asarray(x, dtype=float)
        return self.base_sys.fibre_apply(theta, x, self.base_sys.omega.q) - x - self.m0

    def lift(self, theta, x):
        theta_b, x_b = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                           np.asarray(x, dtype=float))
        if theta_b.ndim == 0:
            t = float(theta_b)
            b = float(self.beta(t))
            return ((1.0 - b) * self._norm_disp(t, x_b) + b * self._hump(x_b)
                    - float(self.shift(t)) + self.m0)
        out = np.empty_like(x_b, dtype=float)
        flat_t = theta_b.ravel()
        flat_x = x_b.ravel()
        flat_o = out.ravel()
        for tv in np.unique(flat_t):
            sel = flat_t == tv
            b = float(self.beta(float(tv)))
            flat_o[sel] = ((1.0 - b) * self._norm_disp(float(tv), flat_x[sel])
                           + b * self._hump(flat_x[sel])
                           - float(self.shift(float(tv))) + self.m0)
        return out

    def fibre_pl(self, theta):
        """PL lift of x -> x + Psi(theta, x), exact when the base is PL."""
        t = float(theta)
        G = self.base_sys.q_lift(t)
        if not isinstance(G, PLLift):
            return None
        b = float(self.beta(t))
        c = -float(self.shift(t)) + self.m0
        xs = np.unique(np.concatenate((G.xs, self._hump_xs)))
        disp = G(xs) - xs - self.m0
        vals = (1.0 - b) * disp + b * self._hump(xs) + c
        return PLLift(xs, xs + vals)


def _x_samples(n=24):
    return np.arange(n) / n


def interval_surgery(sys: QpfSystem, interval, psi, *, verify_tol: float = 1e-9,
                     n_verify: int = 8, boundary_tol: float = 1e-9,
                     measure_grid: int = 128) -> QpfSystem:
    """Replace the q-step translation by psi on a half-open base interval.

    psi must agree with the current q-step translation on the interval ends
    (within boundary_tol) and define circle homeomorphisms.  The result is
    verified by direct q-fold composition at sampled interior fibres, and
    the perturbation size d(f~, f) is measured on a grid and stored in
    ``result.field.report``.
    """
    if not sys.omega.is_rational:
        raise DomainError("interval surgery needs a rational base")
    a, b = float(interval[0]), float(interval[1])
    q = sys.omega.q
    if b - a > 1.0 / q + 1e-12:
        raise IntervalTooWideError(f"|I| = {b - a:.6g} exceeds 1/q = {1.0 / q:.6g}")
    if b <= a:
        raise DomainError("empty surgery interval")

    xs = _x_samples()
    for t_end in (a, b):
        target = np.asarray(psi.lift(t_end, xs), dtype=float)
        current = sys.fibre_apply(t_end, xs, q) - xs
        if float(np.abs(target - current).max()) > boundary_tol:
            raise BoundaryMismatchError(
                f"psi differs from the q-step translation at theta = {t_end} "
                f"by {np.abs(target - current).max():.3g}")

    # admissibility of psi on the interval: fibre maps must be increasing
    probe_t = a + (b - a) * (np.arange(n_verify) + 0.5) / n_verify
    for t in probe_t:
        pl = psi.fibre_pl(float(t))
        if pl is not None:
            continue  # PLLift construction already validates monotonicity
        g = np.asarray(psi.lift(float(t), xs)) + xs
        dg = np.diff(np.concatenate((g, [g[0] + 1.0])))
        if np.any(dg <= 0.0):
            raise RepresentationError(
                f"psi fibre map at theta = {t} is not orientation-preserving")

    out = QpfSystem(sys.omega, SurgeryField(sys, a, b, psi))

    # verification: the q-step translation of the new system equals psi
    defect = 0.0
    for t in probe_t:
        got = out.fibre_apply(float(t), xs, q) - xs
        want = np.asarray(psi.lift(float(t), xs), dtype=float)
        defect = max(defect, float(np.abs(got - want).max()))
    if defect > verify_tol:
        raise CompositionDriftError(
            f"surgery verification defect {defect:.3g} exceeds {verify_tol}")

    out.field.report = {
        "defect": defect,
        "perturbation": system_distance(sys, out, measure_grid),
    }
    return out


def system_distance(sys_a: QpfSystem, sys_b: QpfSystem, n: int = 128) -> float:
    """Sampled sup metric max(d_C0(f, g), d_C0(f^-1, g^-1)) for systems with
    the same base rotation."""
    thetas = np.arange(n) / n
    xs = np.arange(n) / n
    fwd = 0.0
    inv = 0.0
    for t in thetas:
        da = np.asarray(sys_a.field.lift(t, xs), dtype=float)
        db = np.asarray(sys_b.field.lift(t, xs), dtype=float)
        fwd = max(fwd, float(np.abs(da - db).max()))
        ia = sys_a.step_inverse(t, xs)
        ib = sys_b.step_inverse(t, xs)
        inv = max(inv, float(np.abs(ia - ib).max()))
    return max(fwd, inv)


# --------------------------------------------------------------------------
# the locking driver
# --------------------------------------------------------------------------

def _trapezoid(lo, r1, r2, hi):
    """1-periodic continuous PL profile: 0 outside [lo, hi] mod 1, 1 on [r1, r2]."""
    def beta(t):
        t = lo + wrap01(np.asarray(t, dtype=float) - lo)
        up = np.clip((t - lo) / max(r1 - lo, 1e-300), 0.0, 1.0)
        down = np.clip((hi - t) / max(hi - r2, 1e-300), 0.0, 1.0)
        return np.minimum(up, down)
    return beta


@dataclass
class LockOutcome:
    system: QpfSystem
    before: FibreSignProfile
    after: FibreSignProfile
    perturbation: float
    phases: list
    ok: bool


def lock_all_fibres(sys: QpfSystem, eps: float, *, m0: int | None = None,
                    n_theta: int = 256, delta_id: float = 1e-7,
                    zeta: float = 0.25, floor_margin: float = 0.0,
                    verify_grid: int = 512, x_grid: int = 512) -> LockOutcome:
    """Perturb by less than eps so that every fibre of f^q has displacement
    of both signs (gamma^+ > 0 and gamma^- > 0 on the verification grid).

    Phase 1 removes identity fibres (detected by max |displacement| <
    delta_id) with a single-hump surgery on a covering of the identity set
    inside a fundamental interval anchored at a non-identity fibre.  Phase 2
    applies the two averaging surgeries with weight zeta on a pair of
    intervals whose base-orbit translates cover the circle.
    """
    if not sys.omega.is_rational:
        raise DomainError("lock_all_fibres needs a rational base")
    if not 0.0 < zeta < 0.5:
        raise DomainError("zeta must lie in (0, 1/2)")
    q = sys.omega.q
    u = 1.0 / q
    if m0 is None:
        m0 = normalizing_integer(sys)

    grid_full = np.arange(verify_grid) / verify_grid
    before = sign_profile(sys, m0, grid_full, x_grid)
    phases = []
    current = sys

    if before.all_positive(floor_margin):
        return LockOutcome(system=sys, before=before, after=before,
                           perturbation=0.0, phases=["noop"], ok=True)

    # ---- identity-fibre detection on a fundamental interval ----
    theta0 = 0.0
    k_grid = theta0 + u * np.arange(n_theta) / n_theta
    width = _widths(current, m0, k_grid, x_grid)
    flagged = width < delta_id

    if np.all(flagged):
        # every fibre acts as the identity: seed sign structure first
        a_pre = min(eps / 4.0, 0.03)
        i0 = (theta0 + 0.25 * u, theta0 + 0.75 * u)
        beta0 = _trapezoid(i0[0], theta0 + 0.45 * u, theta0 + 0.55 * u, i0[1])
        target = QStepTarget(current, m0, beta=beta0, hump_amp=a_pre)
        current = interval_surgery(current, i0, target)
        phases.append(("seed", a_pre))
        theta0 = theta0 + 0.5 * u      # anchor at the seeded fibre
        k_grid = theta0 + u * np.arange(n_theta) / n_theta
        width = _widths(current, m0, k_grid, x_grid)
        flagged = width < delta_id

    if np.any(flagged):
        runs = _flag_runs(flagged)
        cell = u / n_theta
        lo_lim = theta0 + cell
        hi_lim = theta0 + u - cell
        intervals = []
        for r0, r1 in runs:
            lo = max(k_grid[r0] - cell, lo_lim)
            hi = min(k_grid[r1] + 2 * cell, hi_lim)
            if hi > lo:
                intervals.append([lo, hi])
        intervals = _merge_intervals(intervals)
        delta_loc = 0.0
        for lo, hi in intervals:
            sel = (k_grid >= lo - cell) & (k_grid <= hi + cell)
            if np.any(sel):
                delta_loc = max(delta_loc, float(width[sel].max()))
        amp = max(delta_loc, min(eps / 6.0, 0.02))
        for attempt in range(3):
            betas = [_trapezoid(lo, lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo), hi)
                     for lo, hi in intervals]

            def beta_all(t, betas=betas):
                t = np.asarray(t, dtype=float)
                out = np.zeros_like(t)
                for bt in betas:
                    out = np.maximum(out, bt(t))
                return out

            target = QStepTarget(current, m0, beta=beta_all, hump_amp=amp)
            bad = _eta_violations(target, intervals, k_grid, delta_id)
            if not bad:
                break
            for lo, hi in bad:
                intervals = _merge_intervals(intervals + [[lo, hi]])
        else:
            raise Phase1IncompleteError("hump construction failed on some fibres")
        current = interval_surgery(current, (theta0, theta0 + u), target)
        phases.append(("hump", amp, len(intervals)))
        width = _widths(current, m0, k_grid, x_grid)
        if np.any(width <= 0.0):
            raise Phase1IncompleteError(
                "a fibre still has zero displacement width after phase 1")

    # ---- averaging surgeries on a covering pair ----
    # the averaging weight is halved until the measured perturbation fits the
    # budget (the locked margins scale with the weight but stay positive)
    base_system = current
    base_pert = system_distance(sys, base_system)
    zeta_eff = zeta
    for attempt in range(14):
        current = base_system
        for tag, lo_frac, plateau, hi_frac in (
                ("avg-J", 0.01, (0.10, 0.60), 0.69),
                ("avg-J2", 0.46, (0.55, 1.05), 1.14)):
            lam = _trapezoid(theta0 + lo_frac * u, theta0 + plateau[0] * u,
                             theta0 + plateau[1] * u, theta0 + hi_frac * u)
            shift = _GammaShift(current, m0, lam, zeta_eff, x_grid)
            target = QStepTarget(current, m0, shift=shift)
            iv = (theta0 + lo_frac * u,
                  theta0 + min(lo_frac + 0.98, hi_frac + 0.01) * u)
            current = interval_surgery(current, iv, target)
        pert = system_distance(sys, current)
        if pert < eps:
            phases.append(("avg", zeta_eff))
            break
        zeta_eff /= 1.6
    else:
        phases.append(("avg-overflow", zeta_eff))

    after = sign_profile(current, m0, grid_full, x_grid)
    ok = after.all_positive(floor_margin) and pert < eps
    return LockOutcome(system=current, before=before, after=after,
                       perturbation=pert, phases=phases, ok=ok)


class _GammaShift:
    """shift(theta) = zeta lambda(theta) (gamma^+(theta) - gamma^-(theta)),
    with per-fibre extrema computed on demand and cached."""

    def __init__(self, sys, m0, lam, zeta, x_grid):
        self.sys, self.m0, self.lam, self.zeta, self.x_grid = sys, m0, lam, zeta, x_grid
        self._cache: dict[float, float] = {}

    def __call__(self, theta):
        t = float(theta)
        v = self._cache.get(t)
        if v is None:
            lam = float(self.lam(t))
            if lam == 0.0:
                v = 0.0
            else:
                lo, hi = q_displacement_extrema(self.sys, t, self.m0, self.x_grid)
                v = self.zeta * lam * (hi + lo)   # hi - gamma^- = hi + lo
            if len(self._cache) > 65536:
                self._cache.clear()
            self._cache[t] = v
        return v


def _widths(sys, m0, thetas, x_grid):
    out = np.empty(len(thetas))
    for i, t in enumerate(thetas):
        lo, hi = q_displacement_extrema(sys, float(t), m0, x_grid)
        out[i] = max(abs(lo), abs(hi))
    return out


def _flag_runs(flags):
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def _merge_intervals(intervals):
    if not intervals:
        return []
    ivs = sorted([list(v) for v in intervals])
    out = [ivs[0]]
    for lo, hi in ivs[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return out


def _eta_violations(target: QStepTarget, intervals, k_grid, delta_id):
    """Fibres inside the surgery intervals where the hump target fails the
    sign conditions (a zero must exist; the map must not be the identity)."""
    xs = np.arange(96) / 96
    bad = []
    for lo, hi in intervals:
        sel = (k_grid >= lo) & (k_grid <= hi)
        for t in k_grid[sel]:
            eta = np.asarray(target.lift(float(t), xs), dtype=float) - target.m0
            if eta.min() > 1e-12 or eta.max() < -1e-12:
                bad.append([float(t) - 1e-9, float(t) + 1e-9])
            elif max(abs(eta.min()), abs(eta.max())) <= delta_id * 0.5:
                bad.append([float(t) - 1e-9, float(t) + 1e-9])
    return _merge_intervals(bad)
