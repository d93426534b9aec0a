"""Mode-locking certificates: an annulus mapped strictly inside itself.

A certificate stores two closed graph-form curves bounding an annulus, an
iterate count p and a base rotation; validity means the p-step image of each
boundary curve stays on the correct side with a positive vertical gap.  The
images are computed exactly for PWA fields: every polyline edge is split at
triangulation-cell crossings, after which each sub-edge maps affinely, so
the image is again a polyline and gap minima over merged breakpoints are
exact up to float rounding (a min_margin band absorbs it).

Certificates re-verify from their serialized form alone, and the certified
configuration is stable: perturbations of the field smaller than a quarter
of the margin per fibre step keep the annulus strictly invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .dynamics import Omega, QpfSystem, fibred_rotation_number
from .errors import (CertificationInfeasibleError, DomainError,
                     InvalidAnnulusError, PossiblyLockedAlready)
from .fields import TranslationField, field_from_obj
from .pwa import PwaField
from .util import circle_dist, wrap01

__all__ = ["LockCertificate", "certify_annulus", "pick_shift",
           "mode_lock_pipeline", "verify_certificate", "map_graph",
           "PipelineResult"]

MIN_MARGIN_DEFAULT = 1e-7


# --------------------------------------------------------------------------
# exact PL images of graphs under iterated PWA fibre maps
# --------------------------------------------------------------------------

def _split_edge(field: PwaField, t0, x0, t1, x1, base_off):
    """Parameters (strictly inside (0,1)) where the edge crosses cell lines."""
    tri = field.tri
    cuts = []
    b0, b1 = t0 + base_off, t1 + base_off
    # column crossings within (b0, b1): columns live on a 1-periodic lattice
    ext_cols = np.concatenate((tri.cols, [tri.cols[0] + 1.0]))
    kb = math.floor(b0)
    grid = []
    while kb < b1 + 1:
        lo_i = np.searchsorted(ext_cols, b0 - kb, side="right")
        hi_i = np.searchsorted(ext_cols, b1 - kb, side="left")
        grid.extend(ext_cols[lo_i:hi_i + 1] + kb)
        kb += 1
    for c in grid:
        u = (c - b0) / (b1 - b0)
        if 1e-12 < u < 1 - 1e-12:
            cuts.append(float(u))
    # row crossings: rows are i/n, so enumerate the integer lattice directly
    if x1 != x0:
        lo, hi = min(x0, x1), max(x0, x1)
        n = tri.n_grid
        i_lo = math.ceil(lo * n - 1e-12)
        i_hi = math.floor(hi * n + 1e-12)
        for i in range(i_lo, i_hi + 1):
            u = ((i / n) - x0) / (x1 - x0)
            if 1e-12 < u < 1 - 1e-12:
                cuts.append(float(u))
    cuts = sorted(set(cuts))
    # diagonal crossings: within each sub-edge the cell is fixed, and the
    # in-cell coordinates are affine in the parameter
    params = [0.0] + cuts + [1.0]
    extra = []
    for a, b in zip(params, params[1:]):
        um = 0.5 * (a + b)
        tm = t0 + um * (t1 - t0) + base_off
        xm = x0 + um * (x1 - x0)
        j, s_m = tri.locate(tm)
        i = int(np.clip(np.floor(wrap01(xm) * tri.n_grid), 0, tri.n_grid - 1))
        # diag condition: frac_x(u) - s(u) = 0, both affine in u
        c = np.concatenate((tri.cols, [tri.cols[0] + 1.0]))
        width = c[int(j) + 1] - c[int(j)]

        def incell(u):
            tt = t0 + u * (t1 - t0) + base_off
            xx = x0 + u * (x1 - x0)
            rt = wrap01(tt)
            s = (rt - tri.cols[int(j)]) / width if rt >= tri.cols[int(j)] \
                else (rt + 1.0 - tri.cols[int(j)]) / width
            fx = wrap01(xx) * tri.n_grid - i
            return fx - s
        fa, fb = incell(a + 1e-13), incell(b - 1e-13)
        if (fa > 0) != (fb > 0):
            u_star = a + (b - a) * fa / (fa - fb)
            if a + 1e-12 < u_star < b - 1e-12:
                extra.append(u_star)
    return sorted(set(cuts + extra))


def map_graph(field: PwaField, ts, xs, base_off: float):
    """Exact image (as values over the same abscissae) of the polyline
    (t, x(t)) under the fibre maps at base points t + base_off."""
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    new_ts = [ts[0]]
    new_xs_src = [xs[0]]
    for k in range(len(ts) - 1):
        t0, t1 = ts[k], ts[k + 1]
        x0, x1 = xs[k], xs[k + 1]
        if t1 <= t0:
            continue
        for u in _split_edge(field, t0, x0, t1, x1, base_off):
            new_ts.append(t0 + u * (t1 - t0))
            new_xs_src.append(x0 + u * (x1 - x0))
        new_ts.append(t1)
        new_xs_src.append(x1)
    new_ts = np.asarray(new_ts)
    new_xs_src = np.asarray(new_xs_src)
    imgs = new_xs_src + field.lift(new_ts + base_off, new_xs_src)
    return new_ts, imgs


def iterate_graph(field: PwaField, ts, xs, omega_prime: float, q: int):
    """q-fold image of the graph under (omega', field): returns (ts', values)
    where the image curve is {(t + q omega', value(t))}."""
    cur_ts, cur_xs = np.asarray(ts, float), np.asarray(xs, float)
    for i in range(q):
        cur_ts, cur_xs = map_graph(field, cur_ts, cur_xs, i * omega_prime)
    return cur_ts, cur_xs


class PeriodicGraph:
    """Closed graph-form curve: x(t + k) = x(t) + m."""

    def __init__(self, ts, xs, k: int, m: int):
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(xs, dtype=float)
        keep = np.concatenate(([True], np.diff(ts) > 1e-13))
        self.ts, self.xs = ts[keep], xs[keep]
        self.k, self.m = int(k), int(m)
        if self.k < 1:
            raise InvalidAnnulusError("closed graph needs horizontal period >= 1")
        # force exact closure: the final sample is the first shifted by (k, m)
        if abs((self.ts[-1] - self.ts[0]) - self.k) > 1e-9:
            raise InvalidAnnulusError("graph does not span its stated period")
        self.ts[-1] = self.ts[0] + self.k
        self.xs[-1] = self.xs[0] + self.m

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        n = np.floor((t - self.ts[0]) / self.k)
        r = t - n * self.k
        return np.interp(r, self.ts, self.xs) + n * self.m

    def breakpoints_in(self, t0, t1):
        out = []
        n0 = math.floor((t0 - self.ts[0]) / self.k) - 1
        n1 = math.floor((t1 - self.ts[0]) / self.k) + 1
        for n in range(n0, n1 + 1):
            for t in self.ts[:-1] + n * self.k:
                if t0 <= t <= t1:
                    out.append(t)
        return np.asarray(sorted(out))


def _min_gap(upper: PeriodicGraph, lower: PeriodicGraph, t0, t1):
    """Exact minimum of upper - lower over [t0, t1] (PL difference)."""
    bps = np.unique(np.concatenate((upper.breakpoints_in(t0, t1),
                                    lower.breakpoints_in(t0, t1),
                                    [t0, t1])))
    vals = upper(bps) - lower(bps)
    i = int(np.argmin(vals))
    return float(vals[i]), float(bps[i])


# --------------------------------------------------------------------------
# certificates
# --------------------------------------------------------------------------

@dataclass
class LockCertificate:
    field_obj: dict               # serialized PWA field
    omega_prime: float            # certified base rotation
    base_pq: tuple                # the rational (p, q) the shift started from
    p_iterate: int                # the annulus is strictly invariant under f^p
    m0: int                       # vertical lift normalization
    curve_plus: dict              # {"ts": [...], "xs": [...], "k": k, "m": m}
    curve_minus: dict
    margin: float
    min_margin: float
    claimed_rotation: Fraction
    check_log: dict
    seed: int = 0
    perturbation: float = 0.0

    def to_obj(self):
        return {
            "schema": "toruslock-certificate-1",
            "field": self.field_obj,
            "omega_prime": repr(float(self.omega_prime)),
            "base": {"p": self.base_pq[0], "q": self.base_pq[1]},
            "p_iterate": self.p_iterate,
            "m0": self.m0,
            "curves": {"plus": _curve_obj(self.curve_plus),
                       "minus": _curve_obj(self.curve_minus)},
            "margin": repr(float(self.margin)),
            "min_margin": repr(float(self.min_margin)),
            "claimed_rotation": {"num": self.claimed_rotation.numerator,
                                 "den": self.claimed_rotation.denominator},
            "check_log": {k: repr(float(v)) for k, v in self.check_log.items()},
            "seed": self.seed,
            "perturbation": repr(float(self.perturbation)),
        }

    @staticmethod
    def from_obj(obj):
        cur = obj["curves"]
        return LockCertificate(
            field_obj=obj["field"],
            omega_prime=float(obj["omega_prime"]),
            base_pq=(obj["base"]["p"], obj["base"]["q"]),
            p_iterate=int(obj["p_iterate"]),
            m0=int(obj["m0"]),
            curve_plus=_curve_from_obj(cur["plus"]),
            curve_minus=_curve_from_obj(cur["minus"]),
            margin=float(obj["margin"]),
            min_margin=float(obj["min_margin"]),
            claimed_rotation=Fraction(obj["claimed_rotation"]["num"],
                                      obj["claimed_rotation"]["den"]),
            check_log={k: float(v) for k, v in obj["check_log"].items()},
            seed=int(obj.get("seed", 0)),
            perturbation=float(obj.get("perturbation", 0.0)),
        )


def _curve_obj(c):
    return {"ts": [repr(float(v)) for v in c["ts"]],
            "xs": [repr(float(v)) for v in c["xs"]],
            "k": int(c["k"]), "m": int(c["m"])}


def _curve_from_obj(c):
    return {"ts": np.array([float(v) for v in c["ts"]]),
            "xs": np.array([float(v) for v in c["xs"]]),
            "k": int(c["k"]), "m": int(c["m"])}


def certify_annulus(field: PwaField, omega_prime: float, p: int, m0: int,
                    curve_plus: dict, curve_minus: dict,
                    min_margin: float = MIN_MARGIN_DEFAULT,
                    base_pq=None, claimed_rotation=None, seed=0,
                    perturbation=0.0):
    """Certify that the annulus between the two closed graph curves is mapped
    strictly inside itself by the p-th iterate of (omega', field).

    curve_plus is the lower boundary (moved up by the dynamics), curve_minus
    the upper one (moved down); both must share the homotopy type (k, m).
    Returns a LockCertificate or raises CertificationInfeasibleError with the
    failing gap named.
    """
    gp = PeriodicGraph(curve_plus["ts"], curve_plus["xs"],
                       curve_plus["k"], curve_plus["m"])
    gm = PeriodicGraph(curve_minus["ts"], curve_minus["xs"],
                       curve_minus["k"], curve_minus["m"])
    if (gp.k, gp.m) != (gm.k, gm.m):
        raise InvalidAnnulusError(
            f"homotopy mismatch: {(gp.k, gp.m)} vs {(gm.k, gm.m)}")
    t0 = gp.ts[0]
    t1 = t0 + gp.k
    width, _ = _min_gap(gm, gp, t0, t1)
    if width <= 0:
        raise InvalidAnnulusError("curves are not ordered (annulus empty)")

    sigma = p * omega_prime
    sigma_int = round(sigma)
    sigma_frac = sigma - sigma_int

    def image_graph(g: PeriodicGraph) -> PeriodicGraph:
        ts_i, xs_i = iterate_graph(field, g.ts, g.xs, omega_prime, p)
        # the image point over source t sits at t + sigma; renormalize to a
        # graph over the base with the lift brought back near the original
        ts_img = ts_i + sigma_frac
        xs_img = xs_i - m0 - sigma_int * 0  # vertical branch fixed by m0
        return PeriodicGraph(ts_img, xs_img, g.k, g.m)

    img_p = image_graph(gp)
    img_m = image_graph(gm)

    gap_plus, at_plus = _min_gap(img_p, gp, t0, t1)      # image above Gamma^+
    gap_minus, at_minus = _min_gap(gm, img_m, t0, t1)    # image below Gamma^-
    cross_up, _ = _min_gap(gm, img_p, t0, t1)            # image of + below -
    cross_down, _ = _min_gap(img_m, gp, t0, t1)          # image of - above +

    check_log = {
        "gap_plus": gap_plus,
        "gap_minus": gap_minus,
        "cross_up": cross_up,
        "cross_down": cross_down,
        "annulus_width": width,
        "sigma_frac": sigma_frac,
    }
    margin = min(gap_plus, gap_minus, cross_up, cross_down)
    if not margin > min_margin:
        worst = min(check_log, key=lambda k: check_log[k])
        raise CertificationInfeasibleError(
            f"gap {worst} = {margin:.3g} at theta = "
            f"{at_plus if worst == 'gap_plus' else at_minus:.6g} "
            f"does not exceed min_margin = {min_margin}", binding=worst)

    if base_pq is None:
        base_pq = (round(omega_prime), 1)
    if claimed_rotation is None:
        # orbits in the strip track curves of slope m/k: the fibre rotation
        # number is m0/p plus the slope times the base-rotation offset
        w_exact = Fraction(omega_prime)
        claimed_rotation = Fraction(m0, p) + Fraction(gp.m, gp.k) \
            * (w_exact - Fraction(base_pq[0], base_pq[1]))

    return LockCertificate(field_obj=field.to_obj(), omega_prime=omega_prime,
                           base_pq=tuple(base_pq), p_iterate=p, m0=m0,
                           curve_plus={"ts": gp.ts, "xs": gp.xs,
                                       "k": gp.k, "m": gp.m},
                           curve_minus={"ts": gm.ts, "xs": gm.xs,
                                        "k": gm.k, "m": gm.m},
                           margin=margin, min_margin=min_margin,
                           claimed_rotation=claimed_rotation,
                           check_log=check_log, seed=seed,
                           perturbation=perturbation)


def verify_certificate(obj_or_cert, tol: float = 1e-12) -> dict:
    """Recompute every gap of a stored certificate from its own data.

    Returns {"ok": bool, "margin": recomputed, "stored": stored, ...};
    pure function of the serialized payload."""
    cert = obj_or_cert if isinstance(obj_or_cert, LockCertificate) \
        else LockCertificate.from_obj(obj_or_cert)
    field = field_from_obj(cert.field_obj)
    re = certify_annulus(field, cert.omega_prime, cert.p_iterate, cert.m0,
                         cert.curve_plus, cert.curve_minus,
                         min_margin=cert.min_margin, base_pq=cert.base_pq,
                         claimed_rotation=cert.claimed_rotation)
    return {"ok": abs(re.margin - cert.margin) <= tol,
            "margin": re.margin, "stored": cert.margin,
            "defect": abs(re.margin - cert.margin)}


# --------------------------------------------------------------------------
# shift selection
# --------------------------------------------------------------------------

def pick_shift(sys: QpfSystem, pair, *, min_margin: float = MIN_MARGIN_DEFAULT,
               m0: int | None = None, max_tries: int = 14, seed: int = 0,
               s_cap: float | None = None, s_init: float | None = None):
    """Choose the base shift s > 0 so the tilted pair certifies at
    omega' = p/q + s/2; measured slacks bound the first candidate and the
    exact gap computation accepts or shrinks it."""
    from .curves import tilt_verticals
    from .locking import normalizing_integer
    if not sys.omega.is_rational:
        raise DomainError("pick_shift needs the rational pre-shift system")
    if not isinstance(sys.field, PwaField):
        raise DomainError("pick_shift needs a PWA field")
    p, q = sys.omega.p, sys.omega.q
    if m0 is None:
        m0 = normalizing_integer(sys)

    # Lipschitz scale of the q-step fibre maps, sampled
    L = 1.0
    for th in np.linspace(0.05, 0.95, 7):
        G = sys.q_lift(th)
        L = max(L, G.max_slope())

    # displacement slack along the untilted curves at s = 0 and their slopes
    gap0 = np.inf
    slope_max = 1.0
    for side in ("-", "+"):
        ts, xs = pair.graph(side)
        dt = np.diff(ts)
        good = dt > 1e-12
        slope_max = max(slope_max,
                        float(np.abs(np.diff(xs)[good] / dt[good]).max()))
        for piece in pair.pieces:
            arr_v = piece.minus if side == "-" else piece.plus
            for t, x in zip(piece.thetas, arr_v):
                d = abs(float(sys.fibre_apply(t, x, q)) - x - m0)
                gap0 = min(gap0, d)
    if not np.isfinite(gap0) or gap0 <= 0:
        gap0 = max(pair.margin, 1e-9)

    s0 = min(gap0 / (q * (slope_max + L + 1.0)),
             pair.epsilon_spacing / (10.0 * q), 1.0 / (8.0 * q))
    if s_cap is not None:
        s0 = min(s0, s_cap)
    if s_init is not None:
        s0 = float(s_init)      # caller-requested shift, typically too large
    last_exc = None
    for i in range(max_tries):
        s = s0 / (2 ** i)
        if s <= 0:
            break
        try:
            tilted = pair if not any(v is not None for v in pair.verticals) \
                else tilt_verticals(pair, s, max_slope=max(L, 1.0),
                                    extent=min(s * q / 4.0,
                                               pair.epsilon_spacing / 20.0))
            ts_m, xs_m = tilted.graph("-")
            ts_p, xs_p = tilted.graph("+")
            k, m = tilted.closure
            omega_prime = p / q + s / 2.0
            cert = certify_annulus(
                sys.field, omega_prime, q, m0,
                {"ts": ts_p, "xs": xs_p, "k": k, "m": m},
                {"ts": ts_m, "xs": xs_m, "k": k, "m": m},
                min_margin=min_margin, base_pq=(p, q), seed=seed)
            return s, omega_prime, tilted, cert
        except (CertificationInfeasibleError, InvalidAnnulusError) as exc:
            last_exc = exc
    raise CertificationInfeasibleError(
        f"no admissible shift s in ({s0 / 2 ** max_tries:.3g}, {s0:.3g}]: "
        f"{last_exc}", binding=getattr(last_exc, "binding", None))


# --------------------------------------------------------------------------
# the end-to-end pipeline
# --------------------------------------------------------------------------

@dataclass
class PipelineResult:
    certificate: LockCertificate
    stages: dict
    perturbation: float


def total_distance(sys_in: QpfSystem, sys_out: QpfSystem, n: int = 128) -> float:
    """Metric between systems including the base-rotation change and the
    inverse-side distance."""
    from .locking import system_distance
    d_base = float(circle_dist(sys_in.omega.value, sys_out.omega.value))
    d_maps = system_distance(sys_in, sys_out, n)
    return max(d_base, d_maps)


def mode_lock_pipeline(sys: QpfSystem, eps: float, *, seed: int = 0,
                       n_grid: int | None = None, n_theta_tongue: int = 64,
                       min_margin: float = MIN_MARGIN_DEFAULT,
                       lock_grid: int = 192, sweep_columns: int = 768,
                       explicit_partition_limit: int = 30_000) -> PipelineResult:
    """Perturb the input by less than eps into a certified mode-locked
    system: rationalize the base, project to a PWA field, lock every fibre
    of the first-return map, extract the zero set, build the curve pair and
    certify the annulus at a shifted base rotation.

    A PossiblyLockedAlready signal from the rationalization short-circuits
    into a direct certification attempt on the (projected) input.
    """
    from .locking import lock_all_fibres, normalizing_integer, system_distance
    from .pwa import auto_grid_size, pwa_approximate, triangulate
    from .partition import partition_size_estimate, refine_partition
    from .zeroset import extract_zero_set, sweep_zero_set
    from .curves import build_curves
    from .tongues import rationalize_base

    stages: dict = {"seed": seed, "eps": eps}
    if eps <= 0:
        # only a direct certification of the unperturbed input is allowed
        return _direct_branch(sys, eps, seed, n_grid, min_margin, stages)

    try:
        rat = rationalize_base(sys, eps * 0.95, n_theta=n_theta_tongue)
    except PossiblyLockedAlready as sig:
        stages["short_circuit"] = str(sig)
        return _direct_branch(sys, eps, seed, n_grid, min_margin, stages)
    stages["rationalize"] = rat.to_obj()
    p, q = rat.p_over_q.numerator, rat.p_over_q.denominator

    sys_rat = rat.apply(sys)
    n_eff = auto_grid_size(q, p, requested=n_grid)
    tri = triangulate(q, (p, q), n_eff, seed=seed)
    field0 = pwa_approximate(sys_rat.field, tri, probe_grid=128)
    stages["projection"] = {"n_grid": n_eff, "error": field0.approx_error}
    if field0.approx_error > eps * 0.1:
        raise CertificationInfeasibleError(
            f"PWA projection error {field0.approx_error:.3g} exceeds the "
            f"budget share {eps * 0.1:.3g}", binding="projection")
    sys0 = QpfSystem(Omega.rational(p, q), field0)
    m0 = normalizing_integer(sys0)

    lock = lock_all_fibres(sys0, eps * 0.5, m0=m0, n_theta=lock_grid,
                           verify_grid=2 * lock_grid)
    stages["lock"] = {"phases": lock.phases, "perturbation": lock.perturbation,
                      "gamma_after": lock.after.min_margins(), "ok": lock.ok}
    if not lock.ok:
        raise CertificationInfeasibleError("fibre locking did not converge",
                                           binding="lock")

    field1 = pwa_approximate(lock.system.field, tri, probe_grid=128)
    stages["reprojection"] = {"error": field1.approx_error}
    sys1 = QpfSystem(Omega.rational(p, q), field1)

    if partition_size_estimate(n_eff, q) <= explicit_partition_limit:
        from .genericity import genericize
        field1 = genericize(field1, Fraction(p, q), seed=seed,
                            nudge_budget=min(1e-4, eps * 0.02))
        sys1 = QpfSystem(Omega.rational(p, q), field1)
        part = refine_partition(field1, (p, q))
        arr = extract_zero_set(part)
        stages["zero_set"] = {"backend": "partition",
                              "polygons": len(part),
                              "components": len(arr.components)}
    else:
        arr = sweep_zero_set(sys1, m0, n_columns=sweep_columns)
        stages["zero_set"] = {"backend": "sweep",
                              "components": len(arr.components),
                              "cvs": len(arr.cvs)}

    pair = build_curves(arr, seed=seed)
    stages["curves"] = {"closure": pair.closure, "branch": pair.meta["branch"],
                        "pieces": len(pair.pieces),
                        "verticals": sum(v is not None for v in pair.verticals),
                        "margin": pair.margin}

    s, omega_prime, tilted, cert = pick_shift(sys1, pair,
                                              min_margin=min_margin, m0=m0,
                                              seed=seed)
    stages["shift"] = {"s": s, "omega_prime": omega_prime}

    sys_out = QpfSystem(Omega.irrational(omega_prime), field1)
    pert = total_distance(sys, sys_out)
    cert.perturbation = pert
    stages["perturbation"] = pert
    if pert > eps:
        raise CertificationInfeasibleError(
            f"total perturbation {pert:.3g} exceeds eps = {eps}",
            binding="perturbation")
    return PipelineResult(certificate=cert, stages=stages, perturbation=pert)


def _direct_branch(sys: QpfSystem, eps: float, seed, n_grid, min_margin,
                   stages) -> PipelineResult:
    """Direct certification attempt: look for a horizontal annulus mapped
    strictly inside itself by a low iterate of the (projected) input."""
    from .pwa import pwa_approximate, triangulate

    if isinstance(sys.field, PwaField):
        field = sys.field
        proj_err = 0.0
    else:
        tri = triangulate(1, (0, 1), max(32, n_grid or 0), seed=seed)
        field = pwa_approximate(sys.field, tri, probe_grid=128)
        proj_err = field.approx_error
        if eps > 0 and proj_err > eps:
            raise CertificationInfeasibleError(
                "projection of the unperturbed input already exceeds eps",
                binding="projection")
    stages["direct"] = {"projection_error": proj_err}
    w = sys.omega.value

    levels = np.arange(0.0, 1.0, 1.0 / 64.0)
    thetas = np.arange(0.0, 1.0, 1.0 / 128.0)
    for p_it in (1, 2, 3, 4):
        disp = np.empty((len(levels), len(thetas)))
        x = np.tile(levels[:, None], (1, len(thetas)))
        t = np.tile(thetas[None, :], (len(levels), 1))
        xx = x.copy()
        for i in range(p_it):
            xx = xx + field.lift(t + i * w, xx)
        disp = xx - x
        mbar = int(round(float(np.median(disp))))
        dn = disp - mbar
        up = np.where(np.all(dn > 0, axis=1))[0]     # levels pushed up
        down = np.where(np.all(dn < 0, axis=1))[0]   # levels pushed down
        if len(up) == 0 or len(down) == 0:
            continue
        for a_i in up:
            for b_i in down:
                if levels[b_i] <= levels[a_i]:
                    b_lift = levels[b_i] + 1.0
                else:
                    b_lift = levels[b_i]
                ts = np.array([0.0, 1.0])
                try:
                    cert = certify_annulus(
                        field, w, p_it, mbar,
                        {"ts": ts, "xs": np.full(2, levels[a_i]), "k": 1, "m": 0},
                        {"ts": ts, "xs": np.full(2, b_lift), "k": 1, "m": 0},
                        min_margin=min_margin, base_pq=(mbar, p_it),
                        claimed_rotation=Fraction(mbar, p_it), seed=seed)
                    cert.perturbation = proj_err
                    stages["direct"]["p"] = p_it
                    return PipelineResult(certificate=cert, stages=stages,
                                          perturbation=proj_err)
                except (CertificationInfeasibleError, InvalidAnnulusError):
                    continue
    raise PossiblyLockedAlready(
        "no certified margin to move the rotation number, but no direct "
        "horizontal annulus certificate was found either")
