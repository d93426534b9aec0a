"""Construction of the boundary-curve pair from a zero-set arrangement.

Working in the lift, a curve pair tracks one negative-region corridor and
the positive-region corridor shadowing it from below (exactly one zero
crossing between them on every fibre).  Between events the curves follow the
corridor midlines; the continuation either returns to the same corridor pair
after an integer period (closed curves exist inside the regions) or is
blocked at a right critical vertex, where a vertical jump to the next
corridor restarts it.  Repetition of a target-point projection closes the
pair with integer winding (k, m).

Blocking is decided by probing just past a critical fibre: if the previous
midline of Lambda^- lands outside the negative region there, the negative
corridor pinched (the minus curve hit the vertex); if the midline of
Lambda^+ lands outside the positive region, the positive corridor pinched.
Any other critical vertex is passed through.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (ContinuationDivergedError, CriticalFibreError,
                     DomainError, FibreExhaustedError,
                     PigeonholeViolationError, TiltTooLargeError)
from .util import stage_rng, wrap01
from .zeroset import FibreCut, ZeroSetArrangement

__all__ = ["CurvePair", "CurvePiece", "shadow_interval", "continue_to_target",
           "build_curves", "tilt_verticals"]

TARGET_SNAP = 1e-6
CV_EPS = 4e-9


@dataclass
class CurvePiece:
    thetas: np.ndarray          # strictly increasing lift abscissae
    minus: np.ndarray           # lambda^- samples (inside the negative region)
    plus: np.ndarray            # lambda^+ samples (inside the positive region)

    def at(self, side: str, th: float) -> float:
        arr = self.minus if side == "-" else self.plus
        return float(np.interp(th, self.thetas, arr))

    def trimmed(self, t_hi: float) -> "CurvePiece":
        keep = self.thetas < t_hi - 1e-14
        ts = np.concatenate((self.thetas[keep], [t_hi]))
        mn = np.concatenate((self.minus[keep], [self.at("-", t_hi)]))
        pl = np.concatenate((self.plus[keep], [self.at("+", t_hi)]))
        return CurvePiece(ts, mn, pl)

    def tail_from(self, t_lo: float) -> "CurvePiece":
        keep = self.thetas > t_lo + 1e-14
        ts = np.concatenate(([t_lo], self.thetas[keep]))
        mn = np.concatenate(([self.at("-", t_lo)], self.minus[keep]))
        pl = np.concatenate(([self.at("+", t_lo)], self.plus[keep]))
        return CurvePiece(ts, mn, pl)


@dataclass
class Vertical:
    theta: float
    side: str                   # "-" or "+"
    a: float                    # endpoint on the previous piece
    b: float                    # endpoint on the next piece


@dataclass
class CurvePair:
    pieces: list                 # CurvePiece over consecutive intervals
    verticals: list              # Vertical between piece i and piece i+1
    targets: list                # (theta*, x*) of the blocking vertices
    closure: tuple               # (k, m): horizontal and vertical period
    epsilon_spacing: float
    margin: float                # min corridor half-width along the samples
    meta: dict = dc_field(default_factory=dict)

    def theta_span(self):
        return self.pieces[0].thetas[0], self.pieces[-1].thetas[-1]

    def to_obj(self):
        return {
            "schema": "toruslock-curves-1",
            "closure": list(self.closure),
            "epsilon_spacing": repr(float(self.epsilon_spacing)),
            "margin": repr(float(self.margin)),
            "branch": self.meta.get("branch", "?"),
            "pieces": [{"thetas": [repr(float(v)) for v in p.thetas],
                        "minus": [repr(float(v)) for v in p.minus],
                        "plus": [repr(float(v)) for v in p.plus]}
                       for p in self.pieces],
            "verticals": [{"theta": repr(float(v.theta)), "side": v.side,
                           "a": repr(float(v.a)), "b": repr(float(v.b))}
                          for v in self.verticals if v is not None],
            "targets": [[repr(float(t)), repr(float(x))]
                        for t, x in self.targets],
        }

    @staticmethod
    def from_obj(obj):
        pieces = [CurvePiece(np.array([float(v) for v in p["thetas"]]),
                             np.array([float(v) for v in p["minus"]]),
                             np.array([float(v) for v in p["plus"]]))
                  for p in obj["pieces"]]
        verts = [Vertical(theta=float(v["theta"]), side=v["side"],
                          a=float(v["a"]), b=float(v["b"]))
                 for v in obj["verticals"]]
        return CurvePair(pieces=pieces, verticals=verts,
                         targets=[(float(t), float(x))
                                  for t, x in obj["targets"]],
                         closure=tuple(obj["closure"]),
                         epsilon_spacing=float(obj["epsilon_spacing"]),
                         margin=float(obj["margin"]),
                         meta={"branch": obj.get("branch", "?")})

    def graph(self, side: str):
        """Concatenated polyline over one closure period; verticals must have
        been tilted away (or absent)."""
        ts, vs = [], []
        for piece in self.pieces:
            arr = piece.minus if side == "-" else piece.plus
            for t, v in zip(piece.thetas, arr):
                if ts and t <= ts[-1] + 1e-15:
                    continue
                ts.append(float(t))
                vs.append(float(v))
        return np.asarray(ts), np.asarray(vs)


# --------------------------------------------------------------------------
# lifted fibre cuts
# --------------------------------------------------------------------------

class _LiftCut:
    """Crossings of one lifted fibre, indexable over all of R: crossing k+n
    is crossing k translated by the number of full turns."""

    def __init__(self, cut: FibreCut):
        if len(cut.xs) == 0:
            raise FibreExhaustedError(
                f"fibre {cut.theta} carries no zero crossing")
        self.cut = cut
        self.n = len(cut.xs)

    def crossing(self, k: int) -> float:
        return float(self.cut.xs[k % self.n] + (k // self.n))

    def index_below(self, x: float) -> int:
        r = wrap01(x)
        k = int(np.searchsorted(self.cut.xs, r, side="right")) - 1
        base = int(np.floor(x))
        return k + base * self.n

    def sign_above(self, k: int) -> int:
        return int(self.cut.sign_above[k % self.n])

    def sign_at(self, x: float) -> int:
        return self.sign_above(self.index_below(x))

    def comp(self, k: int) -> int:
        return int(self.cut.comp[k % self.n])

    def interval(self, k: int):
        return self.crossing(k), self.crossing(k + 1)


def _lift_cut(arr: ZeroSetArrangement, theta: float) -> _LiftCut:
    return _LiftCut(arr.fibre(wrap01(theta)))


def _on_cv_fibre(arr: ZeroSetArrangement, theta: float, tol: float = 1e-9):
    for cv in arr.cvs:
        if abs(wrap01(theta - cv.theta + 0.5) - 0.5) < tol:
            return cv
    return None


def shadow_interval(arr: ZeroSetArrangement, theta_hat: float, x_hat: float):
    """Maximal open interval of heights y below x_hat lying in the positive
    region with exactly one zero crossing inside (y, x_hat)."""
    if _on_cv_fibre(arr, theta_hat) is not None:
        raise CriticalFibreError(f"fibre {theta_hat} carries a critical vertex")
    cut = _lift_cut(arr, theta_hat)
    k = cut.index_below(x_hat)
    if cut.sign_above(k) >= 0:
        raise DomainError(f"({theta_hat}, {x_hat}) is not in the negative region")
    if cut.sign_above(k - 1) <= 0:
        raise DomainError("no positive interval directly below the crossing")
    lo, xi = cut.interval(k - 1)
    return lo, xi


# --------------------------------------------------------------------------
# corridor state
# --------------------------------------------------------------------------

@dataclass
class _State:
    theta: float
    sigma1: float       # upper crossing of the negative corridor
    sigma2: float       # separating crossing
    sigma3: float       # lower crossing of the positive corridor
    comp2: int

    @property
    def lam_minus(self):
        return 0.5 * (self.sigma1 + self.sigma2)

    @property
    def lam_plus(self):
        return 0.5 * (self.sigma2 + self.sigma3)

    @property
    def half_width(self):
        return 0.5 * min(self.sigma1 - self.sigma2, self.sigma2 - self.sigma3)


def _state_at(arr, theta, x_ref) -> _State:
    cut = _lift_cut(arr, theta)
    k = cut.index_below(x_ref)
    if cut.sign_above(k) >= 0:
        raise DomainError(
            f"reference {x_ref} is not in the negative region at {theta}")
    s2, s1 = cut.interval(k)
    s3 = cut.crossing(k - 1)
    return _State(theta=theta, sigma1=s1, sigma2=s2, sigma3=s3,
                  comp2=cut.comp(k))


def _next_cv(arr, t):
    """(lifted abscissa, cv) of the first critical fibre strictly right of t."""
    best = None
    for cv in arr.cvs:
        cand = cv.theta + np.ceil(t - cv.theta)
        if cand <= t + 1e-12:
            cand += 1.0
        if best is None or cand < best[0]:
            best = (float(cand), cv)
    return best


def continue_to_target(arr: ZeroSetArrangement, triple, *,
                       max_periods: float | None = None,
                       samples_per_unit: int = 96,
                       period_tol: float = 1e-9):
    """Extend the shadow pair rightward from the triple (theta, x, y).

    Returns ("periodic", k, m, piece, margin) on integer-period return of the
    corridor pair, or ("blocked", theta*, x*, case, piece, margin) at the
    first blocking right critical vertex (case "-": the negative corridor
    pinched, so the minus curve hits the vertex; case "+" mirrored).
    """
    theta0, x_hat, y_hat = triple
    if max_periods is None:
        max_periods = float(len(arr.components) + 2)

    state = _state_at(arr, theta0, x_hat)
    if not (state.sigma3 < y_hat < state.sigma2):
        raise DomainError("y is not in the shadow interval of x")
    start = state
    thetas = [theta0]
    minus = [state.lam_minus]
    plus = [state.lam_plus]
    margin = state.half_width

    h = 1.0 / samples_per_unit
    t = theta0
    while t - theta0 < max_periods:
        nxt = _next_cv(arr, t)
        t_step = t + h
        # land exactly on integer periods for the closure check
        k_next = np.floor(t - theta0) + 1.0
        if theta0 + k_next <= t_step + 1e-12:
            t_step = theta0 + k_next
        if nxt is not None and nxt[0] <= t_step:
            theta_star, cv = nxt
            t_probe = theta_star + CV_EPS
            prev_lm, prev_lp = state.lam_minus, state.lam_plus
            cut_p = _lift_cut(arr, t_probe)
            pinched_minus = cut_p.sign_at(prev_lm) >= 0
            pinched_plus = cut_p.sign_at(prev_lp) <= 0
            if cv.side == "r" and (pinched_minus or pinched_plus):
                case = "-" if pinched_minus else "+"
                x_star = cv.x + round((prev_lm if case == "-" else prev_lp)
                                      - cv.x)
                # extend the sampling up to the vertex for the later stitch
                t_edge = theta_star - CV_EPS
                if t_edge > t + 1e-13:
                    try:
                        state = _state_at(arr, t_edge, state.lam_minus)
                        thetas.append(t_edge)
                        minus.append(state.lam_minus)
                        plus.append(state.lam_plus)
                    except DomainError:
                        pass
                piece = CurvePiece(np.asarray(thetas), np.asarray(minus),
                                   np.asarray(plus))
                return ("blocked", float(theta_star), float(x_star), case,
                        piece, margin)
            # non-blocking vertex: step just past it
            t = t_probe
        else:
            t = t_step
        try:
            state = _state_at(arr, t, state.lam_minus)
        except (DomainError, FibreExhaustedError) as exc:
            raise ContinuationDivergedError(
                f"corridor lost at theta = {t}: {exc}") from exc
        thetas.append(t)
        minus.append(state.lam_minus)
        plus.append(state.lam_plus)
        margin = min(margin, state.half_width)

        span = t - theta0
        k = round(span)
        if abs(span - k) < 1e-12 and k >= 1:
            m = state.lam_minus - start.lam_minus
            if abs(m - round(m)) < period_tol \
                    and abs((state.lam_plus - start.lam_plus) - round(m)) < period_tol \
                    and state.comp2 == start.comp2:
                piece = CurvePiece(np.asarray(thetas), np.asarray(minus),
                                   np.asarray(plus))
                return ("periodic", int(k), int(round(m)), piece, margin)

    raise ContinuationDivergedError(
        f"no closure or blocking vertex within {max_periods} base periods")


# --------------------------------------------------------------------------
# the inductive construction
# --------------------------------------------------------------------------

def _seed_triple(arr: ZeroSetArrangement, seed: int):
    """Starting shadow triple on a fibre at distance >= eps/2 from every
    critical fibre, at corridor midpoints."""
    cvt = arr.cv_thetas()
    rng = stage_rng(seed, "curve-seed")
    if len(cvt) == 0:
        cands = wrap01(rng.random() + np.linspace(0, 1, 17)[:-1])
    else:
        gaps = np.diff(np.concatenate((cvt, [cvt[0] + 1.0])))
        cands = wrap01(cvt + gaps / 2.0)
        cands = cands[np.argsort(-gaps)]
    for theta in cands:
        if _on_cv_fibre(arr, theta) is not None:
            continue
        try:
            cut = _lift_cut(arr, theta)
        except FibreExhaustedError:
            continue
        for k in range(cut.n):
            if cut.sign_above(k) < 0:
                lo, hi = cut.interval(k)
                x_hat = 0.5 * (lo + hi)
                try:
                    s_lo, s_hi = shadow_interval(arr, theta, x_hat)
                except (DomainError, CriticalFibreError):
                    continue
                return (float(theta), float(x_hat), float(0.5 * (s_lo + s_hi)))
    raise DomainError("no admissible starting shadow triple found")


def _stitch_front(tail: CurvePiece, new_piece: CurvePiece, side: str,
                  theta_star: float, delta: float) -> CurvePiece:
    """Carry one curve of the previous piece across the merge at theta_star:
    keep the old corridor midline up to the vertex, then a short steep edge
    onto the new corridor midline (the splice segment)."""
    t_cut = theta_star + delta
    keep = new_piece.thetas > t_cut
    old_ts = tail.thetas[tail.thetas < theta_star - 1e-13]
    vals_old = tail.minus if side == "-" else tail.plus
    old_vs = vals_old[tail.thetas < theta_star - 1e-13]
    ts = np.concatenate((old_ts, new_piece.thetas[keep]))
    carried = np.concatenate((old_vs,
                              (new_piece.minus if side == "-"
                               else new_piece.plus)[keep]))
    other_new = np.interp(ts, new_piece.thetas,
                          new_piece.plus if side == "-" else new_piece.minus)
    if side == "-":
        return CurvePiece(ts, carried, other_new)
    return CurvePiece(ts, other_new, carried)


def build_curves(arr: ZeroSetArrangement, seed: int = 0, *,
                 samples_per_unit: int = 96) -> CurvePair:
    """Inductive curve-pair construction: corridor continuation, vertical
    jumps at blocking vertices, closure on repeated target projection."""
    eps = arr.cv_spacing()
    triple = _seed_triple(arr, seed)
    n_rcv = max(1, len({round(wrap01(c.theta) / TARGET_SNAP)
                        for c in arr.cvs if c.side == "r"}))

    pieces: list[CurvePiece] = []
    verticals: list[Vertical] = []
    targets: list[tuple] = []
    margin = np.inf
    pending_stitch = None       # (carried side, tail piece, theta*, delta)

    for _ in range(2 * (n_rcv + 2)):
        res = continue_to_target(arr, triple,
                                 samples_per_unit=samples_per_unit)
        if res[0] == "periodic":
            _, k, m, piece, mrg = res
            margin = min(margin, mrg)
            if pending_stitch is not None:
                piece = _stitch_front(pending_stitch[1], piece,
                                      pending_stitch[0], pending_stitch[2],
                                      pending_stitch[3])
            pieces.append(piece)
            return _close_pair(pieces, verticals, targets, eps, float(margin),
                               (k, m),
                               branch="periodic" if not targets else "mixed")

        _, theta_star, x_star, case, full_piece, mrg = res
        margin = min(margin, mrg)
        if pending_stitch is not None:
            full_piece = _stitch_front(pending_stitch[1], full_piece,
                                       pending_stitch[0], pending_stitch[2],
                                       pending_stitch[3])
            pending_stitch = None
        theta_i = theta_star - eps / 10.0
        delta = min(eps / 10.0, 4.0 / samples_per_unit)
        piece_i = full_piece.trimmed(theta_i)
        tail = full_piece.tail_from(theta_i)
        pieces.append(piece_i)
        targets.append((theta_star, x_star))

        for i_prev, (tp, xp) in enumerate(targets[:-1]):
            if abs(wrap01(theta_star - tp + 0.5) - 0.5) < TARGET_SNAP \
                    and abs(wrap01(x_star - xp + 0.5) - 0.5) < TARGET_SNAP:
                k = int(round(theta_star - tp))
                m = int(round(x_star - xp))
                return _close_pair(pieces[i_prev + 1:], verticals[i_prev:],
                                   targets[i_prev:], eps, float(margin),
                                   (k, m), branch="targets")
        if len(targets) > n_rcv + 1:
            break

        cut = _lift_cut(arr, theta_i)
        if case == "-":
            a = piece_i.at("-", theta_i)
            k_a = cut.index_below(a)
            k_next = _next_signed_interval(cut, k_a, -1, up=True)
            lo, hi = cut.interval(k_next)
            b = 0.5 * (lo + hi)
            s_lo, s_hi = shadow_interval(arr, theta_i, b)
            c = 0.5 * (s_lo + s_hi)
            verticals.append(Vertical(theta=float(theta_i), side="-",
                                      a=float(a), b=float(b)))
            triple = (float(theta_i), float(b), float(c))
            pending_stitch = ("+", tail, theta_star, delta)
        else:
            a = piece_i.at("+", theta_i)
            k_a = cut.index_below(a)
            k_next = _next_signed_interval(cut, k_a, +1, up=False)
            lo, hi = cut.interval(k_next)
            c = 0.5 * (lo + hi)
            verticals.append(Vertical(theta=float(theta_i), side="+",
                                      a=float(a), b=float(c)))
            # restart just past the vertex, inside the merged negative corridor
            t_new = theta_star + delta
            cut_new = _lift_cut(arr, t_new)
            ref = tail.at("-", min(tail.thetas[-1], theta_star - CV_EPS))
            k_b = cut_new.index_below(ref)
            if cut_new.sign_above(k_b) >= 0:
                k_b = _next_signed_interval(cut_new, k_b, -1, up=True)
            lo_b, hi_b = cut_new.interval(k_b)
            b = 0.5 * (lo_b + hi_b)
            triple = (float(t_new), float(b), float(c))
            pending_stitch = ("-", tail, theta_star, delta)

    raise PigeonholeViolationError(
        f"no repeated target projection within {n_rcv + 1} targets")


def _next_signed_interval(cut: _LiftCut, k: int, sign: int, up: bool) -> int:
    """Index of the next interval of the given sign strictly above (or below)
    interval k on the lifted fibre."""
    step = 1 if up else -1
    for j in range(1, 2 * cut.n + 2):
        kk = k + step * j
        if cut.sign_above(kk) == sign:
            return kk
    raise FibreExhaustedError("no neighbouring interval of the required sign")


def _close_pair(pieces, verticals, targets, eps, margin, km, branch):
    k, m = km
    pair = CurvePair(pieces=pieces, verticals=verticals, targets=targets,
                     closure=(int(k), int(m)), epsilon_spacing=eps,
                     margin=margin, meta={"branch": branch})
    t0 = pieces[0].thetas[0]
    t1 = pieces[-1].thetas[-1]
    # the closing junction may carry a vertical segment: route the seam
    # through it on the matching side
    end_minus = pieces[-1].minus[-1]
    end_plus = pieces[-1].plus[-1]
    if verticals:
        v = verticals[0]
        if abs(wrap01(v.theta - t1 + 0.5) - 0.5) < 1e-9:
            if v.side == "-":
                end_minus = end_minus + (v.b - v.a)
            else:
                end_plus = end_plus + (v.b - v.a)
    dm = end_minus - (pieces[0].minus[0] + m)
    dp = end_plus - (pieces[0].plus[0] + m)
    pair.meta["seam_defect"] = float(max(abs(dm), abs(dp)))
    pair.meta["span"] = float(t1 - t0)
    return pair


# --------------------------------------------------------------------------
# tilting
# --------------------------------------------------------------------------

def tilt_verticals(pair: CurvePair, s: float, max_slope: float,
                   extent: float | None = None) -> CurvePair:
    """Replace vertical junction segments by steep slanted ones so both
    curves become graphs over the base.  The horizontal extent of every tilt
    is at most ``extent`` (default s/4); clearance margins shrink by at most
    extent * max_slope and are re-reported."""
    if s <= 0.0:
        raise TiltTooLargeError("tilt parameter must be strictly positive")
    if extent is None:
        extent = s / 4.0
    if not any(v is not None for v in pair.verticals):
        return pair
    new_pieces = [CurvePiece(p.thetas.copy(), p.minus.copy(), p.plus.copy())
                  for p in pair.pieces]
    for i, v in enumerate(pair.verticals):
        if v is None:
            continue
        j = i + 1 if i + 1 < len(new_pieces) else 0
        nxt = new_pieces[j]
        span = nxt.thetas[-1] - nxt.thetas[0]
        w = min(extent, span / 4.0)
        if w <= 0.0:
            raise TiltTooLargeError("no room to tilt a vertical segment")
        t_end = nxt.thetas[0] + w
        keep = nxt.thetas > t_end
        if v.side == "-":
            vals = nxt.minus
            v_end = float(np.interp(t_end, nxt.thetas, vals))
            ts = np.concatenate(([nxt.thetas[0], t_end], nxt.thetas[keep]))
            mn = np.concatenate(([v.a, v_end], vals[keep]))
            pl = np.interp(ts, nxt.thetas, nxt.plus)
            new_pieces[j] = CurvePiece(ts, mn, pl)
        else:
            vals = nxt.plus
            v_end = float(np.interp(t_end, nxt.thetas, vals))
            ts = np.concatenate(([nxt.thetas[0], t_end], nxt.thetas[keep]))
            pl = np.concatenate(([v.a, v_end], vals[keep]))
            mn = np.interp(ts, nxt.thetas, nxt.minus)
            new_pieces[j] = CurvePiece(ts, mn, pl)
    shrink = extent * max_slope
    out = CurvePair(pieces=new_pieces,
                    verticals=[None] * len(pair.verticals),
                    targets=pair.targets, closure=pair.closure,
                    epsilon_spacing=pair.epsilon_spacing,
                    margin=max(0.0, pair.margin - shrink),
                    meta=dict(pair.meta, tilted=True, tilt_extent=extent,
                              margin_shrink=shrink))
    for side in ("-", "+"):
        ts, _ = out.graph(side)
        if np.any(np.diff(ts) <= 0):
            raise TiltTooLargeError("tilted curve is not a graph over the base")
    return out


def verify_pair(arr: ZeroSetArrangement, pair: CurvePair,
                skip_near_vertical: float = 0.0):
    """Membership check: minus samples strictly inside the negative region,
    plus samples inside the positive one (vertical-adjacent splices exempt
    within skip_near_vertical of a junction).  Returns the worst margin."""
    worst = np.inf
    junctions = [v.theta for v in pair.verticals if v is not None]
    for piece in pair.pieces:
        for t, lm, lp in zip(piece.thetas, piece.minus, piece.plus):
            if any(abs(t - j) <= skip_near_vertical for j in junctions):
                continue
            try:
                cut = _lift_cut(arr, t)
            except FibreExhaustedError:
                return -np.inf
            if cut.sign_at(lm) >= 0 or cut.sign_at(lp) <= 0:
                return -np.inf
            k = cut.index_below(lm)
            worst = min(worst, lm - cut.crossing(k), cut.crossing(k + 1) - lm)
            k = cut.index_below(lp)
            worst = min(worst, lp - cut.crossing(k), cut.crossing(k + 1) - lp)
    return float(worst)
