"""Translation fields: the fibre-displacement functions of forced circle maps.

A field phi assigns to every base point theta a circle map x -> x + phi(theta, x).
We always work with a distinguished lift Phi: T^2 -> R (``lift_offset`` picks
the representative among Phi + Z).  Membership in the admissible class means
every fibre map is an orientation-preserving circle homeomorphism: Phi is
1-periodic in both arguments and has x-slope > -1 on every piece.

Two serializable representations exist: closed-form families (a registry; the
forced Arnold family is built in) and piecewise-affine fields on a
triangulation (see ``pwa``).  Intermediate pipeline stages additionally use
functional wrappers (theta-dependent shifts, surgery results) that evaluate
lazily and are projected back to PWA before anything is written out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import IncompatibleRepresentationsError, RepresentationError
from .plmaps import PLLift
from .util import wrap01

TWO_PI = 2.0 * math.pi

# tolerance for closed-form fibre inversion (monotone bisection)
INVERSE_TOL = 1e-13


class TranslationField:
    """Base interface; concrete fields implement ``lift`` (vectorized)."""

    kind = "abstract"
    lift_offset = 0

    def lift(self, theta, x):
        raise NotImplementedError

    def __call__(self, theta, x):
        return self.lift(theta, x)

    # -- fibre maps --------------------------------------------------------

    def fibre_pl(self, theta):
        """Exact PL lift of the fibre map at theta, or None if unavailable."""
        return None

    def sup_abs_bound(self) -> float:
        """An upper bound for sup |Phi|, used to bracket fibre inversion."""
        thetas = np.linspace(0.0, 1.0, 97)
        xs = np.linspace(0.0, 1.0, 101)
        vals = np.abs(self.lift(thetas[:, None], xs[None, :]))
        return float(vals.max()) + 1.0

    def fibre_forward(self, theta, x):
        return np.asarray(x, dtype=float) + self.lift(theta, x)

    def fibre_inverse(self, theta, y, tol: float = INVERSE_TOL):
        """Solve z + Phi(theta, z) = y by bisection on the monotone lift."""
        pl = self.fibre_pl(theta)
        if pl is not None:
            return pl.inverse()(y)
        y = np.asarray(y, dtype=float)
        b = self.sup_abs_bound()
        lo = y - b
        hi = y + b
        n_iter = max(10, int(math.ceil(math.log2(max(2.0 * b, 1.0) / tol))))
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            too_low = self.fibre_forward(theta, mid) < y
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        return 0.5 * (lo + hi)

    # -- checks ------------------------------------------------------------

    def validate(self, n_theta: int = 64, n_x: int = 256):
        """Sampled admissibility check: periodicity and fibre monotonicity."""
        thetas = np.arange(n_theta) / n_theta
        xs = np.arange(n_x) / n_x
        v = self.lift(thetas[:, None], xs[None, :])
        per_x = self.lift(thetas[:, None], xs[None, :] + 1.0)
        per_t = self.lift(thetas[:, None] + 1.0, xs[None, :])
        if not (np.allclose(v, per_x, atol=1e-9) and np.allclose(v, per_t, atol=1e-9)):
            raise RepresentationError("lift increments are not 1-periodic")
        g = xs[None, :] + v
        dg = np.diff(np.concatenate((g, g[:, :1] + 1.0), axis=1), axis=1)
        if np.any(dg <= 0.0):
            raise RepresentationError("a fibre map is not orientation-preserving")

    def d0(self, other: "TranslationField", n: int = 128) -> float:
        """Sampled sup distance between the lifts on an n x n grid."""
        thetas = np.arange(n) / n
        xs = np.arange(n) / n
        a = self.lift(thetas[:, None], xs[None, :])
        b = other.lift(thetas[:, None], xs[None, :])
        return float(np.abs(a - b).max())

    def to_obj(self):
        raise NotImplementedError(f"{self.kind} fields are not serializable")


# --------------------------------------------------------------------------
# closed-form family registry
# --------------------------------------------------------------------------

class _ArnoldFamily:
    """Forced Arnold family: Phi(theta, x) = tau + (K/2pi) sin(2pi x) + b sin(2pi theta).

    K < 1 keeps the fibre slope strictly above -1.
    """

    name = "qpf_arnold"
    param_names = ("tau", "K", "b")

    @staticmethod
    def check(params):
        K = params["K"]
        if not 0.0 <= K < 1.0:
            raise RepresentationError(f"Arnold family needs 0 <= K < 1, got {K}")

    @staticmethod
    def eval(params, theta, x):
        return (params["tau"]
                + params["K"] / TWO_PI * np.sin(TWO_PI * np.asarray(x))
                + params["b"] * np.sin(TWO_PI * np.asarray(theta)))

    @staticmethod
    def sup_abs(params):
        return abs(params["tau"]) + params["K"] / TWO_PI + abs(params["b"])

    @staticmethod
    def interp(p1, p2, t):
        # the family is affine in its parameters, so convex combinations of
        # lifts stay inside it
        return {k: (1.0 - t) * p1[k] + t * p2[k] for k in p1}


class _ConstantFamily:
    """Rigid fields Phi = c: every fibre map is the rotation by c."""

    name = "constant"
    param_names = ("c",)

    @staticmethod
    def check(params):
        pass

    @staticmethod
    def eval(params, theta, x):
        theta = np.asarray(theta, dtype=float)
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.float64(params["c"]), np.broadcast(theta, x).shape).copy()

    @staticmethod
    def sup_abs(params):
        return abs(params["c"])

    @staticmethod
    def interp(p1, p2, t):
        return {"c": (1.0 - t) * p1["c"] + t * p2["c"]}


FAMILIES = {f.name: f for f in (_ArnoldFamily, _ConstantFamily)}


class ClosedFormField(TranslationField):
    kind = "closed_form"

    def __init__(self, family: str, params: dict, lift_offset: int = 0):
        if family not in FAMILIES:
            raise RepresentationError(f"unknown closed-form family {family!r}")
        self.family = family
        self.params = {k: float(v) for k, v in params.items()}
        self.lift_offset = int(lift_offset)
        FAMILIES[family].check(self.params)

    def lift(self, theta, x):
        return FAMILIES[self.family].eval(self.params, theta, x) + self.lift_offset

    def fibre_pl(self, theta):
        # rigid fields have exact PL fibre maps (rotations); genuine
        # closed-form families do not
        if self.family == "constant":
            return PLLift([0.0], [self.params["c"] + self.lift_offset],
                          validate=False)
        return None

    def sup_abs_bound(self):
        return FAMILIES[self.family].sup_abs(self.params) + abs(self.lift_offset) + 1e-9

    def to_obj(self):
        return {"kind": "closed_form", "family": self.family,
                "params": {k: repr(v) for k, v in self.params.items()},
                "lift_offset": self.lift_offset}

    @staticmethod
    def from_obj(obj):
        params = {k: float(v) for k, v in obj["params"].items()}
        return ClosedFormField(obj["family"], params, int(obj.get("lift_offset", 0)))


def constant_field(c: float) -> ClosedFormField:
    return ClosedFormField("constant", {"c": c})


def arnold_field(tau: float = 0.0, K: float = 0.0, b: float = 0.0) -> ClosedFormField:
    return ClosedFormField("qpf_arnold", {"tau": tau, "K": K, "b": b})


# --------------------------------------------------------------------------
# periodic PL functions of theta (tongue-boundary corrections etc.)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicPL:
    """Piecewise-linear periodic function theta -> value, period p | 1."""

    xs: np.ndarray          # sample abscissae in [0, period)
    vals: np.ndarray
    period: float = 1.0

    def __call__(self, theta):
        r = np.asarray(theta, dtype=float) / self.period
        r = (r - np.floor(r)) * self.period
        xs = np.concatenate((self.xs, [self.period]))
        vs = np.concatenate((self.vals, [self.vals[0]]))
        return np.interp(r, xs, vs)

    def abs_max(self) -> float:
        return float(np.abs(self.vals).max())

    @staticmethod
    def const(value: float) -> "PeriodicPL":
        return PeriodicPL(np.array([0.0]), np.array([float(value)]), 1.0)

    def to_obj(self):
        return {"period": repr(float(self.period)),
                "xs": [repr(float(v)) for v in self.xs],
                "vals": [repr(float(v)) for v in self.vals]}

    @staticmethod
    def from_obj(obj):
        return PeriodicPL(np.array([float(v) for v in obj["xs"]]),
                          np.array([float(v) for v in obj["vals"]]),
                          float(obj["period"]))


class ThetaShiftField(TranslationField):
    """base field plus a theta-dependent shift (constant along each fibre)."""

    kind = "theta_shift"

    def __init__(self, base: TranslationField, shift: PeriodicPL):
        self.base = base
        self.shift = shift

    def lift(self, theta, x):
        return self.base.lift(theta, x) + self.shift(theta)

    def fibre_pl(self, theta):
        pl = self.base.fibre_pl(theta)
        if pl is None:
            return None
        return pl.shift(float(self.shift(theta)))

    def sup_abs_bound(self):
        return self.base.sup_abs_bound() + self.shift.abs_max()

    def to_obj(self):
        return {"kind": "theta_shift", "base": self.base.to_obj(),
                "shift": self.shift.to_obj()}

    @staticmethod
    def from_obj(obj):
        return ThetaShiftField(field_from_obj(obj["base"]),
                               PeriodicPL.from_obj(obj["shift"]))


# --------------------------------------------------------------------------
# interpolation inside the admissible class
# --------------------------------------------------------------------------

def interpolate(phi: TranslationField, phi_hat: TranslationField, t: float,
                check_grid: int = 64) -> TranslationField:
    """Convex combination (1-t) Phi + t Phi_hat of the lifts.

    Requires the natural lift pairing, i.e. sup |Phi - Phi_hat| < 1/2 on a
    sample grid, and matching representations (same closed-form family, or
    the same triangulation for PWA fields).
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if phi.d0(phi_hat, check_grid) >= 0.5:
        raise IncompatibleRepresentationsError(
            "fields are not C0-close enough for the natural lift pairing")
    if isinstance(phi, ClosedFormField) and isinstance(phi_hat, ClosedFormField) \
            and phi.family == phi_hat.family:
        params = FAMILIES[phi.family].interp(phi.params, phi_hat.params, t)
        off = round((1.0 - t) * phi.lift_offset + t * phi_hat.lift_offset)
        return ClosedFormField(phi.family, params, off)
    blend = getattr(phi, "blend_with", None)
    if blend is not None:
        out = blend(phi_hat, t)
        if out is not None:
            return out
    raise IncompatibleRepresentationsError(
        f"cannot interpolate {phi.kind!r} with {phi_hat.kind!r}")


# registry used by deserialization; pwa registers itself on import
FIELD_KINDS = {
    "closed_form": ClosedFormField.from_obj,
    "theta_shift": ThetaShiftField.from_obj,
}


def field_from_obj(obj) -> TranslationField:
    kind = obj.get("kind")
    if kind not in FIELD_KINDS:
        # tolerate lazily-imported kinds
        if kind == "pwa":
            from . import pwa  # noqa: F401  (registers the loader)
        if kind not in FIELD_KINDS:
            raise RepresentationError(f"unknown field kind {kind!r}")
    return FIELD_KINDS[kind](obj)
