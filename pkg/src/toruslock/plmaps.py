"""Exact piecewise-linear lifts of orientation-preserving circle homeomorphisms.

A degree-one lift G satisfies G(x + 1) = G(x) + 1, so it is determined by its
restriction to one period.  We store breakpoints ``xs`` in [0, 1) (canonical
form: ``xs[0] == 0``) together with values ``ys = G(xs)``; the graph is linear
between breakpoints and the wrap piece runs from (xs[-1], ys[-1]) to
(xs[0] + 1, ys[0] + 1).

Composition, inversion and displacement extrema of such maps are exact (up to
float rounding): the composition of PL maps is PL with breakpoints equal to
the inner map's breakpoints plus the pullbacks of the outer map's breakpoints,
and the displacement x -> G(x) - x attains its extrema at breakpoints.
"""

from __future__ import annotations

import numpy as np

from .errors import RepresentationError

__all__ = ["PLLift", "RepresentationError"]


# Breakpoints closer than this are merged when building maps.
_MERGE_TOL = 1e-14


def _canonical(xs, ys):
    """Sort, dedupe and rotate so xs[0] == 0.0, inserting x=0 if missing."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
        raise RepresentationError("breakpoint arrays must be equal-length 1-D")
    r = xs - np.floor(xs)
    ys = ys - np.floor(xs)          # degree one: G(x - m) = G(x) - m
    order = np.argsort(r, kind="stable")
    r, ys = r[order], ys[order]
    keep = np.empty(r.size, dtype=bool)
    keep[0] = True
    np.greater(np.diff(r), _MERGE_TOL, out=keep[1:])
    r, ys = r[keep], ys[keep]
    if r[0] > _MERGE_TOL:
        # interpolate the wrap piece at x = 0
        x_lo, y_lo = r[-1] - 1.0, ys[-1] - 1.0
        t = (0.0 - x_lo) / (r[0] - x_lo)
        y0 = y_lo + t * (ys[0] - y_lo)
        r = np.concatenate(([0.0], r))
        ys = np.concatenate(([y0], ys))
    else:
        r[0] = 0.0
    return r, ys


class PLLift:
    """Piecewise-linear degree-one lift of a circle homeomorphism."""

    __slots__ = ("xs", "ys")

    def __init__(self, xs, ys, validate: bool = True):
        self.xs, self.ys = _canonical(xs, ys)
        if validate:
            self._check_increasing()

    def _check_increasing(self):
        dy = np.diff(np.concatenate((self.ys, [self.ys[0] + 1.0])))
        if np.any(dy <= 0.0):
            raise RepresentationError(
                "PL lift is not strictly increasing (slope <= 0 on a piece)")

    # -- basic queries ----------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return self.xs.size

    def _ext(self):
        xs = np.concatenate((self.xs, [1.0]))
        ys = np.concatenate((self.ys, [self.ys[0] + 1.0]))
        return xs, ys

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        n = np.floor(x)
        r = x - n
        xs, ys = self._ext()
        k = np.clip(np.searchsorted(xs, r, side="right") - 1, 0, xs.size - 2)
        x0, x1 = xs[k], xs[k + 1]
        y0, y1 = ys[k], ys[k + 1]
        w = np.where(x1 > x0, (r - x0) / np.where(x1 > x0, x1 - x0, 1.0), 0.0)
        out = n + y0 + w * (y1 - y0)
        return out[0] if scalar else out

    def displacement_extrema(self):
        """(min, max) of x -> G(x) - x, exact over one period."""
        d = self.ys - self.xs
        return float(d.min()), float(d.max())

    def displacement_argextrema(self):
        d = self.ys - self.xs
        return float(self.xs[int(d.argmin())]), float(self.xs[int(d.argmax())])

    def slopes(self):
        xs, ys = self._ext()
        return np.diff(ys) / np.diff(xs)

    def max_slope(self) -> float:
        return float(self.slopes().max())

    # -- structure ---------------------------------------------------------

    def inverse(self) -> "PLLift":
        """Exact inverse lift (breakpoints become the images ys mod 1)."""
        return PLLift(self.ys, self.xs, validate=False)

    def compose(self, inner: "PLLift") -> "PLLift":
        """self o inner, exact: pull the outer breakpoints back through inner."""
        inv = inner.inverse()
        pulled = inv(self.xs)
        bp = np.concatenate((inner.xs, pulled))
        vals = self(inner(bp))
        return PLLift(bp, vals, validate=False)

    def shift(self, c: float) -> "PLLift":
        """The lift x -> G(x) + c."""
        return PLLift(self.xs, self.ys + c, validate=False)

    def iterate(self, n: int) -> "PLLift":
        """n-fold composition with itself, n >= 1."""
        if n < 1:
            raise ValueError("n must be >= 1")
        out = self
        for _ in range(n - 1):
            out = out.compose(self)
        return out

    @staticmethod
    def identity() -> "PLLift":
        return PLLift([0.0], [0.0], validate=False)

    @staticmethod
    def rotation(c: float) -> "PLLift":
        return PLLift([0.0], [float(c)], validate=False)

    @staticmethod
    def from_function(fn, n: int = 256) -> "PLLift":
        """Sampled PL approximation of a lift given as a callable."""
        xs = np.arange(n) / n
        return PLLift(xs, np.asarray(fn(xs), dtype=float))

    def __repr__(self):  # pragma: no cover - debugging aid
        lo, hi = self.displacement_extrema()
        return f"PLLift(pieces={self.n_pieces}, disp=[{lo:.6g},{hi:.6g}])"
