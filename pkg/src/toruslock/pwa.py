"""Triangulations of the torus and piecewise-affine translation fields.

The triangulation is an n x n grid whose columns are jittered by seeded
rational offsets, each cell split by its SW-NE diagonal (2 n^2 triangles).
Two exact properties are enforced at construction time:

* every triangle diameter is below a quarter of the minimal distance between
  distinct points of the base orbit 0, omega, ..., (q-1) omega, so that a
  vertex-value nudge never feeds back into the earlier iterates over the
  affected fibres;
* the column fibres and their first q-1 base iterates are pairwise distinct,
  checked in exact rational arithmetic on the jitter lattice.

A PWA field stores one lift value per vertex; the affine extension on each
triangle then has an exactly computable x-slope, per-fibre PL restriction
and JSON round trip.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (DeltaInfeasibleError, GridTooCoarseError,
                     RepresentationError, SeedExhaustedError)
from .fields import FIELD_KINDS, TranslationField
from .plmaps import PLLift
from .util import stage_rng, wrap01

__all__ = ["Triangulation", "PwaField", "triangulate", "pwa_approximate",
           "min_orbit_gap"]

JITTER_DEN = 64          # jitter offsets are multiples of 1/(JITTER_DEN * n)
JITTER_MAX = 4           # at most 1/16 of a cell, keeps columns ordered


def min_orbit_gap(p: int, q: int) -> Fraction:
    """min over k = 1..q-1 of the circle distance d(0, k p/q) = 1/q."""
    if q == 1:
        return Fraction(1)
    gaps = []
    for k in range(1, q):
        r = Fraction(k * p, q) % 1
        gaps.append(min(r, 1 - r))
    return min(gaps)


@dataclass
class Triangulation:
    n_grid: int
    cols_frac: list              # exact column positions (Fractions in [0,1))
    q: int
    p: int
    seed: int

    def __post_init__(self):
        self.cols = np.array([float(c) for c in self.cols_frac])
        self.rows = np.arange(self.n_grid) / self.n_grid
        self.dx = 1.0 / self.n_grid

    @property
    def n_vertices(self) -> int:
        return self.n_grid * self.n_grid

    @property
    def n_triangles(self) -> int:
        return 2 * self.n_grid * self.n_grid

    def col_widths(self):
        c = np.concatenate((self.cols, [self.cols[0] + 1.0]))
        return np.diff(c)

    @property
    def max_diam(self) -> float:
        w = float(self.col_widths().max())
        return float(np.hypot(w, self.dx))

    def locate(self, theta):
        """Column index j and in-cell fraction s in [0, 1) for each theta."""
        r = wrap01(np.asarray(theta, dtype=float))
        j = np.clip(np.searchsorted(self.cols, r, side="right") - 1, 0,
                    self.n_grid - 1)
        c = np.concatenate((self.cols, [self.cols[0] + 1.0]))
        s = (r - c[j]) / (c[j + 1] - c[j])
        return j, np.clip(s, 0.0, 1.0)

    def triangle_vertices(self, tri_id: int):
        """Vertex (col, row) index triples; even ids are lower triangles."""
        cell, upper = divmod(tri_id, 2)
        j, i = divmod(cell, self.n_grid)
        j1 = (j + 1) % self.n_grid
        i1 = (i + 1) % self.n_grid
        if not upper:
            return ((j, i), (j1, i), (j1, i1))
        return ((j, i), (j1, i1), (j, i1))

    def triangle_coords(self, tri_id: int):
        """Vertex coordinates of a triangle, unwrapped to the cell's corner."""
        cell, upper = divmod(tri_id, 2)
        j, i = divmod(cell, self.n_grid)
        c = np.concatenate((self.cols, [self.cols[0] + 1.0]))
        t0, t1 = c[j], c[j + 1]
        x0, x1 = i * self.dx, (i + 1) * self.dx
        if not upper:
            return np.array([[t0, x0], [t1, x0], [t1, x1]])
        return np.array([[t0, x0], [t1, x1], [t0, x1]])

    def to_obj(self):
        return {"n_grid": self.n_grid, "p": self.p, "q": self.q,
                "seed": self.seed,
                "cols": [[c.numerator, c.denominator] for c in self.cols_frac]}

    @staticmethod
    def from_obj(obj):
        cols = [Fraction(a, b) for a, b in obj["cols"]]
        return Triangulation(int(obj["n_grid"]), cols, int(obj["q"]),
                             int(obj["p"]), int(obj["seed"]))


def triangulate(q: int, omega, n_grid: int, seed: int = 0,
                max_attempts: int = 100) -> Triangulation:
    """Jittered grid triangulation compatible with the base orbit of p/q.

    Raises GridTooCoarseError when no jitter can meet the diameter bound
    (a quarter of the minimal orbit gap) and SeedExhaustedError when the
    column-orbit distinctness cannot be achieved.
    """
    if isinstance(omega, Fraction):
        p = omega.numerator
        q_eff = omega.denominator
    else:
        p, q_eff = omega
    if q_eff != q:
        raise RepresentationError(f"omega denominator {q_eff} != q = {q}")
    bound = float(min_orbit_gap(p, q)) / 4.0
    n = int(n_grid)
    worst_w = (1.0 + 2.0 * JITTER_MAX / JITTER_DEN) / n
    if float(np.hypot(worst_w, 1.0 / n)) >= bound:
        raise GridTooCoarseError(
            f"n_grid = {n} cannot meet triangle diameter < {bound:.6g} "
            f"for q = {q}")
    rng = stage_rng(seed, "triangulate")
    for _ in range(max_attempts):
        jit = rng.integers(-JITTER_MAX, JITTER_MAX + 1, size=n)
        jit[0] = 0
        cols = [Fraction(int(j * JITTER_DEN + jv), JITTER_DEN * n)
                for j, jv in enumerate(jit)]
        if any(c1 <= c0 for c0, c1 in zip(cols, cols[1:])):
            continue
        orbit = set()
        ok = True
        step = Fraction(p, q)
        for c in cols:
            for k in range(q):
                v = (c + k * step) % 1
                if v in orbit:
                    ok = False
                    break
                orbit.add(v)
            if not ok:
                break
        if ok:
            tri = Triangulation(n, cols, q, p, seed)
            if tri.max_diam < bound:
                return tri
    raise SeedExhaustedError(
        f"no jitter with distinct column orbits after {max_attempts} attempts")


def auto_grid_size(q: int, p: int = 1, requested: int | None = None) -> int:
    """Smallest grid size meeting the diameter bound; at least ``requested``.

    Sizes sharing a factor with q are skipped: they put column orbits on a
    sublattice where jitter can no longer separate the fibres."""
    import math as _math
    bound = float(min_orbit_gap(p, q)) / 4.0
    n = 4
    while True:
        worst_w = (1.0 + 2.0 * JITTER_MAX / JITTER_DEN) / n
        if float(np.hypot(worst_w, 1.0 / n)) < bound:
            break
        n += 1
    n = max(n, requested or 0)
    while _math.gcd(n, q) != 1:
        n += 1
    return n


class PwaField(TranslationField):
    """Piecewise-affine lift on a grid triangulation: one value per vertex."""

    kind = "pwa"

    def __init__(self, tri: Triangulation, values, lift_offset: int = 0,
                 validate: bool = True):
        self.tri = tri
        self.values = np.array(values, dtype=float)
        self.lift_offset = int(lift_offset)
        if self.values.shape != (tri.n_grid, tri.n_grid):
            raise RepresentationError(
                f"values must be {tri.n_grid} x {tri.n_grid}")
        if validate:
            self.check_slopes()

    # x-slope of the affine extension is (v[j, i+1] - v[j, i]) * n on both
    # triangle families of the cell column, so the admissibility constraint
    # reduces to adjacent-row differences.
    def x_slopes(self):
        v = self.values
        dv = np.roll(v, -1, axis=1) - v
        return dv * self.tri.n_grid

    def check_slopes(self):
        s = self.x_slopes()
        if np.any(s <= -1.0):
            worst = float(s.min())
            raise RepresentationError(
                f"PWA x-slope {worst:.6g} <= -1 breaks fibre monotonicity")

    def lift(self, theta, x):
        tri = self.tri
        theta_b, x_b = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                           np.asarray(x, dtype=float))
        j, s = tri.locate(theta_b)
        rx = wrap01(x_b)
        i = np.clip((rx * tri.n_grid).astype(int), 0, tri.n_grid - 1)
        t = rx * tri.n_grid - i
        j1 = (j + 1) % tri.n_grid
        i1 = (i + 1) % tri.n_grid
        v00 = self.values[j, i]
        v10 = self.values[j1, i]
        v11 = self.values[j1, i1]
        v01 = self.values[j, i1]
        lower = t <= s
        out = np.where(lower,
                       v00 + (v10 - v00) * s + (v11 - v10) * t,
                       v00 + (v11 - v01) * s + (v01 - v00) * t)
        out = out + self.lift_offset
        return out if out.ndim else float(out)

    def fibre_pl(self, theta):
        """Exact PL lift of the fibre map at theta."""
        tri = self.tri
        j, s = tri.locate(float(theta))
        j, s = int(j), float(s)
        if s >= 1.0 - 1e-12:       # snap fibres grazing the next column
            j, s = (j + 1) % tri.n_grid, 0.0
        j1 = (j + 1) % tri.n_grid
        rows = tri.rows
        v0 = self.values[j]
        v1 = self.values[j1]
        base = v0 + (v1 - v0) * s                       # values on row points
        if s <= 1e-12:
            vals = v0 + self.lift_offset
            return PLLift(rows, rows + vals)
        v0n = np.roll(v0, -1)
        v1n = np.roll(v1, -1)
        diag_vals = v0 + (v1n - v0) * s                 # f(s, t = s) on cells
        # lower-triangle formula between row point and diagonal crossing
        xs = np.empty(2 * tri.n_grid)
        vs = np.empty(2 * tri.n_grid)
        xs[0::2] = rows
        xs[1::2] = rows + s * tri.dx
        vs[0::2] = base
        vs[1::2] = diag_vals
        vs = vs + self.lift_offset
        return PLLift(xs, xs + vs)

    def sup_abs_bound(self):
        return float(np.abs(self.values + self.lift_offset).max()) + 1e-9

    def with_values(self, values) -> "PwaField":
        return PwaField(self.tri, values, self.lift_offset)

    def blend_with(self, other, t):
        if isinstance(other, PwaField) and other.tri is self.tri:
            vals = (1.0 - t) * (self.values + self.lift_offset) \
                + t * (other.values + other.lift_offset)
            return PwaField(self.tri, vals, 0)
        return None

    def triangle_affine(self, tri_id: int):
        """Coefficients (a, b, c) with Phi = a theta + b x + c on the triangle
        (valid in the unwrapped coordinates of triangle_coords)."""
        coords = self.tri.triangle_coords(tri_id)
        verts = self.tri.triangle_vertices(tri_id)
        vals = np.array([self.values[j, i] for j, i in verts]) + self.lift_offset
        m = np.column_stack((coords, np.ones(3)))
        a, b, c = np.linalg.solve(m, vals)
        return float(a), float(b), float(c)

    def to_obj(self):
        return {"kind": "pwa", "triangulation": self.tri.to_obj(),
                "lift_offset": self.lift_offset,
                "values": [[repr(float(v)) for v in row] for row in self.values]}

    @staticmethod
    def from_obj(obj):
        tri = Triangulation.from_obj(obj["triangulation"])
        vals = np.array([[float(v) for v in row] for row in obj["values"]])
        return PwaField(tri, vals, int(obj.get("lift_offset", 0)))


FIELD_KINDS["pwa"] = PwaField.from_obj


def pwa_approximate(field: TranslationField, tri: Triangulation,
                    delta: float = 0.0, seed: int = 0,
                    probe_grid: int = 256) -> PwaField:
    """Sample the lift at the triangulation vertices (optionally nudged inside
    a delta-ball) and report the sup error on a probe grid.

    Raises DeltaInfeasibleError when the sampled values violate the fibre
    slope constraint and delta leaves no room to repair them.
    """
    if delta < 0.0:
        raise ValueError("delta must be >= 0")
    vals = np.asarray(field.lift(tri.cols[:, None], tri.rows[None, :]),
                      dtype=float)
    if delta > 0.0:
        rng = stage_rng(seed, "pwa-approximate")
        vals = vals + rng.uniform(-delta, delta, size=vals.shape)
    try:
        out = PwaField(tri, vals)
    except RepresentationError as exc:
        raise DeltaInfeasibleError(str(exc)) from exc
    thetas = np.arange(probe_grid) / probe_grid
    xs = np.arange(probe_grid) / probe_grid
    err = 0.0
    for t in thetas:
        a = np.asarray(field.lift(t, xs), dtype=float)
        b = np.asarray(out.lift(t, xs), dtype=float)
        err = max(err, float(np.abs(a - b).max()))
    out.approx_error = err
    return out
