"""Refinement of the triangulation under backward iterates.

On each triangle the one-step map (theta, x) -> (theta + omega, x + Phi) is
affine, so iterating the refinement "clip the current image against the
triangulation, pull the pieces back" produces a partition of the torus into
convex polygons on which the q-step lift is affine.  All clipping runs in
lifted (plane) coordinates; candidate triangles are enumerated with integer
shifts covering the image's bounding box.

Every polygon carries the affine form of the q-step lift; a cross-check at
interior points against direct q-fold composition guards the bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from shapely.geometry import Polygon as ShPolygon
from shapely.validation import make_valid

from .dynamics import QpfSystem
from .errors import DomainError, GeometryDegenerateError
from .locking import normalizing_integer
from .pwa import PwaField
from .util import stage_rng

__all__ = ["RefinedPartition", "refine_partition", "partition_size_estimate"]

SLIVER_AREA = 1e-14
SNAP = 1e-12


@dataclass
class _Affine:
    """Map (theta, x) -> (theta + w, a theta + b x + c)."""
    w: float
    a: float
    b: float
    c: float

    @staticmethod
    def identity():
        return _Affine(0.0, 0.0, 1.0, 0.0)

    def apply(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] + self.w
        out[:, 1] = self.a * pts[:, 0] + self.b * pts[:, 1] + self.c
        return out

    def inverse_apply(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] - self.w
        out[:, 1] = (pts[:, 1] - self.a * out[:, 0] - self.c) / self.b
        return out

    def then(self, step: "_Affine") -> "_Affine":
        """step o self."""
        return _Affine(self.w + step.w,
                       step.a + step.b * self.a,
                       step.b * self.b,
                       step.a * self.w + step.b * self.c + step.c)


@dataclass
class RefinedPartition:
    polygons: list                  # CCW numpy arrays, convex, in [0,1)^2
    affine: np.ndarray              # rows (a, b, c): q-step lift = a t + b x + c
    m0: int
    q: int
    sliver_report: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.polygons)

    def areas(self):
        return np.array([_poly_area(p) for p in self.polygons])

    def vertex_set(self, snap: float = 1e-9):
        """Unique polygon corners (snapped) with the indices of polygons
        touching each."""
        seen = {}
        for pid, poly in enumerate(self.polygons):
            for v in poly:
                key = (round(v[0] / snap), round(v[1] / snap))
                seen.setdefault(key, (v.copy(), []))[1].append(pid)
        return list(seen.values())

    def value_at(self, pid: int, pt):
        a, b, c = self.affine[pid]
        return a * pt[0] + b * pt[1] + c

    def normalized_value_at(self, pid: int, pt):
        return self.value_at(pid, pt) - self.m0

    def centroids(self):
        return np.array([p.mean(axis=0) for p in self.polygons])


def _poly_area(pts) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _ccw(pts):
    x, y = pts[:, 0], pts[:, 1]
    if float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) < 0:
        return pts[::-1].copy()
    return pts


def partition_size_estimate(n_grid: int, q: int) -> int:
    """Rough polygon count of the full refinement (overlaying q shifted
    copies of the triangulation)."""
    return 2 * n_grid * n_grid * q * q


def refine_partition(field: PwaField, omega, *, max_polygons: int = 400_000,
                     cross_check: int = 64, seed: int = 0,
                     check_tol: float = 1e-9) -> RefinedPartition:
    """Common refinement of the backward iterates of the triangulation,
    with the affine q-step lift attached to every polygon."""
    from fractions import Fraction
    if isinstance(omega, tuple):
        omega = Fraction(*omega)
    p, q = omega.numerator, omega.denominator
    from .dynamics import Omega
    sys = QpfSystem(Omega.rational(p, q), field)
    w = float(omega)
    tri = field.tri

    tri_affines = []
    tri_shapes = []
    tri_polys = []
    for tid in range(tri.n_triangles):
        a, b, c = field.triangle_affine(tid)
        tri_affines.append(_Affine(w, a, 1.0 + b, c))
        coords = tri.triangle_coords(tid)
        tri_polys.append(coords)
        tri_shapes.append(ShPolygon(coords))

    theta_min = float(tri.cols.min())

    def locate_candidates(bbox):
        """(triangle id, integer shift) pairs whose shifted copy can meet bbox."""
        tmin, xmin, tmax, xmax = bbox
        out = []
        kt_lo = int(np.floor(tmin - theta_min - 1e-9))
        kt_hi = int(np.floor(tmax - theta_min + 1e-9))
        for kt in range(kt_lo, kt_hi + 1):
            # columns overlapping [tmin - kt, tmax - kt]
            lo = tmin - kt - 1e-12
            hi = tmax - kt + 1e-12
            c = np.concatenate((tri.cols, [tri.cols[0] + 1.0]))
            j_lo = max(0, int(np.searchsorted(c, lo, side="right")) - 1)
            j_hi = min(tri.n_grid - 1, int(np.searchsorted(c, hi, side="left")))
            for j in range(j_lo, j_hi + 1):
                kx_lo = int(np.floor(xmin - 1e-9))
                kx_hi = int(np.floor(xmax + 1e-9))
                for kx in range(kx_lo, kx_hi + 1):
                    i_lo = max(0, int(np.floor((xmin - kx) * tri.n_grid)) - 0)
                    i_hi = min(tri.n_grid - 1,
                               int(np.floor((xmax - kx) * tri.n_grid)) + 0)
                    for i in range(i_lo, i_hi + 1):
                        cell = j * tri.n_grid + i
                        out.append((2 * cell, kt, kx))
                        out.append((2 * cell + 1, kt, kx))
        return out

    pieces = [(tri_polys[tid].copy(), _Affine.identity()) for tid in
              range(tri.n_triangles)]
    slivers = 0
    for step in range(q):
        new_pieces = []
        for poly, A in pieces:
            img = A.apply(poly)
            sh_img = ShPolygon(img)
            if not sh_img.is_valid:
                sh_img = make_valid(sh_img)
            bbox = (img[:, 0].min(), img[:, 1].min(),
                    img[:, 0].max(), img[:, 1].max())
            bbox = (bbox[0], bbox[1], bbox[2], bbox[3])
            for tid, kt, kx in locate_candidates(
                    (bbox[0], bbox[1], bbox[2], bbox[3])):
                shifted = tri_polys[tid] + np.array([kt, kx])
                inter = sh_img.intersection(ShPolygon(shifted))
                if inter.is_empty:
                    continue
                geoms = getattr(inter, "geoms", [inter])
                for g in geoms:
                    if g.geom_type != "Polygon" or g.area < SLIVER_AREA:
                        if getattr(g, "area", 0.0) > 0.0:
                            slivers += 1
                        continue
                    r = np.asarray(g.exterior.coords)[:-1]
                    back = A.inverse_apply(r)
                    step_aff = tri_affines[tid]
                    # conjugate the step by the integer shift (kt, kx): the
                    # lift is periodic, so Phi(t, x) = Phi(t - kt, x - kx)
                    shifted_step = _Affine(step_aff.w,
                                           step_aff.a, step_aff.b,
                                           step_aff.c - step_aff.a * kt
                                           + (1.0 - step_aff.b) * kx)
                    new_pieces.append((_ccw(back), A.then(shifted_step)))
            if len(new_pieces) > max_polygons:
                raise GeometryDegenerateError(
                    f"partition exceeded {max_polygons} polygons")
        pieces = new_pieces

    polygons = [p for p, _ in pieces]
    affine = np.array([[A.a, A.b - 1.0, A.c] for _, A in pieces])

    part = RefinedPartition(polygons=polygons, affine=affine,
                            m0=normalizing_integer(sys), q=q,
                            sliver_report={"dropped": slivers})

    total = float(part.areas().sum())
    if abs(total - 1.0) > 1e-9:
        raise GeometryDegenerateError(
            f"partition areas sum to {total!r}, expected 1")

    # spot-check the affine bookkeeping against direct composition
    rng = stage_rng(seed, "partition-check")
    idx = rng.choice(len(polygons), size=min(cross_check, len(polygons)),
                     replace=False)
    for pid in idx:
        pt = polygons[pid].mean(axis=0)
        direct = float(sys.fibre_apply(pt[0], pt[1], q)) - pt[1]
        aff = part.value_at(int(pid), pt)
        if abs(direct - aff) > check_tol:
            raise GeometryDegenerateError(
                f"affine form off by {abs(direct - aff):.3g} on polygon {pid}")
    return part
