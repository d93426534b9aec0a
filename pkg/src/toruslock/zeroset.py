"""Zero sets of the q-step displacement and their arrangement structure.

The zero set B = {normalized q-step lift = 0} of a generic PWA system is a
finite union of line segments forming disjoint topological circles; the
complementary sign regions B^- / B^+ decompose into finitely many components
whose essentiality (does a component's lift connect to its own integer
translates?) decides how mode-locking certificates are built.

Two builders produce the same arrangement view:

* ``extract_zero_set`` works on an explicit refined partition: exact segment
  endpoints, degree-2 incidence checks, component windings, essentiality via
  union-find with lattice offsets.  Right for moderate q and grid sizes.
* ``sweep_zero_set`` reconstructs the arrangement from exact per-fibre PL
  cuts on an event-refined column grid.  It scales to large q (the explicit
  partition grows like (n q)^2) and feeds the same curve-building interface;
  certificates downstream never rely on its sampled geometry, only on exact
  PL images of the final curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .dynamics import QpfSystem
from .errors import ArrangementInconsistentError, DomainError
from .partition import RefinedPartition
from .plmaps import PLLift
from .util import wrap01

__all__ = ["ZeroSetArrangement", "FibreCut", "CriticalVertex",
           "extract_zero_set", "sweep_zero_set"]

VERTEX_SNAP = 1e-9


@dataclass
class CriticalVertex:
    theta: float
    x: float
    side: str            # "l" (local zero set extends right) or "r" (left)
    comp: int = -1


@dataclass
class FibreCut:
    """Crossings of the zero set with one fibre, bottom to top in [0, 1)."""
    theta: float
    xs: np.ndarray           # crossing heights
    sign_above: np.ndarray   # sign of the displacement just above each crossing
    comp: np.ndarray         # component id of the crossed circle
    empty_sign: int = 0      # constant sign when the fibre has no crossing

    def sign_at(self, x: float) -> int:
        if len(self.xs) == 0:
            return self.empty_sign
        r = wrap01(x)
        k = int(np.searchsorted(self.xs, r, side="right")) - 1
        return int(self.sign_above[k])   # k = -1 wraps to the top crossing


@dataclass
class ZeroSegment:
    p0: np.ndarray
    p1: np.ndarray           # ordered so p0[0] <= p1[0]
    polygon_id: int
    sign_above: int
    comp: int = -1

    @property
    def slope(self) -> float:
        dt = self.p1[0] - self.p0[0]
        return (self.p1[1] - self.p0[1]) / dt if dt != 0 else np.inf


@dataclass
class RegionComponent:
    sign: int
    rank: int                 # rank of the realized lattice subgroup
    generators: list          # basis of that subgroup (integer vectors)
    piece_ids: list

    @property
    def essentiality(self) -> str:
        return {0: "inessential", 1: "essential", 2: "doubly-essential"}[self.rank]


@dataclass
class ZeroSetArrangement:
    segments: list
    vertices: list            # (point, [segment ids], class)
    components: list          # per circle: {"segments": [...], "winding": (k, m)}
    cvs: list                 # CriticalVertex records
    regions: dict             # {+1: [RegionComponent], -1: [RegionComponent]}
    max_slope: float
    m0: int
    min_region_gap: dict = dc_field(default_factory=dict)
    source: str = "partition"
    _fibre_fn: object = None
    _fibre_cache: dict = dc_field(default_factory=dict)

    # -- oracle interface used by the curve builder -------------------------

    def fibre(self, theta: float) -> FibreCut:
        key = round(float(wrap01(theta)) / 1e-13)
        cut = self._fibre_cache.get(key)
        if cut is None:
            cut = self._fibre_fn(float(wrap01(theta)))
            if len(self._fibre_cache) > 16384:
                self._fibre_cache.clear()
            self._fibre_cache[key] = cut
        return cut

    @property
    def event_thetas(self) -> np.ndarray:
        ts = [wrap01(v[0][0]) for v in self.vertices]
        return np.unique(np.asarray(ts, dtype=float))

    def cv_thetas(self) -> np.ndarray:
        return np.array(sorted(wrap01(c.theta) for c in self.cvs))

    def cv_spacing(self) -> float:
        """Minimal circle distance between distinct critical-vertex fibres;
        1.0 when fewer than two critical vertices exist."""
        ts = self.cv_thetas()
        if len(ts) < 2:
            return 1.0
        gaps = np.diff(np.concatenate((ts, [ts[0] + 1.0])))
        return float(gaps.min())

    def essential(self, sign: int):
        return [r for r in self.regions[sign] if r.rank >= 1]

    def to_obj(self):
        return {
            "m0": self.m0,
            "source": self.source,
            "max_slope": repr(float(self.max_slope)),
            "segments": [{"p0": [repr(float(s.p0[0])), repr(float(s.p0[1]))],
                          "p1": [repr(float(s.p1[0])), repr(float(s.p1[1]))],
                          "sign_above": s.sign_above, "comp": s.comp}
                         for s in self.segments],
            "vertices": [{"pt": [repr(float(p[0])), repr(float(p[1]))],
                          "segments": list(map(int, ids)), "class": cls}
                         for p, ids, cls in self.vertices],
            "components": [{"winding": list(c["winding"]),
                            "n_segments": len(c["segments"])}
                           for c in self.components],
            "critical_vertices": [{"theta": repr(float(c.theta)),
                                   "x": repr(float(c.x)), "side": c.side,
                                   "comp": c.comp} for c in self.cvs],
            "regions": {str(s): [{"sign": r.sign, "rank": r.rank,
                                  "essentiality": r.essentiality,
                                  "n_pieces": len(r.piece_ids)}
                                 for r in self.regions[s]]
                        for s in (1, -1)},
        }

    @staticmethod
    def from_obj(obj):
        segs = [ZeroSegment(p0=np.array([float(v) for v in s["p0"]]),
                            p1=np.array([float(v) for v in s["p1"]]),
                            polygon_id=-1, sign_above=int(s["sign_above"]),
                            comp=int(s["comp"]))
                for s in obj.get("segments", [])]
        verts = [(np.array([float(v) for v in rec["pt"]]),
                  list(rec["segments"]), rec["class"])
                 for rec in obj.get("vertices", [])]
        comps = [{"segments": [], "winding": tuple(c["winding"])}
                 for c in obj.get("components", [])]
        cvs = [CriticalVertex(theta=float(c["theta"]), x=float(c["x"]),
                              side=c["side"], comp=int(c.get("comp", -1)))
               for c in obj.get("critical_vertices", [])]
        regions = {}
        for s in (1, -1):
            regions[s] = [RegionComponent(sign=int(r["sign"]),
                                          rank=int(r["rank"]),
                                          generators=[], piece_ids=[])
                          for r in obj.get("regions", {}).get(str(s), [])]
        arr = ZeroSetArrangement(segments=segs, vertices=verts,
                                 components=comps, cvs=cvs, regions=regions,
                                 max_slope=float(obj["max_slope"]),
                                 m0=int(obj["m0"]),
                                 source=obj.get("source", "parsed"))
        if segs:
            arr._fibre_fn = lambda th: _fibre_from_segments(arr, th)
        return arr


# --------------------------------------------------------------------------
# union-find with lattice offsets (essentiality bookkeeping)
# --------------------------------------------------------------------------

class _OffsetUF:
    """Union-find where each element carries an integer 2-vector offset to
    its root; closing a cycle with a nonzero net offset records a realized
    lattice translation of the component."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.off = np.zeros((n, 2), dtype=np.int64)
        self.gens: dict[int, list] = {}

    def find(self, i):
        path = []
        while self.parent[i] != i:
            path.append(i)
            i = self.parent[i]
        total = np.zeros(2, dtype=np.int64)
        for j in reversed(path):
            total += self.off[j]
            self.off[j] = total.copy()
            self.parent[j] = i
        return i

    def offset_to_root(self, i):
        self.find(i)
        return self.off[i].copy() if self.parent[i] != i else np.zeros(2, dtype=np.int64)

    def union(self, i, j, delta):
        """Assert lift(j) = lift(i) + delta (integer vector)."""
        ri, rj = self.find(i), self.find(j)
        oi = self.off[i] if self.parent[i] != i else np.zeros(2, dtype=np.int64)
        oj = self.off[j] if self.parent[j] != j else np.zeros(2, dtype=np.int64)
        if ri == rj:
            net = oi + np.asarray(delta) - oj
            if net.any():
                self.gens.setdefault(ri, []).append(net.copy())
            return
        # attach rj under ri
        self.parent[rj] = ri
        self.off[rj] = oi + np.asarray(delta) - oj
        if rj in self.gens:
            self.gens.setdefault(ri, []).extend(self.gens.pop(rj))

    def component_rank(self, i):
        r = self.find(i)
        gens = self.gens.get(r, [])
        if not gens:
            return 0, []
        m = np.array(gens, dtype=float)
        rank = int(np.linalg.matrix_rank(m))
        basis = []
        for g in gens:
            trial = basis + [g]
            if np.linalg.matrix_rank(np.array(trial, dtype=float)) > len(basis):
                basis.append([int(g[0]), int(g[1])])
            if len(basis) == rank:
                break
        return rank, basis


# --------------------------------------------------------------------------
# tier A: exact extraction from an explicit partition
# --------------------------------------------------------------------------

def _clip_zero_segment(poly, a, b, c, tol=1e-15):
    """Intersection of {a t + b x + c = 0} with a convex CCW polygon, or None."""
    vals = a * poly[:, 0] + b * poly[:, 1] + c
    pts = []
    n = len(poly)
    for i in range(n):
        v0, v1 = vals[i], vals[(i + 1) % n]
        if (v0 > 0) != (v1 > 0):
            t = v0 / (v0 - v1)
            pts.append(poly[i] + t * (poly[(i + 1) % n] - poly[i]))
    if len(pts) < 2:
        return None
    pts = np.asarray(pts)
    if len(pts) > 2:
        # collinear duplicates from near-vertex crossings: keep the extremes
        d = pts @ np.array([b, -a])
        pts = pts[[int(d.argmin()), int(d.argmax())]]
    if np.allclose(pts[0], pts[1], atol=tol):
        return None
    return pts


def _split_polygon(poly, a, b, c):
    """Convex polygon split into (negative side, positive side) by the line."""
    out = {1: [], -1: []}
    n = len(poly)
    vals = a * poly[:, 0] + b * poly[:, 1] + c
    for sgn in (1, -1):
        pts = []
        for i in range(n):
            p0, p1 = poly[i], poly[(i + 1) % n]
            v0, v1 = sgn * vals[i], sgn * vals[(i + 1) % n]
            if v0 >= 0:
                pts.append(p0)
            if (v0 > 0) != (v1 > 0):
                t = vals[i] / (vals[i] - vals[(i + 1) % n])
                pts.append(p0 + t * (p1 - p0))
        if len(pts) >= 3:
            out[sgn] = np.asarray(pts)
        else:
            out[sgn] = None
    return out[-1], out[1]


def extract_zero_set(partition: RefinedPartition,
                     region_probe_offset: float = 1e-7) -> ZeroSetArrangement:
    """Exact zero-set arrangement of the normalized q-step lift.

    Requires genericity: no polygon corner on the zero level and no vertical
    zero segments; violations surface as inconsistent incidence.
    """
    m0 = partition.m0
    segments = []
    pieces = []            # (polygon, sign, parent polygon id)
    for pid, poly in enumerate(partition.polygons):
        a, b, c = partition.affine[pid]
        c = c - m0
        vals = a * poly[:, 0] + b * poly[:, 1] + c
        if np.all(vals > 0):
            pieces.append((poly, 1, pid))
            continue
        if np.all(vals < 0):
            pieces.append((poly, -1, pid))
            continue
        seg = _clip_zero_segment(poly, a, b, c)
        neg, pos = _split_polygon(poly, a, b, c)
        if neg is not None:
            pieces.append((neg, -1, pid))
        if pos is not None:
            pieces.append((pos, 1, pid))
        if seg is None:
            continue
        p0, p1 = seg
        if p1[0] < p0[0]:
            p0, p1 = p1, p0
        if p1[0] == p0[0]:
            raise ArrangementInconsistentError(
                f"vertical zero segment in polygon {pid}")
        segments.append(ZeroSegment(p0=np.array(p0), p1=np.array(p1),
                                    polygon_id=pid,
                                    sign_above=int(np.sign(b)) or 1))

    # ---- vertex incidence: every endpoint shared by exactly two segments ----
    vert_map: dict = {}
    for sid, s in enumerate(segments):
        for pt in (s.p0, s.p1):
            key = (round(wrap01(pt[0]) / VERTEX_SNAP),
                   round(wrap01(pt[1]) / VERTEX_SNAP))
            key = (key[0] % round(1 / VERTEX_SNAP), key[1] % round(1 / VERTEX_SNAP))
            vert_map.setdefault(key, []).append((sid, pt))
    vertices = []
    for key, members in vert_map.items():
        if len(members) != 2:
            raise ArrangementInconsistentError(
                f"zero-set vertex at {members[0][1]} belongs to "
                f"{len(members)} segments (expected 2)")
        vertices.append(members)

    # ---- circles: traverse the 2-regular incidence graph -------------------
    comp_uf = _OffsetUF(len(segments))
    vert_records = []
    cvs = []
    for members in vertices:
        (s0, pt0), (s1, pt1) = members
        delta = np.round(np.asarray(pt1) - np.asarray(pt0)).astype(int)
        comp_uf.union(s0, s1, -delta)  # lift of s1 = lift of s0 - delta... sign
        # is irrelevant for connectivity; windings come from generators below
        d0 = _away_dir(segments[s0], pt0)
        d1 = _away_dir(segments[s1], pt1)
        cls = "regular"
        if d0 > 0 and d1 > 0:
            cls = "lcv"
        elif d0 < 0 and d1 < 0:
            cls = "rcv"
        pt = np.array([wrap01(pt0[0]), wrap01(pt0[1])])
        vert_records.append((pt, [s0, s1], cls))
        if cls != "regular":
            cvs.append(CriticalVertex(theta=float(pt[0]), x=float(pt[1]),
                                      side="l" if cls == "lcv" else "r"))

    comp_ids = {}
    components = []
    for sid in range(len(segments)):
        root = comp_uf.find(sid)
        if root not in comp_ids:
            rank, gens = comp_uf.component_rank(root)
            comp_ids[root] = len(components)
            components.append({"segments": [], "winding": _winding_from(gens)})
        cid = comp_ids[root]
        segments[sid].comp = cid
        components[cid]["segments"].append(sid)
    for cv in cvs:
        for p, ids, cls in vert_records:
            if cls != "regular" and abs(p[0] - cv.theta) < 1e-12 \
                    and abs(p[1] - cv.x) < 1e-12:
                cv.comp = segments[ids[0]].comp

    # ---- regions: union-find with lattice offsets over sign pieces ---------
    regions = _region_components(pieces, region_probe_offset)

    slopes = [abs(s.slope) for s in segments]
    max_slope = float(max(slopes)) if slopes else 0.0

    arr = ZeroSetArrangement(segments=segments, vertices=vert_records,
                             components=components, cvs=cvs, regions=regions,
                             max_slope=max_slope, m0=m0,
                             source="partition")
    arr.min_region_gap = _region_gaps(pieces, regions, segments)
    arr._pieces = pieces
    arr._fibre_fn = lambda th: _fibre_from_segments(arr, th)
    return arr


def _away_dir(seg: ZeroSegment, pt) -> float:
    """Sign of the theta-direction of the segment leaving the endpoint pt."""
    if abs(seg.p0[0] - pt[0]) < abs(seg.p1[0] - pt[0]):
        return seg.p1[0] - seg.p0[0]
    return seg.p0[0] - seg.p1[0]


def _winding_from(gens):
    if not gens:
        return (0, 0)
    g = gens[0]
    return (int(abs(g[0])), int(g[1] if g[0] >= 0 else -g[1]))


def _region_components(pieces, off: float):
    """Connected components of the sign regions across shared faces and the
    torus identifications, with realized lattice ranks."""
    from shapely.geometry import Point
    from shapely.geometry import Polygon as ShPolygon
    from shapely.strtree import STRtree

    shapes = []
    for poly, sign, pid in pieces:
        shapes.append(ShPolygon(poly))
    tree_geoms = []
    tree_ids = []
    for k, (poly, sign, pid) in enumerate(pieces):
        for dt in (-1, 0, 1):
            for dx in (-1, 0, 1):
                tree_geoms.append(ShPolygon(poly + np.array([dt, dx])))
                tree_ids.append((k, dt, dx))
    tree = STRtree(tree_geoms)

    uf = _OffsetUF(len(pieces))
    for k, (poly, sign, pid) in enumerate(pieces):
        n = len(poly)
        for e in range(n):
            mid = 0.5 * (poly[e] + poly[(e + 1) % n])
            edge = poly[(e + 1) % n] - poly[e]
            nrm = np.array([-edge[1], edge[0]])
            ln = np.hypot(*nrm)
            if ln < 1e-14:
                continue
            probe = mid - off * nrm / ln     # outward for CCW polygons
            cand = tree.query(Point(probe))
            for idx in cand:
                k2, dt, dx = tree_ids[int(idx)]
                if tree_geoms[int(idx)].buffer(0).contains(Point(probe)):
                    if pieces[k2][1] == sign:
                        uf.union(k, k2, (-dt, -dx))
                    break

    regions = {1: [], -1: []}
    seen = {}
    for k, (poly, sign, pid) in enumerate(pieces):
        root = uf.find(k)
        if root not in seen:
            rank, gens = uf.component_rank(root)
            rec = RegionComponent(sign=sign, rank=rank, generators=gens,
                                  piece_ids=[])
            seen[root] = rec
            regions[sign].append(rec)
        seen[root].piece_ids.append(k)
    return regions


def _seg_seg_dist(p0, p1, q0, q1):
    """Minimal distance between two segments in the plane."""
    def pt_seg(p, a, b):
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
        return float(np.hypot(*(p - (a + t * ab))))
    # segments intersect?
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1 = orient(p0, p1, q0)
    d2 = orient(p0, p1, q1)
    d3 = orient(q0, q1, p0)
    d4 = orient(q0, q1, p1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return 0.0
    return min(pt_seg(q0, p0, p1), pt_seg(q1, p0, p1),
               pt_seg(p0, q0, q1), pt_seg(p1, q0, q1))


def _region_gaps(pieces, regions, segments=None):
    """Minimal pairwise distance between distinct same-sign region
    components, computed from the bounding zero-segment geometry."""
    gaps = {}
    if segments is None:
        gaps[1] = gaps[-1] = np.inf
        return gaps
    # piece index by (parent polygon id, sign)
    by_parent = {}
    for k, (poly, sign, pid) in enumerate(pieces):
        by_parent[(pid, sign)] = k
    piece_region = {}
    for sign in (1, -1):
        for ri, rc in enumerate(regions[sign]):
            for k in rc.piece_ids:
                piece_region[k] = (sign, ri)
    for sign in (1, -1):
        comps = regions[sign]
        if len(comps) < 2:
            gaps[sign] = np.inf
            continue
        bound = [[] for _ in comps]
        for s in segments:
            k = by_parent.get((s.polygon_id, sign))
            if k is None or k not in piece_region:
                continue
            _, ri = piece_region[k]
            bound[ri].append((s.p0, s.p1))
        best = np.inf
        shifts = [np.array([dt, dx]) for dt in (-1, 0, 1) for dx in (-1, 0, 1)]
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                for a0, a1 in bound[i]:
                    for b0, b1 in bound[j]:
                        for sh in shifts:
                            d = _seg_seg_dist(a0, a1, b0 + sh, b1 + sh)
                            best = min(best, d)
        gaps[sign] = float(best)
    return gaps


def _fibre_from_segments(arr: ZeroSetArrangement, theta: float) -> FibreCut:
    xs = []
    signs = []
    comps = []
    for s in arr.segments:
        t0, t1 = s.p0[0], s.p1[0]
        hit = None
        for shift in (0.0, 1.0, -1.0):
            tt = theta + shift
            if t0 <= tt < t1 or (t0 <= tt <= t1 and tt == t1 and False):
                hit = tt
                break
        if hit is None:
            continue
        x = s.p0[1] + (hit - t0) / (t1 - t0) * (s.p1[1] - s.p0[1])
        xs.append(wrap01(x))
        signs.append(s.sign_above)
        comps.append(s.comp)
    order = np.argsort(xs)
    empty_sign = 0
    if not xs:
        empty_sign = _sign_at_point(arr, theta, 0.5)
    return FibreCut(theta=theta, xs=np.asarray(xs)[order],
                    sign_above=np.asarray(signs, dtype=int)[order],
                    comp=np.asarray(comps, dtype=int)[order],
                    empty_sign=empty_sign)


def _sign_at_point(arr: ZeroSetArrangement, theta: float, x: float) -> int:
    pt = np.array([wrap01(theta), wrap01(x)])
    for poly, sign, pid in getattr(arr, "_pieces", []):
        for dt in (0.0, 1.0, -1.0):
            for dx in (0.0, 1.0, -1.0):
                if _point_in_convex(poly, pt + np.array([dt, dx])):
                    return sign
    return 0


def _point_in_convex(poly, pt, tol=1e-12) -> bool:
    n = len(poly)
    for i in range(n):
        e = poly[(i + 1) % n] - poly[i]
        v = pt - poly[i]
        if e[0] * v[1] - e[1] * v[0] < -tol:
            return False
    return True


# --------------------------------------------------------------------------
# tier B: arrangement reconstructed from exact per-fibre PL cuts
# --------------------------------------------------------------------------

def _pl_zero_crossings(G: PLLift, m0: int):
    """Zeros of the displacement G(x) - x - m0 with crossing orientations
    (+1: sign goes negative -> positive upward), plus the constant sign when
    there is no crossing.  Exact at PL breakpoints."""
    xs = np.concatenate((G.xs, [1.0]))
    d = np.concatenate((G.ys, [G.ys[0] + 1.0])) - xs - m0
    zeros = []
    signs = []
    for i in range(len(xs) - 1):
        d0, d1 = d[i], d[i + 1]
        if (d0 > 0) != (d1 > 0) and d0 != 0.0:
            t = d0 / (d0 - d1)
            zeros.append(xs[i] + t * (xs[i + 1] - xs[i]))
            signs.append(1 if d1 > d0 else -1)
        elif d0 == 0.0 and d1 != 0.0:
            # zero exactly on a breakpoint: treat as a crossing when the signs
            # on both sides differ
            prev = d[i - 1] if i > 0 else d[-2]
            if prev != 0.0 and (prev > 0) != (d1 > 0):
                zeros.append(xs[i])
                signs.append(1 if d1 > 0 else -1)
    empty_sign = int(np.sign(d.max() + d.min())) or 1
    return np.asarray(zeros), np.asarray(signs, dtype=int), empty_sign


def _match_cyclic(z1, z2):
    """Order-preserving matching of equal-length circular crossing lists.

    Returns index pairs (i, j) and integer lifts l with z2[j] + l ~ z1[i];
    the cyclic shift with minimal total motion wins."""
    n = len(z1)
    best = None
    for shift in range(n):
        pairs, lifts, cost = [], [], 0.0
        for i in range(n):
            j = (i + shift) % n
            l = int(round(z1[i] - z2[j]))
            cost += abs(z2[j] + l - z1[i])
            pairs.append((i, j))
            lifts.append(l)
        if best is None or cost < best[0]:
            best = (cost, pairs, lifts)
    return best[1], best[2]


def _match_partial(z1, z2):
    """Greedy nearest matching when crossing counts differ (an event lies
    between the columns); the annihilated/created pair stays unmatched."""
    pairs, lifts = [], []
    used = set()
    n_keep = min(len(z1), len(z2))
    cand = []
    for i, a in enumerate(z1):
        for j, b in enumerate(z2):
            l = int(round(a - b))
            cand.append((abs(b + l - a), i, j, l))
    cand.sort()
    used_i = set()
    for d, i, j, l in cand:
        if len(pairs) == n_keep:
            break
        if i in used_i or j in used or d > 0.25:
            continue
        used_i.add(i)
        used.add(j)
        pairs.append((i, j))
        lifts.append(l)
    return pairs, lifts


def _vanishing_pair(z_many, z_few):
    """Height and indices of the crossing pair present only in z_many."""
    if len(z_many) == 0:
        return 0.0, None
    if len(z_few) == 0:
        if len(z_many) == 2:
            return float(np.mean(z_many)), (0, 1)
        return float(np.mean(z_many)), None
    dists = [float(np.min(np.abs(wrap01(z_few - z + 0.5) - 0.5)))
             for z in z_many]
    order = np.argsort(dists)[::-1]
    i1, i2 = int(order[0]), int(order[1])
    cand = z_many[[i1, i2]]
    return float(np.mean(cand)), (min(i1, i2), max(i1, i2))


def sweep_zero_set(sys: QpfSystem, m0: int, *, n_columns: int = 1024,
                   refine_rounds: int = 48, cv_tol: float = 1e-9) -> ZeroSetArrangement:
    """Arrangement view from a column sweep of exact per-fibre PL cuts.

    Critical vertices appear as birth/death events of crossing pairs between
    adjacent columns and are localized by bisection.  Component ids come from
    order-matched chains around the circle, windings from the chain return
    offsets.  Region components (and their essentiality ranks) come from
    interval chains with lattice-offset union-find.
    """
    if not sys.omega.is_rational:
        raise DomainError("sweep needs a rational base")

    def cut_raw(theta: float):
        for nudge in (0.0, 3e-13, -3e-13, 1.1e-12):
            G = sys.q_lift(wrap01(theta + nudge))
            if not isinstance(G, PLLift):
                raise DomainError("sweep needs per-fibre PL structure")
            out = _pl_zero_crossings(G, m0)
            if len(out[0]) % 2 == 0:
                return out
        # an odd crossing count survives only at exact tangencies; report the
        # fibre without the unpaired crossing
        z, s, es = out
        return z[:-1], s[:-1], es

    base_cols = list(np.arange(n_columns) / n_columns)
    tri = getattr(sys.field, "tri", None)
    if tri is not None:
        w = sys.omega.value
        extra = (tri.cols[None, :] - np.arange(sys.omega.q)[:, None] * w).ravel()
        base_cols.extend(wrap01(extra + 1e-9).tolist())
    cols = np.unique(np.round(np.sort(wrap01(np.asarray(base_cols))), 13))

    cuts = {float(c): cut_raw(float(c)) for c in cols}

    # localize crossing-count changes (critical vertices)
    cvs = []
    for _ in range(refine_rounds):
        pending = [(float(lo), float(hi))
                   for lo, hi in zip(cols, np.roll(cols, -1))
                   if len(cuts[float(lo)][0]) != len(cuts[float(hi)][0])]
        if not pending:
            break
        new_cols = []
        for lo, hi in pending:
            span = wrap01(hi - lo)
            span = span if span > 0 else 1.0
            if span <= cv_tol:
                n_lo = len(cuts[lo][0])
                n_hi = len(cuts[hi][0])
                side = "r" if n_lo > n_hi else "l"
                many, few = (lo, hi) if side == "r" else (hi, lo)
                x_star, pair = _vanishing_pair(cuts[many][0], cuts[few][0])
                theta_star = wrap01(0.5 * (lo + lo + span))
                if not any(abs(wrap01(c.theta - theta_star + 0.5) - 0.5) < 4 * cv_tol
                           and abs(wrap01(c.x - x_star + 0.5) - 0.5) < 1e-4
                           for c in cvs):
                    cv = CriticalVertex(theta=float(theta_star),
                                        x=float(x_star), side=side)
                    cv._merge = (many, pair)
                    cvs.append(cv)
                continue
            mid = wrap01(lo + 0.5 * span)
            if mid not in cuts:
                cuts[mid] = cut_raw(mid)
                new_cols.append(mid)
        if new_cols:
            cols = np.unique(np.concatenate((cols, new_cols)))
        elif not any(wrap01(hi - lo) > cv_tol for lo, hi in pending):
            break

    col_list = [float(c) for c in cols]
    ncols = len(col_list)

    # ---- crossing chains: component ids and windings -----------------------
    base_index = {}
    k = 0
    for c in col_list:
        base_index[c] = k
        k += len(cuts[c][0])
    uf = _OffsetUF(max(k, 1))

    max_slope = 0.0
    for ci, c in enumerate(col_list):
        c2 = col_list[(ci + 1) % ncols]
        wrapped = 1 if (ci + 1) >= ncols else 0
        z1 = cuts[c][0]
        z2 = cuts[c2][0]
        if len(z1) == 0 or len(z2) == 0:
            continue
        if len(z1) == len(z2):
            pairs, lifts = _match_cyclic(z1, z2)
        else:
            pairs, lifts = _match_partial(z1, z2)
        dt = wrap01(c2 - c)
        dt = dt if dt > 0 else 1.0
        for (i, j), l in zip(pairs, lifts):
            uf.union(base_index[c] + i, base_index[c2] + j, (wrapped, -l))
            if dt > 100 * cv_tol:
                max_slope = max(max_slope, abs((z2[j] + l) - z1[i]) / dt)

    # the two crossings that annihilate at a critical vertex belong to the
    # same circle: unite their chains
    for cv in cvs:
        many, pair = getattr(cv, "_merge", (None, None))
        if many is None or pair is None or many not in base_index:
            continue
        i1, i2 = pair
        z = cuts[many][0]
        l = int(round(z[i1] - z[i2]))
        uf.union(base_index[many] + i1, base_index[many] + i2, (0, -l))

    comp_of = {}
    components = []
    for c in col_list:
        for j in range(len(cuts[c][0])):
            root = uf.find(base_index[c] + j)
            if root not in comp_of:
                rank, gens = uf.component_rank(root)
                comp_of[root] = len(components)
                components.append({"segments": [], "winding": _winding_from(gens)})

    col_arr = np.asarray(col_list)

    def fibre_fn(theta: float) -> FibreCut:
        z, s, empty_sign = cut_raw(theta)
        i = int(np.searchsorted(col_arr, theta, side="right")) - 1
        c = col_list[i]
        zc = cuts[c][0]
        comp = np.full(len(z), -1, dtype=int)
        if len(z) and len(zc) == len(z):
            pairs, _ = _match_cyclic(zc, z)
            for a_i, b_i in pairs:
                comp[b_i] = comp_of[uf.find(base_index[c] + a_i)]
        elif len(z) and len(zc):
            pairs, _ = _match_partial(zc, z)
            for a_i, b_i in pairs:
                comp[b_i] = comp_of[uf.find(base_index[c] + a_i)]
        return FibreCut(theta=theta, xs=z, sign_above=s, comp=comp,
                        empty_sign=empty_sign)

    for cv in cvs:
        probe = wrap01(cv.theta - 16 * cv_tol) if cv.side == "r" \
            else wrap01(cv.theta + 16 * cv_tol)
        cut = fibre_fn(probe)
        if len(cut.xs):
            j = int(np.argmin(np.abs(wrap01(cut.xs - cv.x + 0.5) - 0.5)))
            cv.comp = int(cut.comp[j])

    regions = _regions_from_sweep(col_list, cuts)

    arr = ZeroSetArrangement(segments=[], vertices=[], components=components,
                             cvs=cvs, regions=regions, max_slope=max_slope,
                             m0=m0, source="sweep")
    arr._fibre_fn = fibre_fn
    arr._sweep_cols = col_arr
    return arr


def _regions_from_sweep(col_list, cuts):
    """Sign-region components from per-column interval chains.

    The interval above each crossing (or the whole fibre when there is no
    crossing) is matched to every overlapping same-sign interval of the next
    column, with integer lifts tracked for the essentiality rank.  Requiring
    equal signs keeps pinching corridors separate from the surrounding
    region of the opposite sign.
    """
    ids = {}
    sign_of = []
    g = 0
    ncols = len(col_list)
    for ci, c in enumerate(col_list):
        z, s, empty_sign = cuts[c]
        n = max(1, len(z))
        for j in range(n):
            ids[(ci, j)] = g
            sign_of.append(int(s[j]) if len(z) else empty_sign)
            g += 1

    def intervals(ci):
        z, s, empty_sign = cuts[col_list[ci]]
        if len(z) == 0:
            return [(0.0, 1.0, empty_sign)]
        out = []
        for j in range(len(z)):
            lo = z[j]
            hi = z[(j + 1) % len(z)] + (1.0 if j + 1 >= len(z) else 0.0)
            out.append((lo, hi, int(s[j])))
        return out

    ruf = _OffsetUF(max(g, 1))
    for ci in range(ncols):
        ci2 = (ci + 1) % ncols
        wrapped = 1 if ci2 == 0 else 0
        iv1 = intervals(ci)
        iv2 = intervals(ci2)
        for j, (lo, hi, sg) in enumerate(iv1):
            if hi - lo >= 1.0 - 1e-13 and len(iv1) == 1:
                # the interval is the whole fibre circle: it meets its own
                # vertical translate
                ruf.union(ids[(ci, j)], ids[(ci, j)], (0, 1))
            for k, (lo2, hi2, sg2) in enumerate(iv2):
                if sg != sg2:
                    continue
                for lift in (-1, 0, 1):
                    if max(lo, lo2 + lift) < min(hi, hi2 + lift) - 1e-13:
                        ruf.union(ids[(ci, j)], ids[(ci2, k)], (wrapped, lift))

    regions = {1: [], -1: []}
    seen = {}
    for key, gid in ids.items():
        root = ruf.find(gid)
        if root not in seen:
            rank, gens = ruf.component_rank(root)
            rec = RegionComponent(sign=sign_of[gid], rank=rank,
                                  generators=gens, piece_ids=[])
            seen[root] = rec
            regions[rec.sign].append(rec)
        seen[root].piece_ids.append(key)
    return regions
