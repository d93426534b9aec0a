"""Genericity enforcement for PWA systems: quantitative margins replacing
the qualitative "not equal to zero" conditions.

After refinement, three properties make the zero set an honest segment
arrangement: no partition vertex lies on the zero level (margin_v), no
polygon has vanishing x-slope of the q-step lift (margin_s), and critical
vertices sit on pairwise distinct fibres.  Violations are repaired by seeded
nudges of single vertex values; the counts of compliant vertices/polygons
never decrease across accepted nudges, so the loop terminates or fails
loudly with the offender list.
"""

from __future__ import annotations

import numpy as np

from .dynamics import Omega, QpfSystem
from .errors import GenericityFailedError
from .locking import normalizing_integer
from .partition import RefinedPartition, refine_partition
from .pwa import PwaField
from .util import stage_rng, wrap01

__all__ = ["genericize", "genericity_report", "MARGIN_SCALE"]

MARGIN_SCALE = 1e-6


def _margins(part: RefinedPartition):
    vals = np.abs(part.affine[:, 2] - part.m0) + np.abs(part.affine[:, 0]) \
        + np.abs(part.affine[:, 1])
    scale_v = max(float(np.max(vals)), 1e-9)
    scale_s = max(float(np.abs(part.affine[:, 1]).max()), 1e-9)
    return MARGIN_SCALE * scale_v, MARGIN_SCALE * scale_s


def genericity_report(field: PwaField, omega, part: RefinedPartition | None = None):
    """Counts and offenders for the three margin conditions."""
    if part is None:
        part = refine_partition(field, omega)
    margin_v, margin_s = _margins(part)
    vert = part.vertex_set()
    bad_vertices = []
    n_ok_v = 0
    for pt, pids in vert:
        val = part.normalized_value_at(pids[0], pt)
        if abs(val) >= margin_v:
            n_ok_v += 1
        else:
            bad_vertices.append((pt, pids[0], val))
    bad_polygons = []
    n_ok_s = 0
    for pid in range(len(part)):
        if abs(part.affine[pid, 1]) >= margin_s:
            n_ok_s += 1
        else:
            bad_polygons.append(pid)
    return {
        "partition": part,
        "margin_v": margin_v,
        "margin_s": margin_s,
        "n_vertices": len(vert),
        "count_nonzero_vertices": n_ok_v,
        "count_sloped_polygons": n_ok_s,
        "bad_vertices": bad_vertices,
        "bad_polygons": bad_polygons,
    }


def _cv_fibres_distinct(field: PwaField, omega, tol=1e-9):
    from .zeroset import extract_zero_set
    part = refine_partition(field, omega)
    try:
        arr = extract_zero_set(part)
    except Exception:
        return False, None
    ts = sorted(wrap01(c.theta) for c in arr.cvs)
    for a, b in zip(ts, ts[1:] + ([ts[0] + 1.0] if ts else [])):
        if b - a < tol:
            return False, arr
    return True, arr


def genericize(field: PwaField, omega, seed: int = 0,
               nudge_budget: float = 1e-4, max_rounds: int = 256) -> PwaField:
    """Nudge single vertex values until the genericity margins hold.

    Accepted nudges never decrease the counts of compliant vertices and
    polygons; the per-nudge size is capped at nudge_budget / rounds.
    Raises GenericityFailedError with the surviving offenders when the
    budget runs out.
    """
    from fractions import Fraction
    if isinstance(omega, tuple):
        omega = Fraction(*omega)
    rng = stage_rng(seed, "genericize")
    rep = genericity_report(field, omega)
    if not rep["bad_vertices"] and not rep["bad_polygons"]:
        ok, _ = _cv_fibres_distinct(field, omega)
        if ok:
            return field

    rounds = min(max_rounds,
                 max(8, 2 * (len(rep["bad_vertices"]) + len(rep["bad_polygons"]) + 2)))
    step = nudge_budget / rounds
    current = field
    best_m = rep["count_nonzero_vertices"]
    best_v = rep["count_sloped_polygons"]
    sysq = QpfSystem(Omega.rational(omega.numerator, omega.denominator), current)
    q = omega.denominator

    for round_idx in range(rounds):
        rep = genericity_report(current, omega)
        if not rep["bad_vertices"] and not rep["bad_polygons"]:
            ok, _ = _cv_fibres_distinct(current, omega)
            if ok:
                return current
            # move a critical vertex off the shared fibre by nudging near it
            target_pt = None
            arr = _cv_fibres_distinct(current, omega)[1]
            if arr is not None and arr.cvs:
                cv = arr.cvs[0]
                target_pt = np.array([cv.theta, cv.x])
        else:
            if rep["bad_vertices"]:
                target_pt = np.asarray(rep["bad_vertices"][0][0], dtype=float)
            else:
                pid = rep["bad_polygons"][0]
                target_pt = rep["partition"].polygons[pid].mean(axis=0)

        # the vertex value controlling the offender: the triangle containing
        # the (q-1)-step image of the offending point
        sysq = QpfSystem(Omega.rational(omega.numerator, omega.denominator),
                         current)
        img_t = target_pt[0] + (q - 1) * float(omega)
        img_x = float(sysq.fibre_apply(target_pt[0], target_pt[1], q - 1))
        tri = current.tri
        j, s = tri.locate(img_t)
        i = int(np.clip(np.floor(wrap01(img_x) * tri.n_grid), 0, tri.n_grid - 1))
        candidates = [(int(j), i), ((int(j) + 1) % tri.n_grid, i),
                      (int(j), (i + 1) % tri.n_grid),
                      ((int(j) + 1) % tri.n_grid, (i + 1) % tri.n_grid)]
        improved = False
        for idx in rng.permutation(len(candidates)):
            jj, ii = candidates[int(idx)]
            for sign in (1.0, -1.0):
                vals = current.values.copy()
                vals[jj, ii] += sign * step * (0.5 + rng.random())
                try:
                    trial = PwaField(current.tri, vals, current.lift_offset)
                except Exception:
                    continue
                r2 = genericity_report(trial, omega)
                if r2["count_nonzero_vertices"] >= best_m \
                        and r2["count_sloped_polygons"] >= best_v \
                        and (r2["count_nonzero_vertices"] > best_m
                             or r2["count_sloped_polygons"] > best_v
                             or (not r2["bad_vertices"] and not r2["bad_polygons"])):
                    current = trial
                    best_m = r2["count_nonzero_vertices"]
                    best_v = r2["count_sloped_polygons"]
                    improved = True
                    break
            if improved:
                break
        if not improved:
            # fall back to a global whisper-level nudge
            vals = current.values + rng.uniform(-step, step, current.values.shape) * 0.1
            try:
                trial = PwaField(current.tri, vals, current.lift_offset)
                r2 = genericity_report(trial, omega)
                if r2["count_nonzero_vertices"] >= best_m \
                        and r2["count_sloped_polygons"] >= best_v:
                    current = trial
                    best_m = r2["count_nonzero_vertices"]
                    best_v = r2["count_sloped_polygons"]
            except Exception:
                pass

    rep = genericity_report(current, omega)
    if rep["bad_vertices"] or rep["bad_polygons"]:
        raise GenericityFailedError(
            f"{len(rep['bad_vertices'])} vertices / "
            f"{len(rep['bad_polygons'])} polygons below margin after budget",
            offenders=rep["bad_vertices"] + rep["bad_polygons"])
    ok, _ = _cv_fibres_distinct(current, omega)
    if not ok:
        raise GenericityFailedError("critical vertices share a fibre")
    return current
