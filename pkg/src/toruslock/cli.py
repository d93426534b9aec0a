"""Command-line surface.

Subcommands: rotnum, tongue, rationalize, lock-fibres, zeroset, curves,
certify, pipeline, staircase, plateaus, render.  Map specs are JSON files
({"omega": ..., "field": ...}); every artifact embeds the seed and writes
atomically, so identical config and seed reproduce byte-identical output.
Exit codes: 0 success, 1 stage failure (tagged on stderr), 2 usage/schema
errors.  TORUSLOCK_THREADS sets the worker pool for per-sample parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from fractions import Fraction

import numpy as np

from . import render as render_mod
from .dynamics import Omega, QpfSystem, fibred_rotation_number
from .errors import ToruslockError
from .serialize import (atomic_write_json, atomic_write_text, dump_json,
                        load_system, system_from_obj, system_to_obj)
from .util import wrap01

USAGE_EXIT = 2
STAGE_EXIT = 1


def _out(args, default):
    return args.out if args.out else default


def _write_csv(path, header, rows, seed):
    lines = [f"# seed={seed}", header]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                              for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_rotnum(args):
    sys = load_system(args.spec)
    est = fibred_rotation_number(sys, args.theta0, n_max=args.n_max,
                                 theta_samples=args.theta_samples)
    rows = [(float(est.value), float(est.half_width), est.iterations,
             float(est.per_theta_spread), int(est.certified))]
    _write_csv(_out(args, "rotnum.csv"),
               "value,half_width,iterations,per_theta_spread,certified",
               rows, args.seed)
    print(f"rho = {est.value!r} +/- {est.half_width!r}")
    return 0


def cmd_tongue(args):
    from .tongues import step_family, tongue_boundary
    sys = load_system(args.spec)
    if args.q_step:
        if not sys.omega.is_rational:
            raise ToruslockError("q-step tongue needs a rational base")
        family = step_family(sys, sys.omega)
        period = 1.0 / sys.omega.q
    else:
        field = sys.field

        def family(alpha, tau):
            def lift(x):
                x = np.asarray(x, dtype=float)
                return x + field.lift(alpha, x) + tau
            return lift
        period = 1.0
    alphas = np.arange(args.alphas) * (period / args.alphas)
    tb = tongue_boundary(family, alphas, args.target, tol=args.tol,
                         check_twist=False)
    rows = list(zip(tb.alphas, tb.tau_minus, tb.tau_plus))
    path = _out(args, "tongue.csv")
    _write_csv(path, "alpha,tau_minus,tau_plus", rows, args.seed)
    if args.svg:
        obj = {"alphas": [repr(float(v)) for v in tb.alphas],
               "tau_minus": [repr(float(v)) for v in tb.tau_minus],
               "tau_plus": [repr(float(v)) for v in tb.tau_plus]}
        atomic_write_text(args.svg, render_mod.render_tongue(obj))
    print(f"tongue boundaries written to {path}")
    return 0


def cmd_rationalize(args):
    from .tongues import rationalize_base
    sys = load_system(args.spec)
    res = rationalize_base(sys, args.eps, n_theta=args.n_theta)
    obj = dict(res.to_obj(), seed=args.seed, schema="toruslock-rationalization-1")
    path = _out(args, "rationalization.json")
    atomic_write_json(path, obj)
    print(f"omega -> {res.p_over_q}, m0 = {res.m0}, written to {path}")
    return 0


def cmd_lock_fibres(args):
    from .locking import lock_all_fibres
    from .pwa import pwa_approximate, triangulate, auto_grid_size
    sys = load_system(args.spec)
    if not sys.omega.is_rational:
        raise ToruslockError("lock-fibres needs a rational base")
    out = lock_all_fibres(sys, args.eps, n_theta=args.n_theta)
    rows = [(float(t), float(gp0), float(gm0), float(gp1), float(gm1))
            for t, gp0, gm0, gp1, gm1 in zip(
                out.before.theta_grid, out.before.gamma_plus,
                out.before.gamma_minus, out.after.gamma_plus,
                out.after.gamma_minus)]
    path = _out(args, "lock.csv")
    _write_csv(path, "theta,gamma_plus_before,gamma_minus_before,"
               "gamma_plus_after,gamma_minus_after", rows, args.seed)
    print(f"perturbation = {out.perturbation!r}, ok = {out.ok}, "
          f"phases = {out.phases}")
    if args.save_field:
        p, q = sys.omega.p, sys.omega.q
        n = auto_grid_size(q, p, requested=args.n_grid)
        tri = triangulate(q, (p, q), n, seed=args.seed)
        field = pwa_approximate(out.system.field, tri)
        atomic_write_json(args.save_field,
                          system_to_obj(QpfSystem(sys.omega, field)))
    return 0 if out.ok else STAGE_EXIT


def _build_arrangement(sys, args):
    from .locking import normalizing_integer
    from .partition import partition_size_estimate, refine_partition
    from .zeroset import extract_zero_set, sweep_zero_set
    if not sys.omega.is_rational:
        raise ToruslockError("zero sets need a rational base")
    q = sys.omega.q
    m0 = normalizing_integer(sys)
    n = getattr(sys.field, "tri", None)
    if n is not None and partition_size_estimate(n.n_grid, q) <= args.partition_limit:
        part = refine_partition(sys.field, (sys.omega.p, q))
        return extract_zero_set(part), m0
    return sweep_zero_set(sys, m0, n_columns=args.columns), m0


def cmd_zeroset(args):
    sys = load_system(args.spec)
    arr, m0 = _build_arrangement(sys, args)
    obj = dict(arr.to_obj(), seed=args.seed, schema="toruslock-zeroset-1")
    path = _out(args, "zeroset.json")
    atomic_write_json(path, obj)
    if args.svg:
        atomic_write_text(args.svg, render_mod.render_zeroset(obj))
    print(f"{len(arr.components)} circle components, "
          f"{len(arr.cvs)} critical vertices -> {path}")
    return 0


def _pair_to_obj(pair):
    return {
        "schema": "toruslock-curves-1",
        "closure": list(pair.closure),
        "epsilon_spacing": repr(float(pair.epsilon_spacing)),
        "margin": repr(float(pair.margin)),
        "branch": pair.meta.get("branch", "?"),
        "pieces": [{"thetas": [repr(float(v)) for v in p.thetas],
                    "minus": [repr(float(v)) for v in p.minus],
                    "plus": [repr(float(v)) for v in p.plus]}
                   for p in pair.pieces],
        "verticals": [{"theta": repr(float(v.theta)), "side": v.side,
                       "a": repr(float(v.a)), "b": repr(float(v.b))}
                      for v in pair.verticals if v is not None],
        "targets": [[repr(float(t)), repr(float(x))] for t, x in pair.targets],
    }


def cmd_curves(args):
    from .curves import build_curves
    sys = load_system(args.spec)
    arr, m0 = _build_arrangement(sys, args)
    pair = build_curves(arr, seed=args.seed)
    obj = dict(_pair_to_obj(pair), seed=args.seed)
    path = _out(args, "curves.json")
    atomic_write_json(path, obj)
    if args.svg:
        atomic_write_text(args.svg,
                          render_mod.render_curves(obj, arr.to_obj()))
    print(f"curve pair closure {pair.closure} -> {path}")
    return 0


def cmd_certify(args):
    from .certify import verify_certificate
    with open(args.certificate) as fh:
        obj = json.load(fh)
    rep = verify_certificate(obj)
    print(f"margin stored {rep['stored']!r}, recomputed {rep['margin']!r}, "
          f"defect {rep['defect']:.3g}")
    return 0 if rep["ok"] else STAGE_EXIT


def cmd_pipeline(args):
    from .certify import mode_lock_pipeline
    sys = load_system(args.spec)
    res = mode_lock_pipeline(sys, args.eps, seed=args.seed,
                             n_grid=args.n_grid,
                             min_margin=args.min_margin)
    path = _out(args, "certificate.json")
    atomic_write_json(path, res.certificate.to_obj())
    if args.stages:
        atomic_write_json(args.stages, _jsonable(res.stages))
    if args.svg:
        atomic_write_text(args.svg,
                          render_mod.render_certificate(res.certificate.to_obj()))
    print(f"certificate margin {res.certificate.margin!r}, "
          f"perturbation {res.perturbation!r} -> {path}")
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return repr(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    return obj


def cmd_staircase(args):
    from .staircase import arnold_family, sweep_family, TwistFamily
    sys = load_system(args.spec)
    field_obj = sys.field.to_obj()
    if field_obj.get("kind") == "closed_form" \
            and field_obj.get("family") == "qpf_arnold":
        params = {k: float(v) for k, v in field_obj["params"].items()}
        fam = arnold_family(sys.omega, K=params["K"], b=params["b"],
                            tau0=params["tau"])
    else:
        from .fields import PeriodicPL, ThetaShiftField
        base = sys.field
        fam = TwistFamily(sys.omega,
                          lambda tau: ThetaShiftField(base, PeriodicPL.const(tau)))
    taus = np.linspace(args.tau_min, args.tau_max, args.samples)
    data = sweep_family(fam, taus, n_max=args.n_max)
    rows = data.to_rows()
    path = _out(args, "staircase.csv")
    _write_csv(path, "tau,rho,half_width", rows, args.seed)
    if args.svg:
        atomic_write_text(args.svg, render_mod.render_staircase(rows))
    print(f"{len(rows)} samples -> {path}")
    return 0


def cmd_plateaus(args):
    from .staircase import StaircaseData, detect_plateaus
    taus, rho, hw = [], [], []
    with open(args.staircase) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("tau"):
                continue
            t, r, h = line.split(",")[:3]
            taus.append(float(t))
            rho.append(float(r))
            hw.append(float(h))
    data = StaircaseData(np.asarray(taus), np.asarray(rho), np.asarray(hw))
    plats = detect_plateaus(data, level_tol=args.level_tol)
    obj = {"schema": "toruslock-plateaus-1", "seed": args.seed,
           "plateaus": [{"tau_lo": repr(p.tau_lo), "tau_hi": repr(p.tau_hi),
                         "level": repr(p.level),
                         "level_rational": {"num": p.level_rational.numerator,
                                            "den": p.level_rational.denominator},
                         "n_samples": p.n_samples,
                         "certified": p.certified} for p in plats]}
    path = _out(args, "plateaus.json")
    atomic_write_json(path, obj)
    print(f"{len(plats)} plateaus -> {path}")
    return 0


def cmd_render(args):
    with open(args.artifact) as fh:
        text = fh.read()
    kind = args.kind
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None     # CSV artifact (staircase rows)
    if obj is None:
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            rows.append(tuple(float(v) for v in line.split(",")))
        if kind == "auto":
            kind = "staircase"
        svg = render_mod.render_staircase(rows)
    else:
        if kind == "auto":
            schema = obj.get("schema", "")
            for k in render_mod.RENDERERS:
                if k in schema:
                    kind = k
                    break
        if kind not in render_mod.RENDERERS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        svg = render_mod.RENDERERS[kind](obj)
    path = _out(args, f"{kind}.svg")
    atomic_write_text(path, svg)
    print(f"rendered {kind} -> {path}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="toruslock",
                                 description="rotation numbers, tongues and "
                                             "mode-locking certificates for "
                                             "forced circle maps")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("spec", help="map-spec JSON path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-o", "--out", default=None)

    p = sub.add_parser("rotnum", help="fibred rotation number estimate")
    common(p)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--n-max", type=int, default=100_000)
    p.add_argument("--theta-samples", type=int, default=1)
    p.set_defaults(fn=cmd_rotnum)

    p = sub.add_parser("tongue", help="tongue boundaries of the tau-shift family")
    common(p)
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--alphas", type=int, default=64)
    p.add_argument("--q-step", action="store_true",
                   help="use the q-step family of a rational-base spec")
    p.add_argument("--svg", default=None)
    p.set_defaults(fn=cmd_tongue)

    p = sub.add_parser("rationalize", help="replace the base by a convergent")
    common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n-theta", type=int, default=256)
    p.set_defaults(fn=cmd_rationalize)

    p = sub.add_parser("lock-fibres", help="make every q-step fibre map locked")
    common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n-theta", type=int, default=256)
    p.add_argument("--n-grid", type=int, default=None)
    p.add_argument("--save-field", default=None)
    p.set_defaults(fn=cmd_lock_fibres)

    for name, fn, extra in (("zeroset", cmd_zeroset, True),
                            ("curves", cmd_curves, True)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--columns", type=int, default=768)
        p.add_argument("--partition-limit", type=int, default=30_000)
        p.add_argument("--svg", default=None)
        p.set_defaults(fn=fn)

    p = sub.add_parser("certify", help="re-verify a stored certificate")
    p.add_argument("certificate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("pipeline", help="end-to-end mode-locking certificate")
    common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n-grid", type=int, default=None)
    p.add_argument("--min-margin", type=float, default=1e-7)
    p.add_argument("--stages", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("staircase", help="rotation-number sweep of a twist family")
    common(p)
    p.add_argument("--tau-min", type=float, default=-0.2)
    p.add_argument("--tau-max", type=float, default=0.2)
    p.add_argument("--samples", type=int, default=401)
    p.add_argument("--n-max", type=int, default=10_000)
    p.add_argument("--svg", default=None)
    p.set_defaults(fn=cmd_staircase)

    p = sub.add_parser("plateaus", help="plateau intervals of a staircase CSV")
    p.add_argument("staircase")
    p.add_argument("--level-tol", type=float, default=3e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(fn=cmd_plateaus)

    p = sub.add_parser("render", help="render an artifact JSON to SVG")
    p.add_argument("artifact")
    p.add_argument("--kind", default="auto",
                   choices=["auto"] + sorted(render_mod.RENDERERS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(fn=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"toruslock: usage error [{args.command}]: {exc}",
              file=_sys.stderr)
        return USAGE_EXIT
    except ToruslockError as exc:
        print(f"toruslock: stage error [{args.command}] "
              f"{type(exc).__name__}: {exc}", file=_sys.stderr)
        return STAGE_EXIT


if __name__ == "__main__":
    _sys.exit(main())
