"""Command line: preprocess, plan, validate, bench.

Exit codes: 0 success, 1 infeasible problem or failed validation,
2 unreadable input, mismatched cache or failed offline build.
The log level comes from the PIVOTPLAN_LOG_LEVEL environment variable.
"""

import argparse
import json
import logging
import os
import sys

from .bench import load_bench_config, load_corpus, run_bench, write_csv
from .errors import ModelMismatch, NoPlan, PivotPlanError
from .config import PlannerConfig
from .geometry import load_mesh
from .graph import build_offline, plan_online
from .planner import ObjectModel
from .storage import load_config, load_offline, load_plan, load_problem, mesh_hash, save_offline, save_plan, \
    save_report
from .validate import replay

log = logging.getLogger("pivotplan")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _input(fn, *args):
    """Run a loader, turning I/O and parse trouble into InputError."""
    try:
        return fn(*args)
    except (OSError, PivotPlanError, ValueError) as exc:
        raise InputError(str(exc)) from None


def cmd_preprocess(args):
    config = _input(load_config, args.config) if args.config else PlannerConfig()
    mesh = _input(load_mesh, args.mesh)
    h = mesh_hash(mesh)
    off = _input(build_offline, mesh, config, h)
    _input(save_offline, args.out, off)
    sizes = [len(s) for s in off.placement_grasps]
    print(f"grasps {len(off.grasps)}  placements {off.n_placements}  edges {int(off.adjacency.sum()) // 2}  "
          f"grasps per placement {sizes}")
    print(f"wrote {args.out} (mesh {h[:12]})")
    return EXIT_OK


def cmd_plan(args):
    off = _input(load_offline, args.cache)
    spec = _input(load_problem, args.spec)
    if spec.mesh:
        mesh = _input(load_mesh, spec.mesh)
        if mesh_hash(mesh) != off.mesh_hash:
            raise InputError(f"cache {args.cache} was built for a different mesh than {spec.mesh}")
    config = _input(spec.config, off.config)
    if config.d_h != off.config.d_h:
        off.model = ObjectModel.from_mesh(off.mesh, config.d_h)
    try:
        plan = plan_online(spec.initial, spec.final, off, config, config.limits, max_searches=args.max_searches)
    except NoPlan as exc:
        print(f"infeasible: {exc}")
        print(json.dumps(exc.trace, indent=1), file=sys.stderr)
        return EXIT_FAIL
    _input(save_plan, args.out, plan, off.mesh_hash, config)
    print(f"segments {len(plan.segments)}  grasps {plan.grasp_ids}  searches {plan.searches}  "
          f"duration {plan.duration():.2f} s")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_validate(args):
    off = _input(load_offline, args.cache)
    plan, h, config = _input(load_plan, args.plan)
    if h and h != off.mesh_hash:
        raise InputError(f"plan {args.plan} was made for a different mesh than cache {args.cache}")
    config = config or off.config
    if config.d_h != off.config.d_h:
        off.model = ObjectModel.from_mesh(off.mesh, config.d_h)
    try:
        report = replay(plan, off.model, off.grasps, config, config.limits)
    except ModelMismatch as exc:
        raise InputError(str(exc)) from None
    if args.out:
        _input(save_report, args.out, report)
    if report.passed:
        print(f"pass ({sum(len(s.steps) for s in plan.segments)} steps)")
        return EXIT_OK
    seg, step, reason = report.first_failure
    print(f"fail: segment {seg} step {step} {reason}; reasons {report.reasons()}")
    return EXIT_FAIL


def cmd_bench(args):
    bench = _input(load_bench_config, args.config)
    meshes = _input(load_corpus, args.corpus)

    def progress(row):
        log.info("%s theta %g %s: %d/%d solved", row["object"], row["theta_max_deg"], row["method"],
                 row["solved"], row["problems"])

    try:
        rows = run_bench(meshes, bench, progress)
    except (PivotPlanError, RuntimeError) as exc:
        raise InputError(str(exc)) from None
    _input(write_csv, rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="pivotplan", description="Reorient objects on a table by pivoting and "
                                                               "rolling them in a two-finger grasp.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="offline grasps, placements and graph for one mesh")
    p.add_argument("--mesh", required=True, help="OBJ file (v/f lines, optional 'com x y z')")
    p.add_argument("--config", help="planner config JSON")
    p.add_argument("--out", required=True, help="offline cache to write")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("plan", help="plan a reorientation")
    p.add_argument("--spec", required=True, help="problem spec JSON")
    p.add_argument("--cache", required=True, help="offline cache from 'preprocess'")
    p.add_argument("--out", required=True, help="plan file to write")
    p.add_argument("--max-searches", type=int, default=None, help="cap on graph searches")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="replay a plan and check it")
    p.add_argument("--plan", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--out", help="optional JSON report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="tilt-limit sweep over a mesh corpus")
    p.add_argument("--config", required=True, help="bench config JSON")
    p.add_argument("--corpus", required=True, help="directory of OBJ meshes")
    p.add_argument("--out", required=True, help="CSV to write")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    level = os.environ.get("PIVOTPLAN_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
