"""Command line: ``fosls study-h | study-p | check | dump-mesh``.

Exit codes: 0 success, 2 rate or invariant threshold violated, 1 error.
"""

import argparse
import os
import sys

from .harness import StudyConfig, emit_outputs, run_h_study, run_p_study
from .mesh import make_mesh

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


def _levels(text):
    text = text.strip()
    if ":" in text:
        a, b = text.split(":")
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(v) for v in text.split(",") if v)


def _common(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--domain", choices=("square", "disk"))
    p.add_argument("--family", type=str.upper, choices=("RT", "BDM"))
    p.add_argument("--ps", type=int, dest="p_s")
    p.add_argument("--pv", type=int, dest="p_v")
    p.add_argument("--case")
    p.add_argument("--out")
    p.add_argument("--tol", type=float, help="allowed shortfall of fitted vs predicted slope")
    p.add_argument("--method", choices=("direct_cholesky", "pcg"))
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--stem", default=None, help="output file stem")


def build_parser():
    ap = argparse.ArgumentParser(prog="fosls", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    h = sub.add_parser("study-h", help="h-version convergence study")
    _common(h)
    h.add_argument("--levels", type=_levels, help="e.g. 0:4 or 0,1,2,3")
    pp = sub.add_parser("study-p", help="p-version study (p_s = p_v = p) on a fixed mesh")
    _common(pp)
    pp.add_argument("--pmin", type=int)
    pp.add_argument("--pmax", type=int)
    pp.add_argument("--level", type=int, help="fixed mesh level")
    c = sub.add_parser("check", help="run the structural invariant suites")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threads", type=int, default=1)
    d = sub.add_parser("dump-mesh", help="write a mesh in plain text")
    d.add_argument("--domain", choices=("square", "disk"), default="disk")
    d.add_argument("--levels", type=int, default=0, help="refinement level")
    d.add_argument("--out", required=True)
    return ap


def _config(args, mode):
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    keys = ("domain", "family", "p_s", "p_v", "case", "out", "tol", "method", "seed", "threads",
            "levels", "pmin", "pmax", "level")
    over = {k: getattr(args, k, None) for k in keys}
    over["mode"] = mode
    return StudyConfig.from_text(text, **over)


def _study(args, mode):
    cfg = _config(args, mode)
    run = run_h_study if mode == "h" else run_p_study
    table = run(cfg, log=lambda m: print(m, file=sys.stderr))
    stem = args.stem or f"{cfg.domain}_{cfg.case}_{cfg.family}_{mode}" + (
        f"_ps{cfg.p_s}_pv{cfg.p_v}" if mode == "h" else ""
    )
    paths = emit_outputs(table, cfg.out, stem)
    for s in table.summary():
        flag = "" if not s["checked"] else ("  ok" if s["passed"] else "  VIOLATION")
        print(f"{s['norm']:<12} fit {s['slope_fit']:+.3f} (R2 {s['r2']:.3f})  predicted {s['slope_pred']:+.2f}"
              f"  best {s['slope_best']:+.2f}{flag}")
    print("wrote " + ", ".join(os.path.basename(p) for p in paths) + f" to {cfg.out}")
    return EXIT_VIOLATION if table.violations() else EXIT_OK


def _check(args):
    from threadpoolctl import threadpool_limits

    from .checks import run_all

    with threadpool_limits(limits=args.threads):
        results = run_all(args.seed, log=print)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def _dump(args):
    mesh = make_mesh(args.domain, args.levels)
    mesh.dump(args.out)
    print(f"{args.domain} level {args.levels}: nv={mesh.nv} nt={mesh.nt} ne={mesh.ne} h={mesh.h:.4f} -> {args.out}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "study-h":
            return _study(args, "h")
        if args.command == "study-p":
            return _study(args, "p")
        if args.command == "check":
            return _check(args)
        return _dump(args)
    except Exception as exc:  # reported, not raised: the exit code carries the failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
