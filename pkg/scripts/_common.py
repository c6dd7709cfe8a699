"""Shared runner for the study scripts: run, print the rate summary, write outputs."""

import argparse
import os
import sys

from fosls.harness import emit_outputs, run_h_study, run_p_study

RESULTS = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "results")


def run(configs, description):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out", default=os.path.normpath(RESULTS))
    args = ap.parse_args()
    bad = 0
    for stem, cfg in configs:
        run_study = run_h_study if cfg.mode == "h" else run_p_study
        table = run_study(cfg, log=lambda m: print("  " + m))
        emit_outputs(table, args.out, stem)
        print(f"{stem}:")
        for s in table.summary():
            mark = "" if not s["checked"] else ("ok" if s["passed"] else "BELOW PREDICTION")
            print(f"  {s['norm']:<12} fit {s['slope_fit']:+.2f}  predicted {s['slope_pred']:+.2f}"
                  f"  best {s['slope_best']:+.2f}  {mark}")
        bad += len(table.violations())
    print(f"outputs in {args.out}")
    return 2 if bad else 0


if __name__ == "__main__":
    sys.exit("run one of the study scripts instead")
