"""Full sweep over classifiers, window sizes {1,3,5,7,9} and k {5,...,25} on a synthetic cohort.

Thin wrapper over ``accelstate synth`` and ``accelstate evaluate --paper-mode``;
the per-combination table lands in ``<out>/sweep.csv``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from accelstate.cli import dispatch


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--grid-preset", choices=("ci", "paper"), default="ci")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--n-animals", type=int, default=16)
    args = ap.parse_args()

    cohort = os.path.join(args.out, "cohort")
    if dispatch(["synth", "--out", cohort, "--n-animals", str(args.n_animals), "--seed", str(args.seed), "--no-drifted"]):
        sys.exit(1)
    cfg = {"manifest": os.path.abspath(os.path.join(cohort, "manifest.json")), "grid_preset": args.grid_preset, "seed": args.seed}
    cfg_path = os.path.join(args.out, "sweep_config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2)
    code = dispatch(["evaluate", "--config", cfg_path, "--paper-mode", "--workers", str(args.workers), "--out", args.out])
    sys.exit(code)


if __name__ == "__main__":
    main()
