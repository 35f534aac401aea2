"""Wall-clock time of one nested LOAOCV run per classifier on the default cohort."""

from __future__ import annotations

import argparse
import time

from accelstate.evaluation import GridSpec, outer_loaocv
from accelstate.pipeline import AnimalRecording, cohort_dataset
from accelstate.synth import SynthProfile, generate_cohort


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classifiers", nargs="+", default=["rf", "gb", "svm"])
    ap.add_argument("--grid", choices=("ci", "paper"), default="paper")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cohort = generate_cohort(SynthProfile(seed=args.seed))
    data = cohort_dataset([AnimalRecording(a.series, a.events, {}) for a in cohort.animals], 9)
    print(f"{len(data)} windows x {data.X.shape[1]} features, {len(data.animals)} animals")
    for kind in args.classifiers:
        grid = GridSpec.ci(kind) if args.grid == "ci" else GridSpec.paper(kind)
        t0 = time.perf_counter()
        report = outer_loaocv(data, kind, grid, 5, args.seed, args.workers)
        elapsed = time.perf_counter() - t0
        f1 = report.summary["metrics"]["f1"]["median"]
        print(f"{kind}: {len(grid.cells())} cells, {elapsed:.1f} s, median F1 {f1:.3f}")


if __name__ == "__main__":
    main()
