"""Run the four rate experiments from configs/ and print a slope table."""

import argparse
import time
from pathlib import Path

from machlab.config import ExperimentConfig
from machlab.experiments import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="parent output directory")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    rows = []
    for name in ("strong", "weak", "fastslow", "slowres"):
        cfg = ExperimentConfig.from_file(ROOT / "configs" / f"{name}.ini")
        start = time.perf_counter()
        rep = run_experiment(cfg, Path(args.out) / name, args.workers)
        rows.append((name, rep.fitted_slope, rep.fit_residual, time.perf_counter() - start))

    print(f"{'experiment':<10} {'slope':>7} {'residual':>9} {'seconds':>8}")
    for name, slope, resid, sec in rows:
        print(f"{name:<10} {slope:7.3f} {resid:9.3f} {sec:8.1f}")


if __name__ == "__main__":
    main()
