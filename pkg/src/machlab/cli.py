"""Command line: ``machlab simulate|simulate-inc|rsw|decompose|ladder|check-invariants``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 an
acceptance threshold was missed (``ladder --assert`` and ``check-invariants``).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .config import EXPERIMENTS, ExperimentConfig
from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_THRESHOLD = 0, 2, 3, 4


def _load(args):
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    return cfg, args.out or cfg.output_dir


def cmd_simulate(args):
    cfg, out = _load(args)
    for traj in ex.simulate(cfg, out):
        print(f"eps={traj.epsilon:g}: {len(traj)} snapshots, dt={traj.dt:.3e}, written to {out}")
    return EXIT_OK


def cmd_simulate_inc(args):
    cfg, out = _load(args)
    ref = ex.simulate_inc(cfg, out)
    print(f"incompressible: {len(ref)} snapshots to t={ref[-1][0]:g}, written to {out}")
    return EXIT_OK


def cmd_rsw(args):
    cfg, out = _load(args)
    for traj in ex.simulate_rsw(cfg, out):
        print(f"rsw eps={traj.epsilon:g}: {len(traj)} snapshots, written to {out}")
    return EXIT_OK


def cmd_decompose(args):
    cfg, out = _load(args)
    _, summary = ex.decompose(cfg, out)
    print(f"fast fraction {summary['fast_fraction']:.4f}, "
          f"harmonic coefficients {summary['harmonic_coefficients']}")
    return EXIT_OK


def cmd_ladder(args):
    cfg, out = _load(args)
    report = ex.run_experiment(cfg, out, args.workers, args.experiment)
    print("epsilon      error/normalizer")
    for e, err in zip(report.epsilons, report.errors):
        print(f"{e:<12g} {err:.6e}")
    print(f"slope {report.fitted_slope:.4f}  fit residual {report.fit_residual:.4f}")
    if args.assert_ and not report.accepted():
        print("FAIL: slope < 0.8 or fit residual > 0.3", file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_check_invariants(args):
    cfg, _ = _load(args)
    ok = True
    for name, value, limit in ex.check_invariants(cfg, args.states):
        passed = value <= limit
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:<32} {value:.3e}  (<= {limit:.0e})")
    return EXIT_OK if ok else EXIT_THRESHOLD


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key = value file or run manifest")
    common.add_argument("--out", help="output directory (default: output_dir from the config)")
    common.add_argument("--workers", type=int, default=1, help="concurrent ladder points")
    common.add_argument("--quiet", action="store_true", help="only log warnings")

    parser = argparse.ArgumentParser(prog="machlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="compressible run").set_defaults(func=cmd_simulate)
    sub.add_parser("simulate-inc", parents=[common],
                   help="incompressible reference run").set_defaults(func=cmd_simulate_inc)
    sub.add_parser("rsw", parents=[common], help="rotating shallow water run").set_defaults(func=cmd_rsw)
    sub.add_parser("decompose", parents=[common],
                   help="slow/fast split of the initial state").set_defaults(func=cmd_decompose)
    lad = sub.add_parser("ladder", parents=[common], help="epsilon-ladder rate experiment")
    lad.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    lad.add_argument("--assert", dest="assert_", action="store_true",
                     help="exit with status 4 unless slope >= 0.8 and fit residual <= 0.3")
    lad.set_defaults(func=cmd_ladder)
    chk = sub.add_parser("check-invariants", parents=[common], help="projection algebra checks")
    chk.add_argument("--states", type=int, default=10, help="random states per check")
    chk.set_defaults(func=cmd_check_invariants)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
