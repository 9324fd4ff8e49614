"""Command line entry point: ``smoothdt <subcommand> [flags]``.

Exit status is 0 on success, 1 on invalid input and 2 when the share of
FAIL outcomes in a learning campaign exceeds ``--max-fail-rate``.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys

from . import harness
from .fourier import write_coeff_csv
from .harness import ConfigError, ExperimentConfig
from .tree import TreeError

log = logging.getLogger("smoothdt")


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothdt",
        description="Learn decision trees under randomly perturbed product distributions "
                    "and check the supporting probability bounds by brute force.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=16, help="number of variables")
    common.add_argument("--c", type=float, default=0.1, help="boundedness margin")
    common.add_argument("--m", type=int, default=100_000,
                        help="examples per trial (Monte-Carlo points for sz-check)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    common.add_argument("--eval", default=None, help="exact or mc:N (default: exact when n <= 20)")
    common.add_argument("--tree", default="random:8", help="random:<size> | parity:<k> | const:<+1|-1> | file:<path>")
    common.add_argument("--mu", default="random", help="zero | random | uniform:<lo>:<hi> | file:<path>")
    common.add_argument("--mu-convention", choices=("pm1", "01"), default="pm1",
                        help="interpret mean inputs as +-1 means or {0,1} biases")
    common.add_argument("--eps", type=float, default=0.1)
    common.add_argument("--delta", type=float, default=0.1)
    common.add_argument("--depth", default="auto", help="auto | log2s | <int>")
    common.add_argument("--threshold", type=float, default=None)
    common.add_argument("--mu-source", choices=("exact", "estimated"), default="exact")
    common.add_argument("--max-fail-rate", type=float, default=0.0)
    common.add_argument("--timing", action="store_true", help="add a wall_time column")
    common.add_argument("--sz-degrees", type=_int_list, default=[1, 2, 3, 4, 5])
    common.add_argument("--sz-eps", type=_float_list, default=[1e-1, 1e-2, 1e-3, 1e-4])
    common.add_argument("--alphas", type=_float_list, default=[0.0, 1e-8, 1e-6, 1e-4, 1e-2])
    common.add_argument("--beta", type=float, default=0.5)
    common.add_argument("--degree-cap", type=int, default=3)
    common.add_argument("--form", choices=("bar", "hat"), default="hat")
    common.add_argument("-v", "--verbose", action="store_true")

    helps = {
        "learn": "run the learner on seeded trials and report errors",
        "sz-check": "Monte-Carlo check of small-product probabilities",
        "propagation-check": "frequency of vanishing sub-coefficients over random shifts",
        "coeff-recovery": "compare the learned frontier with exact heavy coefficients",
        "oracle-coeffs": "print the exact coefficient table of a tree",
    }
    for kind in harness.KINDS:
        sub.add_parser(kind, parents=[common], help=helps[kind])
    return parser


def config_from_args(args) -> ExperimentConfig:
    names = {f for f in ExperimentConfig.__dataclass_fields__}
    values = {k: v for k, v in vars(args).items() if k in names}
    return ExperimentConfig(**values)


def run(config: ExperimentConfig) -> int:
    config.validate()
    if config.kind in ("learn", "coeff-recovery"):
        if config.kind == "learn":
            records = harness.run_learn_experiment(config)
        else:
            records = harness.run_coeff_recovery(config)
        harness.write_outputs(config, harness.records_csv(records, config.timing))
        rate = harness.fail_rate(records)
        log.info("%d trials, FAIL rate %.3f", len(records), rate)
        return 2 if rate > config.max_fail_rate else 0
    if config.kind == "sz-check":
        rows = harness.run_sz_check(config)
    elif config.kind == "propagation-check":
        rows = harness.run_propagation_check(config)
    else:
        _, dist, poly = harness.oracle_coefficients(config)
        buf = io.StringIO()
        write_coeff_csv(poly, buf)
        harness.write_outputs(config, buf.getvalue())
        return 0
    harness.write_outputs(config, harness.report_csv(rows))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return run(config_from_args(args))
    except (ConfigError, TreeError, ValueError, OSError) as exc:
        print(f"smoothdt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
