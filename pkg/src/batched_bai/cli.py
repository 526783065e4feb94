"""Command-line interface: ``oracle``, ``run`` and ``bench`` subcommands.

Examples::

    batched-bai oracle --family bernoulli --means 0.5,0.3,0.2
    batched-bai run --algo tri --instance normal10 --delta 1e-6 --trials 1000 --out results/
    batched-bai run --config experiment.json --trials 50
    batched-bai bench --trials 100 --out bench/

A ``--config`` file is a JSON object whose keys are the fields of
:class:`~batched_bai.harness.ExperimentConfig`; flags given on the command
line override the file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError
from .exp_family import BanditInstance
from .harness import (
    BENCH_DELTAS,
    DEFAULT_BASE_SEED,
    PRESETS,
    SUMMARY_FIELDS,
    ExperimentConfig,
    format_summary,
    run_experiment,
    write_csv,
)
from .oracle import solve_allocation

log = logging.getLogger("batched_bai")

# command-line flag -> ExperimentConfig field
_RUN_FLAGS = {
    "algo": "algorithm",
    "instance": "instance_spec",
    "delta": "deltas",
    "trials": "trials",
    "seed": "base_seed",
    "parallel": "parallelism",
    "out": "output_path",
    "alpha": "alpha",
    "family": "family",
    "preset": "preset",
    "force_elim": "force_elim",
    "pull_cap": "pull_cap",
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def load_config(path: str | Path) -> dict:
    """Read a JSON config file into a dict of ExperimentConfig fields."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must contain a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return data


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the optional config file with explicit flags (flags win)."""
    values = load_config(args.config) if args.config else {}
    for flag, name in _RUN_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            values[name] = value
    if "algorithm" not in values:
        raise ConfigurationError("no algorithm given: pass --algo or set 'algorithm' in the config file")
    if isinstance(values.get("deltas"), (int, float)):
        values["deltas"] = [values["deltas"]]
    return ExperimentConfig(**values)


def cmd_oracle(args: argparse.Namespace) -> int:
    instance = BanditInstance(args.family, args.means)
    sol = solve_allocation(instance)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    if not args.no_header:
        writer.writerow([f"w{i}" for i in range(instance.n)] + ["T_star", "y_star"])
    writer.writerow([repr(float(w)) for w in sol.weights] + [repr(sol.characteristic_time), repr(sol.multiplier)])
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    summaries = run_experiment(config)
    for s in summaries:
        print(format_summary(s))
    print(f"wrote {Path(config.output_path) / 'trials.csv'} and summary.csv")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    out = Path(args.out)
    rows = []
    for instance in args.instances.split(","):
        for algo in args.algos.split(","):
            config = ExperimentConfig(
                algorithm=algo,
                instance_spec=instance,
                deltas=args.deltas,
                trials=args.trials,
                base_seed=args.seed,
                parallelism=args.parallel,
                output_path=str(out / f"{algo}_{instance}"),
                alpha=args.alpha,
                preset=args.preset,
            )
            for s in run_experiment(config):
                print(format_summary(s), flush=True)
                rows.append(s.row())
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
    print(f"wrote {out / 'summary.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batched-bai", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="print w*, T* and y* for a mean vector as CSV")
    p.add_argument("--family", default="bernoulli", help="bernoulli or gaussian")
    p.add_argument("--means", required=True, type=_float_list, help="comma-separated arm means")
    p.add_argument("--no-header", action="store_true", help="omit the CSV header line")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="run one experiment and write trials.csv / summary.csv")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--algo", help="tri, opt or tas")
    p.add_argument("--instance", help="uniform10, normal10 or means=0.5,0.4,...")
    p.add_argument("--delta", type=_float_list, help="confidence level(s), comma-separated")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="base seed (instance and trial streams)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--parallel", type=int, help="worker processes")
    p.add_argument("--family", help="reward family for explicit instances")
    p.add_argument("--preset", choices=PRESETS, help="batch-length parameter preset")
    p.add_argument("--pull-cap", type=int, help="per-trial pull budget before aborting")
    p.add_argument("--force-elim", action="store_true", default=None,
                   help="drop the true best arm in the first elimination round (opt only)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run the full algorithm x instance x delta grid")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED)
    p.add_argument("--alpha", type=float, default=1.001)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--preset", choices=PRESETS, default="experimental")
    p.add_argument("--algos", default="tri,opt,tas")
    p.add_argument("--instances", default="uniform10,normal10")
    p.add_argument("--deltas", type=_float_list, default=list(BENCH_DELTAS))
    p.add_argument("--out", default="bench")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, OSError) as exc:
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
