import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from distributed_safe_bo.errors import SafeBoError
from distributed_safe_bo.experiments.config import RunConfig, load_config, parse_override
from distributed_safe_bo.experiments.runner import run_ablation_suite, run_experiment, sample_rkhs, validate_kernel
from distributed_safe_bo.orchestrator import VARIANTS

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _config(args: argparse.Namespace, experiment: str, flags: Dict[str, Any]) -> RunConfig:
    overrides: Dict[str, Any] = {}
    for assignment in args.set or []:
        overrides.update(parse_override(assignment))
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides.update({key: value for key, value in flags.items() if value is not None})
    return load_config(args.config, experiment=experiment, overrides=overrides)


def cmd_run_toy(args: argparse.Namespace) -> int:
    experiment = "toy8" if args.agents == 8 else "toy4"
    config = _config(args, experiment, {"variant": args.variant, "iterations": args.T})
    result = run_experiment(config, args.out)
    print(f"best reward {result.best_reward!r} at t={result.best_index}, {result.violation_count} violations")
    return 0


def cmd_run_platooning(args: argparse.Namespace) -> int:
    config = _config(args, "platooning", {"iterations": args.T})
    result = run_experiment(config, args.out)
    gains = ", ".join(repr(float(g)) for g in result.best_param.ravel())
    print(f"best gains [{gains}] with reward {result.best_reward!r}, {result.violation_count} violations")
    return 0


def cmd_run_ablation(args: argparse.Namespace) -> int:
    experiment = "toy4" if args.agents == 4 else "toy8"
    config = _config(args, experiment, {"iterations": args.T})
    summary = run_ablation_suite(config, args.seeds, variants=args.variants or VARIANTS, out_dir=args.out,
                                 jobs=args.jobs)
    medians = summary[summary["row"] == "median"]
    for _, row in medians.iterrows():
        print(f"{row['variant']}: median best reward {row['best_reward']!r}")
    return 0


def cmd_sample_rkhs(args: argparse.Namespace) -> int:
    config = _config(args, "sample_rkhs", {"sample.kind": args.kind})
    df = sample_rkhs(config, args.out)
    print(f"{df.shape[1] - 1} columns, {len(df)} rows")
    return 0


def cmd_validate_kernel(args: argparse.Namespace) -> int:
    config = _config(args, "validate_kernel", {"validate.trials": args.trials})
    df = validate_kernel(config, args.out)
    failed = int((~df["ok"]).sum())
    print(f"{len(df) - failed} of {len(df)} Gram matrices positive semi-definite")
    return 1 if failed else 0


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="JSON configuration file")
    parser.add_argument("--out", type=str, default="results", help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration key, e.g. --set reward.quantile=0.3 (repeatable)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safe-mas-bo",
                                     description="Safe Bayesian optimization for distributed multi-agent systems")
    sub = parser.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("run-toy", help="run the synthetic multi-agent experiment")
    _common(toy)
    toy.add_argument("--agents", type=int, choices=[4, 8], default=4)
    toy.add_argument("--variant", choices=VARIANTS, default=None)
    toy.add_argument("--T", type=int, default=None, help="number of iterations")
    toy.set_defaults(func=cmd_run_toy)

    platoon = sub.add_parser("run-platooning", help="tune the P-controller gains of a vehicle platoon")
    _common(platoon)
    platoon.add_argument("--T", type=int, default=None, help="number of iterations")
    platoon.set_defaults(func=cmd_run_platooning)

    ablation = sub.add_parser("run-ablation", help="run all variants over several seeds and summarize")
    _common(ablation)
    ablation.add_argument("--agents", type=int, choices=[4, 8], default=8)
    ablation.add_argument("--seeds", type=int, default=10, help="number of seeds K")
    ablation.add_argument("--variants", nargs="+", choices=VARIANTS, default=None)
    ablation.add_argument("--jobs", type=int, default=1, help="parallel (variant, seed) cells")
    ablation.add_argument("--T", type=int, default=None, help="number of iterations")
    ablation.set_defaults(func=cmd_run_ablation)

    samples = sub.add_parser("sample-rkhs", help="tabulate random pre-RKHS functions")
    _common(samples)
    samples.add_argument("--kind", choices=["temporal", "reward"], default=None)
    samples.set_defaults(func=cmd_sample_rkhs)

    validate = sub.add_parser("validate-kernel", help="check Gram matrices for positive semi-definiteness")
    _common(validate)
    validate.add_argument("--trials", type=int, default=None)
    validate.set_defaults(func=cmd_validate_kernel)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)
    try:
        return args.func(args)
    except (SafeBoError, OSError) as e:
        message = e.message if isinstance(e, SafeBoError) else str(e)
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
