"""Command-line entry point.

    spinburst run --preset fig3 --outdir runs/fig3 --plot
    spinburst run --config scenario.yaml --seed 7 --jobs 4
    spinburst presets
    spinburst show fig2

Exit codes: 0 success, 2 configuration or validation problem, 3 numerical
failure inside an engine.  A scenario that fails to validate writes nothing.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import dump_scenario, load_scenario
from .errors import SimulationError, ValidationError
from .presets import PRESETS, get_preset
from .runner import run_scenario

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinburst",
        description="Cavity-mediated superradiance simulations: scenarios in, data files out.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario and write its artifacts")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="scenario YAML file")
    source.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    run.add_argument("--outdir", type=Path, help="artifact directory (default: runs/<name>)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="sweep parallelism (default: available cores)",
    )
    run.add_argument("--plot", action="store_true", help="render SVG figures from the data files")

    sub.add_parser("presets", help="list built-in scenarios")

    show = sub.add_parser("show", help="print a built-in scenario as YAML")
    show.add_argument("name", choices=sorted(PRESETS))

    return parser


def _cmd_run(args) -> int:
    if args.config is not None:
        try:
            scenario = load_scenario(args.config)
        except FileNotFoundError:
            print(f"error: config file not found: {args.config}", file=sys.stderr)
            return EXIT_CONFIG
        except ValidationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        default_name = args.config.stem
    else:
        scenario = get_preset(args.preset).scenario
        default_name = args.preset

    outdir = args.outdir
    if outdir is None:
        outdir = Path(scenario.output) if scenario.output else Path("runs") / default_name

    try:
        result = run_scenario(
            scenario, outdir, seed=args.seed, jobs=args.jobs, plot=args.plot
        )
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    print(f"wrote {len(result.files)} files to {result.outdir}")
    fast = result.validation.get("fast_cavity", {})
    if not fast.get("passed", True):
        print(
            "warning: fast-cavity margins below 1 "
            f"(smallest {fast.get('smallest_margin'):.3g}); "
            "adiabatic results may be unreliable"
        )
    for key in sorted(result.metrics):
        value = result.metrics[key]
        if isinstance(value, float):
            print(f"  {key}: {value:.6g}")
        elif isinstance(value, list):
            print(f"  {key}: [" + ", ".join(f"{v:.6g}" for v in value) + "]")
        else:
            print(f"  {key}: {value}")
    return EXIT_OK


def _cmd_presets() -> int:
    width = max(len(name) for name in PRESETS)
    for name in PRESETS:  # insertion order is the curated order
        print(f"{name:<{width}}  {PRESETS[name].description}")
    return EXIT_OK


def _cmd_show(name: str) -> int:
    print(dump_scenario(get_preset(name).scenario), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "presets":
        return _cmd_presets()
    return _cmd_show(args.name)


if __name__ == "__main__":
    raise SystemExit(main())
