"""Command-line scenario runner.

    pacersim run <scenario.json> [--out DIR] [--seed N] [--reps N]
    pacersim run --preset NAME [--out DIR] [--seed N] [--reps N]
    pacersim list-presets
    pacersim validate <scenario.json>

Exit codes: 0 success, 2 validation error, 1 runtime error.  The default
output directory comes from $PACERSIM_OUT when --out is not given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import default_output_dir, run_scenario
from .scenario import (
    ScenarioConfig,
    ScenarioValidationError,
    list_presets,
    preset_config,
)


def _load_config(args) -> ScenarioConfig:
    if args.preset:
        config = preset_config(args.preset)
    elif args.scenario:
        config = ScenarioConfig.from_json_file(args.scenario)
    else:
        raise ScenarioValidationError("provide a scenario file or --preset NAME")
    if args.seed is not None:
        config.seed = args.seed
    if args.reps is not None:
        config.repetitions = args.reps
        config.validate()
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pacersim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario's repetitions and write CSVs")
    run_p.add_argument("scenario", nargs="?", help="path to a scenario JSON file")
    run_p.add_argument("--preset", help="use a shipped preset instead of a file")
    run_p.add_argument("--out", type=Path, default=None, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the base seed")
    run_p.add_argument("--reps", type=int, default=None, help="override the repetition count")

    sub.add_parser("list-presets", help="print available presets")

    val_p = sub.add_parser("validate", help="check a scenario file without running it")
    val_p.add_argument("scenario", help="path to a scenario JSON file")

    args = parser.parse_args(argv)

    if args.command == "list-presets":
        for name, description in list_presets():
            print(f"{name:28s} {description}")
        return 0

    if args.command == "validate":
        try:
            config = ScenarioConfig.from_json_file(args.scenario)
        except FileNotFoundError:
            print(f"error: scenario file not found: {args.scenario}", file=sys.stderr)
            return 2
        except ScenarioValidationError as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return 2
        print(f"ok: {args.scenario} (hash {config.scenario_hash()})")
        return 0

    # run
    try:
        config = _load_config(args)
    except FileNotFoundError:
        print(f"error: scenario file not found: {args.scenario}", file=sys.stderr)
        return 2
    except ScenarioValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out if args.out is not None else default_output_dir()
    try:
        manifest = run_scenario(config, out_dir)
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.seeds)} run(s) to {out_dir} (scenario hash {manifest.scenario_hash})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
