"""Command-line scenario runner and transcript inspector.

Exit codes: 0 clean run, 1 invariant violation or failed step, 2 scenario
parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ScenarioError
from .scenario import RunResult, ScenarioConfig, run_scenario, stats_from_transcript


def _write_logs(result: RunResult, name: str, log_dir: str | None) -> None:
    if log_dir is None:
        return
    directory = Path(log_dir)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}.transcript.txt").write_text(result.transcript)


def _print_summary(name: str, result: RunResult) -> None:
    stats = result.stats
    print(f"{name}: {'PASS' if result.exit_code == 0 else 'FAIL'} "
          f"(tokened={stats['tokened']} vaccinated={stats['vaccinated']} "
          f"vp={stats['vp_issued']} open={stats['open_instances']})")
    for v in result.violations:
        print(f"  violation: {v}")


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = ScenarioConfig.load(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    result = run_scenario(config, seed=args.seed, strict=args.strict)
    _write_logs(result, config.name, args.log_dir)
    if args.verbose:
        print(result.transcript, end="")
    _print_summary(config.name, result)
    return result.exit_code


def _cmd_batch(args: argparse.Namespace) -> int:
    directory = Path(args.directory)
    files = sorted(directory.glob("*.json"))
    if not files:
        print(f"no scenario files in {directory}", file=sys.stderr)
        return 2
    worst = 0
    for path in files:
        try:
            config = ScenarioConfig.load(path)
        except ScenarioError as exc:
            print(f"{path.name}: PARSE ERROR ({exc})")
            worst = max(worst, 2)
            continue
        result = run_scenario(config, seed=args.seed, strict=args.strict)
        _write_logs(result, config.name, args.log_dir)
        _print_summary(config.name, result)
        worst = max(worst, result.exit_code)
    return worst


def _cmd_stats(args: argparse.Namespace) -> int:
    try:
        text = Path(args.transcript).read_text()
        stats = stats_from_transcript(text)
    except (OSError, ScenarioError) as exc:
        print(f"cannot read stats: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaxpass",
        description="Run vaccine-passport protocol scenarios on the "
                    "simulated chain.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario file")
    run_p.add_argument("scenario")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    run_p.add_argument("--log-dir", default=None,
                       help="directory for transcripts")
    run_p.add_argument("--strict", action="store_true",
                       help="open instances at scenario end are fatal")
    run_p.add_argument("--verbose", action="store_true",
                       help="print the full transcript")
    run_p.set_defaults(func=_cmd_run)

    batch_p = sub.add_parser("batch", help="run every *.json in a directory")
    batch_p.add_argument("directory")
    batch_p.add_argument("--seed", type=int, default=None)
    batch_p.add_argument("--log-dir", default=None)
    batch_p.add_argument("--strict", action="store_true")
    batch_p.set_defaults(func=_cmd_batch)

    stats_p = sub.add_parser("stats", help="print the stats of a transcript")
    stats_p.add_argument("transcript")
    stats_p.set_defaults(func=_cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
