"""Command line entry points.

  tradebench run --config cfg.json [--only agent=x,mode=strict] [--dry-run] [--plots]
  tradebench replay --dir out/
  tradebench report --dir out/ --format csv|json

Exit codes: 0 success, 1 partial cell failures, 2 configuration/data errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigInvalid, ConfigParse, TradebenchError
from .runner import emit_reports, enumerate_cells, load_config, replay, run_experiment

_ONLY_KEYS = {"agent", "mode", "market", "ticker", "window"}


def _parse_only(text: str) -> dict:
    out = {}
    for part in text.split(","):
        if not part:
            continue
        if "=" not in part:
            raise ConfigInvalid("--only", f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        if key not in _ONLY_KEYS:
            raise ConfigInvalid("--only", f"unknown filter key {key!r}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tradebench",
                                     description="Trading-agent audit harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--only", default="",
                       help="comma-separated cell filter, e.g. agent=x,mode=strict")
    run_p.add_argument("--dry-run", action="store_true",
                       help="list the cells that would run, then exit")
    run_p.add_argument("--plots", action="store_true",
                       help="also emit equity-curve PNGs")

    replay_p = sub.add_parser("replay", help="re-run a persisted experiment offline")
    replay_p.add_argument("--dir", required=True)

    report_p = sub.add_parser("report", help="re-emit reports from a persisted experiment")
    report_p.add_argument("--dir", required=True)
    report_p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def cmd_run(args) -> int:
    config = load_config(args.config)
    only = _parse_only(args.only)
    if args.dry_run:
        cells = enumerate_cells(config)
        if only:
            cells = [
                c for c in cells
                if all(getattr(c, {"agent": "agent_id", "window": "window_label"}.get(k, k)) == v
                       for k, v in only.items())
            ]
        for cell in cells:
            print(cell.run_name)
        print(f"{len(cells)} cells")
        return 0
    rs = run_experiment(config, only=only or None)
    if args.plots:
        emit_reports(rs, config.output_dir, formats=(), plots=True)
    for failure in rs.failures:
        print(f"FAILED {failure['cell']}: {failure['error']}", file=sys.stderr)
    print(f"{len(rs.runs)} cells completed, {len(rs.failures)} failed "
          f"-> {config.output_dir}")
    if not rs.runs:
        return 2
    return 1 if rs.failures else 0


def cmd_replay(args) -> int:
    rs = replay(args.dir)
    for name in rs.checksum_mismatches:
        print(f"CHECKSUM MISMATCH {name}", file=sys.stderr)
    print(json.dumps(rs.to_json(), sort_keys=True, indent=1))
    return 1 if rs.checksum_mismatches else 0


def cmd_report(args) -> int:
    rs = replay(args.dir)
    out_dir = Path(args.dir)
    emit_reports(rs, out_dir, formats=(args.format,))
    name = "aggregate.csv" if args.format == "csv" else "reports.json"
    print(str(out_dir / name))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "report":
            return cmd_report(args)
    except (ConfigParse, ConfigInvalid) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except TradebenchError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
