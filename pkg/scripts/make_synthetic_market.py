#!/usr/bin/env python3
"""Generate a synthetic random-walk market (bars, news, fundamentals) plus a
ready-to-run experiment config.

Example:
    python3 scripts/make_synthetic_market.py --out data/synthetic --seed 0
    tradebench run --config data/synthetic/config.json
"""

import argparse
import datetime as dt
import json
from pathlib import Path

import numpy as np


def write_market(out: Path, tickers: list[str], n_days: int, seed: int,
                 start: dt.date) -> None:
    rng = np.random.default_rng(seed)
    day = lambda i: start + dt.timedelta(days=i)  # noqa: E731

    with (out / "bars.csv").open("w") as f:
        f.write("ticker,date,open,high,low,close,volume\n")
        for ticker in tickers:
            close = 100.0 * (1 + rng.uniform(-0.2, 0.2))
            for i in range(n_days):
                o = close
                close = max(1.0, close * (1 + rng.normal(0, 0.02)))
                hi = max(o, close) * (1 + abs(rng.normal(0, 0.003)))
                lo = min(o, close) * (1 - abs(rng.normal(0, 0.003)))
                vol = int(rng.integers(500, 5000))
                f.write(f"{ticker},{day(i).isoformat()},{o:.4f},{hi:.4f},"
                        f"{lo:.4f},{close:.4f},{vol}\n")

    with (out / "news.jsonl").open("w") as f:
        for ticker in tickers:
            for i in range(0, n_days, 7):
                f.write(json.dumps({
                    "ticker": ticker,
                    "available_at": f"{day(i).isoformat()}T14:30:00+00:00",
                    "headline": f"{ticker} weekly update {i}",
                    "summary": "synthetic market commentary",
                    "sentiment": float(rng.uniform(-1, 1)),
                    "key_events": ["synthetic"],
                }) + "\n")

    (out / "fundamentals.json").write_text(json.dumps([
        {"ticker": ticker,
         "published_on": (start - dt.timedelta(days=10)).isoformat(),
         "sections": [{"name": "overview", "text": "synthetic filing"}]}
        for ticker in tickers
    ], indent=1))


def write_config(out: Path, tickers: list[str], start: dt.date) -> None:
    day = lambda i: (start + dt.timedelta(days=i)).isoformat()  # noqa: E731
    config = {
        "markets": [{
            "name": "synthetic",
            "bars": "bars.csv",
            "news": "news.jsonl",
            "fundamentals": "fundamentals.json",
            "tickers": tickers,
            "windows": [
                {"label": "short1", "kind": "short_tactical",
                 "start": day(0), "length": 15},
                {"label": "short2", "kind": "short_tactical",
                 "start": day(15), "length": 15},
                {"label": "short3", "kind": "short_tactical",
                 "start": day(30), "length": 15},
                {"label": "long", "kind": "long_strategic",
                 "start": day(0), "length": 90},
            ],
        }],
        "modes": ["free", "guided", "strict"],
        "agents": [
            {"id": "follower", "kind": "rule_follower",
             "priority": ["S2", "S1", "S3", "S4"]},
            {"id": "trader", "kind": "scripted",
             "decisions": [{"action": 0, "rationale": "warm up"}] * 2
             + [{"action": 1, "rationale": "enter"},
                {"action": 0, "rationale": "sit"},
                {"action": -1, "rationale": "exit"}] * 5},
        ],
        "initial_cash": 1_000_000,
        "parallelism": 4,
        "output_dir": "out",
        "seed": 0,
    }
    (out / "config.json").write_text(json.dumps(config, indent=1) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("data/synthetic"))
    parser.add_argument("--tickers", nargs="+", default=["SYN1", "SYN2"])
    parser.add_argument("--days", type=int, default=110)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--start", type=dt.date.fromisoformat,
                        default=dt.date(2025, 1, 2))
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    write_market(args.out, args.tickers, args.days, args.seed, args.start)
    write_config(args.out, args.tickers, args.start)
    print(f"wrote bars.csv, news.jsonl, fundamentals.json, config.json "
          f"under {args.out}")


if __name__ == "__main__":
    main()
