import datetime as dt

import pytest

from tradebench.engine import HoldingState
from tradebench.market_data import Bar, MarketState, MarketStore

START = dt.date(2025, 1, 2)


def nth_day(n: int, start: dt.date = START) -> dt.date:
    return start + dt.timedelta(days=n)


def bars_from_closes(closes, ticker="SYN", start=START, volumes=None, opens=None):
    """Build a consistent daily bar series from closes. Opens default to the
    previous close; highs/lows pad the open/close range slightly."""
    bars = []
    prev = closes[0]
    for i, c in enumerate(closes):
        o = opens[i] if opens is not None else prev
        hi = max(o, c) * 1.001
        lo = min(o, c) * 0.999
        v = volumes[i] if volumes is not None else 1000
        bars.append(Bar(ticker, nth_day(i, start), o, hi, lo, c, v))
        prev = c
    return bars


def state_from_bars(bars, holding=None, news=(), fundamentals=()):
    if holding is None:
        holding = HoldingState(cash=1_000_000.0)
    return MarketState(
        ticker=bars[-1].ticker,
        gate_day=bars[-1].trading_day,
        bars_history=tuple(bars),
        news_visible=tuple(news),
        fundamentals_visible=tuple(fundamentals),
        holding=holding,
    )


def store_from_bars(bars, news=(), fundamentals=()):
    return MarketStore.from_records(bars, news, fundamentals)


@pytest.fixture
def flat_holding():
    return HoldingState(cash=1_000_000.0)


def write_synthetic_market(dir_path, tickers=("SYN1", "SYN2"), n_days=110, seed=0):
    """Write a random-walk bar CSV, a small news JSONL and a fundamentals
    JSON under `dir_path`; returns the three file paths."""
    import json

    import numpy as np

    rng = np.random.default_rng(seed)
    bars_path = dir_path / "bars.csv"
    news_path = dir_path / "news.jsonl"
    fund_path = dir_path / "fundamentals.json"

    with bars_path.open("w") as f:
        f.write("ticker,date,open,high,low,close,volume\n")
        for ticker in tickers:
            close = 100.0 * (1 + rng.uniform(-0.2, 0.2))
            for i in range(n_days):
                day = nth_day(i)
                o = close
                close = max(1.0, close * (1 + rng.normal(0, 0.02)))
                hi = max(o, close) * (1 + abs(rng.normal(0, 0.003)))
                lo = min(o, close) * (1 - abs(rng.normal(0, 0.003)))
                vol = int(rng.integers(500, 5000))
                f.write(f"{ticker},{day.isoformat()},{o:.4f},{hi:.4f},{lo:.4f},"
                        f"{close:.4f},{vol}\n")

    with news_path.open("w") as f:
        for ticker in tickers:
            for i in range(0, n_days, 7):
                obj = {
                    "ticker": ticker,
                    "available_at": f"{nth_day(i).isoformat()}T14:30:00+00:00",
                    "headline": f"{ticker} weekly update {i}",
                    "summary": "synthetic",
                    "sentiment": float(rng.uniform(-1, 1)),
                    "key_events": ["synthetic"],
                }
                f.write(json.dumps(obj) + "\n")

    fund_path.write_text(json.dumps([
        {"ticker": ticker, "published_on": nth_day(-10).isoformat(),
         "sections": [{"name": "overview", "text": "synthetic filing"}]}
        for ticker in tickers
    ]))
    return bars_path, news_path, fund_path


def synthetic_config(dir_path, agents, tickers=("SYN1", "SYN2"), modes=None,
                     output_dir="out", parallelism=2, seed=0):
    """Config dict for the standard 3x15 + 1x90 window layout over the
    synthetic market written by write_synthetic_market."""
    windows = [
        {"label": "short1", "kind": "short_tactical",
         "start": nth_day(0).isoformat(), "length": 15},
        {"label": "short2", "kind": "short_tactical",
         "start": nth_day(15).isoformat(), "length": 15},
        {"label": "short3", "kind": "short_tactical",
         "start": nth_day(30).isoformat(), "length": 15},
        {"label": "long", "kind": "long_strategic",
         "start": nth_day(0).isoformat(), "length": 90},
    ]
    return {
        "markets": [{
            "name": "synthetic",
            "bars": "bars.csv",
            "news": "news.jsonl",
            "fundamentals": "fundamentals.json",
            "tickers": list(tickers),
            "windows": windows,
        }],
        "modes": modes or ["free", "guided", "strict"],
        "agents": agents,
        "initial_cash": 1_000_000,
        "parallelism": parallelism,
        "output_dir": output_dir,
        "seed": seed,
    }
