"""Deterministic signal functions for the four baseline strategies.

Each strategy is a pure function of a point-in-time MarketState plus
parameters, returning a StrategySignal that names the triggered clause and
carries its intermediate values as evidence. The same predicates are rendered
as an identified clause library for prompts and compliance checks.

Entry rules:
  S1  short-term reversal: buy after a cumulative plunge over a lookback.
  S2  breakout momentum: buy when the close breaks the prior N-day high.
  S3  volatility compression: buy when realized vol sits in the low tail of
      its trailing distribution and the last tick is up.
  S4  price-volume confirmation: buy on an up day with volume well above its
      trailing average.

Exit rules are harness-defined: S2 exits on a prior N-day-low break; the
others exit after a fixed holding period. All threshold comparisons are
strict, so equality never triggers.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistory
from .market_data import MarketState

STRATEGY_IDS = ("S1", "S2", "S3", "S4")


@dataclass(frozen=True)
class StrategyParams:
    s1_lookback: int = 3
    s1_plunge_threshold: float = 0.05
    s2_breakout_lookback: int = 3
    s3_vol_window: int = 10
    s3_trailing_window: int = 60
    s3_percentile: float = 0.20
    s4_volume_window: int = 20
    s4_volume_multiplier: float = 1.5
    exit_holding_period: int = 5

    def __post_init__(self):
        for name in ("s1_lookback", "s2_breakout_lookback", "s3_vol_window",
                     "s3_trailing_window", "s4_volume_window", "exit_holding_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.s1_plunge_threshold <= 0 or self.s4_volume_multiplier <= 0:
            raise ValueError("thresholds must be > 0")
        if not 0 < self.s3_percentile < 1:
            raise ValueError("s3_percentile must be in (0, 1)")


@dataclass(frozen=True)
class StrategySignal:
    strategy_id: str
    direction: str  # "buy" | "sell" | "none"
    triggered_clause: str | None = None
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.direction != "none") != (self.triggered_clause is not None):
            raise ValueError("triggered_clause present iff direction != none")


@dataclass(frozen=True)
class Clause:
    clause_id: str  # e.g. "S2.entry"
    strategy_id: str
    text: str
    direction: str  # predicate reference: which action this clause licenses


@dataclass(frozen=True)
class ClauseLibrary:
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        ids = [c.clause_id for c in self.clauses]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate clause ids")

    def get(self, clause_id: str) -> Clause | None:
        for c in self.clauses:
            if c.clause_id == clause_id:
                return c
        return None

    def ids(self) -> list[str]:
        return [c.clause_id for c in self.clauses]

    def as_text(self) -> str:
        return "\n".join(f"[{c.clause_id}] {c.text}" for c in self.clauses)

    def to_json(self) -> list[dict]:
        return [
            {"clause_id": c.clause_id, "strategy_id": c.strategy_id,
             "text": c.text, "direction": c.direction}
            for c in self.clauses
        ]


def _days_held(state: MarketState) -> int | None:
    """Trading days elapsed since the open position was entered, or None if flat.

    Counted as days d with entry_day < d <= gate_day, so the entry day itself
    is day zero.
    """
    h = state.holding
    entry = getattr(h, "entry_day", None)
    if h is None or getattr(h, "shares", 0) <= 0 or entry is None:
        return None
    return sum(1 for b in state.bars_history if entry < b.trading_day <= state.gate_day)


def _holding_exit(state: MarketState, strategy_id: str, params: StrategyParams,
                  evidence: dict) -> StrategySignal | None:
    held = _days_held(state)
    if held is not None and held >= params.exit_holding_period:
        evidence = dict(evidence, days_held=held)
        return StrategySignal(strategy_id, "sell", f"{strategy_id}.exit", evidence)
    return None


def signal_s1(state: MarketState, params: StrategyParams) -> StrategySignal:
    closes = state.closes
    if len(closes) < params.s1_lookback + 1:
        raise InsufficientHistory(f"S1 needs {params.s1_lookback + 1} bars, have {len(closes)}")
    ret = closes[-1] / closes[-1 - params.s1_lookback] - 1.0
    evidence = {"cumulative_return": ret, "lookback": params.s1_lookback}
    if ret <= -params.s1_plunge_threshold:
        return StrategySignal("S1", "buy", "S1.entry", evidence)
    exit_sig = _holding_exit(state, "S1", params, evidence)
    if exit_sig is not None:
        return exit_sig
    return StrategySignal("S1", "none", None, evidence)


def signal_s2(state: MarketState, params: StrategyParams) -> StrategySignal:
    bars = state.bars_history
    n = params.s2_breakout_lookback
    if len(bars) < n + 1:
        raise InsufficientHistory(f"S2 needs {n + 1} bars, have {len(bars)}")
    prior = bars[-1 - n : -1]
    rolling_high = max(b.high for b in prior)
    rolling_low = min(b.low for b in prior)
    close = bars[-1].close
    evidence = {"rolling_high": rolling_high, "rolling_low": rolling_low, "close": close}
    if close > rolling_high:
        return StrategySignal("S2", "buy", "S2.entry", evidence)
    holding_open = getattr(state.holding, "shares", 0) > 0
    if holding_open and close < rolling_low:
        return StrategySignal("S2", "sell", "S2.exit", evidence)
    return StrategySignal("S2", "none", None, evidence)


def _realized_vol(closes: list[float]) -> float:
    """Sample stdev of daily log returns of the given closes."""
    rets = [math.log(b / a) for a, b in zip(closes, closes[1:])]
    if len(rets) < 2:
        return 0.0
    return statistics.stdev(rets)


def signal_s3(state: MarketState, params: StrategyParams) -> StrategySignal:
    closes = state.closes
    need = params.s3_trailing_window + params.s3_vol_window
    if len(closes) < need:
        raise InsufficientHistory(f"S3 needs {need} bars, have {len(closes)}")
    # vol(d) over the s3_vol_window daily returns ending at d, for each of the
    # trailing_window most recent days (inclusive of today)
    trailing_vols = []
    for offset in range(params.s3_trailing_window):
        end = len(closes) - offset
        start = end - params.s3_vol_window - 1
        trailing_vols.append(_realized_vol(closes[start:end]))
    current_vol = trailing_vols[0]
    threshold = float(np.quantile(trailing_vols, params.s3_percentile))
    up_tick = closes[-1] > closes[-2]
    evidence = {"current_vol": current_vol, "vol_quantile": threshold, "up_tick": up_tick}
    if current_vol <= threshold and up_tick:
        return StrategySignal("S3", "buy", "S3.entry", evidence)
    exit_sig = _holding_exit(state, "S3", params, evidence)
    if exit_sig is not None:
        return exit_sig
    return StrategySignal("S3", "none", None, evidence)


def signal_s4(state: MarketState, params: StrategyParams) -> StrategySignal:
    bars = state.bars_history
    n = params.s4_volume_window
    if len(bars) < n + 1:
        raise InsufficientHistory(f"S4 needs {n + 1} bars, have {len(bars)}")
    prior = bars[-1 - n : -1]
    avg_volume = sum(b.volume for b in prior) / n
    up_day = bars[-1].close > bars[-2].close
    volume_ok = bars[-1].volume > params.s4_volume_multiplier * avg_volume
    evidence = {"avg_volume": avg_volume, "volume": bars[-1].volume, "up_day": up_day}
    if up_day and volume_ok:
        return StrategySignal("S4", "buy", "S4.entry", evidence)
    exit_sig = _holding_exit(state, "S4", params, evidence)
    if exit_sig is not None:
        return exit_sig
    return StrategySignal("S4", "none", None, evidence)


_SIGNAL_FNS = {"S1": signal_s1, "S2": signal_s2, "S3": signal_s3, "S4": signal_s4}


def evaluate_all(state: MarketState, params: StrategyParams) -> dict[str, StrategySignal]:
    """One signal per strategy; short history degrades to a flagged no-signal."""
    out: dict[str, StrategySignal] = {}
    for sid, fn in _SIGNAL_FNS.items():
        try:
            out[sid] = fn(state, params)
        except InsufficientHistory:
            out[sid] = StrategySignal(sid, "none", None, {"insufficient_history": True})
    return out


def render_clause_library(params: StrategyParams) -> ClauseLibrary:
    """Entry + exit clause per strategy, parameter values baked into the text."""
    p = params
    plunge_pct = p.s1_plunge_threshold * 100
    clauses = (
        Clause("S1.entry", "S1",
               f"Short-term reversal entry: buy when the cumulative close-to-close return "
               f"over the last {p.s1_lookback} trading days is {plunge_pct:g}% or worse "
               f"(a plunge of at least {plunge_pct:g}%).", "buy"),
        Clause("S1.exit", "S1",
               f"Short-term reversal exit: sell the position once it has been held for "
               f"{p.exit_holding_period} trading days or more.", "sell"),
        Clause("S2.entry", "S2",
               f"Breakout momentum entry: buy when today's close is strictly above the "
               f"{p.s2_breakout_lookback}-day high (the highest high of the "
               f"{p.s2_breakout_lookback} prior trading days). Equality does not trigger.", "buy"),
        Clause("S2.exit", "S2",
               f"Breakout momentum exit: while holding, sell when today's close is strictly "
               f"below the {p.s2_breakout_lookback}-day low (the lowest low of the "
               f"{p.s2_breakout_lookback} prior trading days).", "sell"),
        Clause("S3.entry", "S3",
               f"Volatility compression entry: buy when realized volatility over the last "
               f"{p.s3_vol_window} days is at or below the {p.s3_percentile * 100:g}th "
               f"percentile of its rolling values over the trailing {p.s3_trailing_window} "
               f"days, and today's close is above yesterday's close.", "buy"),
        Clause("S3.exit", "S3",
               f"Volatility compression exit: sell the position once it has been held for "
               f"{p.exit_holding_period} trading days or more.", "sell"),
        Clause("S4.entry", "S4",
               f"Price-volume confirmation entry: buy when today's close is above yesterday's "
               f"close and today's volume is strictly above {p.s4_volume_multiplier:g}x the "
               f"average volume of the {p.s4_volume_window} prior trading days.", "buy"),
        Clause("S4.exit", "S4",
               f"Price-volume confirmation exit: sell the position once it has been held for "
               f"{p.exit_holding_period} trading days or more.", "sell"),
    )
    return ClauseLibrary(clauses)
