"""Day-by-day simulation: decide at the close of T, fill at the open of T+1.

Accounting convention: the buy-side fee is folded into the position's cost
basis (avg_cost is the gross per-share cost including fee); the sell-side fee
is folded into proceeds and hence into realized PnL. With that convention
the conservation identity

    equity - initial_cash == realized_pnl + unrealized_pnl

holds exactly at every mark, with no separate fee leg.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import MissingBar
from .market_data import EvaluationWindow, MarketState, MarketStore, gated_view
from .strategies import StrategyParams, evaluate_all

EPISODE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class HoldingState:
    cash: float
    shares: int = 0
    avg_cost: Optional[float] = None  # gross per-share cost basis; None when flat
    realized_pnl: float = 0.0
    unrealized_pnl: float = 0.0
    cum_costs: float = 0.0
    entry_day: Optional[dt.date] = None  # day the open position was entered

    def __post_init__(self):
        if self.cash < -1e-9:
            raise ValueError(f"negative cash {self.cash}")
        if self.shares < 0:
            raise ValueError(f"negative shares {self.shares}")
        if (self.shares > 0) != (self.avg_cost is not None):
            raise ValueError("avg_cost defined iff shares > 0")

    def equity(self, last_close: float) -> float:
        return self.cash + self.shares * last_close

    def to_json(self) -> dict:
        return {
            "cash": self.cash,
            "shares": self.shares,
            "avg_cost": self.avg_cost,
            "realized_pnl": self.realized_pnl,
            "unrealized_pnl": self.unrealized_pnl,
            "cum_costs": self.cum_costs,
            "entry_day": self.entry_day.isoformat() if self.entry_day else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HoldingState":
        return cls(
            cash=obj["cash"],
            shares=obj["shares"],
            avg_cost=obj["avg_cost"],
            realized_pnl=obj["realized_pnl"],
            unrealized_pnl=obj["unrealized_pnl"],
            cum_costs=obj["cum_costs"],
            entry_day=dt.date.fromisoformat(obj["entry_day"]) if obj["entry_day"] else None,
        )


@dataclass(frozen=True)
class CostModel:
    fee_rate: float = 0.001  # fraction per side

    def __post_init__(self):
        if self.fee_rate < 0:
            raise ValueError("fee_rate must be >= 0")


@dataclass(frozen=True)
class FillReport:
    trading_day: dt.date
    side: str  # "buy" | "sell" | "none"
    requested_qty: Optional[int]
    filled_qty: int
    fill_price: float
    fee: float
    truncated: bool

    def to_json(self) -> dict:
        return {
            "trading_day": self.trading_day.isoformat(),
            "side": self.side,
            "requested_qty": self.requested_qty,
            "filled_qty": self.filled_qty,
            "fill_price": self.fill_price,
            "fee": self.fee,
            "truncated": self.truncated,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FillReport":
        return cls(
            trading_day=dt.date.fromisoformat(obj["trading_day"]),
            side=obj["side"],
            requested_qty=obj["requested_qty"],
            filled_qty=obj["filled_qty"],
            fill_price=obj["fill_price"],
            fee=obj["fee"],
            truncated=obj["truncated"],
        )


def max_affordable_shares(cash: float, price: float, fee_rate: float) -> int:
    """Largest whole-share quantity q with q * price * (1 + fee_rate) <= cash."""
    unit = price * (1.0 + fee_rate)
    q = int(math.floor(cash / unit))
    # float guard: walk the boundary so the inequality holds exactly
    while (q + 1) * unit <= cash:
        q += 1
    while q > 0 and q * unit > cash:
        q -= 1
    return q


def execute_fill(h: HoldingState, decision, open_next: float, cost: CostModel,
                 day: dt.date) -> tuple[HoldingState, FillReport]:
    """Apply one decision at the next open. Truncation, never rejection:
    a buy beyond available cash fills the maximum affordable quantity and a
    sell beyond the position fills the whole position. A sell with no
    position is a no-op fill. Short positions are not supported.
    """
    if open_next <= 0:
        raise ValueError("open_next must be > 0")
    action = decision.action
    fee_rate = cost.fee_rate

    if action == 0 or (action == -1 and h.shares == 0 and decision.quantity in (None, 0)):
        side = "none" if action == 0 else "sell"
        return h, FillReport(day, side, decision.quantity, 0, open_next, 0.0, False)

    if action == 1:
        affordable = max_affordable_shares(h.cash, open_next, fee_rate)
        requested = decision.quantity  # None = maximum affordable
        filled = affordable if requested is None else min(requested, affordable)
        truncated = requested is None or filled < requested
        fee = fee_rate * filled * open_next
        gross = filled * open_next + fee
        if filled > 0:
            prior_basis = h.shares * (h.avg_cost or 0.0)
            new_shares = h.shares + filled
            new_avg = (prior_basis + gross) / new_shares
            new = replace(
                h,
                cash=h.cash - gross,
                shares=new_shares,
                avg_cost=new_avg,
                cum_costs=h.cum_costs + fee,
                entry_day=h.entry_day if h.shares > 0 else day,
            )
        else:
            new = h
        return new, FillReport(day, "buy", requested, filled, open_next, fee, truncated)

    if action == -1:
        requested = decision.quantity  # None = entire position
        want = h.shares if requested is None else requested
        filled = min(want, h.shares)
        truncated = filled < want
        fee = fee_rate * filled * open_next
        proceeds = filled * open_next - fee
        if filled > 0:
            realized = proceeds - filled * h.avg_cost
            remaining = h.shares - filled
            new = replace(
                h,
                cash=h.cash + proceeds,
                shares=remaining,
                avg_cost=h.avg_cost if remaining > 0 else None,
                realized_pnl=h.realized_pnl + realized,
                cum_costs=h.cum_costs + fee,
                entry_day=h.entry_day if remaining > 0 else None,
            )
        else:
            new = h
        return new, FillReport(day, "sell", requested, filled, open_next, fee, truncated)

    raise ValueError(f"invalid action {action}")


def mark_to_market(h: HoldingState, close: float) -> HoldingState:
    if close <= 0:
        raise ValueError("close must be > 0")
    unrealized = h.shares * (close - h.avg_cost) if h.shares > 0 else 0.0
    return replace(h, unrealized_pnl=unrealized)


# -- episode log ---------------------------------------------------------

@dataclass(frozen=True)
class DailyEntry:
    decision_day: dt.date
    fill_day: dt.date
    state_digest: str  # sha256 of the decision-time state summary
    decision: "object"  # agents.Decision
    fill: FillReport
    holding: HoldingState  # after fill + mark at close of fill_day
    equity_close: float  # equity at close of fill_day
    decision_day_close: float
    shares_before: int  # position at decision time
    avg_cost_before: Optional[float]


@dataclass(frozen=True)
class RoundTrip:
    entry_day: dt.date
    exit_day: dt.date
    realized_pnl: float


@dataclass
class EpisodeLog:
    window: EvaluationWindow
    mode: str
    agent_id: str
    ticker: str
    initial_cash: float
    entries: list[DailyEntry] = field(default_factory=list)
    round_trips: list[RoundTrip] = field(default_factory=list)

    def equity_series(self) -> list[float]:
        """One mark per window day: initial cash at close of day 0, then
        close-of-day equity after each fill."""
        return [self.initial_cash] + [e.equity_close for e in self.entries]

    def final_holding(self) -> HoldingState:
        if not self.entries:
            return HoldingState(cash=self.initial_cash)
        return self.entries[-1].holding

    def decisions_checksum(self) -> str:
        payload = json.dumps(
            [
                {"day": e.decision_day.isoformat(), "decision": e.decision.to_json()}
                for e in self.entries
            ],
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "schema_version": EPISODE_SCHEMA_VERSION,
            "window": {
                "label": self.window.label,
                "kind": self.window.kind,
                "trading_days": [d.isoformat() for d in self.window.trading_days],
            },
            "mode": self.mode,
            "agent_id": self.agent_id,
            "ticker": self.ticker,
            "initial_cash": self.initial_cash,
            "entries": [
                {
                    "decision_day": e.decision_day.isoformat(),
                    "fill_day": e.fill_day.isoformat(),
                    "state_digest": e.state_digest,
                    "decision": e.decision.to_json(),
                    "fill": e.fill.to_json(),
                    "holding": e.holding.to_json(),
                    "equity_close": e.equity_close,
                    "decision_day_close": e.decision_day_close,
                    "shares_before": e.shares_before,
                    "avg_cost_before": e.avg_cost_before,
                }
                for e in self.entries
            ],
            "round_trips": [
                {"entry_day": r.entry_day.isoformat(), "exit_day": r.exit_day.isoformat(),
                 "realized_pnl": r.realized_pnl}
                for r in self.round_trips
            ],
            "decisions_checksum": self.decisions_checksum(),
        }


def state_digest(state: MarketState) -> str:
    """Stable fingerprint of what the agent could see when it decided."""
    h = state.holding
    payload = json.dumps(
        {
            "ticker": state.ticker,
            "gate_day": state.gate_day.isoformat(),
            "n_bars": len(state.bars_history),
            "last_close": state.bars_history[-1].close if state.bars_history else None,
            "n_news": len(state.news_visible),
            "n_fundamentals": len(state.fundamentals_visible),
            "holding": h.to_json() if isinstance(h, HoldingState) else None,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def run_episode(
    agent,
    window: EvaluationWindow,
    mode: str,
    ticker: str,
    store: MarketStore,
    params: StrategyParams,
    cost: CostModel,
    initial_cash: float,
    clause_lib=None,
    news_digest_limit: int = 10,
    transcript_sink=None,
) -> EpisodeLog:
    """Run one (agent, mode, window, ticker) episode.

    For each consecutive day pair (T, T+1): gated state at T -> prompt ->
    decision -> fill at the open of T+1 -> mark at the close of T+1. The last
    window day hosts only a mark; nothing is force-liquidated at the end.

    `transcript_sink`, when given, receives one dict per decision day (used
    for the JSONL transcript).
    """
    from .agents import build_prompt  # local import: agents depends on strategies

    if initial_cash <= 0:
        raise ValueError("initial_cash must be > 0")
    if clause_lib is None:
        from .strategies import render_clause_library
        clause_lib = render_clause_library(params)

    days = window.trading_days
    holding = HoldingState(cash=initial_cash)
    log = EpisodeLog(window=window, mode=mode, agent_id=getattr(agent, "agent_id", "agent"),
                     ticker=ticker, initial_cash=initial_cash)
    open_trip_realized_base: Optional[float] = None

    for t, t1 in zip(days, days[1:]):
        state = gated_view(store, ticker, t, holding)
        if not state.bars_history or state.bars_history[-1].trading_day != t:
            raise MissingBar(f"{ticker}: no bar on decision day {t}")
        next_bar = store.bar_on(ticker, t1)
        if next_bar is None:
            raise MissingBar(f"{ticker}: no bar on fill day {t1}")
        signals = evaluate_all(state, params)
        prompt = build_prompt(mode, state, clause_lib, news_digest_limit)
        decision = agent.decide(prompt, signals)
        digest = state_digest(state)
        if transcript_sink is not None:
            transcript_sink(
                {
                    "decision_day": t.isoformat(),
                    "state_digest": digest,
                    "decision": decision.to_json(),
                }
            )

        shares_before = holding.shares
        avg_cost_before = holding.avg_cost
        was_flat = holding.shares == 0
        entry_day_before = holding.entry_day
        realized_before = holding.realized_pnl

        holding, fill = execute_fill(holding, decision, next_bar.open, cost, day=t1)

        if was_flat and holding.shares > 0:
            open_trip_realized_base = holding.realized_pnl
        if not was_flat and holding.shares == 0:
            base = open_trip_realized_base if open_trip_realized_base is not None else realized_before
            log.round_trips.append(
                RoundTrip(entry_day_before or t, t1, holding.realized_pnl - base)
            )
            open_trip_realized_base = None

        holding = mark_to_market(holding, next_bar.close)
        log.entries.append(
            DailyEntry(
                decision_day=t,
                fill_day=t1,
                state_digest=digest,
                decision=decision,
                fill=fill,
                holding=holding,
                equity_close=holding.equity(next_bar.close),
                decision_day_close=state.bars_history[-1].close,
                shares_before=shares_before,
                avg_cost_before=avg_cost_before,
            )
        )

    return log
