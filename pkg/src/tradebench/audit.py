"""Behavioral and compliance analytics over finished episode logs.

  - clause-citation compliance for strict-mode episodes
  - disposition effect as the realized-proportion contrast PGR - PLR over
    daily decision points (sell readiness on gain days vs loss days)
  - alignment tax: pairwise per-metric deltas across interaction modes
  - high win-rate trap: high WR with non-positive excess return
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Optional

from .errors import InsufficientModes, SignalCoverageGap, UndefinedInputs
from .metrics import MetricsReport
from .strategies import ClauseLibrary, StrategySignal


@dataclass(frozen=True)
class Violation:
    day: dt.date
    decision: "object"
    reason: str

    def to_json(self) -> dict:
        return {"day": self.day.isoformat(), "decision": self.decision.to_json(),
                "reason": self.reason}


@dataclass
class ComplianceReport:
    n_decision_days: int
    n_actions: int  # non-hold decisions
    n_compliant_actions: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def compliance_rate(self) -> Optional[float]:
        if self.n_actions == 0:
            return None
        return self.n_compliant_actions / self.n_actions

    def to_json(self) -> dict:
        return {
            "n_decision_days": self.n_decision_days,
            "n_actions": self.n_actions,
            "n_compliant_actions": self.n_compliant_actions,
            "compliance_rate": self.compliance_rate,
            "violations": [v.to_json() for v in self.violations],
        }

    def to_text(self) -> str:
        lines = [
            f"decision days: {self.n_decision_days}",
            f"non-hold actions: {self.n_actions}",
            f"compliant actions: {self.n_compliant_actions}",
            f"compliance rate: "
            + ("n/a (no actions)" if self.compliance_rate is None
               else f"{self.compliance_rate:.4f}"),
        ]
        for v in self.violations:
            lines.append(f"  VIOLATION {v.day.isoformat()}: {v.reason} "
                         f"(action={v.decision.action}, cited={list(v.decision.cited_clauses)})")
        return "\n".join(lines)


def compliance_check(
    log,
    daily_signals: dict[dt.date, dict[str, StrategySignal]],
    clause_lib: ClauseLibrary,
) -> ComplianceReport:
    """Check every non-hold decision against the clauses it cites.

    A non-hold decision is compliant iff it cites at least one clause, every
    cited clause exists, and at least one cited clause actually triggered
    that day with a direction matching the action. Holds are always
    compliant: abstention needs no trigger.
    """
    report = ComplianceReport(n_decision_days=len(log.entries), n_actions=0,
                              n_compliant_actions=0)
    for entry in log.entries:
        day = entry.decision_day
        d = entry.decision
        if d.action == 0:
            continue
        report.n_actions += 1
        if day not in daily_signals:
            raise SignalCoverageGap(f"no signals for decision day {day}")
        signals = daily_signals[day]
        want_direction = "buy" if d.action == 1 else "sell"

        if not d.cited_clauses:
            report.violations.append(Violation(day, d, "no clauses cited"))
            continue
        unknown = [c for c in d.cited_clauses if clause_lib.get(c) is None]
        if unknown:
            report.violations.append(
                Violation(day, d, f"unknown clause(s) cited: {unknown}")
            )
            continue
        triggered = {
            s.triggered_clause
            for s in signals.values()
            if s.direction == want_direction and s.triggered_clause
        }
        if not any(c in triggered for c in d.cited_clauses):
            report.violations.append(Violation(day, d, "clause not triggered"))
            continue
        report.n_compliant_actions += 1
    return report


@dataclass
class DispositionReport:
    n_gain_days: int
    n_loss_days: int
    n_gain_sells: int
    n_loss_sells: int
    pgr: Optional[float]  # proportion of gains realized
    plr: Optional[float]  # proportion of losses realized
    de_score: Optional[float]  # pgr - plr
    undefined_reason: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "n_gain_days": self.n_gain_days,
            "n_loss_days": self.n_loss_days,
            "n_gain_sells": self.n_gain_sells,
            "n_loss_sells": self.n_loss_sells,
            "pgr": self.pgr,
            "plr": self.plr,
            "de_score": self.de_score,
            "undefined_reason": self.undefined_reason,
        }


def disposition_effect(log) -> DispositionReport:
    """PGR - PLR over decision days with an open position.

    A decision day counts as a gain day when the decision-time mark price is
    above the average cost, a loss day otherwise; a 'sell' is a sell decision
    on that day. Undefined unless both day sets are non-empty.
    """
    gain_days = loss_days = gain_sells = loss_sells = 0
    for entry in log.entries:
        if entry.shares_before <= 0 or entry.avg_cost_before is None:
            continue
        sold = entry.decision.action == -1
        if entry.decision_day_close > entry.avg_cost_before:
            gain_days += 1
            gain_sells += int(sold)
        else:
            loss_days += 1
            loss_sells += int(sold)
    if gain_days == 0 or loss_days == 0:
        reason = "no_gain_days" if gain_days == 0 else "no_loss_days"
        return DispositionReport(gain_days, loss_days, gain_sells, loss_sells,
                                 pgr=None, plr=None, de_score=None,
                                 undefined_reason=reason)
    pgr = gain_sells / gain_days
    plr = loss_sells / loss_days
    return DispositionReport(gain_days, loss_days, gain_sells, loss_sells,
                             pgr=pgr, plr=plr, de_score=pgr - plr)


ALIGNMENT_TAX_METRICS = ("total_return", "sharpe", "max_drawdown", "win_rate", "alpha")


@dataclass(frozen=True)
class ModeDelta:
    metric: str
    mode_a: str
    mode_b: str
    delta: Optional[float]  # value_a - value_b; None when either side is a sentinel

    def to_json(self) -> dict:
        return {"metric": self.metric, "mode_a": self.mode_a, "mode_b": self.mode_b,
                "delta": self.delta}


@dataclass
class AlignmentTaxReport:
    reports: dict[str, MetricsReport]
    deltas: list[ModeDelta]

    def delta(self, metric: str, mode_a: str, mode_b: str) -> Optional[float]:
        for d in self.deltas:
            if (d.metric, d.mode_a, d.mode_b) == (metric, mode_a, mode_b):
                return d.delta
        raise KeyError((metric, mode_a, mode_b))

    def to_json(self) -> dict:
        return {
            "modes": {m: r.to_json() for m, r in self.reports.items()},
            "deltas": [d.to_json() for d in self.deltas],
        }


def alignment_tax(reports: dict[str, MetricsReport]) -> AlignmentTaxReport:
    """All pairwise per-metric deltas across the modes present."""
    if len(reports) < 2:
        raise InsufficientModes(f"need >= 2 modes, have {len(reports)}")
    deltas: list[ModeDelta] = []
    modes = list(reports)
    for metric in ALIGNMENT_TAX_METRICS:
        for a in modes:
            for b in modes:
                if a == b:
                    continue
                va = getattr(reports[a], metric)
                vb = getattr(reports[b], metric)
                delta = None if va is None or vb is None else va - vb
                deltas.append(ModeDelta(metric, a, b, delta))
    return AlignmentTaxReport(reports=dict(reports), deltas=deltas)


@dataclass(frozen=True)
class TrapFlag:
    flagged: bool
    win_rate: float
    alpha: float
    wr_threshold: float
    alpha_threshold: float

    @property
    def diagnostic(self) -> str:
        if self.flagged:
            return (
                f"high win-rate trap: WR {self.win_rate:.2%} >= "
                f"{self.wr_threshold:.2%} with alpha {self.alpha:.2%} <= "
                f"{self.alpha_threshold:.2%}"
            )
        return (
            f"not flagged: WR {self.win_rate:.2%}, alpha {self.alpha:.2%} "
            f"(thresholds WR >= {self.wr_threshold:.2%}, alpha <= {self.alpha_threshold:.2%})"
        )

    def to_json(self) -> dict:
        return {"flagged": self.flagged, "win_rate": self.win_rate, "alpha": self.alpha,
                "wr_threshold": self.wr_threshold, "alpha_threshold": self.alpha_threshold,
                "diagnostic": self.diagnostic}


def win_rate_trap_flag(report: MetricsReport, wr_threshold: float = 0.5,
                       alpha_threshold: float = 0.0) -> TrapFlag:
    """Flag a high win rate paired with non-positive excess return."""
    if report.win_rate is None or report.alpha is None:
        raise UndefinedInputs("win_rate or alpha is an undefined sentinel")
    flagged = report.win_rate >= wr_threshold and report.alpha <= alpha_threshold
    return TrapFlag(flagged, report.win_rate, report.alpha, wr_threshold, alpha_threshold)
