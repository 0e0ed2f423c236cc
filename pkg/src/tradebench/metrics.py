"""Performance metrics over an episode's equity curve.

Conventions (declared, config-exposed where noted):
  - 252 trading days per year for annualization
  - sample (n-1) standard deviation
  - risk-free rate and minimum acceptable return default to 0 (daily)
  - alpha = annualized portfolio return minus annualized benchmark return,
    where the benchmark is buy-and-hold of the same asset over the window
  - degenerate metrics are reported as explicit None sentinels with a reason
    code, never as 0 (0 is a meaningful value for every ratio here)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import (
    DegenerateDenominator,
    DegenerateDownside,
    DegenerateVolatility,
    SeriesMismatch,
    SeriesTooShort,
)

TRADING_DAYS_PER_YEAR = 252


def total_return(equity: Sequence[float]) -> float:
    if len(equity) < 2:
        raise SeriesTooShort(f"equity series of length {len(equity)}")
    return equity[-1] / equity[0] - 1.0


def annualized_return(tr: float, n_days: int) -> float:
    if n_days < 1:
        raise SeriesTooShort("n_days must be >= 1")
    if tr <= -1:
        raise ValueError("total return must be > -1")
    return (1.0 + tr) ** (TRADING_DAYS_PER_YEAR / n_days) - 1.0


def max_drawdown(equity: Sequence[float]) -> float:
    """Largest peak-to-trough fractional decline, in [0, 1]."""
    if len(equity) < 2:
        raise SeriesTooShort(f"equity series of length {len(equity)}")
    peak = equity[0]
    mdd = 0.0
    for x in equity:
        peak = max(peak, x)
        mdd = max(mdd, (peak - x) / peak)
    return mdd


def drawdown_and_calmar(equity: Sequence[float], n_days: Optional[int] = None) -> tuple[float, float]:
    """(mdd, calmar). Raises DegenerateDenominator when mdd is zero; callers
    that want the mdd anyway compute max_drawdown directly."""
    mdd = max_drawdown(equity)
    if n_days is None:
        n_days = len(equity) - 1
    if mdd == 0.0:
        raise DegenerateDenominator("zero drawdown, Calmar undefined")
    ar = annualized_return(total_return(equity), n_days)
    return mdd, ar / mdd


def daily_returns(equity: Sequence[float]) -> list[float]:
    if len(equity) < 2:
        raise SeriesTooShort(f"equity series of length {len(equity)}")
    return [b / a - 1.0 for a, b in zip(equity, equity[1:])]


def _sample_std(values: Sequence[float]) -> float:
    n = len(values)
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))


def sharpe_sortino_vol(
    returns: Sequence[float],
    risk_free_daily: float = 0.0,
    mar_daily: float = 0.0,
) -> tuple[float, float, float]:
    """Annualized (sharpe, sortino, vol) from daily returns.

    Downside deviation uses squared shortfalls below the MAR over all n
    returns with the same (n-1) denominator as the sample stdev.
    """
    if len(returns) < 2:
        raise SeriesTooShort(f"returns series of length {len(returns)}")
    n = len(returns)
    mean = sum(returns) / n
    std = _sample_std(returns)
    root_year = math.sqrt(TRADING_DAYS_PER_YEAR)
    vol = std * root_year
    if std == 0.0:
        raise DegenerateVolatility("zero return stdev")
    sharpe = (mean - risk_free_daily) / std * root_year
    shortfalls = [min(r - mar_daily, 0.0) for r in returns]
    if not any(s < 0.0 for s in shortfalls):
        raise DegenerateDownside("no returns below the MAR")
    downside_dev = math.sqrt(sum(s * s for s in shortfalls) / (n - 1))
    sortino = (mean - mar_daily) / downside_dev * root_year
    return sharpe, sortino, vol


def alpha(
    portfolio_equity: Sequence[float],
    benchmark_equity: Sequence[float],
    n_days: Optional[int] = None,
) -> float:
    """Annualized excess of the portfolio over buy-and-hold of the benchmark."""
    if len(portfolio_equity) != len(benchmark_equity):
        raise SeriesMismatch(
            f"portfolio has {len(portfolio_equity)} marks, "
            f"benchmark has {len(benchmark_equity)}"
        )
    if n_days is None:
        n_days = len(portfolio_equity) - 1
    ar_p = annualized_return(total_return(portfolio_equity), n_days)
    ar_b = annualized_return(total_return(benchmark_equity), n_days)
    return ar_p - ar_b


def win_rate(round_trip_pnls: Sequence[float]) -> Optional[float]:
    """Fraction of round trips with positive realized PnL; None when there
    are no round trips."""
    if not round_trip_pnls:
        return None
    return sum(1 for p in round_trip_pnls if p > 0) / len(round_trip_pnls)


CSV_COLUMNS = ["model", "strategy", "market", "TR", "SR", "MDD", "Vol", "WR", "alpha"]


@dataclass
class MetricsReport:
    total_return: float
    annualized_return: float
    alpha: Optional[float]
    sharpe: Optional[float]
    sortino: Optional[float]
    volatility: Optional[float]
    max_drawdown: float
    calmar: Optional[float]
    win_rate: Optional[float]
    n_round_trips: int
    n_trading_days: int
    undefined_reasons: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "total_return": self.total_return,
            "annualized_return": self.annualized_return,
            "alpha": self.alpha,
            "sharpe": self.sharpe,
            "sortino": self.sortino,
            "volatility": self.volatility,
            "max_drawdown": self.max_drawdown,
            "calmar": self.calmar,
            "win_rate": self.win_rate,
            "n_round_trips": self.n_round_trips,
            "n_trading_days": self.n_trading_days,
            "undefined_reasons": dict(self.undefined_reasons),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MetricsReport":
        return cls(**obj)

    def csv_values(self) -> dict[str, str]:
        """Table-style values in percent; sentinels render as empty cells."""

        def pct(v: Optional[float]) -> str:
            return "" if v is None else f"{v * 100:.4f}"

        def raw(v: Optional[float]) -> str:
            return "" if v is None else f"{v:.4f}"

        return {
            "TR": pct(self.total_return),
            "SR": raw(self.sharpe),
            "MDD": pct(self.max_drawdown),
            "Vol": pct(self.volatility),
            "WR": pct(self.win_rate),
            "alpha": pct(self.alpha),
        }


def compute_report(log, benchmark_equity: Sequence[float],
                   risk_free_daily: float = 0.0, mar_daily: float = 0.0) -> MetricsReport:
    """Assemble the full metric suite from an EpisodeLog.

    Component degeneracies become sentinel fields with reason codes; the
    report itself always comes back.
    """
    equity = log.equity_series()
    undefined: dict[str, str] = {}

    tr = total_return(equity)
    n_days = len(equity) - 1
    ar = annualized_return(tr, n_days)
    mdd = max_drawdown(equity)

    try:
        _, calmar = drawdown_and_calmar(equity, n_days)
    except DegenerateDenominator:
        calmar = None
        undefined["calmar"] = "zero_drawdown"

    returns = daily_returns(equity)
    sharpe: Optional[float]
    sortino: Optional[float]
    vol: Optional[float]
    try:
        sharpe, sortino, vol = sharpe_sortino_vol(returns, risk_free_daily, mar_daily)
    except DegenerateVolatility:
        sharpe = sortino = None
        vol = 0.0
        undefined["sharpe"] = "zero_volatility"
        undefined["sortino"] = "zero_volatility"
    except DegenerateDownside:
        vol = _sample_std(returns) * math.sqrt(TRADING_DAYS_PER_YEAR)
        mean = sum(returns) / len(returns)
        sharpe = (mean - risk_free_daily) / _sample_std(returns) * math.sqrt(TRADING_DAYS_PER_YEAR)
        sortino = None
        undefined["sortino"] = "no_downside_returns"

    a: Optional[float]
    try:
        a = alpha(equity, benchmark_equity, n_days)
    except SeriesMismatch:
        a = None
        undefined["alpha"] = "benchmark_mismatch"

    pnls = [r.realized_pnl for r in log.round_trips]
    wr = win_rate(pnls)
    if wr is None:
        undefined["win_rate"] = "no_round_trips"

    return MetricsReport(
        total_return=tr,
        annualized_return=ar,
        alpha=a,
        sharpe=sharpe,
        sortino=sortino,
        volatility=vol,
        max_drawdown=mdd,
        calmar=calmar,
        win_rate=wr,
        n_round_trips=len(pnls),
        n_trading_days=len(log.window.trading_days),
        undefined_reasons=undefined,
    )
