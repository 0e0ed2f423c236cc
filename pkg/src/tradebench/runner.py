"""Experiment orchestration.

Enumerates (agent x mode x window x ticker) cells, runs episodes with bounded
parallelism, persists every episode log, transcript and report under the
output directory, and aggregates per-(agent, mode, market) averages into a
table-shaped CSV. A persisted experiment can be replayed offline from its
transcripts and must reproduce the original reports byte-for-byte.

Filesystem layout under `output_dir`:
  resolved_config.json                      effective config, defaults filled
  runs/<agent>__<mode>__<market>__<ticker>__<window>/
      episode.json  transcript.jsonl  metrics.json
      compliance.json  disposition.json  compliance.txt
  alignment/<agent>__<market>__<ticker>__<window>.json
  aggregate.csv  reports.json
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import audit as audit_mod
from .agents import (
    AgentSpec,
    Decision,
    RateLimiter,
    SequenceReplayAgent,
    build_agent,
)
from .engine import CostModel, EpisodeLog, run_episode
from .errors import (
    ConfigInvalid,
    ConfigParse,
    InsufficientModes,
    TranscriptCorrupt,
    TranscriptMissing,
    UndefinedInputs,
)
from .market_data import EvaluationWindow, MarketStore, gated_view
from .metrics import CSV_COLUMNS, MetricsReport, compute_report
from .strategies import StrategyParams, evaluate_all, render_clause_library


# -- configuration -------------------------------------------------------

@dataclass(frozen=True)
class WindowSpec:
    label: str
    kind: str
    start: dt.date
    length: int


@dataclass(frozen=True)
class MarketSpec:
    name: str
    bars: str
    tickers: tuple[str, ...]
    windows: tuple[WindowSpec, ...]
    news: Optional[str] = None
    fundamentals: Optional[str] = None


@dataclass
class ExperimentConfig:
    markets: list[MarketSpec]
    modes: list[str]
    agents: list[AgentSpec]
    strategy_params: StrategyParams
    cost: CostModel
    initial_cash: float
    risk_free_daily: float
    mar_daily: float
    news_digest_limit: int
    parallelism: int
    output_dir: str
    seed: int
    remote_rate_per_sec: Optional[float]
    trap_wr_threshold: float
    trap_alpha_threshold: float

    def to_json(self) -> dict:
        return {
            "markets": [
                {
                    "name": m.name,
                    "bars": m.bars,
                    "news": m.news,
                    "fundamentals": m.fundamentals,
                    "tickers": list(m.tickers),
                    "windows": [
                        {"label": w.label, "kind": w.kind,
                         "start": w.start.isoformat(), "length": w.length}
                        for w in m.windows
                    ],
                }
                for m in self.markets
            ],
            "modes": list(self.modes),
            "agents": [_agent_spec_to_json(a) for a in self.agents],
            "strategy_params": vars(self.strategy_params) | {},
            "cost": {"fee_rate": self.cost.fee_rate},
            "initial_cash": self.initial_cash,
            "risk_free_daily": self.risk_free_daily,
            "mar_daily": self.mar_daily,
            "news_digest_limit": self.news_digest_limit,
            "parallelism": self.parallelism,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "remote_rate_per_sec": self.remote_rate_per_sec,
            "trap_wr_threshold": self.trap_wr_threshold,
            "trap_alpha_threshold": self.trap_alpha_threshold,
        }


def _agent_spec_to_json(a: AgentSpec) -> dict:
    obj: dict = {"id": a.agent_id, "kind": a.kind}
    if a.kind == "scripted":
        obj["decisions"] = [d.to_json() for d in a.decisions]
    elif a.kind == "rule_follower":
        obj["priority"] = list(a.priority)
    else:
        obj.update(url=a.url, model=a.model, temperature=a.temperature,
                   max_retries=a.max_retries, timeout=a.timeout, auth_env=a.auth_env)
    return obj


_TOP_KEYS = {
    "markets", "modes", "agents", "strategy_params", "cost", "initial_cash",
    "risk_free_daily", "mar_daily", "news_digest_limit", "parallelism",
    "output_dir", "seed", "remote_rate_per_sec", "trap_wr_threshold",
    "trap_alpha_threshold",
}
_MARKET_KEYS = {"name", "bars", "news", "fundamentals", "tickers", "windows"}
_WINDOW_KEYS = {"label", "kind", "start", "length"}
_AGENT_KEYS = {"id", "kind", "decisions", "priority", "url", "model",
               "temperature", "max_retries", "timeout", "auth_env"}
_PARAM_KEYS = {
    "s1_lookback", "s1_plunge_threshold", "s2_breakout_lookback",
    "s3_vol_window", "s3_trailing_window", "s3_percentile",
    "s4_volume_window", "s4_volume_multiplier", "exit_holding_period",
}
_COST_KEYS = {"fee_rate"}
_DECISION_KEYS = {"action", "quantity", "rationale", "cited_clauses"}


def _reject_unknown(obj: dict, allowed: set, path: str):
    for key in obj:
        if key not in allowed:
            raise ConfigInvalid(f"{path}.{key}" if path else key, "unknown key")


def load_config(path) -> ExperimentConfig:
    """Load and validate an experiment config. The schema is strict: unknown
    keys are errors, and relative data paths resolve against the config file
    location."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as e:
        raise ConfigParse(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigParse(f"{path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigParse(f"{path}: top-level value must be an object")
    base = path.parent
    return parse_config(raw, base)


def parse_config(raw: dict, base: Path) -> ExperimentConfig:
    _reject_unknown(raw, _TOP_KEYS, "")

    def resolve(p: Optional[str]) -> Optional[str]:
        if p is None:
            return None
        q = Path(p)
        return str(q if q.is_absolute() else (base / q).resolve())

    markets_raw = raw.get("markets")
    if not isinstance(markets_raw, list) or not markets_raw:
        raise ConfigInvalid("markets", "at least one market required")
    markets: list[MarketSpec] = []
    for i, m in enumerate(markets_raw):
        mpath = f"markets[{i}]"
        if not isinstance(m, dict):
            raise ConfigInvalid(mpath, "must be an object")
        _reject_unknown(m, _MARKET_KEYS, mpath)
        try:
            tickers = tuple(str(t) for t in m["tickers"])
            windows = []
            for j, w in enumerate(m["windows"]):
                wpath = f"{mpath}.windows[{j}]"
                _reject_unknown(w, _WINDOW_KEYS, wpath)
                windows.append(
                    WindowSpec(
                        label=str(w["label"]),
                        kind=str(w["kind"]),
                        start=dt.date.fromisoformat(w["start"]),
                        length=int(w["length"]),
                    )
                )
            markets.append(
                MarketSpec(
                    name=str(m["name"]),
                    bars=resolve(str(m["bars"])),
                    news=resolve(m.get("news")),
                    fundamentals=resolve(m.get("fundamentals")),
                    tickers=tickers,
                    windows=tuple(windows),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigInvalid(mpath, str(e)) from e
        if not tickers:
            raise ConfigInvalid(f"{mpath}.tickers", "at least one ticker required")
        if not windows:
            raise ConfigInvalid(f"{mpath}.windows", "at least one window required")

    modes = raw.get("modes", ["free", "guided", "strict"])
    if not isinstance(modes, list) or not modes:
        raise ConfigInvalid("modes", "at least one mode required")
    for mode in modes:
        if mode not in ("free", "guided", "strict"):
            raise ConfigInvalid("modes", f"unknown mode {mode!r}")

    agents_raw = raw.get("agents")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise ConfigInvalid("agents", "at least one agent required")
    agents: list[AgentSpec] = []
    for i, a in enumerate(agents_raw):
        apath = f"agents[{i}]"
        if not isinstance(a, dict):
            raise ConfigInvalid(apath, "must be an object")
        _reject_unknown(a, _AGENT_KEYS, apath)
        try:
            kind = str(a["kind"])
            spec_kwargs: dict = {"agent_id": str(a["id"]), "kind": kind}
            if kind == "scripted":
                decisions = []
                for j, d in enumerate(a.get("decisions", [])):
                    _reject_unknown(d, _DECISION_KEYS, f"{apath}.decisions[{j}]")
                    decisions.append(Decision.from_json(d))
                spec_kwargs["decisions"] = tuple(decisions)
            elif kind == "rule_follower":
                spec_kwargs["priority"] = tuple(str(s) for s in a.get("priority", ["S1", "S2", "S3", "S4"]))
            elif kind == "remote":
                spec_kwargs.update(
                    url=str(a["url"]),
                    model=str(a["model"]),
                    temperature=float(a.get("temperature", 0.2)),
                    max_retries=int(a.get("max_retries", 2)),
                    timeout=float(a.get("timeout", 30.0)),
                    auth_env=str(a.get("auth_env", "")),
                )
            agents.append(AgentSpec(**spec_kwargs))
        except ConfigInvalid:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigInvalid(apath, str(e)) from e
    ids = [a.agent_id for a in agents]
    if len(set(ids)) != len(ids):
        raise ConfigInvalid("agents", "duplicate agent ids")

    params_raw = raw.get("strategy_params", {})
    _reject_unknown(params_raw, _PARAM_KEYS, "strategy_params")
    try:
        params = StrategyParams(**params_raw)
    except (TypeError, ValueError) as e:
        raise ConfigInvalid("strategy_params", str(e)) from e

    cost_raw = raw.get("cost", {})
    _reject_unknown(cost_raw, _COST_KEYS, "cost")
    try:
        cost = CostModel(**cost_raw)
    except (TypeError, ValueError) as e:
        raise ConfigInvalid("cost", str(e)) from e

    initial_cash = float(raw.get("initial_cash", 1_000_000))
    if initial_cash <= 0:
        raise ConfigInvalid("initial_cash", "must be > 0")
    parallelism = int(raw.get("parallelism", 1))
    if parallelism < 1:
        raise ConfigInvalid("parallelism", "must be >= 1")

    return ExperimentConfig(
        markets=markets,
        modes=list(modes),
        agents=agents,
        strategy_params=params,
        cost=cost,
        initial_cash=initial_cash,
        risk_free_daily=float(raw.get("risk_free_daily", 0.0)),
        mar_daily=float(raw.get("mar_daily", 0.0)),
        news_digest_limit=int(raw.get("news_digest_limit", 10)),
        parallelism=parallelism,
        output_dir=resolve(str(raw.get("output_dir", "out"))),
        seed=int(raw.get("seed", 0)),
        remote_rate_per_sec=(
            float(raw["remote_rate_per_sec"]) if raw.get("remote_rate_per_sec") else None
        ),
        trap_wr_threshold=float(raw.get("trap_wr_threshold", 0.5)),
        trap_alpha_threshold=float(raw.get("trap_alpha_threshold", 0.0)),
    )


# -- results -------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    agent_id: str
    mode: str
    market: str
    ticker: str
    window_label: str

    @property
    def run_name(self) -> str:
        return "__".join((self.agent_id, self.mode, self.market, self.ticker,
                          self.window_label))


@dataclass
class RunResult:
    cell: Cell
    metrics: MetricsReport
    compliance: audit_mod.ComplianceReport
    disposition: audit_mod.DispositionReport
    trap: Optional[audit_mod.TrapFlag]

    def to_json(self) -> dict:
        return {
            "agent": self.cell.agent_id,
            "mode": self.cell.mode,
            "market": self.cell.market,
            "ticker": self.cell.ticker,
            "window": self.cell.window_label,
            "metrics": self.metrics.to_json(),
            "compliance": self.compliance.to_json(),
            "disposition": self.disposition.to_json(),
            "trap": self.trap.to_json() if self.trap else None,
        }


@dataclass
class ReportSet:
    runs: list[RunResult] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    checksum_mismatches: list[str] = field(default_factory=list)

    def sorted_runs(self) -> list[RunResult]:
        return sorted(self.runs, key=lambda r: r.cell.run_name)

    def aggregates(self) -> list[dict]:
        """Per-(agent, mode, market) averages across tickers and windows.

        Sentinel fields are excluded from the mean; the row records how many
        constituents were excluded per metric.
        """
        # group over sorted runs so the float summation order (and hence the
        # exact averages) is independent of thread completion order
        groups: dict[tuple[str, str, str], list[RunResult]] = {}
        for r in self.sorted_runs():
            key = (r.cell.agent_id, r.cell.mode, r.cell.market)
            groups.setdefault(key, []).append(r)
        rows = []
        fields = ("total_return", "sharpe", "max_drawdown", "volatility",
                  "win_rate", "alpha")
        for (agent, mode, market) in sorted(groups):
            members = groups[(agent, mode, market)]
            row: dict = {"model": agent, "strategy": mode, "market": market,
                         "n_cells": len(members), "excluded": {}}
            for name in fields:
                values = [getattr(m.metrics, name) for m in members]
                defined = [v for v in values if v is not None]
                row[name] = sum(defined) / len(defined) if defined else None
                row["excluded"][name] = len(values) - len(defined)
            rows.append(row)
        return rows

    def to_json(self) -> dict:
        return {
            "runs": [r.to_json() for r in self.sorted_runs()],
            "aggregates": self.aggregates(),
            "failures": list(self.failures),
            "checksum_mismatches": sorted(self.checksum_mismatches),
        }


def _dump_json(path: Path, obj: dict):
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def resolve_window(store: MarketStore, ticker: str, spec: WindowSpec) -> EvaluationWindow:
    calendar = list(store.calendar(ticker))
    if spec.start not in calendar:
        raise ConfigInvalid("windows", f"{spec.label}: start {spec.start} not a trading day for {ticker}")
    i = calendar.index(spec.start)
    if i + spec.length > len(calendar):
        raise ConfigInvalid("windows", f"{spec.label}: calendar too short for {ticker}")
    return EvaluationWindow(spec.label, spec.kind, tuple(calendar[i : i + spec.length]))


def _benchmark_equity(store: MarketStore, ticker: str, window: EvaluationWindow) -> list[float]:
    closes = [store.bar_on(ticker, d).close for d in window.trading_days]
    return closes  # buy-and-hold; metrics are scale-invariant


def _audit_signals(store, ticker, window, params, initial_log: EpisodeLog):
    """Recompute per-day signal sets exactly as seen in the episode (same
    holding trajectory), for compliance checking."""
    from .engine import HoldingState

    signals: dict[dt.date, dict] = {}
    holding = HoldingState(cash=initial_log.initial_cash)
    entries_by_decision_day = {e.decision_day: e for e in initial_log.entries}
    for t in window.trading_days[:-1]:
        state = gated_view(store, ticker, t, holding)
        signals[t] = evaluate_all(state, params)
        entry = entries_by_decision_day.get(t)
        if entry is not None:
            holding = entry.holding
    return signals


def _run_cell(cell: Cell, config: ExperimentConfig, store: MarketStore,
              window: EvaluationWindow, agent_spec: AgentSpec,
              limiter, out_dir: Path) -> RunResult:
    run_dir = out_dir / "runs" / cell.run_name
    run_dir.mkdir(parents=True, exist_ok=True)
    transcript_path = run_dir / "transcript.jsonl"

    agent = build_agent(agent_spec, limiter=limiter)
    clause_lib = render_clause_library(config.strategy_params)
    transcript_rows: list[dict] = []
    log = run_episode(
        agent=agent,
        window=window,
        mode=cell.mode,
        ticker=cell.ticker,
        store=store,
        params=config.strategy_params,
        cost=config.cost,
        initial_cash=config.initial_cash,
        clause_lib=clause_lib,
        news_digest_limit=config.news_digest_limit,
        transcript_sink=transcript_rows.append,
    )
    with transcript_path.open("w") as f:
        for row in transcript_rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")
    _dump_json(run_dir / "episode.json", log.to_json())

    return _analyze(cell, config, store, window, log, run_dir)


def _analyze(cell: Cell, config: ExperimentConfig, store: MarketStore,
             window: EvaluationWindow, log: EpisodeLog,
             run_dir: Optional[Path]) -> RunResult:
    benchmark = _benchmark_equity(store, cell.ticker, window)
    metrics = compute_report(log, benchmark, config.risk_free_daily, config.mar_daily)
    clause_lib = render_clause_library(config.strategy_params)
    signals = _audit_signals(store, cell.ticker, window, config.strategy_params, log)
    compliance = audit_mod.compliance_check(log, signals, clause_lib)
    disposition = audit_mod.disposition_effect(log)
    try:
        trap = audit_mod.win_rate_trap_flag(
            metrics, config.trap_wr_threshold, config.trap_alpha_threshold
        )
    except UndefinedInputs:
        trap = None

    result = RunResult(cell, metrics, compliance, disposition, trap)
    if run_dir is not None:
        _dump_json(run_dir / "metrics.json", metrics.to_json())
        _dump_json(run_dir / "compliance.json", compliance.to_json())
        (run_dir / "compliance.txt").write_text(compliance.to_text() + "\n")
        _dump_json(run_dir / "disposition.json", disposition.to_json())
    return result


def enumerate_cells(config: ExperimentConfig) -> list[Cell]:
    cells = []
    for market in config.markets:
        for ticker in market.tickers:
            for window in market.windows:
                for agent in config.agents:
                    for mode in config.modes:
                        cells.append(Cell(agent.agent_id, mode, market.name,
                                          ticker, window.label))
    return cells


def run_experiment(config: ExperimentConfig, only: Optional[dict] = None) -> ReportSet:
    """Execute every cell, persist everything, return the aggregated set.

    Individual cell failures are recorded and skipped; they never disturb
    other cells.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(out_dir / "resolved_config.json", config.to_json())

    stores: dict[str, MarketStore] = {}
    for market in config.markets:
        stores[market.name] = MarketStore.load(market.bars, market.news,
                                               market.fundamentals)

    limiter = (RateLimiter(config.remote_rate_per_sec, burst=config.parallelism)
               if config.remote_rate_per_sec else None)
    agent_by_id = {a.agent_id: a for a in config.agents}
    window_by = {(m.name, w.label): w for m in config.markets for w in m.windows}
    market_by = {m.name: m for m in config.markets}

    cells = enumerate_cells(config)
    if only:
        cells = [
            c for c in cells
            if all(getattr(c, {"agent": "agent_id", "window": "window_label"}.get(k, k)) == v
                   for k, v in only.items())
        ]

    rs = ReportSet()

    def work(cell: Cell):
        store = stores[cell.market]
        spec = window_by[(cell.market, cell.window_label)]
        window = resolve_window(store, cell.ticker, spec)
        return _run_cell(cell, config, store, window, agent_by_id[cell.agent_id],
                         limiter, out_dir)

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures = {pool.submit(work, cell): cell for cell in cells}
        for fut, cell in futures.items():
            try:
                rs.runs.append(fut.result())
            except Exception as e:  # cell isolation: record and continue
                rs.failures.append({"cell": cell.run_name, "error": f"{type(e).__name__}: {e}"})

    _emit_alignment(rs, config, out_dir)
    emit_reports(rs, out_dir)
    return rs


def _emit_alignment(rs: ReportSet, config: ExperimentConfig, out_dir: Path):
    """Per-(agent, market, ticker, window) cross-mode deltas, where >= 2
    modes completed."""
    align_dir = out_dir / "alignment"
    groups: dict[tuple, dict[str, MetricsReport]] = {}
    for r in rs.runs:
        key = (r.cell.agent_id, r.cell.market, r.cell.ticker, r.cell.window_label)
        groups.setdefault(key, {})[r.cell.mode] = r.metrics
    for key in sorted(groups):
        by_mode = groups[key]
        if len(by_mode) < 2:
            continue
        align_dir.mkdir(parents=True, exist_ok=True)
        try:
            report = audit_mod.alignment_tax(by_mode)
        except InsufficientModes:
            continue
        _dump_json(align_dir / ("__".join(key) + ".json"), report.to_json())


def emit_reports(rs: ReportSet, out_dir, formats: tuple[str, ...] = ("json", "csv"),
                 plots: bool = False):
    """Write the aggregate CSV (table column order), the full JSON report
    set, and optionally equity-curve plots."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in formats:
        _dump_json(out_dir / "reports.json", rs.to_json())
    if "csv" in formats:
        with (out_dir / "aggregate.csv").open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in rs.aggregates():

                def pct(v):
                    return "" if v is None else f"{v * 100:.4f}"

                def num(v):
                    return "" if v is None else f"{v:.4f}"

                writer.writerow([
                    row["model"], row["strategy"], row["market"],
                    pct(row["total_return"]), num(row["sharpe"]),
                    pct(row["max_drawdown"]), pct(row["volatility"]),
                    pct(row["win_rate"]), pct(row["alpha"]),
                ])
    if plots:
        _emit_plots(out_dir)


def _emit_plots(out_dir: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    runs_dir = out_dir / "runs"
    if not runs_dir.is_dir():
        return
    plots_dir = out_dir / "plots"
    plots_dir.mkdir(exist_ok=True)
    for run_dir in sorted(runs_dir.iterdir()):
        episode_path = run_dir / "episode.json"
        if not episode_path.is_file():
            continue
        obj = json.loads(episode_path.read_text())
        equity = [obj["initial_cash"]] + [e["equity_close"] for e in obj["entries"]]
        fig, ax = plt.subplots(figsize=(7, 3))
        ax.plot(range(len(equity)), equity)
        ax.set_title(run_dir.name, fontsize=8)
        ax.set_xlabel("window day")
        ax.set_ylabel("equity")
        fig.tight_layout()
        fig.savefig(plots_dir / f"{run_dir.name}.png", dpi=100)
        plt.close(fig)


# -- replay --------------------------------------------------------------

def replay(log_dir) -> ReportSet:
    """Re-run engine + metrics + audit from persisted transcripts, offline.

    A transcript whose decisions no longer match the episode's recorded
    checksum is flagged in `checksum_mismatches` (the replay still runs, so
    the divergent reports are visible)."""
    log_dir = Path(log_dir)
    config_path = log_dir / "resolved_config.json"
    runs_dir = log_dir / "runs"
    if not config_path.is_file() or not runs_dir.is_dir() or not any(runs_dir.iterdir()):
        raise TranscriptMissing(f"no persisted experiment under {log_dir}")
    config = parse_config(json.loads(config_path.read_text()), log_dir)

    stores: dict[str, MarketStore] = {}
    for market in config.markets:
        stores[market.name] = MarketStore.load(market.bars, market.news,
                                               market.fundamentals)
    window_by = {(m.name, w.label): w for m in config.markets for w in m.windows}

    rs = ReportSet()
    for run_dir in sorted(runs_dir.iterdir()):
        if not run_dir.is_dir():
            continue
        episode_path = run_dir / "episode.json"
        transcript_path = run_dir / "transcript.jsonl"
        if not episode_path.is_file() or not transcript_path.is_file():
            raise TranscriptMissing(f"{run_dir.name}: episode.json or transcript.jsonl missing")
        try:
            stored = json.loads(episode_path.read_text())
            transcript = [json.loads(line) for line in
                          transcript_path.read_text().splitlines() if line.strip()]
            decisions = [Decision.from_json(row["decision"]) for row in transcript]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise TranscriptCorrupt(f"{run_dir.name}: {e}") from e

        parts = run_dir.name.split("__")
        if len(parts) != 5:
            raise TranscriptCorrupt(f"unrecognized run directory name {run_dir.name}")
        cell = Cell(*parts)
        store = stores[cell.market]
        window = resolve_window(store, cell.ticker, window_by[(cell.market, cell.window_label)])

        agent = SequenceReplayAgent(decisions, agent_id=cell.agent_id)
        log = run_episode(
            agent=agent,
            window=window,
            mode=cell.mode,
            ticker=cell.ticker,
            store=store,
            params=config.strategy_params,
            cost=config.cost,
            initial_cash=config.initial_cash,
            news_digest_limit=config.news_digest_limit,
        )
        if log.decisions_checksum() != stored.get("decisions_checksum"):
            rs.checksum_mismatches.append(cell.run_name)
        # replay never writes into the original run directory
        rs.runs.append(_analyze(cell, config, store, window, log, run_dir=None))
    return rs
