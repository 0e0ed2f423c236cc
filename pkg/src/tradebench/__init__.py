"""tradebench: deterministic audit harness for LLM trading agents.

Time-gated market replay, tiered prompt scaffolding (free/guided/strict),
T+1 execution with cash truncation, risk-adjusted performance metrics, and
behavioral/compliance audits, all replayable offline from transcripts.
"""

from .agents import AgentSpec, Decision, PromptBundle, build_prompt, parse_decision
from .engine import CostModel, EpisodeLog, HoldingState, execute_fill, mark_to_market, run_episode
from .market_data import (
    Bar,
    EvaluationWindow,
    FundamentalDoc,
    MarketState,
    MarketStore,
    NewsItem,
    WindowConfig,
    gated_view,
    load_bars,
    load_fundamentals,
    load_news,
    slice_windows,
)
from .metrics import MetricsReport, compute_report
from .runner import ExperimentConfig, ReportSet, load_config, replay, run_experiment
from .strategies import (
    ClauseLibrary,
    StrategyParams,
    StrategySignal,
    evaluate_all,
    render_clause_library,
)

__version__ = "0.1.0"
