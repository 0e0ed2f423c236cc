import datetime as dt

import pytest

from tradebench.agents import Decision, RuleFollowerAgent, ScriptedAgent
from tradebench.audit import (
    alignment_tax,
    compliance_check,
    disposition_effect,
    win_rate_trap_flag,
)
from tradebench.engine import CostModel, run_episode
from tradebench.errors import InsufficientModes, SignalCoverageGap, UndefinedInputs
from tradebench.market_data import EvaluationWindow
from tradebench.metrics import MetricsReport
from tradebench.strategies import StrategyParams, render_clause_library

from .conftest import bars_from_closes, nth_day, store_from_bars

PARAMS = StrategyParams()
LIB = render_clause_library(PARAMS)
COST = CostModel(0.001)


def _run(closes, agent, volumes=None, mode="strict"):
    store = store_from_bars(bars_from_closes(closes, volumes=volumes))
    kind = "short_tactical" if len(closes) <= 20 else "long_strategic"
    window = EvaluationWindow("w", kind,
                              tuple(nth_day(i) for i in range(len(closes))))
    log = run_episode(agent, window, mode, "SYN", store, PARAMS, COST, 1_000_000.0)
    return log, store, window


def _signals_for(log, store, window):
    from tradebench.runner import _audit_signals

    return _audit_signals(store, "SYN", window, PARAMS, log)


def _breakout_closes():
    # flat history long enough for every strategy, then a clean S2 breakout
    return [100.0] * 70 + [100.2, 100.1, 100.0, 103.0, 103.5, 103.2, 103.1,
                           103.0, 102.9, 102.8]


# -- compliance ----------------------------------------------------------

def test_compliant_buy_citing_triggered_clause():
    closes = _breakout_closes()[:74] + [103.0] * 6
    decisions = [Decision(0)] * 73 + [Decision(1, rationale="breakout",
                                               cited_clauses=("S2.entry",))]
    log, store, window = _run(closes, ScriptedAgent(decisions))
    report = compliance_check(log, _signals_for(log, store, window), LIB)
    assert report.n_actions == 1
    assert report.compliance_rate == 1.0
    assert report.violations == []


def test_buy_citing_untriggered_clause_is_violation():
    closes = [100.0] * 80
    decisions = [Decision(0)] * 10 + [Decision(1, cited_clauses=("S2.entry",))]
    log, store, window = _run(closes, ScriptedAgent(decisions))
    report = compliance_check(log, _signals_for(log, store, window), LIB)
    assert report.compliance_rate == 0.0
    assert report.violations[0].reason == "clause not triggered"
    assert report.violations[0].day == nth_day(10)


def test_action_without_citation_is_violation():
    closes = [100.0] * 80
    log, store, window = _run(closes, ScriptedAgent([Decision(1)]))
    report = compliance_check(log, _signals_for(log, store, window), LIB)
    assert report.violations[0].reason == "no clauses cited"


def test_unknown_clause_is_violation():
    closes = [100.0] * 80
    log, store, window = _run(closes, ScriptedAgent([Decision(1, cited_clauses=("S9.magic",))]))
    report = compliance_check(log, _signals_for(log, store, window), LIB)
    assert "unknown clause" in report.violations[0].reason


def test_holds_are_always_compliant():
    closes = [100.0] * 80
    log, store, window = _run(closes, ScriptedAgent([]))
    report = compliance_check(log, _signals_for(log, store, window), LIB)
    assert report.n_actions == 0
    assert report.compliance_rate is None


def test_rule_follower_full_episode_is_fully_compliant():
    log, store, window = _run(_breakout_closes(), RuleFollowerAgent())
    assert any(e.decision.action != 0 for e in log.entries)
    report = compliance_check(log, _signals_for(log, store, window), LIB)
    assert report.n_actions > 0
    assert report.compliance_rate == 1.0


def test_signal_coverage_gap():
    closes = [100.0] * 80
    log, store, window = _run(closes, ScriptedAgent([Decision(1, cited_clauses=("S2.entry",))]))
    with pytest.raises(SignalCoverageGap):
        compliance_check(log, {}, LIB)


# -- disposition ---------------------------------------------------------

class _FakeEntry:
    def __init__(self, shares_before, avg_cost_before, close, action):
        self.shares_before = shares_before
        self.avg_cost_before = avg_cost_before
        self.decision_day_close = close
        self.decision = Decision(action)


class _FakeLog:
    def __init__(self, entries):
        self.entries = entries


def test_disposition_extreme_seller():
    entries = [_FakeEntry(100, 100.0, 110.0, -1) for _ in range(3)]
    entries += [_FakeEntry(100, 100.0, 90.0, 0) for _ in range(3)]
    report = disposition_effect(_FakeLog(entries))
    assert (report.pgr, report.plr, report.de_score) == (1.0, 0.0, 1.0)


def test_disposition_never_sells():
    entries = [_FakeEntry(100, 100.0, 110.0, 0), _FakeEntry(100, 100.0, 90.0, 0)]
    report = disposition_effect(_FakeLog(entries))
    assert (report.pgr, report.plr, report.de_score) == (0.0, 0.0, 0.0)


def test_disposition_counting_fixture():
    entries = (
        [_FakeEntry(10, 100.0, 105.0, -1)] * 2
        + [_FakeEntry(10, 100.0, 105.0, 0)] * 2
        + [_FakeEntry(10, 100.0, 95.0, -1)] * 1
        + [_FakeEntry(10, 100.0, 95.0, 0)] * 4
    )
    report = disposition_effect(_FakeLog(entries))
    assert report.pgr == pytest.approx(0.5)
    assert report.plr == pytest.approx(0.2)
    assert report.de_score == pytest.approx(0.3)


def test_disposition_undefined_without_loss_days():
    entries = [_FakeEntry(10, 100.0, 105.0, -1)]
    report = disposition_effect(_FakeLog(entries))
    assert report.de_score is None
    assert report.undefined_reason == "no_loss_days"


def test_disposition_ignores_flat_days():
    entries = [_FakeEntry(0, None, 105.0, 1), _FakeEntry(0, None, 95.0, 0)]
    report = disposition_effect(_FakeLog(entries))
    assert report.n_gain_days == 0 and report.n_loss_days == 0


# -- alignment tax -------------------------------------------------------

def _report(**kw):
    defaults = dict(total_return=0.0, annualized_return=0.0, alpha=0.0, sharpe=0.0,
                    sortino=0.0, volatility=0.1, max_drawdown=0.0, calmar=None,
                    win_rate=0.5, n_round_trips=4, n_trading_days=15)
    defaults.update(kw)
    return MetricsReport(**defaults)


def test_alignment_tax_mdd_delta_matches_published_pair():
    reports = {"guided": _report(max_drawdown=0.2083), "strict": _report(max_drawdown=0.1166)}
    tax = alignment_tax(reports)
    assert tax.delta("max_drawdown", "strict", "guided") == pytest.approx(-0.0917, abs=1e-12)


def test_alignment_tax_tr_delta_matches_published_pair():
    reports = {"free": _report(total_return=0.1168), "strict": _report(total_return=0.0910)}
    tax = alignment_tax(reports)
    assert tax.delta("total_return", "strict", "free") == pytest.approx(-0.0258, abs=1e-12)


def test_alignment_tax_identical_reports():
    tax = alignment_tax({"free": _report(), "strict": _report()})
    assert all(d.delta == 0 for d in tax.deltas)


def test_alignment_tax_antisymmetry():
    tax = alignment_tax({
        "free": _report(total_return=0.1, sharpe=1.2),
        "guided": _report(total_return=0.05, sharpe=0.8),
        "strict": _report(total_return=0.02, sharpe=1.5),
    })
    for d in tax.deltas:
        assert tax.delta(d.metric, d.mode_b, d.mode_a) == pytest.approx(-(d.delta or 0))


def test_alignment_tax_sentinel_propagates_as_none():
    tax = alignment_tax({"free": _report(win_rate=None), "strict": _report()})
    assert tax.delta("win_rate", "strict", "free") is None


def test_alignment_tax_needs_two_modes():
    with pytest.raises(InsufficientModes):
        alignment_tax({"free": _report()})


# -- trap flag -----------------------------------------------------------

def test_trap_not_flagged_low_wr_positive_alpha():
    flag = win_rate_trap_flag(_report(win_rate=0.2581, alpha=0.0672))
    assert not flag.flagged


def test_trap_not_flagged_positive_alpha_at_threshold_wr():
    flag = win_rate_trap_flag(_report(win_rate=0.5000, alpha=0.0883))
    assert not flag.flagged


def test_trap_flagged_high_wr_negative_alpha():
    flag = win_rate_trap_flag(_report(win_rate=0.6667, alpha=-0.02))
    assert flag.flagged
    assert "high win-rate trap" in flag.diagnostic


def test_trap_undefined_inputs():
    with pytest.raises(UndefinedInputs):
        win_rate_trap_flag(_report(win_rate=None, alpha=0.01))
