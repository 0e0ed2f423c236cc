import json
import random
import re

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradebench.agents import (
    STRICT_USER_MANDATE,
    AgentSpec,
    Decision,
    RemoteAgent,
    RuleFollowerAgent,
    ScriptedAgent,
    build_prompt,
    parse_decision,
)
from tradebench.errors import (
    EndpointUnavailable,
    InvalidAction,
    InvalidQuantity,
    ParseError,
)
from tradebench.strategies import StrategyParams, StrategySignal, render_clause_library

from .conftest import bars_from_closes, state_from_bars

LIB = render_clause_library(StrategyParams())
CLAUSE_IDS = LIB.ids()


def _state():
    return state_from_bars(bars_from_closes([100, 101, 102, 103]))


# -- prompts -------------------------------------------------------------

def test_free_prompt_has_no_clause_ids():
    bundle = build_prompt("free", _state(), LIB)
    blob = bundle.system_text + bundle.user_text
    for cid in CLAUSE_IDS:
        assert cid not in blob


def test_guided_prompt_marks_library_as_reference():
    bundle = build_prompt("guided", _state(), LIB)
    assert "as reference, allowing adjustment for current news" in bundle.system_text
    for cid in CLAUSE_IDS:
        assert cid in bundle.system_text
    assert STRICT_USER_MANDATE not in bundle.user_text


def test_strict_prompt_demands_citations():
    bundle = build_prompt("strict", _state(), LIB)
    assert "must explicitly cite specific clauses" in bundle.system_text
    assert "cited_clauses must be non-empty" in bundle.user_text
    for cid in CLAUSE_IDS:
        assert cid in bundle.system_text


def test_strict_scaffold_contains_guided_strategy_content():
    guided = build_prompt("guided", _state(), LIB)
    strict = build_prompt("strict", _state(), LIB)
    assert LIB.as_text() in guided.system_text
    assert LIB.as_text() in strict.system_text


def test_prompt_includes_holding_and_schema():
    bundle = build_prompt("free", _state(), LIB)
    assert "Holding state" in bundle.user_text
    assert '"action"' in bundle.user_text


def test_prompt_news_digest_limit():
    import datetime as dt

    from tradebench.market_data import NewsItem

    news = [
        NewsItem("SYN", dt.datetime(2025, 1, 2, h, tzinfo=dt.timezone.utc),
                 f"headline-{h}", "s", 0.0)
        for h in range(12)
    ]
    state = state_from_bars(bars_from_closes([100, 101]), news=news)
    bundle = build_prompt("free", state, LIB, news_digest_limit=3)
    shown = re.findall(r"headline-(\d+)", bundle.user_text)
    assert shown == ["11", "10", "9"]  # most recent first, capped


# -- parsing -------------------------------------------------------------

def test_parse_plain_decision():
    d = parse_decision(
        '{"action":1,"quantity":100,"rationale":"S2 breakout","cited_clauses":["S2.entry"]}'
    )
    assert d == Decision(1, 100, "S2 breakout", ("S2.entry",))


def test_parse_invalid_action():
    with pytest.raises(InvalidAction):
        parse_decision('{"action":2,"rationale":"x"}')


def test_parse_fenced_json():
    raw = 'thinking... ```json\n{"action":0,"rationale":"hold"}\n``` done'
    d = parse_decision(raw)
    assert d.action == 0 and d.rationale == "hold"


def test_parse_prose_with_prefix_object():
    raw = 'I considered {not really json} then {"action":-1,"rationale":"exit"}'
    assert parse_decision(raw).action == -1


def test_parse_negative_quantity():
    with pytest.raises(InvalidQuantity):
        parse_decision('{"action":1,"quantity":-5,"rationale":"x"}')


def test_parse_fractional_quantity():
    with pytest.raises(InvalidQuantity):
        parse_decision('{"action":1,"quantity":10.5,"rationale":"x"}')


def test_parse_integral_float_quantity():
    assert parse_decision('{"action":1,"quantity":10.0,"rationale":"x"}').quantity == 10


def test_parse_boolean_action_rejected():
    with pytest.raises(InvalidAction):
        parse_decision('{"action":true,"rationale":"x"}')


def test_parse_missing_rationale():
    with pytest.raises(ParseError):
        parse_decision('{"action":1}')


def test_parse_no_json():
    with pytest.raises(ParseError):
        parse_decision("no structured output here")


def test_parse_bytes_input():
    raw = b'\xff\xfe{"action":0,"rationale":"hold"}'
    assert parse_decision(raw).action == 0


@settings(max_examples=500, deadline=None)
@given(raw=st.binary(max_size=200))
def test_parse_total_on_random_bytes(raw):
    try:
        d = parse_decision(raw)
        assert isinstance(d, Decision)
    except (ParseError, InvalidAction, InvalidQuantity):
        pass


def fuzz_parse(n: int, seed: int = 7) -> None:
    """Shared fuzz loop (also used by the acceptance suite)."""
    rng = random.Random(seed)
    interesting = b'{}[]":,-0123456789actionquantity'
    for _ in range(n):
        length = rng.randrange(0, 120)
        if rng.random() < 0.5:
            raw = bytes(rng.randrange(256) for _ in range(length))
        else:
            raw = bytes(rng.choice(interesting) for _ in range(length))
        try:
            d = parse_decision(raw)
            assert isinstance(d, Decision)
        except (ParseError, InvalidAction, InvalidQuantity):
            pass


def test_parse_fuzz_10k():
    fuzz_parse(10_000)


# -- agents --------------------------------------------------------------

def _signals(direction_by_id):
    out = {}
    for sid in ("S1", "S2", "S3", "S4"):
        direction = direction_by_id.get(sid, "none")
        clause = f"{sid}.entry" if direction == "buy" else (
            f"{sid}.exit" if direction == "sell" else None)
        out[sid] = StrategySignal(sid, direction, clause)
    return out


def test_scripted_agent_sequence_then_hold():
    agent = ScriptedAgent([Decision(1), Decision(-1)])
    prompt = build_prompt("free", _state(), LIB)
    assert agent.decide(prompt, {}).action == 1
    assert agent.decide(prompt, {}).action == -1
    assert agent.decide(prompt, {}).action == 0


def test_rule_follower_cites_triggered_clause():
    agent = RuleFollowerAgent(priority=("S2",))
    d = agent.decide(None, _signals({"S2": "buy"}))
    assert d.action == 1
    assert d.cited_clauses == ("S2.entry",)
    assert d.quantity is None


def test_rule_follower_holds_without_signal():
    agent = RuleFollowerAgent(priority=("S2",))
    d = agent.decide(None, _signals({}))
    assert d.action == 0 and d.cited_clauses == ()


def test_rule_follower_priority_order():
    agent = RuleFollowerAgent(priority=("S4", "S2"))
    d = agent.decide(None, _signals({"S2": "buy", "S4": "sell"}))
    assert d.action == -1 and d.cited_clauses == ("S4.exit",)


def _remote_spec(**kw):
    defaults = dict(agent_id="remote-test", kind="remote",
                    url="http://model.test/v1/chat/completions",
                    model="m", max_retries=2, timeout=5.0)
    defaults.update(kw)
    return AgentSpec(**defaults)


def _chat_response(content):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def test_remote_agent_parses_good_response():
    transport = httpx.MockTransport(
        lambda req: _chat_response('{"action":1,"rationale":"buy","cited_clauses":[]}')
    )
    agent = RemoteAgent(_remote_spec(), transport=transport)
    d = agent.decide(build_prompt("free", _state(), LIB), {})
    assert d.action == 1


def test_remote_agent_sends_chat_completions_body(monkeypatch):
    captured = {}

    def handler(request):
        captured["body"] = json.loads(request.content)
        captured["auth"] = request.headers.get("Authorization")
        return _chat_response('{"action":0,"rationale":"hold"}')

    monkeypatch.setenv("TEST_TOKEN_VAR", "sekret")
    agent = RemoteAgent(_remote_spec(auth_env="TEST_TOKEN_VAR"),
                        transport=httpx.MockTransport(handler))
    agent.decide(build_prompt("strict", _state(), LIB), {})
    body = captured["body"]
    assert body["model"] == "m"
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["temperature"] == 0.2
    assert captured["auth"] == "Bearer sekret"


def test_remote_agent_falls_back_to_hold_on_garbage():
    calls = []

    def handler(request):
        calls.append(1)
        return _chat_response("utter garbage, no json at all")

    agent = RemoteAgent(_remote_spec(max_retries=2), transport=httpx.MockTransport(handler))
    d = agent.decide(build_prompt("free", _state(), LIB), {})
    assert d.action == 0
    assert d.rationale == "fallback: unparseable output"
    assert len(calls) == 3  # initial + 2 retries


def test_remote_agent_network_failure_raises():
    def handler(request):
        raise httpx.ConnectError("refused")

    agent = RemoteAgent(_remote_spec(max_retries=1), transport=httpx.MockTransport(handler))
    with pytest.raises(EndpointUnavailable):
        agent.decide(build_prompt("free", _state(), LIB), {})


def test_remote_agent_http_error_raises():
    agent = RemoteAgent(
        _remote_spec(max_retries=0),
        transport=httpx.MockTransport(lambda req: httpx.Response(503, text="down")),
    )
    with pytest.raises(EndpointUnavailable):
        agent.decide(build_prompt("free", _state(), LIB), {})
