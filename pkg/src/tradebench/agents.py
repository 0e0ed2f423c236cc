"""Structured decision contract, mode-specific prompts, and agent clients.

Three agent kinds:
  scripted       replays a fixed decision sequence (holds once exhausted)
  rule_follower  deterministic oracle that trades exactly when its selected
                 strategies fire, citing the triggered clause
  remote         chat-completions HTTP client with retries, timeout and an
                 optional shared rate limiter

Decision wire schema (exact):
  {"action": -1|0|1, "quantity": int>=0 (optional),
   "rationale": string, "cited_clauses": [string] (optional)}
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import httpx

from .errors import (
    EndpointUnavailable,
    InvalidAction,
    InvalidQuantity,
    ParseError,
)
from .market_data import MarketState
from .strategies import ClauseLibrary, StrategySignal

DECISION_SCHEMA_TEXT = (
    'Respond with a single JSON object and nothing else:\n'
    '{"action": -1|0|1, "quantity": <non-negative integer, optional>, '
    '"rationale": "<string>", "cited_clauses": ["<clause id>", ...] (optional)}\n'
    "action 1 = buy, -1 = sell, 0 = hold. Omit quantity on a buy to spend as much "
    "cash as possible; omit it on a sell to close the entire position."
)


@dataclass(frozen=True)
class Decision:
    action: int  # -1 sell, 0 hold, 1 buy
    quantity: Optional[int] = None
    rationale: str = ""
    cited_clauses: tuple[str, ...] = ()

    def __post_init__(self):
        if self.action not in (-1, 0, 1):
            raise InvalidAction(f"action {self.action}")
        if self.quantity is not None and self.quantity < 0:
            raise InvalidQuantity(f"quantity {self.quantity}")
        if self.action == 0 and self.quantity not in (None, 0):
            raise InvalidQuantity("hold decision cannot carry a quantity")

    def to_json(self) -> dict:
        return {
            "action": self.action,
            "quantity": self.quantity,
            "rationale": self.rationale,
            "cited_clauses": list(self.cited_clauses),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Decision":
        return cls(
            action=obj["action"],
            quantity=obj.get("quantity"),
            rationale=obj.get("rationale", ""),
            cited_clauses=tuple(obj.get("cited_clauses") or ()),
        )


@dataclass(frozen=True)
class PromptBundle:
    mode: str  # "free" | "guided" | "strict"
    system_text: str
    user_text: str


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    kind: str  # "scripted" | "rule_follower" | "remote"
    # scripted
    decisions: tuple[Decision, ...] = ()
    # rule_follower: strategies to follow, first firing signal wins
    priority: tuple[str, ...] = ("S1", "S2", "S3", "S4")
    # remote
    url: str = ""
    model: str = ""
    temperature: float = 0.2
    max_retries: int = 2
    timeout: float = 30.0
    auth_env: str = ""  # env var holding the bearer token

    def __post_init__(self):
        if self.kind not in ("scripted", "rule_follower", "remote"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


# -- prompt scaffolding --------------------------------------------------

_BASE_SYSTEM = (
    "You are a trading agent managing a single-stock account. Once per day, "
    "after the market close, you issue exactly one instruction that will be "
    "executed at the next day's opening price."
)

_GUIDED_PREFIX = (
    "A library of expert strategy clauses is provided as reference, allowing "
    "adjustment for current news and your own judgment:"
)

_STRICT_PREFIX = (
    "You must strictly adhere to the following strategy library. Trade only "
    "when a clause applies, and the rationale must explicitly cite specific "
    "clauses from the strategy library by id:"
)

STRICT_USER_MANDATE = (
    "Strict mode is in force: the rationale must explicitly cite specific "
    "clauses, and cited_clauses must be non-empty for any action other than 0."
)


def build_prompt(mode: str, state: MarketState, clause_lib: ClauseLibrary,
                 news_digest_limit: int = 10) -> PromptBundle:
    """Render the mode-specific prompt for one decision day.

    Free prompts carry no strategy text at all; guided prompts include the
    clause library marked as reference; strict prompts include the same
    library plus the mandatory-citation instruction, so the strict scaffold
    is a strict superset of the guided one.
    """
    if mode not in ("free", "guided", "strict"):
        raise ValueError(f"unknown mode {mode!r}")

    system = _BASE_SYSTEM
    if mode == "guided":
        system += "\n\n" + _GUIDED_PREFIX + "\n" + clause_lib.as_text()
    elif mode == "strict":
        system += "\n\n" + _STRICT_PREFIX + "\n" + clause_lib.as_text()
        # strict keeps the guided framing too so its instruction set strictly
        # contains the guided strategy content
        system += "\n\n(The library above is authoritative, not merely reference.)"

    lines: list[str] = []
    lines.append(f"Ticker: {state.ticker}")
    lines.append(f"Trading day: {state.gate_day.isoformat()} (after close)")
    lines.append("")
    lines.append("Recent daily bars (date open high low close volume):")
    for b in state.bars_history[-15:]:
        lines.append(
            f"  {b.trading_day.isoformat()} {b.open:g} {b.high:g} {b.low:g} "
            f"{b.close:g} {b.volume}"
        )
    if state.news_visible:
        lines.append("")
        lines.append("Recent news (most recent first):")
        for n in list(reversed(state.news_visible))[:news_digest_limit]:
            tags = (" [" + ", ".join(n.key_events) + "]") if n.key_events else ""
            lines.append(
                f"  {n.available_at.isoformat()} sentiment {n.sentiment:+.2f}: "
                f"{n.headline}{tags}"
            )
    if state.fundamentals_visible:
        lines.append("")
        lines.append("Fundamental documents on file (section names):")
        for doc in state.fundamentals_visible:
            names = ", ".join(name for name, _ in doc.section_summaries)
            lines.append(f"  published {doc.published_on.isoformat()}: {names}")
    h = state.holding
    lines.append("")
    lines.append(
        "Holding state: cash {cash:.2f}, shares {shares}, avg_cost {avg}, "
        "realized_pnl {rp:.2f}, unrealized_pnl {up:.2f}".format(
            cash=h.cash,
            shares=h.shares,
            avg="n/a" if h.avg_cost is None else f"{h.avg_cost:.4f}",
            rp=h.realized_pnl,
            up=h.unrealized_pnl,
        )
    )
    lines.append("")
    lines.append(DECISION_SCHEMA_TEXT)
    if mode == "strict":
        lines.append("")
        lines.append(STRICT_USER_MANDATE)
    return PromptBundle(mode=mode, system_text=system, user_text="\n".join(lines))


# -- decision parsing ----------------------------------------------------

def _extract_first_json_object(text: str) -> dict:
    decoder = json.JSONDecoder()
    idx = text.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(text, idx)
        except json.JSONDecodeError:
            idx = text.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = text.find("{", idx + 1)
    raise ParseError("no JSON object found in agent output")


def parse_decision(raw) -> Decision:
    """Extract and validate a Decision from arbitrary agent output.

    Tolerates surrounding prose and code fences: the first parseable JSON
    object in the text wins. Never crashes on arbitrary bytes; anything
    unusable raises a typed error.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    if not isinstance(raw, str):
        raise ParseError(f"expected text, got {type(raw).__name__}")
    obj = _extract_first_json_object(raw)

    if "action" not in obj:
        raise ParseError("decision object missing 'action'")
    action = obj["action"]
    if isinstance(action, bool) or not isinstance(action, int):
        raise InvalidAction(f"action {action!r} is not an integer")
    if action not in (-1, 0, 1):
        raise InvalidAction(f"action {action} not in {{-1, 0, 1}}")

    quantity = obj.get("quantity")
    if quantity is not None:
        if isinstance(quantity, bool):
            raise InvalidQuantity(f"quantity {quantity!r}")
        if isinstance(quantity, float):
            if not quantity.is_integer():
                raise InvalidQuantity(f"quantity {quantity} is not an integer")
            quantity = int(quantity)
        if not isinstance(quantity, int):
            raise InvalidQuantity(f"quantity {quantity!r} is not an integer")
        if quantity < 0:
            raise InvalidQuantity(f"quantity {quantity} is negative")

    rationale = obj.get("rationale")
    if not isinstance(rationale, str):
        raise ParseError("decision object missing string 'rationale'")

    cited = obj.get("cited_clauses", [])
    if cited is None:
        cited = []
    if not isinstance(cited, list) or not all(isinstance(c, str) for c in cited):
        raise ParseError("cited_clauses must be a list of strings")

    if action == 0 and quantity not in (None, 0):
        raise InvalidQuantity("hold decision cannot carry a quantity")
    return Decision(action=action, quantity=quantity, rationale=rationale,
                    cited_clauses=tuple(cited))


# -- agents --------------------------------------------------------------

class Agent:
    agent_id: str = "agent"
    last_raw_response: Optional[str] = None

    def decide(self, prompt: PromptBundle, signals: dict[str, StrategySignal]) -> Decision:
        raise NotImplementedError


class ScriptedAgent(Agent):
    """Replays a fixed decision sequence; holds once the script runs out."""

    def __init__(self, decisions: Sequence[Decision], agent_id: str = "scripted"):
        self.agent_id = agent_id
        self._decisions = list(decisions)
        self._cursor = 0

    def reset(self):
        self._cursor = 0

    def decide(self, prompt, signals) -> Decision:
        if self._cursor < len(self._decisions):
            d = self._decisions[self._cursor]
            self._cursor += 1
            return d
        return Decision(action=0, rationale="script exhausted: hold")


class RuleFollowerAgent(Agent):
    """Oracle that executes its strategies' signals verbatim.

    Walks the configured priority order; the first firing signal becomes the
    action, with the triggered clause cited and quantity left absent
    (max-affordable buy / full-position sell semantics).
    """

    def __init__(self, priority: Sequence[str] = ("S1", "S2", "S3", "S4"),
                 agent_id: str = "rule_follower"):
        self.agent_id = agent_id
        self.priority = tuple(priority)

    def decide(self, prompt, signals) -> Decision:
        for sid in self.priority:
            sig = signals.get(sid)
            if sig is None or sig.direction == "none":
                continue
            action = 1 if sig.direction == "buy" else -1
            return Decision(
                action=action,
                quantity=None,
                rationale=f"{sig.triggered_clause} triggered",
                cited_clauses=(sig.triggered_clause,),
            )
        return Decision(action=0, rationale="no strategy clause triggered")


class RateLimiter:
    """Token bucket shared across concurrently running episodes."""

    def __init__(self, rate_per_sec: float, burst: int = 1):
        self.rate = rate_per_sec
        self.capacity = max(1, burst)
        self._tokens = float(self.capacity)
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


class RemoteAgent(Agent):
    """Chat-completions client: POST {model, messages, temperature}, read
    choices[0].message.content.

    Unparseable output is retried up to max_retries times, then degrades to a
    hold decision. Network failures are retried the same number of times and
    then abort the episode with EndpointUnavailable.
    """

    def __init__(self, spec: AgentSpec, limiter: Optional[RateLimiter] = None,
                 transport: Optional[httpx.BaseTransport] = None):
        self.agent_id = spec.agent_id
        self.spec = spec
        self.limiter = limiter
        self._client = httpx.Client(timeout=spec.timeout, transport=transport)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.spec.auth_env:
            token = os.environ.get(self.spec.auth_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def _call(self, prompt: PromptBundle) -> str:
        if self.limiter is not None:
            self.limiter.acquire()
        body = {
            "model": self.spec.model,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
            "temperature": self.spec.temperature,
        }
        resp = self._client.post(self.spec.url, json=body, headers=self._headers())
        resp.raise_for_status()
        data = resp.json()
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise ParseError(f"response missing choices[0].message.content: {e}") from e

    def decide(self, prompt, signals) -> Decision:
        attempts = self.spec.max_retries + 1
        network_error: Optional[Exception] = None
        for _ in range(attempts):
            try:
                raw = self._call(prompt)
            except httpx.HTTPError as e:
                network_error = e
                continue
            self.last_raw_response = raw
            try:
                return parse_decision(raw)
            except (ParseError, InvalidAction, InvalidQuantity):
                continue
        if network_error is not None:
            raise EndpointUnavailable(
                f"{self.spec.url}: {network_error} after {attempts} attempts"
            )
        return Decision(action=0, rationale="fallback: unparseable output")

    def close(self):
        self._client.close()


class SequenceReplayAgent(Agent):
    """Replays a persisted decision sequence in order (used by replay)."""

    def __init__(self, decisions: Sequence[Decision], agent_id: str):
        self.agent_id = agent_id
        self._decisions = list(decisions)
        self._cursor = 0

    def decide(self, prompt, signals) -> Decision:
        if self._cursor >= len(self._decisions):
            raise IndexError("transcript shorter than episode")
        d = self._decisions[self._cursor]
        self._cursor += 1
        return d


def build_agent(spec: AgentSpec, limiter: Optional[RateLimiter] = None) -> Agent:
    if spec.kind == "scripted":
        return ScriptedAgent(spec.decisions, agent_id=spec.agent_id)
    if spec.kind == "rule_follower":
        return RuleFollowerAgent(spec.priority, agent_id=spec.agent_id)
    if spec.kind == "remote":
        return RemoteAgent(spec, limiter=limiter)
    raise ValueError(f"unknown agent kind {spec.kind!r}")
