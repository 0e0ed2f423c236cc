"""Point-in-time market data store.

Loads daily bars (CSV), news (JSON Lines) and fundamentals (JSON), and serves
them through a hard time gate: a view assembled for day T can never contain a
record timestamped after T. Look-ahead access is a constructor-level error,
not a convention.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import (
    CalendarTooShort,
    DuplicateBar,
    LookAheadViolation,
    MalformedRecord,
    NonPositivePrice,
    OverlappingWindows,
    SentimentOutOfRange,
    UnknownTradingDay,
)

UTC = dt.timezone.utc


@dataclass(frozen=True)
class Bar:
    ticker: str
    trading_day: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            if getattr(self, name) <= 0:
                raise NonPositivePrice(f"{self.ticker} {self.trading_day}: {name} <= 0")
        if self.volume < 0:
            raise MalformedRecord(f"{self.ticker} {self.trading_day}: negative volume")
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise MalformedRecord(
                f"{self.ticker} {self.trading_day}: OHLC ordering violated "
                f"(o={self.open} h={self.high} l={self.low} c={self.close})"
            )


@dataclass(frozen=True)
class NewsItem:
    ticker: str
    available_at: dt.datetime
    headline: str
    summary: str
    sentiment: float
    key_events: tuple[str, ...] = ()

    def __post_init__(self):
        if self.available_at.tzinfo is None:
            raise MalformedRecord(f"news '{self.headline}': available_at lacks timezone")
        if not -1.0 <= self.sentiment <= 1.0:
            raise SentimentOutOfRange(f"news '{self.headline}': sentiment {self.sentiment}")


@dataclass(frozen=True)
class FundamentalDoc:
    ticker: str
    published_on: dt.date
    section_summaries: tuple[tuple[str, str], ...]


def day_close_cutoff(day: dt.date) -> dt.datetime:
    """Latest instant whose information counts as visible on `day`.

    News is visible on day T iff available_at falls on or before the end of
    calendar day T in UTC; decisions are formed after the close of T.
    """
    return dt.datetime.combine(day + dt.timedelta(days=1), dt.time(0, 0), tzinfo=UTC)


@dataclass(frozen=True)
class EvaluationWindow:
    label: str
    kind: str  # "short_tactical" | "long_strategic"
    trading_days: tuple[dt.date, ...]

    def __post_init__(self):
        days = self.trading_days
        if any(b <= a for a, b in zip(days, days[1:])):
            raise MalformedRecord(f"window {self.label}: dates not strictly increasing")
        n = len(days)
        if self.kind == "short_tactical" and not 10 <= n <= 20:
            raise MalformedRecord(f"window {self.label}: short window has {n} days, want 10..20")
        if self.kind == "long_strategic" and not 80 <= n <= 100:
            raise MalformedRecord(f"window {self.label}: long window has {n} days, want 80..100")
        if self.kind not in ("short_tactical", "long_strategic"):
            raise MalformedRecord(f"window {self.label}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class MarketState:
    """Everything an agent may see on `gate_day`, and nothing later."""

    ticker: str
    gate_day: dt.date
    bars_history: tuple[Bar, ...]
    news_visible: tuple[NewsItem, ...]
    fundamentals_visible: tuple[FundamentalDoc, ...]
    holding: "object"  # HoldingState; kept untyped to avoid an import cycle

    def __post_init__(self):
        cutoff = day_close_cutoff(self.gate_day)
        for b in self.bars_history:
            if b.trading_day > self.gate_day:
                raise LookAheadViolation(f"bar {b.trading_day} > gate {self.gate_day}")
        for n in self.news_visible:
            if n.available_at > cutoff:
                raise LookAheadViolation(f"news at {n.available_at} > gate close {cutoff}")
        for f in self.fundamentals_visible:
            if f.published_on > self.gate_day:
                raise LookAheadViolation(f"doc {f.published_on} > gate {self.gate_day}")
        days = [b.trading_day for b in self.bars_history]
        if any(b <= a for a, b in zip(days, days[1:])):
            raise MalformedRecord("bars_history not strictly increasing")

    @property
    def closes(self) -> list[float]:
        return [b.close for b in self.bars_history]


# -- loading -------------------------------------------------------------

BAR_HEADER = ["ticker", "date", "open", "high", "low", "close", "volume"]


def load_bars(source) -> list[Bar]:
    """Parse the bar CSV (`ticker,date,open,high,low,close,volume`).

    `source` is a path or an open text stream. Bars come back sorted by
    (ticker, trading_day); a repeated (ticker, day) pair is an error.
    """
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8", newline="")
        close_after = True
    try:
        reader = csv.reader(source)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRecord("empty bar file")
        if [h.strip() for h in header] != BAR_HEADER:
            raise MalformedRecord(f"bad bar header {header!r}, want {BAR_HEADER!r}")
        bars: list[Bar] = []
        seen: set[tuple[str, dt.date]] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise MalformedRecord(f"line {lineno}: expected 7 fields, got {len(row)}")
            try:
                ticker = row[0].strip()
                day = dt.date.fromisoformat(row[1].strip())
                o, h, l, c = (float(x) for x in row[2:6])
                volume = int(float(row[6]))
            except ValueError as e:
                raise MalformedRecord(f"line {lineno}: {e}") from e
            key = (ticker, day)
            if key in seen:
                raise DuplicateBar(f"line {lineno}: duplicate bar for {ticker} {day}")
            seen.add(key)
            bars.append(Bar(ticker, day, o, h, l, c, volume))
        bars.sort(key=lambda b: (b.ticker, b.trading_day))
        return bars
    finally:
        if close_after:
            source.close()


def load_news(source) -> list[NewsItem]:
    """Parse the news JSON Lines file; items come back sorted by available_at."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        items: list[NewsItem] = []
        for lineno, line in enumerate(source, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecord(f"news line {lineno}: {e}") from e
            items.append(_news_from_obj(obj, where=f"news line {lineno}"))
        items.sort(key=lambda n: n.available_at)
        return items
    finally:
        if close_after:
            source.close()


def _news_from_obj(obj: dict, where: str) -> NewsItem:
    try:
        available_at = dt.datetime.fromisoformat(obj["available_at"])
        sentiment = float(obj["sentiment"])
        item = NewsItem(
            ticker=str(obj["ticker"]),
            available_at=available_at,
            headline=str(obj["headline"]),
            summary=str(obj["summary"]),
            sentiment=sentiment,
            key_events=tuple(str(t) for t in obj.get("key_events", [])),
        )
    except SentimentOutOfRange:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedRecord(f"{where}: {e}") from e
    return item


def load_fundamentals(source) -> list[FundamentalDoc]:
    """Parse the fundamentals JSON file (a list of document objects)."""
    close_after = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close_after = True
    try:
        try:
            data = json.load(source)
        except json.JSONDecodeError as e:
            raise MalformedRecord(f"fundamentals: {e}") from e
        if not isinstance(data, list):
            raise MalformedRecord("fundamentals: top-level value must be a list")
        docs = []
        for i, obj in enumerate(data):
            try:
                docs.append(
                    FundamentalDoc(
                        ticker=str(obj["ticker"]),
                        published_on=dt.date.fromisoformat(obj["published_on"]),
                        section_summaries=tuple(
                            (str(s["name"]), str(s["text"])) for s in obj["sections"]
                        ),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise MalformedRecord(f"fundamentals[{i}]: {e}") from e
        docs.sort(key=lambda d: (d.ticker, d.published_on))
        return docs
    finally:
        if close_after:
            source.close()


# -- store + gate --------------------------------------------------------

@dataclass
class MarketStore:
    """Immutable-after-load container for one experiment's records."""

    bars: dict[str, tuple[Bar, ...]] = field(default_factory=dict)
    news: dict[str, tuple[NewsItem, ...]] = field(default_factory=dict)
    fundamentals: dict[str, tuple[FundamentalDoc, ...]] = field(default_factory=dict)

    @classmethod
    def from_records(
        cls,
        bars: Iterable[Bar],
        news: Iterable[NewsItem] = (),
        fundamentals: Iterable[FundamentalDoc] = (),
    ) -> "MarketStore":
        store = cls()
        by_ticker: dict[str, list[Bar]] = {}
        for b in bars:
            by_ticker.setdefault(b.ticker, []).append(b)
        for t, bs in by_ticker.items():
            bs.sort(key=lambda b: b.trading_day)
            store.bars[t] = tuple(bs)
        news_by: dict[str, list[NewsItem]] = {}
        for n in news:
            news_by.setdefault(n.ticker, []).append(n)
        for t, ns in news_by.items():
            ns.sort(key=lambda n: n.available_at)
            store.news[t] = tuple(ns)
        fund_by: dict[str, list[FundamentalDoc]] = {}
        for f in fundamentals:
            fund_by.setdefault(f.ticker, []).append(f)
        for t, fs in fund_by.items():
            fs.sort(key=lambda f: f.published_on)
            store.fundamentals[t] = tuple(fs)
        return store

    @classmethod
    def load(cls, bar_path, news_path=None, fundamentals_path=None) -> "MarketStore":
        return cls.from_records(
            load_bars(bar_path),
            load_news(news_path) if news_path else (),
            load_fundamentals(fundamentals_path) if fundamentals_path else (),
        )

    def calendar(self, ticker: str) -> tuple[dt.date, ...]:
        """Trading days for `ticker` = days with a bar, ascending."""
        return tuple(b.trading_day for b in self.bars.get(ticker, ()))

    def bar_on(self, ticker: str, day: dt.date) -> Optional[Bar]:
        for b in self.bars.get(ticker, ()):
            if b.trading_day == day:
                return b
        return None


def gated_view(store: MarketStore, ticker: str, gate_day: dt.date, holding) -> MarketState:
    """Assemble the point-in-time state handed to the agent on `gate_day`."""
    calendar = store.calendar(ticker)
    if gate_day not in calendar:
        raise UnknownTradingDay(f"{ticker}: {gate_day} is not a trading day in the store")
    cutoff = day_close_cutoff(gate_day)
    bars = tuple(b for b in store.bars.get(ticker, ()) if b.trading_day <= gate_day)
    news = tuple(n for n in store.news.get(ticker, ()) if n.available_at <= cutoff)
    docs = tuple(f for f in store.fundamentals.get(ticker, ()) if f.published_on <= gate_day)
    # MarketState.__post_init__ re-checks every timestamp; a post-gate record
    # surviving the filters above raises LookAheadViolation there.
    return MarketState(
        ticker=ticker,
        gate_day=gate_day,
        bars_history=bars,
        news_visible=news,
        fundamentals_visible=docs,
        holding=holding,
    )


# -- evaluation windows --------------------------------------------------

@dataclass(frozen=True)
class WindowConfig:
    n_short: int = 3
    short_length: int = 15
    n_long: int = 1
    long_length: int = 90
    short_starts: Optional[tuple[dt.date, ...]] = None  # explicit placement
    long_start: Optional[dt.date] = None


def slice_windows(calendar: Sequence[dt.date], config: WindowConfig) -> list[EvaluationWindow]:
    """Carve evaluation windows out of a trading calendar.

    Short windows must be pairwise disjoint; the long window may overlap them
    (the source periods overlap in practice). Placement is explicit when
    start dates are configured, otherwise short windows pack from the start
    of the calendar and the long window starts at the calendar start.
    """
    calendar = list(calendar)
    windows: list[EvaluationWindow] = []

    def take(start_idx: int, length: int) -> list[dt.date]:
        if start_idx + length > len(calendar):
            raise CalendarTooShort(
                f"need {length} days from index {start_idx}, calendar has {len(calendar)}"
            )
        return calendar[start_idx : start_idx + length]

    def index_of(day: dt.date) -> int:
        try:
            return calendar.index(day)
        except ValueError:
            raise UnknownTradingDay(f"{day} not in calendar")

    short_ranges: list[tuple[int, int]] = []
    if config.short_starts is not None:
        if len(config.short_starts) != config.n_short:
            raise OverlappingWindows(
                f"{config.n_short} short windows requested but "
                f"{len(config.short_starts)} start dates given"
            )
        for start in config.short_starts:
            i = index_of(start)
            short_ranges.append((i, i + config.short_length))
    else:
        for k in range(config.n_short):
            i = k * config.short_length
            short_ranges.append((i, i + config.short_length))

    for i, (a0, a1) in enumerate(short_ranges):
        for b0, b1 in short_ranges[i + 1 :]:
            if a0 < b1 and b0 < a1:
                raise OverlappingWindows("short windows overlap")

    for k, (i0, i1) in enumerate(short_ranges, start=1):
        days = take(i0, i1 - i0)
        windows.append(EvaluationWindow(f"short{k}", "short_tactical", tuple(days)))

    for k in range(config.n_long):
        i = index_of(config.long_start) if config.long_start else 0
        days = take(i, config.long_length)
        windows.append(EvaluationWindow(f"long{k + 1}" if config.n_long > 1 else "long", "long_strategic", tuple(days)))

    return windows
