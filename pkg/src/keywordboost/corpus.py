"""Price and tweet ingestion, text sanitization, interval labeling and bucketing."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import json
import math
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DomainError, GapError, OrderingError, ParseError

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
DEFAULT_QUERY_TERMS = frozenset({"bitcoin", "btc"})
STOPWORD_FILES = (
    "nltk_english_stopwords.txt",
    "gensim_stopwords.txt",
    "prepositions_conjunctions.txt",
)


class Direction(str, enum.Enum):
    INCREASE = "Increase"
    DECREASE = "Decrease"

    @property
    def short(self):
        return "In" if self is Direction.INCREASE else "De"

    @property
    def label(self):
        return 1 if self is Direction.INCREASE else 0


def parse_timestamp(text):
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts):
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def _text_stream(stream):
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8"))
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8")


# --------------------------------------------------------------------------
# prices and labels


@dataclass(frozen=True)
class PriceBar:
    timestamp: datetime
    close: float


@dataclass(frozen=True)
class IntervalSpec:
    duration: timedelta
    anchor: datetime = EPOCH

    def __post_init__(self):
        seconds = int(self.duration.total_seconds())
        if seconds <= 0 or seconds != self.duration.total_seconds() or 86400 % seconds:
            raise DomainError(f"interval duration {self.duration} does not divide 24 hours")

    @classmethod
    def from_name(cls, name, anchor=EPOCH):
        try:
            hours = INTERVAL_NAMES[name]
        except KeyError:
            raise DomainError(f"unknown interval {name!r}; expected one of {sorted(INTERVAL_NAMES)}") from None
        return cls(timedelta(hours=hours), anchor)

    @property
    def seconds(self):
        return int(self.duration.total_seconds())

    @property
    def name(self):
        hours = self.seconds // 3600
        for key, value in INTERVAL_NAMES.items():
            if value * 3600 == self.seconds:
                return key
        return f"{hours}h" if self.seconds % 3600 == 0 else f"{self.seconds}s"

    @property
    def dataset_prefix(self):
        """Prefix of the tweet dataset names, e.g. ``Hour`` in ``HourIn``."""
        return {3600: "Hour", 14400: "4Hour", 86400: "Daily"}.get(self.seconds, f"{self.seconds // 3600}Hour")

    @property
    def table_prefix(self):
        """Prefix of the encoded table names, e.g. ``Hk`` in ``HkIn``."""
        return {3600: "Hk", 14400: "4Hk", 86400: "Dk"}.get(self.seconds, f"{self.seconds // 3600}Hk")

    def index_of(self, ts):
        """Index k of the half-open interval [anchor + k*d, anchor + (k+1)*d) holding ts."""
        return math.floor((ts - self.anchor).total_seconds() / self.seconds)

    def boundary(self, k):
        return self.anchor + k * self.duration


INTERVAL_NAMES = {"hourly": 1, "4hourly": 4, "daily": 24}


@dataclass(frozen=True)
class LabeledInterval:
    start: datetime
    end: datetime
    log_return: float

    @property
    def label(self):
        # zero return is not a positive return
        return Direction.INCREASE if self.log_return > 0 else Direction.DECREASE


def parse_price_bars(stream, format="csv"):
    if format != "csv":
        raise DomainError(f"unsupported price format {format!r}")
    reader = csv.reader(_text_stream(stream))
    bars = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            header_seen = True
            if [c.strip().lower() for c in row[:2]] == ["timestamp", "close"]:
                continue
        if len(row) < 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
        try:
            ts = parse_timestamp(row[0])
            close = float(row[1])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not close > 0 or not math.isfinite(close):
            raise DomainError(f"line {lineno}: close must be positive, got {row[1].strip()}")
        if bars and ts <= bars[-1].timestamp:
            raise OrderingError(f"line {lineno}: timestamp {row[0].strip()} not after previous bar")
        bars.append(PriceBar(ts, close))
    return bars


def compute_interval_labels(bars: Sequence[PriceBar], spec: IntervalSpec) -> list[LabeledInterval]:
    """Label every interval fully covered by the bar series.

    The close at a boundary is the last bar at or before it, and that bar must
    be less than one interval duration old.
    """
    if not bars:
        raise DomainError("no price bars")
    times = [bar.timestamp for bar in bars]
    first = math.ceil((times[0] - spec.anchor).total_seconds() / spec.seconds)
    last = spec.index_of(times[-1])
    if last - first < 1:
        raise DomainError("price bars cover no complete interval")

    def close_at(k):
        b = spec.boundary(k)
        pos = bisect.bisect_right(times, b) - 1
        if pos < 0 or b - times[pos] >= spec.duration:
            raise GapError(b)
        return bars[pos].close

    intervals = []
    prev = close_at(first)
    for k in range(first, last):
        cur = close_at(k + 1)
        intervals.append(LabeledInterval(spec.boundary(k), spec.boundary(k + 1), math.log(cur / prev)))
        prev = cur
    return intervals


# --------------------------------------------------------------------------
# tweets


@dataclass(frozen=True)
class RawTweet:
    id: str
    timestamp: datetime
    text: str
    retweet_count: int = 0
    is_retweet: bool = False
    is_reply: bool = False
    is_quote: bool = False
    is_promoted: bool = False
    author_is_bot: bool = False
    author_suspended: bool = False

    @property
    def rejected(self):
        return (self.is_retweet or self.is_reply or self.is_quote or self.is_promoted
                or self.author_is_bot or self.author_suspended)


@dataclass(frozen=True)
class CleanTweet:
    id: str
    timestamp: datetime
    tokens: tuple
    retweet_count: int = 0


_FLAGS = ("is_retweet", "is_reply", "is_quote", "is_promoted", "author_is_bot", "author_suspended")


def parse_tweets(stream, format="jsonl"):
    if format != "jsonl":
        raise DomainError(f"unsupported tweet format {format!r}")
    tweets = []
    for lineno, line in enumerate(_text_stream(stream), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        try:
            tweet_id = obj["id"]
            ts = parse_timestamp(obj["timestamp"])
            text = obj.get("text", "")
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", lineno) from None
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad timestamp: {exc}", lineno) from None
        rt = obj.get("retweet_count", 0)
        if isinstance(rt, bool) or not isinstance(rt, int):
            raise ParseError(f"retweet_count must be an integer, got {rt!r}", lineno)
        if rt < 0:
            raise DomainError(f"line {lineno}: retweet_count must be non-negative, got {rt}")
        if not isinstance(text, str):
            raise ParseError("text must be a string", lineno)
        flags = {}
        for name in _FLAGS:
            value = obj.get(name, False)
            if not isinstance(value, bool):
                raise ParseError(f"{name} must be a boolean", lineno)
            flags[name] = value
        tweets.append(RawTweet(str(tweet_id), ts, text, rt, **flags))
    return tweets


_URL = re.compile(r"(?:https?://|www\.)\S*")
_EMAIL = re.compile(r"[^\s@]+@[^\s@]+\.[^\s@]+")
_SIGIL = re.compile(r"(?<!\S)[#@]+")
_DIGIT = re.compile(r"[0-9]")
_NON_LETTER = re.compile(r"[^a-z]+")


def sanitize(raw: RawTweet, stopwords=frozenset(), query_terms=DEFAULT_QUERY_TERMS):
    """Return the cleaned tweet, or None when the tweet is excluded by its flags."""
    if raw.rejected:
        return None
    text = raw.text.lower()
    text = _URL.sub(" ", text)
    text = _EMAIL.sub(" ", text)
    text = _SIGIL.sub("", text)
    tokens = []
    for token in text.split():
        if _DIGIT.search(token) or not token.isascii():
            continue
        # leftover punctuation acts as a separator, so "to-the" yields two tokens
        for part in _NON_LETTER.split(token):
            if part and part not in stopwords and part not in query_terms:
                tokens.append(part)
    return CleanTweet(raw.id, raw.timestamp, tuple(tokens), raw.retweet_count)


def sanitize_all(raws: Iterable[RawTweet], stopwords=frozenset(), query_terms=DEFAULT_QUERY_TERMS):
    """Sanitize in input order; returns (clean tweets, rejected count)."""
    clean, rejected = [], 0
    for raw in raws:
        tweet = sanitize(raw, stopwords, query_terms)
        if tweet is None:
            rejected += 1
        else:
            clean.append(tweet)
    return clean, rejected


def default_stopword_files():
    base = resources.files("keywordboost") / "data"
    return [Path(str(base / name)) for name in STOPWORD_FILES]


def load_stopwords(paths=None):
    """Union of one-term-per-line stopword files (``#`` starts a comment)."""
    words = set()
    for path in paths if paths is not None else default_stopword_files():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip().lower()
                if line:
                    words.add(line)
    return frozenset(words)


# --------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class Member:
    """Tweets posted during ``interval``, grouped by the direction of ``following``."""

    interval: LabeledInterval
    following: LabeledInterval
    tweets: tuple


@dataclass(frozen=True)
class IntervalDataset:
    dataset_id: str
    direction: Direction
    spec: IntervalSpec
    members: tuple = ()

    @property
    def tweets(self):
        return [t for m in self.members for t in m.tweets]

    @property
    def tweet_count(self):
        return sum(len(m.tweets) for m in self.members)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class BucketResult:
    increase: IntervalDataset
    decrease: IntervalDataset
    dropped_last: int = 0
    out_of_range: int = 0

    def dataset(self, direction):
        return self.increase if direction is Direction.INCREASE else self.decrease


def bucket_tweets(tweets: Sequence[CleanTweet], intervals: Sequence[LabeledInterval], spec: IntervalSpec):
    """Attach each tweet to its interval and file it under the next interval's direction."""
    for a, b in zip(intervals, intervals[1:]):
        if a.end != b.start:
            raise DomainError(f"intervals not contiguous at {format_timestamp(a.end)}")
    by_interval = [[] for _ in intervals]
    dropped_last = out_of_range = 0
    first = spec.index_of(intervals[0].start) if intervals else 0
    for tweet in sorted(tweets, key=lambda t: t.timestamp):
        pos = spec.index_of(tweet.timestamp) - first
        if not intervals or pos < 0 or pos >= len(intervals):
            out_of_range += 1
        elif pos == len(intervals) - 1:
            dropped_last += 1
        else:
            by_interval[pos].append(tweet)
    members = {Direction.INCREASE: [], Direction.DECREASE: []}
    for pos in range(len(intervals) - 1):
        following = intervals[pos + 1]
        members[following.label].append(Member(intervals[pos], following, tuple(by_interval[pos])))

    def make(direction):
        return IntervalDataset(spec.dataset_prefix + direction.short, direction, spec, tuple(members[direction]))

    return BucketResult(make(Direction.INCREASE), make(Direction.DECREASE), dropped_last, out_of_range)


def select_extreme_intervals(dataset: IntervalDataset, q: float) -> IntervalDataset:
    """Keep the ceil(q*N) members whose following interval moved the most."""
    if not (0 < q <= 1):
        raise DomainError(f"extreme quantile must be in (0, 1], got {q}")
    n = len(dataset.members)
    if n == 0:
        raise DomainError(f"dataset {dataset.dataset_id} is empty")
    keep = math.ceil(round(q * n, 9))
    ranked = sorted(dataset.members, key=lambda m: (-abs(m.following.log_return), m.interval.start))
    chosen = sorted(ranked[:keep], key=lambda m: m.interval.start)
    return IntervalDataset(dataset.dataset_id, dataset.direction, dataset.spec, tuple(chosen))
