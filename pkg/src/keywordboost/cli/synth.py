"""Seeded synthetic price and tweet corpora with planted directional keywords."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from datetime import timedelta
from pathlib import Path

import numpy as np

from ..corpus import DEFAULT_QUERY_TERMS, IntervalSpec, format_timestamp, load_stopwords, parse_timestamp
from ..errors import ConfigError
from ..yake import ratcliff_similarity

_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"
_DECOR_STOPWORDS = ("the", "to", "and", "is", "of", "on", "for", "this", "we", "are")


@dataclass(frozen=True)
class SyntheticSpec:
    n_tweets: int = 50_000
    interval: str = "hourly"
    tweets_per_interval: float = 25.0
    planted_per_direction: int = 64
    odds_ratio: float = 3.0
    base_rate: float = 0.02
    vocab_size: int = 2000
    zipf_exponent: float = 0.7
    min_tokens: int = 6
    max_tokens: int = 12
    retweet_mean: float = 2.0
    retweet_dispersion: float = 0.5
    flagged_fraction: float = 0.05
    start: str = "2018-01-01T00:00:00Z"
    seed: int = 0

    def __post_init__(self):
        if self.odds_ratio < 1:
            raise ConfigError("odds_ratio must be >= 1")
        if min(self.n_tweets, self.planted_per_direction, self.vocab_size, self.min_tokens) <= 0:
            raise ConfigError("counts must be positive")
        if self.tweets_per_interval <= 0 or self.max_tokens < self.min_tokens:
            raise ConfigError("tweets_per_interval must be positive and max_tokens >= min_tokens")
        if not (0 < self.base_rate and self.base_rate * self.odds_ratio <= 1):
            raise ConfigError("base_rate * odds_ratio must lie in (0, 1]")
        if self.retweet_mean < 0 or self.retweet_dispersion <= 0 or not (0 <= self.flagged_fraction < 1):
            raise ConfigError("invalid retweet or flag parameters")

    @property
    def n_intervals(self):
        return max(3, math.ceil(self.n_tweets / self.tweets_per_interval))


@dataclass
class SyntheticCorpus:
    prices_csv: str
    tweets_jsonl: str
    manifest: dict

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "prices.csv").write_text(self.prices_csv)
        (out / "tweets.jsonl").write_text(self.tweets_jsonl)
        (out / "manifest.json").write_text(json.dumps(self.manifest, indent=2) + "\n")
        return out / "prices.csv", out / "tweets.jsonl", out / "manifest.json"


def _make_words(rng, count, banned):
    words, seen = [], set(banned)
    while len(words) < count:
        syllables = rng.integers(2, 4, endpoint=True)
        w = "".join(_CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
                    for _ in range(syllables))
        if rng.random() < 0.5:
            w += _CONSONANTS[rng.integers(len(_CONSONANTS))]
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _separated(rng, count, existing, banned, theta=0.9):
    """Fresh words whose similarity to each other and to ``existing`` stays below theta."""
    chosen = []
    pool = list(existing)
    while len(chosen) < count:
        (w,) = _make_words(rng, 1, banned | set(pool))
        cw = Counter(w)
        if all(not _near(w, cw, o, theta) for o in pool):
            chosen.append(w)
            pool.append(w)
    return chosen


def _near(a, ca, b, theta):
    if 2 * min(len(a), len(b)) / (len(a) + len(b)) < theta:
        return False
    if 2 * sum((ca & Counter(b)).values()) / (len(a) + len(b)) < theta:
        return False
    return ratcliff_similarity(a, b) >= theta


def generate_synthetic_corpus(spec: SyntheticSpec) -> SyntheticCorpus:
    """Prices with coin-flip return signs and tweets whose planted keywords lean
    toward the direction of the next interval by ``odds_ratio``."""
    rng = np.random.default_rng(spec.seed)
    interval = IntervalSpec.from_name(spec.interval)
    start = parse_timestamp(spec.start)
    n = spec.n_intervals
    banned = set(load_stopwords()) | set(DEFAULT_QUERY_TERMS)

    filler = _make_words(rng, spec.vocab_size, banned)
    planted_in = _separated(rng, spec.planted_per_direction, [], banned | set(filler))
    planted_de = _separated(rng, spec.planted_per_direction, planted_in, banned | set(filler))
    zipf = np.arange(1, spec.vocab_size + 1, dtype=np.float64) ** -spec.zipf_exponent
    zipf /= zipf.sum()

    # prices: one bar per boundary, n intervals
    signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    magnitude = np.abs(rng.normal(0.0, 0.01, size=n)) + 1e-4
    closes = 10_000.0 * np.exp(np.concatenate([[0.0], np.cumsum(signs * magnitude)]))
    price_lines = ["timestamp,close"]
    for k, close in enumerate(closes):
        price_lines.append(f"{format_timestamp(start + k * interval.duration)},{close:.6f}")
    increase_next = np.append(signs[1:] > 0, False)  # direction of interval t+1
    has_next = np.arange(n) < n - 1

    per_interval = rng.multinomial(spec.n_tweets, np.full(n, 1.0 / n))
    planted = planted_in + planted_de
    n_planted = spec.planted_per_direction
    hi, lo = spec.base_rate * spec.odds_ratio, spec.base_rate
    nb_p = spec.retweet_dispersion / (spec.retweet_dispersion + spec.retweet_mean)
    flags = ("is_retweet", "is_reply", "is_quote", "is_promoted", "author_is_bot", "author_suspended")
    lines = []
    tweet_id = 0
    for t in range(n):
        if has_next[t]:
            rate_in = hi if increase_next[t] else lo
            rate_de = lo if increase_next[t] else hi
        else:
            rate_in = rate_de = lo
        probs = np.concatenate([np.full(n_planted, rate_in), np.full(n_planted, rate_de)])
        seconds = np.sort(rng.integers(0, interval.seconds, size=per_interval[t]))
        for sec in seconds:
            n_tok = rng.integers(spec.min_tokens, spec.max_tokens, endpoint=True)
            tokens = [filler[i] for i in rng.choice(spec.vocab_size, size=n_tok, p=zipf)]
            for i in np.flatnonzero(rng.random(2 * n_planted) < probs):
                word = planted[i]
                if rng.random() < 0.15:
                    word = "#" + word.capitalize()
                tokens.insert(int(rng.integers(len(tokens) + 1)), word)
            u = rng.random(6)
            if u[0] < 0.15:
                tokens.insert(int(rng.integers(len(tokens) + 1)), "#Bitcoin" if u[1] < 0.5 else "$BTC")
            if u[2] < 0.25:
                tokens.insert(int(rng.integers(len(tokens) + 1)), _DECOR_STOPWORDS[int(u[3] * 10) % 10])
            if u[4] < 0.1:
                tokens.append(f"https://t.co/{tweet_id:x}")
            if u[5] < 0.05:
                tokens.insert(int(rng.integers(len(tokens) + 1)), f"{int(rng.integers(1, 500))}x")
            text = " ".join(tokens)
            if rng.random() < 0.1:
                text += "!!! \U0001F680"
            obj = {"id": str(tweet_id),
                   "timestamp": format_timestamp(start + t * interval.duration + timedelta(seconds=int(sec))),
                   "text": text,
                   "retweet_count": int(rng.negative_binomial(spec.retweet_dispersion, nb_p))}
            if rng.random() < spec.flagged_fraction:
                obj[flags[int(rng.integers(len(flags)))]] = True
            lines.append(json.dumps(obj))
            tweet_id += 1

    manifest = {"spec": asdict(spec),
                "planted": {"Increase": planted_in, "Decrease": planted_de},
                "intervals": n,
                "increase_intervals": int(np.sum(signs > 0))}
    return SyntheticCorpus("\n".join(price_lines) + "\n", "\n".join(lines) + "\n", manifest)
