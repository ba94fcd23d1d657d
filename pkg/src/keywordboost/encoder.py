"""Encode tweets against a keyword set and aggregate them into interval rows."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .corpus import Direction, format_timestamp
from .errors import DomainError, EmptyIntervalError


class WeightingScheme(str, enum.Enum):
    BASELINE = "baseline"
    WEIGHTED = "weighted"
    WEIGHTS_DISTRIBUTED = "weights_distributed"


class KeywordWeights:
    """Per-keyword unit weights 0.5 * (1 - kappa_i / sum kappa)."""

    def __init__(self, terms, kappas):
        if not terms:
            raise DomainError("keyword set is empty")
        self.terms = list(terms)
        self.index = {t: i for i, t in enumerate(self.terms)}
        kappas = np.asarray(kappas, dtype=np.float64)
        total = kappas.sum()
        if total > 0:
            self.weights = 0.5 * (1.0 - kappas / total)
        else:
            # all-zero scores: every keyword holds an equal share
            self.weights = np.full(len(kappas), 0.5 * (1.0 - 1.0 / len(kappas)))

    @classmethod
    def from_keywords(cls, keywords):
        return cls(keywords.terms, keywords.kappas)

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True)
class EncodedTweet:
    tweet_id: str
    retweet_count: int
    values: np.ndarray
    terms: tuple = field(default=(), repr=False)

    @property
    def scores(self):
        return dict(zip(self.terms, self.values.tolist()))


def occurrence_counts(tokens, weights: KeywordWeights) -> np.ndarray:
    counts = np.zeros(len(weights))
    for t in tokens:
        i = weights.index.get(t)
        if i is not None:
            counts[i] += 1.0
    return counts


def encode_tweet(tweet, weights: KeywordWeights) -> EncodedTweet:
    values = occurrence_counts(tweet.tokens, weights) * weights.weights
    return EncodedTweet(tweet.id, tweet.retweet_count, values, tuple(weights.terms))


def aggregate_interval(encoded, scheme=WeightingScheme.BASELINE, weighted_mode="add") -> np.ndarray:
    scheme = WeightingScheme(scheme)
    n = len(encoded)
    if n == 0:
        raise EmptyIntervalError("interval has no tweets")
    values = np.array([e.values for e in encoded])
    if scheme is WeightingScheme.BASELINE:
        return values.sum(axis=0) / n
    retweets = np.array([e.retweet_count for e in encoded], dtype=np.float64)
    if weighted_mode == "add":
        factor = 1.0 + retweets
    elif weighted_mode == "multiply_only":
        factor = retweets
    else:
        raise DomainError(f"unknown weighted mode {weighted_mode!r}")
    total = (values * factor[:, None]).sum(axis=0)
    if scheme is WeightingScheme.WEIGHTED:
        return total / n
    return total / (n + retweets.sum())


@dataclass(frozen=True)
class IntervalFeatureRow:
    interval_start: object
    features: np.ndarray
    label: int
    tweet_count: int
    retweet_total: int


@dataclass
class TrainingTable:
    table_id: str
    scheme: WeightingScheme
    terms: list
    rows: list
    excluded: int = 0

    @property
    def degenerate(self):
        labels = {r.label for r in self.rows}
        return len(labels) < 2

    @property
    def X(self):
        if not self.rows:
            return np.zeros((0, len(self.terms)))
        return np.array([r.features for r in self.rows])

    @property
    def y(self):
        return np.array([r.label for r in self.rows], dtype=np.int64)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["interval_start", "label", "N", "R"] + [f"f_{i:03d}" for i in range(len(self.terms))])
            for r in self.rows:
                w.writerow([format_timestamp(r.interval_start), r.label, r.tweet_count, r.retweet_total]
                           + [repr(float(v)) for v in r.features])


def table_id(spec, keyword_direction: Direction):
    return spec.table_prefix + Direction(keyword_direction).short


def build_training_table(increase, decrease, keywords, scheme=WeightingScheme.BASELINE,
                         weighted_mode="add") -> TrainingTable:
    """One row per interval of both datasets, labelled by the dataset's direction."""
    scheme = WeightingScheme(scheme)
    weights = KeywordWeights.from_keywords(keywords)
    tagged = [(m, 1) for m in increase.members] + [(m, 0) for m in decrease.members]
    tagged.sort(key=lambda e: e[0].interval.start)
    rows, excluded = [], 0
    for member, label in tagged:
        if not member.tweets:
            excluded += 1
            continue
        encoded = [encode_tweet(t, weights) for t in member.tweets]
        feats = aggregate_interval(encoded, scheme, weighted_mode)
        rows.append(IntervalFeatureRow(member.interval.start, feats, label, len(encoded),
                                       sum(t.retweet_count for t in member.tweets)))
    tid = table_id(increase.spec, keywords.direction or Direction.INCREASE)
    return TrainingTable(tid, scheme, list(keywords.terms), rows, excluded)
