"""Single-document keyword scoring over a tweet collection.

A document is an ordered list of tweets (token sequences). Each distinct term
gets four statistical features (position, frequency, relevancy, dispersion)
that combine into a score kappa; lower kappa means a better keyword.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ShortageError


@dataclass
class TermStats:
    positions: list = field(default_factory=list)  # sorted distinct tweet indices
    frequency: int = 0
    left_distinct: int = 0
    right_distinct: int = 0
    left_total: int = 0
    right_total: int = 0

    @property
    def dispersion(self):
        return len(self.positions)


@dataclass(frozen=True)
class TermScore:
    position: float
    frequency: float
    relevancy: float
    dispersion: float
    kappa: float


def _tokens(doc):
    return getattr(doc, "tokens", doc)


def collect_term_stats(doc: Sequence, window: int = 1) -> dict:
    """Positional and neighbourhood statistics of every term; windows stay inside a tweet."""
    if window < 1:
        raise DomainError("window must be >= 1")
    tweets = [tuple(_tokens(t)) for t in doc]
    if not any(tweets):
        raise DomainError("empty document")
    stats: dict = {}
    left: dict = {}
    right: dict = {}
    for j, tokens in enumerate(tweets):
        for i, term in enumerate(tokens):
            s = stats.get(term)
            if s is None:
                s = stats[term] = TermStats()
                left[term], right[term] = set(), set()
            if not s.positions or s.positions[-1] != j:
                s.positions.append(j)
            s.frequency += 1
            lo, hi = max(0, i - window), min(len(tokens), i + window + 1)
            for n in tokens[lo:i]:
                left[term].add(n)
                s.left_total += 1
            for n in tokens[i + 1:hi]:
                right[term].add(n)
                s.right_total += 1
    for term, s in stats.items():
        s.left_distinct = len(left[term])
        s.right_distinct = len(right[term])
    return stats


@dataclass(frozen=True)
class DocumentAggregates:
    mean_frequency: float
    std_frequency: float
    max_frequency: int
    tweet_count: int

    @classmethod
    def of(cls, stats, tweet_count):
        freqs = np.array([s.frequency for s in stats.values()], dtype=np.float64)
        return cls(float(freqs.mean()), float(freqs.std()), int(freqs.max()), tweet_count)


def score_term(stats: TermStats, agg: DocumentAggregates, dispersion: str = "reciprocal") -> TermScore:
    median = stats.positions[(len(stats.positions) - 1) // 2]
    g_cp = math.log(math.log(math.e + median))
    g_cf = stats.frequency / (agg.mean_frequency + agg.std_frequency)
    side = 0.0
    if stats.left_total:
        side += stats.left_distinct / stats.left_total
    if stats.right_total:
        side += stats.right_distinct / stats.right_total
    g_cr = 1.0 + side * stats.frequency / agg.max_frequency
    if dispersion == "reciprocal":
        g_cd = 1.0 / stats.dispersion
    elif dispersion == "direct":
        g_cd = stats.dispersion / agg.tweet_count
    else:
        raise DomainError(f"unknown dispersion mode {dispersion!r}")
    kappa = g_cp * g_cr / (g_cf / g_cr + g_cd / g_cr)
    return TermScore(g_cp, g_cf, g_cr, g_cd, kappa)


def score_document(doc: Sequence, window: int = 1, dispersion: str = "reciprocal"):
    """All terms of a document as (term, TermScore), ascending kappa then term."""
    stats = collect_term_stats(doc, window)
    agg = DocumentAggregates.of(stats, len(doc))
    scored = [(t, score_term(s, agg, dispersion)) for t, s in stats.items()]
    scored.sort(key=lambda e: (e[1].kappa, e[0]))
    return scored


# --------------------------------------------------------------------------
# Ratcliff-Obershelp


def _longest_match(a, b, alo, ahi, blo, bhi):
    """Longest common block; earliest in a, then earliest in b, on ties."""
    best_i, best_j, best = alo, blo, 0
    prev = [0] * (bhi - blo + 1)
    for i in range(alo, ahi):
        cur = [0] * (bhi - blo + 1)
        ai = a[i]
        for j in range(blo, bhi):
            if ai == b[j]:
                k = prev[j - blo] + 1
                cur[j - blo + 1] = k
                start_i, start_j = i - k + 1, j - k + 1
                if k > best or (k == best and (start_i, start_j) < (best_i, best_j)):
                    best_i, best_j, best = start_i, start_j, k
        prev = cur
    return best_i, best_j, best


def _matched(a, b):
    total = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        if alo >= ahi or blo >= bhi:
            continue
        i, j, k = _longest_match(a, b, alo, ahi, blo, bhi)
        if k:
            total += k
            stack.append((alo, i, blo, j))
            stack.append((i + k, ahi, j + k, bhi))
    return total


def gestalt_ratio(a: str, b: str) -> float:
    """One-directional gestalt pattern matching ratio 2*matches/(len a + len b)."""
    return 2.0 * _matched(a, b) / (len(a) + len(b))


def ratcliff_similarity(a: str, b: str) -> float:
    """Symmetric Ratcliff-Obershelp similarity (the better of both argument orders)."""
    if not a or not b:
        raise DomainError("similarity of an empty term")
    if a == b:
        return 1.0
    m = max(_matched(a, b), _matched(b, a))
    return 2.0 * m / (len(a) + len(b))


def _could_reach(a, ca, b, cb, theta):
    la, lb = len(a), len(b)
    if 2.0 * min(la, lb) / (la + lb) < theta:
        return False
    common = sum((ca & cb).values())
    return 2.0 * common / (la + lb) >= theta


@dataclass(frozen=True)
class KeywordSet:
    """Ranked keywords, ascending kappa."""

    entries: tuple  # of (term, TermScore)
    direction: object = None
    interval: object = None

    @property
    def terms(self):
        return [t for t, _ in self.entries]

    @property
    def kappas(self):
        return [s.kappa for _, s in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _as_score(value):
    if isinstance(value, TermScore):
        return value
    return TermScore(math.nan, math.nan, math.nan, math.nan, float(value))


def deduplicate_and_rank(scored, theta: float = 0.9, limit: int | None = None,
                         direction=None, interval=None) -> KeywordSet:
    """Best-first dedup: a term survives iff its similarity to every kept term is < theta.

    ``scored`` holds (term, kappa) or (term, TermScore) pairs. ``limit`` stops after
    that many survivors.
    """
    if not (0 < theta <= 1):
        raise DomainError(f"theta must be in (0, 1], got {theta}")
    ordered = sorted(((t, _as_score(s)) for t, s in scored), key=lambda e: (e[1].kappa, e[0]))
    kept, kept_counts = [], []
    for term, score in ordered:
        if limit is not None and len(kept) >= limit:
            break
        counts = Counter(term)
        if any(_could_reach(term, counts, other, oc, theta) and ratcliff_similarity(term, other) >= theta
               for (other, _), oc in zip(kept, kept_counts)):
            continue
        kept.append((term, score))
        kept_counts.append(counts)
    return KeywordSet(tuple(kept), direction, interval)


def cross_unique_keywords(set_a: KeywordSet, set_b: KeywordSet, k: int = 64, allow_shortage: bool = False):
    """Top-k keywords of each set that do not occur in the other set's equally deep prefix.

    Both rankings are compared at a common depth P, grown from k until each side has
    k terms absent from the other side's top-P (or the lists run out). Terms shared by
    the two prefixes are dropped from both, so the outputs are disjoint.
    """
    terms_a, terms_b = set_a.terms, set_b.terms
    longest = max(len(terms_a), len(terms_b))

    def unique_at(depth):
        pa, pb = set(terms_a[:depth]), set(terms_b[:depth])
        ua = [e for e in set_a.entries[:depth] if e[0] not in pb]
        ub = [e for e in set_b.entries[:depth] if e[0] not in pa]
        return ua, ub

    depth = min(k, longest)
    ua, ub = unique_at(depth)
    while (len(ua) < k or len(ub) < k) and depth < longest:
        depth += max(len(ua) < k and k - len(ua), len(ub) < k and k - len(ub), 1)
        depth = min(depth, longest)
        ua, ub = unique_at(depth)
    if (len(ua) < k or len(ub) < k) and not allow_shortage:
        raise ShortageError(min(len(ua), len(ub)), k)
    return (KeywordSet(tuple(ua[:k]), set_a.direction, set_a.interval),
            KeywordSet(tuple(ub[:k]), set_b.direction, set_b.interval))
