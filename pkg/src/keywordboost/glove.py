"""GloVe co-occurrence counting, AdaGrad training and document similarity."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DivergenceError, DomainError, EmptyDocumentError, VocabularyError


def _tokens(doc):
    return getattr(doc, "tokens", doc)


class Vocabulary:
    """Bijection between terms and 0..n-1, ordered by descending count then term."""

    def __init__(self, terms):
        self.terms = list(terms)
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise DomainError("duplicate terms in vocabulary")

    @classmethod
    def build(cls, corpus, min_count=1):
        counts = Counter(t for doc in corpus for t in _tokens(doc))
        terms = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        return cls(terms)

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def __getitem__(self, term):
        try:
            return self.index[term]
        except KeyError:
            raise VocabularyError(f"term {term!r} not in vocabulary") from None


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Symmetric sparse co-occurrence counts stored as sorted COO arrays."""

    vocab: Vocabulary
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    window: int

    @property
    def nnz(self):
        return len(self.values)

    def get(self, m, n):
        i, j = self.vocab[m], self.vocab[n]
        lo, hi = np.searchsorted(self.rows, [i, i + 1])
        k = lo + np.searchsorted(self.cols[lo:hi], j)
        if k < hi and self.cols[k] == j:
            return float(self.values[k])
        return 0.0

    def row_sums(self):
        return np.bincount(self.rows, weights=self.values, minlength=len(self.vocab))

    def to_dense(self):
        out = np.zeros((len(self.vocab), len(self.vocab)))
        out[self.rows, self.cols] = self.values
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["term_m", "term_n", "count"])
            for i, j, v in zip(self.rows, self.cols, self.values):
                w.writerow([self.vocab.terms[i], self.vocab.terms[j], repr(float(v))])


def build_cooccurrence(corpus, vocab: Vocabulary, window: int = 10, decay: bool = True) -> CooccurrenceMatrix:
    """Count context pairs within ``window`` tokens inside each tweet.

    With ``decay`` a pair at distance k adds 1/k, otherwise 1.
    """
    if window < 1:
        raise DomainError("window must be >= 1")
    counts: dict = {}
    for doc in corpus:
        ids = [vocab[t] for t in _tokens(doc)]
        for pos, m in enumerate(ids):
            for k in range(1, min(window, len(ids) - 1 - pos) + 1):
                n = ids[pos + k]
                inc = 1.0 / k if decay else 1.0
                counts[(m, n)] = counts.get((m, n), 0.0) + inc
                counts[(n, m)] = counts.get((n, m), 0.0) + inc
    if counts:
        keys = sorted(counts)
        rows = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        cols = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        values = np.fromiter((counts[k] for k in keys), dtype=np.float64, count=len(keys))
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        values = np.zeros(0)
    return CooccurrenceMatrix(vocab, rows, cols, values, window)


def weight_f(alpha, alpha_max=100.0, beta=0.75):
    """GloVe weighting: (alpha/alpha_max)**beta below alpha_max, 1 above."""
    alpha = np.asarray(alpha, dtype=np.float64)
    out = np.where(alpha < alpha_max, (np.maximum(alpha, 0.0) / alpha_max) ** beta, 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GloveConfig:
    dim: int = 200
    window: int = 10
    alpha_max: float = 100.0
    beta: float = 0.75
    learning_rate: float = 0.05
    iterations: int = 50
    seed: int = 0
    decay: bool = True

    def __post_init__(self):
        if self.dim < 1 or self.window < 1:
            raise DomainError("dim and window must be >= 1")
        if not self.alpha_max > 0 or not (0 < self.beta <= 1) or not self.learning_rate > 0:
            raise DomainError("need alpha_max > 0, 0 < beta <= 1, learning_rate > 0")
        if self.iterations < 0:
            raise DomainError("iterations must be >= 0")


@dataclass
class EmbeddingModel:
    vocab: Vocabulary
    word: np.ndarray
    context: np.ndarray
    word_bias: np.ndarray
    context_bias: np.ndarray
    cost_history: tuple = ()

    @property
    def vectors(self):
        """Final word vectors V + V~."""
        return self.word + self.context

    @property
    def dim(self):
        return self.word.shape[1]

    @classmethod
    def from_vectors(cls, vocab, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        n, d = vectors.shape
        return cls(vocab, vectors.copy(), np.zeros((n, d)), np.zeros(n), np.zeros(n))

    def save(self, path):
        vec = self.vectors
        with open(path, "w", encoding="utf-8") as fh:
            for term, row in zip(self.vocab.terms, vec):
                fh.write(term + " " + " ".join(repr(float(x)) for x in row) + "\n")


def load_embeddings(path):
    """Read ``term v1 ... vd`` lines into a model holding only final vectors."""
    terms, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            terms.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
            if len(rows[-1]) != len(rows[0]) or not rows[-1]:
                raise DomainError(f"{path}:{lineno}: inconsistent vector dimension")
    return EmbeddingModel.from_vectors(Vocabulary(terms), np.array(rows))


def init_model(vocab: Vocabulary, cfg: GloveConfig) -> EmbeddingModel:
    rng = np.random.default_rng(cfg.seed)
    n, d = len(vocab), cfg.dim
    scale = 0.5 / d

    def uniform(*shape):
        return rng.uniform(-scale, scale, size=shape)

    return EmbeddingModel(vocab, uniform(n, d), uniform(n, d), uniform(n), uniform(n))


@njit(cache=True)
def _cost(rows, cols, logx, fx, W, C, b, bc):
    total = 0.0
    for k in range(rows.shape[0]):
        i, j = rows[k], cols[k]
        diff = b[i] + bc[j] - logx[k]
        for t in range(W.shape[1]):
            diff += W[i, t] * C[j, t]
        total += fx[k] * diff * diff
    return total


@njit(cache=True)
def _epoch(order, rows, cols, logx, fx, W, C, b, bc, gW, gC, gb, gbc, lr):
    d = W.shape[1]
    for o in range(order.shape[0]):
        k = order[o]
        i, j = rows[k], cols[k]
        diff = b[i] + bc[j] - logx[k]
        for t in range(d):
            diff += W[i, t] * C[j, t]
        g = 2.0 * fx[k] * diff
        for t in range(d):
            gw = g * C[j, t]
            gc = g * W[i, t]
            W[i, t] -= lr * gw / math.sqrt(gW[i, t])
            C[j, t] -= lr * gc / math.sqrt(gC[j, t])
            gW[i, t] += gw * gw
            gC[j, t] += gc * gc
        b[i] -= lr * g / math.sqrt(gb[i])
        bc[j] -= lr * g / math.sqrt(gbc[j])
        gb[i] += g * g
        gbc[j] += g * g


def _targets(W: CooccurrenceMatrix, cfg):
    return np.log(W.values), np.asarray(weight_f(W.values, cfg.alpha_max, cfg.beta), dtype=np.float64)


def glove_cost(model: EmbeddingModel, W: CooccurrenceMatrix, cfg: GloveConfig) -> float:
    logx, fx = _targets(W, cfg)
    return float(_cost(W.rows, W.cols, logx, fx, model.word, model.context, model.word_bias, model.context_bias))


def glove_gradient(model: EmbeddingModel, W: CooccurrenceMatrix, cfg: GloveConfig):
    """Analytic gradient of the weighted least-squares cost, one array per parameter block."""
    logx, fx = _targets(W, cfg)
    r, c = W.rows, W.cols
    diff = np.einsum("kd,kd->k", model.word[r], model.context[c]) + model.word_bias[r] + model.context_bias[c] - logx
    g = 2.0 * fx * diff
    gW = np.zeros_like(model.word)
    gC = np.zeros_like(model.context)
    np.add.at(gW, r, g[:, None] * model.context[c])
    np.add.at(gC, c, g[:, None] * model.word[r])
    gb = np.bincount(r, weights=g, minlength=len(model.vocab))
    gbc = np.bincount(c, weights=g, minlength=len(model.vocab))
    return {"word": gW, "context": gC, "word_bias": gb, "context_bias": gbc}


def train_embeddings(W: CooccurrenceMatrix, cfg: GloveConfig) -> EmbeddingModel:
    """AdaGrad passes over shuffled nonzero entries; deterministic given cfg.seed."""
    if W.nnz == 0:
        raise DomainError("co-occurrence matrix has no nonzero entries")
    model = init_model(W.vocab, cfg)
    rng = np.random.default_rng([cfg.seed, 1])
    logx, fx = _targets(W, cfg)
    grads = [np.ones_like(a) for a in (model.word, model.context, model.word_bias, model.context_bias)]
    args = (W.rows, W.cols, logx, fx, model.word, model.context, model.word_bias, model.context_bias)
    history = [float(_cost(*args))]
    for epoch in range(1, cfg.iterations + 1):
        order = rng.permutation(W.nnz)
        _epoch(order, *args, *grads, cfg.learning_rate)
        cost = float(_cost(*args))
        if not math.isfinite(cost):
            raise DivergenceError(epoch, cost)
        history.append(cost)
    model.cost_history = tuple(history)
    return model


def document_vector(tweets, model: EmbeddingModel) -> np.ndarray:
    """Mean of final word vectors over all in-vocabulary token occurrences."""
    ids = [model.vocab.index[t] for doc in tweets for t in _tokens(doc) if t in model.vocab.index]
    if not ids:
        raise EmptyDocumentError("document has no in-vocabulary tokens")
    counts = np.bincount(np.asarray(ids), minlength=len(model.vocab)).astype(np.float64)
    return counts @ model.vectors / len(ids)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DomainError("cosine similarity of a zero vector")
    return float(min(1.0, max(-1.0, np.dot(a, b) / (na * nb))))


def baseline_weight(similarity: float) -> float:
    return 1.0 - similarity
