"""End-to-end run: ingest, label, similarity, keywords, encode, train, evaluate, robustness.

Every stage is computed lazily and cached on a :class:`Pipeline`, so a CLI
subcommand can ask for one stage and get all of its upstream work done the same
way a full run would do it.
"""

from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .. import corpus, glove, yake
from ..corpus import Direction, IntervalSpec
from ..encoder import WeightingScheme, build_training_table
from ..errors import DomainError, PipelineError, StageError
from ..gbm import CvReport, Ensemble, Metrics, cross_validate, evaluate, fit_ensemble
from ..gbm import stratified_split
from .config import PipelineConfig

STAGES = ("ingest", "label", "similarity", "keywords", "encode", "train", "evaluate", "robustness")

# fixed offsets that separate the random streams of each stage
_GLOVE, _SPLIT, _TRAIN, _CV, _SPLIT_70 = 1, 2, 3, 4, 5


def derive_seed(seed, *keys):
    return int(np.random.SeedSequence([int(seed), *keys]).generate_state(1, np.uint64)[0])


def adjust_probability(prob, base_wt):
    """Prob x Base_wt."""
    if not 0.0 <= prob <= 1.0:
        raise DomainError(f"probability must be in [0, 1], got {prob}")
    if not 0.0 <= base_wt <= 2.0:
        raise DomainError(f"baseline weight must be in [0, 2], got {base_wt}")
    return prob * base_wt


def direction_probabilities(proba, y, direction: Direction):
    """Mean P(increase) and mean P(decrease) over rows whose label is ``direction``."""
    rows = np.asarray(y) == direction.label
    if not rows.any():
        raise DomainError(f"no {direction.value} rows to average")
    p = np.asarray(proba, dtype=np.float64)[rows]
    return float(np.mean(p)), float(np.mean(1.0 - p))


@dataclass
class Ingested:
    bars: list
    tweets: list
    read: int
    rejected: int


@dataclass
class IntervalResult:
    spec: IntervalSpec
    intervals: list
    buckets: corpus.BucketResult
    extremes: dict = field(default_factory=dict)        # Direction -> IntervalDataset
    similarity: float | None = None
    base_wt: float | None = None
    vocab_size: int = 0
    glove_cost: tuple = ()
    keywords: dict = field(default_factory=dict)        # Direction -> KeywordSet
    tables: dict = field(default_factory=dict)          # (Direction, scheme) -> TrainingTable

    @property
    def name(self):
        return self.spec.name


@dataclass
class ModelResult:
    table_id: str
    scheme: WeightingScheme
    direction: Direction
    interval: str
    terms: list
    base_wt: float
    train_idx: np.ndarray
    test_idx: np.ndarray
    model: Ensemble
    cv: CvReport | None = None
    metrics: Metrics | None = None
    p_increase: float | None = None
    p_decrease: float | None = None

    @property
    def adjp_increase(self):
        return adjust_probability(self.p_increase, self.base_wt)

    @property
    def adjp_decrease(self):
        return adjust_probability(self.p_decrease, self.base_wt)

    @property
    def matching_adjp(self):
        """AdjP toward the direction the keyword set predicts; the robustness comparisons use this one."""
        return self.adjp_increase if self.direction is Direction.INCREASE else self.adjp_decrease


@dataclass
class RobustnessRow:
    table_id: str
    scheme: WeightingScheme
    interval: str
    adjp_main: float
    adjp_gbdt: float | None = None
    adjp_70_30: float | None = None

    @property
    def delta_gbdt(self):
        return None if self.adjp_gbdt is None else self.adjp_gbdt - self.adjp_main

    @property
    def delta_70_30(self):
        return None if self.adjp_70_30 is None else self.adjp_70_30 - self.adjp_main


@dataclass
class RunReport:
    seed: int
    counters: dict = field(default_factory=dict)
    intervals: list = field(default_factory=list)   # IntervalResult
    models: list = field(default_factory=list)      # ModelResult
    degenerate: list = field(default_factory=list)  # (table_id, scheme)
    robustness: list = field(default_factory=list)  # RobustnessRow


class Pipeline:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.report = RunReport(cfg.seed)
        self._done = set()
        self._ingested = None
        self._specs = [IntervalSpec.from_name(n) for n in cfg.intervals]

    @contextlib.contextmanager
    def _stage(self, name):
        try:
            yield
        except StageError:
            raise
        except PipelineError as exc:
            raise StageError(name, exc) from exc
        except (OSError, ValueError) as exc:
            raise StageError(name, exc) from exc

    def _once(self, name, fn):
        if name not in self._done:
            with self._stage(name):
                fn()
            self._done.add(name)

    # -- stages --------------------------------------------------------------

    def ingest(self):
        def run():
            self.cfg.check_inputs()
            with open(self.cfg.paths.prices, "rb") as fh:
                bars = corpus.parse_price_bars(fh)
            with open(self.cfg.paths.tweets, "rb") as fh:
                raws = corpus.parse_tweets(fh)
            stop = corpus.load_stopwords(self.cfg.paths.stopwords and list(self.cfg.paths.stopwords))
            clean, rejected = corpus.sanitize_all(raws, stop, self.cfg.query_terms)
            self._ingested = Ingested(bars, clean, len(raws), rejected)
            c = self.report.counters
            c["price_bars"] = len(bars)
            c["tweets_read"] = len(raws)
            c["tweets_rejected"] = rejected
            c["tweets_clean"] = len(clean)

        self._once("ingest", run)
        return self._ingested

    def label(self):
        data = self.ingest()

        def run():
            for spec in self._specs:
                intervals = corpus.compute_interval_labels(data.bars, spec)
                buckets = corpus.bucket_tweets(data.tweets, intervals, spec)
                self.report.intervals.append(IntervalResult(spec, intervals, buckets))
                c = self.report.counters
                c[f"{spec.name}.intervals"] = len(intervals)
                c[f"{spec.name}.increase_members"] = len(buckets.increase)
                c[f"{spec.name}.decrease_members"] = len(buckets.decrease)
                c[f"{spec.name}.tweets_dropped_last"] = buckets.dropped_last
                c[f"{spec.name}.tweets_out_of_range"] = buckets.out_of_range
                for d in Direction:
                    sel = corpus.select_extreme_intervals(buckets.dataset(d), self.cfg.extreme_quantile)
                    self.report.intervals[-1].extremes[d] = sel
                    c[f"{spec.name}.{d.short}_extreme_members"] = len(sel)
                    c[f"{spec.name}.{d.short}_extreme_tweets"] = sel.tweet_count

        self._once("label", run)
        return self.report.intervals

    def similarity(self):
        results = self.label()

        def run():
            pretrained = None
            if self.cfg.paths.embeddings is not None:
                pretrained = glove.load_embeddings(self.cfg.paths.embeddings)
            for k, res in enumerate(results):
                docs = {d: res.extremes[d].tweets for d in Direction}
                if pretrained is None:
                    text = docs[Direction.INCREASE] + docs[Direction.DECREASE]
                    text.sort(key=lambda t: (t.timestamp, t.id))
                    vocab = glove.Vocabulary.build(text)
                    gcfg = dataclasses.replace(self.cfg.glove, seed=derive_seed(self.cfg.seed, _GLOVE, k))
                    W = glove.build_cooccurrence(text, vocab, gcfg.window, gcfg.decay)
                    model = glove.train_embeddings(W, gcfg)
                    res.glove_cost = model.cost_history
                else:
                    model = pretrained
                vin = glove.document_vector(docs[Direction.INCREASE], model)
                vde = glove.document_vector(docs[Direction.DECREASE], model)
                res.similarity = glove.cosine_similarity(vin, vde)
                res.base_wt = glove.baseline_weight(res.similarity)
                res.vocab_size = len(model.vocab)

        self._once("similarity", run)
        return results

    def keywords(self):
        results = self.label()

        def run():
            y = self.cfg.yake
            for res in results:
                ranked = {}
                for d in Direction:
                    doc = res.extremes[d].tweets
                    if not any(t.tokens for t in doc):
                        raise DomainError(f"{res.extremes[d].dataset_id}: extreme subset has no tokens")
                    scored = yake.score_document(doc, y.window, y.dispersion)
                    ranked[d] = yake.deduplicate_and_rank(scored, y.theta, direction=d, interval=res.spec)
                a, b = yake.cross_unique_keywords(ranked[Direction.INCREASE], ranked[Direction.DECREASE],
                                                  y.keywords, y.allow_shortage)
                res.keywords = {Direction.INCREASE: a, Direction.DECREASE: b}
                for d, ks in res.keywords.items():
                    self.report.counters[f"{res.name}.{d.short}_keywords"] = len(ks)

        self._once("keywords", run)
        return results

    def encode(self):
        results = self.keywords()

        def run():
            for res in results:
                for d in Direction:
                    if not len(res.keywords[d]):
                        raise DomainError(f"{res.name} {d.value}: no keywords to encode")
                    for scheme in self.cfg.encoder.schemes:
                        table = build_training_table(res.buckets.increase, res.buckets.decrease, res.keywords[d],
                                                     scheme, self.cfg.encoder.weighted)
                        res.tables[(d, scheme)] = table
                        self.report.counters[f"{table.table_id}.{scheme.value}.rows"] = len(table.rows)
                        self.report.counters[f"{table.table_id}.{scheme.value}.excluded_empty"] = table.excluded

        self._once("encode", run)
        return results

    def _trainable(self, table):
        y = table.y
        return min(int(np.sum(y == 1)), int(np.sum(y == 0))) >= 2

    def train(self):
        results = self.encode()
        self.similarity()

        def run():
            cfg = self.cfg
            for k, res in enumerate(results):
                for di, d in enumerate(Direction):
                    for si, scheme in enumerate(cfg.encoder.schemes):
                        table = res.tables[(d, scheme)]
                        if not self._trainable(table):
                            self.report.degenerate.append((table.table_id, scheme))
                            continue
                        X, y = table.X, table.y
                        split_rng = np.random.default_rng(derive_seed(cfg.seed, _SPLIT, k, di))
                        tr, te = stratified_split(y, cfg.test_fraction, split_rng)
                        tcfg = dataclasses.replace(cfg.train, seed=derive_seed(cfg.seed, _TRAIN, k, di, si))
                        cv = None
                        if cfg.cv.repetitions > 0:
                            cv = cross_validate(X[tr], y[tr], tcfg, cfg.cv.repetitions, cfg.cv.val_fraction,
                                                derive_seed(cfg.seed, _CV, k, di, si), cfg.cv.mode)
                        model = fit_ensemble(X[tr], y[tr], tcfg)
                        self.report.models.append(ModelResult(table.table_id, scheme, d, res.name, table.terms,
                                                              res.base_wt, tr, te, model, cv))

        self._once("train", run)
        return self.report.models

    def _table(self, m: ModelResult):
        res = next(r for r in self.report.intervals if r.name == m.interval)
        return res.tables[(m.direction, m.scheme)]

    def evaluate(self):
        models = self.train()

        def run():
            for m in models:
                table = self._table(m)
                X, y = table.X[m.test_idx], table.y[m.test_idx]
                m.metrics = evaluate(m.model, X, y)
                m.p_increase, m.p_decrease = direction_probabilities(m.model.predict_proba(X), y, m.direction)

        self._once("evaluate", run)
        return models

    def robustness(self):
        models = self.evaluate()

        def run():
            cfg = self.cfg
            names = [r.name for r in self.report.intervals]
            for m in models:
                table = self._table(m)
                X, y = table.X, table.y
                row = RobustnessRow(m.table_id, m.scheme, m.interval, m.matching_adjp)
                if cfg.robustness.gbdt_only:
                    plain = fit_ensemble(X[m.train_idx], y[m.train_idx], m.model.config.plain())
                    row.adjp_gbdt = _matching_adjp(plain, X[m.test_idx], y[m.test_idx], m)
                if cfg.robustness.split_70_30:
                    k, di = names.index(m.interval), list(Direction).index(m.direction)
                    rng = np.random.default_rng(derive_seed(cfg.seed, _SPLIT_70, k, di))
                    tr, te = stratified_split(y, 0.3, rng)
                    alt = fit_ensemble(X[tr], y[tr], m.model.config)
                    row.adjp_70_30 = _matching_adjp(alt, X[te], y[te], m)
                self.report.robustness.append(row)

        self._once("robustness", run)
        return self.report.robustness

    def run_all(self, robustness=True):
        self.similarity()
        self.evaluate()
        if robustness:
            self.robustness()
        return self.report


def _matching_adjp(model, X, y, m: ModelResult):
    p_inc, p_dec = direction_probabilities(model.predict_proba(X), y, m.direction)
    prob = p_inc if m.direction is Direction.INCREASE else p_dec
    return adjust_probability(prob, m.base_wt)


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Every stage through evaluation, plus robustness reruns when enabled."""
    rob = cfg.robustness.gbdt_only or cfg.robustness.split_70_30
    return Pipeline(cfg).run_all(robustness=rob)


def run_robustness(cfg: PipelineConfig, pipeline: Pipeline | None = None):
    """Robustness rows for every trained table; reuses ``pipeline`` if it already ran."""
    pipeline = pipeline or Pipeline(cfg)
    return pipeline.robustness()
