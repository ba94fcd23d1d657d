"""YAML run configuration.

Every key is optional except ``paths.prices`` and ``paths.tweets``. Relative
paths resolve against the directory holding the config file::

    paths:
      prices: prices.csv
      tweets: tweets.jsonl
      stopwords: [extra.txt]        # default: the three bundled lists
      output: out
      embeddings: null              # pre-trained "term v1 .. vd" file; skips training
    intervals: [hourly, 4hourly, daily]
    extreme_quantile: 0.1
    query_terms: [bitcoin, btc]
    glove: {dim: 200, window: 10, alpha_max: 100, beta: 0.75,
            learning_rate: 0.05, iterations: 50, decay: true}
    yake: {window: 1, theta: 0.9, dispersion: reciprocal,
           keywords: 64, allow_shortage: false}
    encoder: {schemes: [baseline, weighted, weights_distributed], weighted: add}
    train: {num_leaves: 31, min_data_in_leaf: 20, max_depth: null,
            learning_rate: 0.01, num_iterations: 500, max_bins: 255,
            loss: squared, goss: {top_rate: 0.2, other_rate: 0.1},
            efb: 0.0, test_fraction: 0.2}
    cv: {mode: repeated, repetitions: 10, val_fraction: 0.2}
    robustness: {gbdt_only: true, split_70_30: true}
    synth: {...}                    # SyntheticSpec fields, used by ``synth``
    seed: 0
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..corpus import DEFAULT_QUERY_TERMS, INTERVAL_NAMES
from ..encoder import WeightingScheme
from ..errors import ConfigError, DomainError
from ..gbm import GossConfig, TrainConfig
from ..glove import GloveConfig
from .synth import SyntheticSpec

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class Paths:
    prices: Path | None = None
    tweets: Path | None = None
    stopwords: tuple | None = None
    output: Path = Path("out")
    embeddings: Path | None = None


@dataclass(frozen=True)
class YakeConfig:
    window: int = 1
    theta: float = 0.9
    dispersion: str = "reciprocal"
    keywords: int = 64
    allow_shortage: bool = False


@dataclass(frozen=True)
class EncoderConfig:
    schemes: tuple = tuple(WeightingScheme)
    weighted: str = "add"


@dataclass(frozen=True)
class CvConfig:
    mode: str = "repeated"
    repetitions: int = 10
    val_fraction: float = 0.2


@dataclass(frozen=True)
class RobustnessConfig:
    gbdt_only: bool = True
    split_70_30: bool = True


def default_train():
    return TrainConfig(goss=GossConfig(), efb=0.0)


@dataclass(frozen=True)
class PipelineConfig:
    paths: Paths = field(default_factory=Paths)
    intervals: tuple = tuple(INTERVAL_NAMES)
    extreme_quantile: float = 0.1
    query_terms: frozenset = DEFAULT_QUERY_TERMS
    glove: GloveConfig = field(default_factory=GloveConfig)
    yake: YakeConfig = field(default_factory=YakeConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    train: TrainConfig = field(default_factory=default_train)
    test_fraction: float = 0.2
    cv: CvConfig = field(default_factory=CvConfig)
    robustness: RobustnessConfig = field(default_factory=RobustnessConfig)
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)
    seed: int = 0

    def with_overrides(self, seed=None, output=None):
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=check_seed(seed))
        if output is not None:
            cfg = dataclasses.replace(cfg, paths=dataclasses.replace(cfg.paths, output=Path(output)))
        return cfg

    def check_inputs(self):
        """Raise ConfigError unless every input path exists."""
        required = [("paths.prices", self.paths.prices), ("paths.tweets", self.paths.tweets)]
        required += [("paths.stopwords", p) for p in self.paths.stopwords or ()]
        if self.paths.embeddings is not None:
            required.append(("paths.embeddings", self.paths.embeddings))
        for key, path in required:
            if path is None:
                raise ConfigError(f"{key} is required")
            if not Path(path).is_file():
                raise ConfigError(f"{key}: no such file {path}")


def check_seed(seed):
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    return seed


def _section(raw, name, allowed):
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a mapping")
    unknown = set(value) - set(allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    return value


def _fields(cls):
    return [f.name for f in dataclasses.fields(cls)]


def _build(cls, name, values, **extra):
    try:
        return cls(**values, **extra)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def parse_config(raw: dict, base_dir=".") -> PipelineConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    top = {"paths", "intervals", "extreme_quantile", "query_terms", "glove", "yake", "encoder", "train", "cv",
           "robustness", "synth", "seed"}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    base = Path(base_dir)

    def resolve(p):
        if p is None:
            return None
        if not isinstance(p, str):
            raise ConfigError(f"path must be a string, got {p!r}")
        return base / p

    paths = _section(raw, "paths", _fields(Paths))
    stop = paths.get("stopwords")
    if stop is not None:
        if isinstance(stop, str):
            stop = [stop]
        stop = tuple(resolve(p) for p in stop)
    paths = Paths(resolve(paths.get("prices")), resolve(paths.get("tweets")), stop,
                  resolve(paths.get("output", "out")), resolve(paths.get("embeddings")))

    intervals = raw.get("intervals", list(INTERVAL_NAMES))
    if isinstance(intervals, str):
        intervals = [intervals]
    if not intervals or any(i not in INTERVAL_NAMES for i in intervals):
        raise ConfigError(f"intervals must be a non-empty subset of {list(INTERVAL_NAMES)}")
    if len(set(intervals)) != len(intervals):
        raise ConfigError("intervals repeat")

    q = raw.get("extreme_quantile", 0.1)
    if not isinstance(q, (int, float)) or isinstance(q, bool):
        raise ConfigError("extreme_quantile must be a number")

    query = raw.get("query_terms", sorted(DEFAULT_QUERY_TERMS))
    if not isinstance(query, list) or not all(isinstance(t, str) for t in query):
        raise ConfigError("query_terms must be a list of strings")

    glove_raw = _section(raw, "glove", [f for f in _fields(GloveConfig) if f != "seed"])
    glove = _build(GloveConfig, "glove", glove_raw)

    yake_raw = _section(raw, "yake", _fields(YakeConfig))
    yk = _build(YakeConfig, "yake", yake_raw)
    if yk.dispersion not in ("reciprocal", "direct"):
        raise ConfigError("yake.dispersion must be reciprocal or direct")
    if yk.window < 1 or yk.keywords < 1 or not (0 < yk.theta <= 1):
        raise ConfigError("yake: need window >= 1, keywords >= 1 and 0 < theta <= 1")

    enc_raw = _section(raw, "encoder", _fields(EncoderConfig))
    schemes = enc_raw.get("schemes", [s.value for s in WeightingScheme])
    if isinstance(schemes, str):
        schemes = [schemes]
    try:
        schemes = tuple(WeightingScheme(s) for s in schemes)
    except ValueError as exc:
        raise ConfigError(f"encoder.schemes: {exc}") from None
    if not schemes or len(set(schemes)) != len(schemes):
        raise ConfigError("encoder.schemes must be non-empty and distinct")
    weighted = enc_raw.get("weighted", "add")
    if weighted not in ("add", "multiply_only"):
        raise ConfigError("encoder.weighted must be add or multiply_only")

    train_keys = [f for f in _fields(TrainConfig) if f != "seed"] + ["test_fraction"]
    train_raw = dict(_section(raw, "train", train_keys))
    test_fraction = train_raw.pop("test_fraction", 0.2)
    if "goss" in train_raw:
        g = train_raw["goss"]
        if g is not None:
            if not isinstance(g, dict) or set(g) - {"top_rate", "other_rate"}:
                raise ConfigError("train.goss must be null or {top_rate, other_rate}")
            g = _build(GossConfig, "train.goss", g)
        train_raw["goss"] = g
    else:
        train_raw["goss"] = GossConfig()
    train_raw.setdefault("efb", 0.0)
    train = _build(TrainConfig, "train", train_raw)
    if not isinstance(test_fraction, (int, float)) or not 0 < test_fraction < 1:
        raise ConfigError("train.test_fraction must be in (0, 1)")

    cv = _build(CvConfig, "cv", _section(raw, "cv", _fields(CvConfig)))
    if cv.mode not in ("repeated", "kfold") or cv.repetitions < 0 or not 0 < cv.val_fraction < 1:
        raise ConfigError("cv: mode repeated|kfold, repetitions >= 0, 0 < val_fraction < 1")
    if cv.mode == "kfold" and cv.repetitions == 1:
        raise ConfigError("cv: kfold needs at least 2 folds")

    rob = _build(RobustnessConfig, "robustness", _section(raw, "robustness", _fields(RobustnessConfig)))
    synth = _build(SyntheticSpec, "synth", _section(raw, "synth", _fields(SyntheticSpec)))
    if synth.interval not in INTERVAL_NAMES:
        raise ConfigError(f"synth.interval must be one of {list(INTERVAL_NAMES)}")

    return PipelineConfig(paths, tuple(intervals), float(q), frozenset(t.lower() for t in query), glove, yk,
                          EncoderConfig(schemes, weighted), train, float(test_fraction), cv, rob, synth,
                          check_seed(raw.get("seed", 0)))


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(raw, path.parent)
