import csv
import dataclasses
import io
import json

import numpy as np
import pytest

from conftest import SMALL_RUN, write_config
from keywordboost import corpus
from keywordboost.cli import reports
from keywordboost.cli.config import MAX_SEED, load_config, parse_config
from keywordboost.cli.main import main
from keywordboost.cli.pipeline import (
    Pipeline, adjust_probability, derive_seed, direction_probabilities, run_pipeline,
)
from keywordboost.cli.synth import SyntheticSpec, generate_synthetic_corpus
from keywordboost.corpus import Direction
from keywordboost.errors import ConfigError, DomainError, StageError
from keywordboost.gbm import GossConfig
from keywordboost.yake import ratcliff_similarity


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# seed=")
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


# -- configuration -----------------------------------------------------------

def test_defaults_and_path_resolution(tmp_path):
    cfg = parse_config({"paths": {"prices": "p.csv", "tweets": "t.jsonl"}}, tmp_path)
    assert cfg.paths.prices == tmp_path / "p.csv"
    assert cfg.paths.output == tmp_path / "out"
    assert cfg.intervals == ("hourly", "4hourly", "daily")
    assert cfg.train.num_leaves == 31 and cfg.train.min_data_in_leaf == 20
    assert cfg.train.goss == GossConfig(0.2, 0.1) and cfg.train.efb == 0.0
    assert cfg.yake.theta == 0.9 and cfg.yake.keywords == 64
    assert cfg.test_fraction == 0.2 and cfg.cv.repetitions == 10


def test_train_section_options(tmp_path):
    cfg = parse_config({"train": {"goss": None, "efb": None, "test_fraction": 0.25}})
    assert cfg.train.goss is None and cfg.train.efb is None
    assert cfg.test_fraction == 0.25


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"yake": {"theta": 0}},
    {"yake": {"colour": "red"}},
    {"intervals": ["weekly"]},
    {"encoder": {"schemes": ["fancy"]}},
    {"train": {"goss": {"top_rate": 0.5, "other_rate": 0.0}}},
    {"train": {"test_fraction": 1.5}},
    {"cv": {"mode": "loo"}},
    {"seed": -1},
    {"seed": MAX_SEED + 1},
    {"glove": {"dim": 0}},
    {"synth": {"odds_ratio": 0.5}},
    [1, 2],
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_largest_seed_is_accepted():
    assert parse_config({"seed": MAX_SEED}).seed == MAX_SEED


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("paths: [\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_missing_inputs_are_config_errors(tmp_path):
    cfg = parse_config({"paths": {"prices": "nope.csv", "tweets": "nope.jsonl"}}, tmp_path)
    with pytest.raises(ConfigError):
        cfg.check_inputs()
    with pytest.raises(ConfigError):
        parse_config({}).check_inputs()


# -- probabilities and seeds -------------------------------------------------

@pytest.mark.parametrize("prob,wt,want", [(0.8007, 0.9750, 0.7806), (0.8820, 0.9952, 0.8777),
                                          (0.9494, 0.9965, 0.9460)])
def test_adjusted_probability_examples(prob, wt, want):
    assert abs(adjust_probability(prob, wt) - want) <= 0.0002


def test_adjusted_probability_domain():
    assert adjust_probability(1.0, 1.0) == 1.0
    assert adjust_probability(0.3, 0.0) == 0.0
    for prob, wt in [(1.1, 0.5), (-0.1, 0.5), (0.5, -0.1), (0.5, 2.5)]:
        with pytest.raises(DomainError):
            adjust_probability(prob, wt)


def test_direction_probabilities():
    p, y = [0.9, 0.7, 0.2, 0.4], [1, 1, 0, 0]
    inc = direction_probabilities(p, y, Direction.INCREASE)
    dec = direction_probabilities(p, y, Direction.DECREASE)
    assert inc == pytest.approx((0.8, 0.2)) and dec == pytest.approx((0.3, 0.7))
    with pytest.raises(DomainError):
        direction_probabilities([0.5], [1], Direction.DECREASE)


def test_derived_seeds():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert len({derive_seed(7, 1, 2), derive_seed(7, 2, 1), derive_seed(8, 1, 2)}) == 3
    assert 0 <= derive_seed(MAX_SEED, 5) <= MAX_SEED


# -- synthetic corpora -------------------------------------------------------

def test_synthetic_corpus_is_seeded():
    spec = SyntheticSpec(n_tweets=300, tweets_per_interval=10, seed=3)
    a, b = generate_synthetic_corpus(spec), generate_synthetic_corpus(spec)
    assert a.prices_csv == b.prices_csv and a.tweets_jsonl == b.tweets_jsonl
    c = generate_synthetic_corpus(SyntheticSpec(n_tweets=300, tweets_per_interval=10, seed=4))
    assert c.tweets_jsonl != a.tweets_jsonl


def test_synthetic_corpus_contents(small_corpus):
    prices, tweets, manifest = small_corpus
    planted = manifest["planted"]
    inc, dec = planted["Increase"], planted["Decrease"]
    assert len(inc) == len(dec) == 16 and not set(inc) & set(dec)
    words = inc + dec
    assert all(ratcliff_similarity(a, b) < 0.9 for i, a in enumerate(words) for b in words[i + 1:])
    stop = corpus.load_stopwords()
    assert not set(words) & stop
    with open(prices, "rb") as fh:
        bars = corpus.parse_price_bars(fh)
    assert len(bars) == manifest["intervals"] + 1
    with open(tweets, "rb") as fh:
        raws = corpus.parse_tweets(fh)
    assert len(raws) == 2000
    assert 0.0 < sum(r.rejected for r in raws) / len(raws) < 0.15
    spec = corpus.IntervalSpec.from_name("hourly")
    labels = corpus.compute_interval_labels(bars, spec)
    assert sum(iv.label is Direction.INCREASE for iv in labels) == manifest["increase_intervals"]


def test_planted_words_follow_the_next_interval():
    corpus_ = generate_synthetic_corpus(SyntheticSpec(n_tweets=4000, tweets_per_interval=20, odds_ratio=3.0,
                                                      planted_per_direction=8, seed=1))
    bars = corpus.parse_price_bars(io.BytesIO(corpus_.prices_csv.encode()))
    raws = corpus.parse_tweets(io.BytesIO(corpus_.tweets_jsonl.encode()))
    clean, _ = corpus.sanitize_all(raws)
    spec = corpus.IntervalSpec.from_name("hourly")
    buckets = corpus.bucket_tweets(clean, corpus.compute_interval_labels(bars, spec), spec)
    inc_words = set(corpus_.manifest["planted"]["Increase"])

    def rate(ds):
        toks = [t for tw in ds.tweets for t in tw.tokens]
        return sum(t in inc_words for t in toks) / len(ds.tweets)

    assert rate(buckets.increase) > 2 * rate(buckets.decrease)


@pytest.mark.parametrize("kwargs", [{"odds_ratio": 0.9}, {"n_tweets": 0}, {"base_rate": 0.5, "odds_ratio": 3},
                                    {"min_tokens": 5, "max_tokens": 4}])
def test_invalid_synthetic_spec(kwargs):
    with pytest.raises(ConfigError):
        SyntheticSpec(**kwargs)


# -- pipeline ----------------------------------------------------------------

@pytest.fixture(scope="module")
def small_config(small_corpus, tmp_path_factory):
    prices, tweets, _ = small_corpus
    d = tmp_path_factory.mktemp("small_run")
    return load_config(write_config(d / "run.yaml", prices, tweets, d / "out", seed=5, **SMALL_RUN))


@pytest.fixture(scope="module")
def small_report(small_config):
    return run_pipeline(small_config)


def test_stages_run_lazily(small_config):
    pipe = Pipeline(small_config)
    results = pipe.keywords()
    assert "train" not in pipe._done and "similarity" not in pipe._done
    assert results[0].keywords[Direction.INCREASE].terms
    assert pipe.report.counters["tweets_read"] == 2000


def test_run_produces_models_per_direction_and_scheme(small_report):
    assert len(small_report.models) == 4
    assert {m.table_id for m in small_report.models} == {"HkIn", "HkDe"}
    assert not small_report.degenerate


def test_schemes_share_the_test_split(small_report):
    by_dir = {}
    for m in small_report.models:
        by_dir.setdefault(m.direction, []).append(m)
    for models in by_dir.values():
        assert np.array_equal(models[0].test_idx, models[1].test_idx)
        assert np.array_equal(models[0].train_idx, models[1].train_idx)


def test_keyword_sets_are_disjoint(small_report):
    res = small_report.intervals[0]
    inc, dec = res.keywords[Direction.INCREASE], res.keywords[Direction.DECREASE]
    assert len(inc) == len(dec) == 16
    assert not set(inc.terms) & set(dec.terms)


def test_probability_identities(small_report):
    res = small_report.intervals[0]
    assert res.base_wt == 1.0 - res.similarity
    for m in small_report.models:
        assert m.adjp_increase == m.p_increase * m.base_wt
        assert m.p_increase + m.p_decrease == pytest.approx(1.0, abs=1e-12)
        want = m.adjp_increase if m.direction is Direction.INCREASE else m.adjp_decrease
        assert m.matching_adjp == want
        assert m.metrics.total == len(m.test_idx)


def test_robustness_rows(small_report):
    rows = small_report.robustness
    assert len(rows) == 4
    for r in rows:
        assert r.delta_gbdt == r.adjp_gbdt - r.adjp_main
        assert r.delta_70_30 == r.adjp_70_30 - r.adjp_main


def test_emitted_reports(small_report, tmp_path):
    written = reports.emit_reports(small_report, tmp_path / "out")
    names = {p.name for p in written}
    assert set(reports.REPORT_FILES) <= names
    header, rows = read_csv(tmp_path / "out" / "probabilities.csv")
    assert header == "# seed=5"
    assert len(rows) == 4 and rows[0]["dataset"] == "HkIn"
    _, rob = read_csv(tmp_path / "out" / "robustness.csv")
    assert set(rob[0]) == {"dataset", "scheme", "interval", "adjp_goss_efb_80_20", "adjp_gbdt_80_20",
                           "adjp_goss_efb_70_30", "delta_gbdt", "delta_70_30"}
    _, curves = read_csv(tmp_path / "out" / "learning_curves.csv")
    assert len(curves) == 4 * 2 * 40
    _, metrics = read_csv(tmp_path / "out" / "metrics.csv")
    assert {r["label"] for r in metrics} == {"0", "1"}
    assert not list(tmp_path.glob(".staging-*"))


def test_stage_errors_name_the_stage(small_config):
    bad = dataclasses.replace(small_config, extreme_quantile=0.0)
    with pytest.raises(StageError) as err:
        Pipeline(bad).keywords()
    assert err.value.stage == "label" and err.value.exit_code == 3


# -- command line ------------------------------------------------------------

def small_cfg_file(small_corpus, directory, **overrides):
    prices, tweets, _ = small_corpus
    sections = dict(SMALL_RUN, seed=5)
    sections.update(overrides)
    return write_config(directory / "run.yaml", prices, tweets, directory / "out", **sections)


def test_cli_run_writes_everything(small_corpus, tmp_path):
    cfg = small_cfg_file(small_corpus, tmp_path, robustness={"gbdt_only": False, "split_70_30": False})
    assert main(["run", "--config", str(cfg), "--seed", "11"]) == 0
    out = tmp_path / "out"
    for name in reports.REPORT_FILES + ("counters.csv", "keywords_hourly_increase.csv", "intervals_hourly.csv"):
        assert (out / name).read_text().startswith("# seed=11\n"), name
    assert (out / "tables" / "HkIn_baseline.csv").exists()
    assert (out / "models" / "HkDe_weighted.model").read_text().startswith("keywordboost-model 1")
    _, rob = read_csv(out / "robustness.csv")
    assert rob == []


def test_cli_stage_subcommand(small_corpus, tmp_path):
    cfg = small_cfg_file(small_corpus, tmp_path)
    assert main(["keywords", "--config", str(cfg), "--out", str(tmp_path / "kw")]) == 0
    names = sorted(p.name for p in (tmp_path / "kw").iterdir())
    assert names == ["counters.csv", "keywords_hourly_decrease.csv", "keywords_hourly_increase.csv"]
    _, rows = read_csv(tmp_path / "kw" / "keywords_hourly_increase.csv")
    assert [int(r["rank"]) for r in rows] == list(range(1, 17))
    assert all(r["direction"] == "Increase" for r in rows)


def test_cli_ingest_writes_clean_tweets(small_corpus, tmp_path):
    cfg = small_cfg_file(small_corpus, tmp_path)
    assert main(["ingest", "--config", str(cfg)]) == 0
    lines = (tmp_path / "out" / "tweets_clean.jsonl").read_text().splitlines()
    first = json.loads(lines[0])
    assert set(first) == {"id", "timestamp", "tokens", "retweet_count"}


def test_cli_exit_codes(small_corpus, tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("bogus: 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    missing = tmp_path / "missing.yaml"
    missing.write_text("paths: {prices: none.csv, tweets: none.jsonl}\n")
    assert main(["run", "--config", str(missing)]) == 2
    (tmp_path / "q0").mkdir()
    q0 = small_cfg_file(small_corpus, tmp_path / "q0", extreme_quantile=0)
    assert main(["run", "--config", str(q0)]) == 3
    assert not (tmp_path / "q0" / "out").exists()
    div_dir = tmp_path / "div"
    div_dir.mkdir()
    div = small_cfg_file(small_corpus, div_dir, glove={"learning_rate": 1.0e30, "dim": 5, "iterations": 3})
    assert main(["similarity", "--config", str(div)]) == 4
    assert "similarity" in capsys.readouterr().err


def test_cli_synth(tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("synth: {n_tweets: 200, tweets_per_interval: 10}\n")
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "9"]) == 0
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["spec"]["seed"] == 9 and manifest["spec"]["n_tweets"] == 200
    assert (tmp_path / "b" / "prices.csv").exists() and (tmp_path / "b" / "tweets.jsonl").exists()
