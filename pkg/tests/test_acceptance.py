"""Acceptance gate: one PASS/FAIL line per criterion, repeated in the terminal summary."""
import filecmp
import io
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, SMALL_RUN, write_config, write_corpus
from test_gbm import brute_force_best, exclusive_matrix, same_trees
from test_glove import reference_cost
from test_yake import TOY, oracle_ratio, reference_scores

from keywordboost import corpus
from keywordboost.cli import reports
from keywordboost.cli.config import load_config
from keywordboost.cli.main import main
from keywordboost.cli.pipeline import adjust_probability, run_pipeline
from keywordboost.cli.synth import SyntheticSpec, generate_synthetic_corpus
from keywordboost.corpus import Direction
from keywordboost.gbm import (
    FeatureBundle, GossConfig, TrainConfig, efb_merge_row, fit_ensemble, goss_gain, goss_partition, split_gain,
)
from keywordboost.gbm.boosting import prepare
from keywordboost.gbm.goss import split_error_bound
from keywordboost.gbm.tree import best_root_split
from keywordboost.glove import (
    GloveConfig, Vocabulary, build_cooccurrence, glove_gradient, init_model, train_embeddings,
)
from keywordboost.yake import ratcliff_similarity, score_document


def verdict(n, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {title}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


# -- 1-3: worked examples and identities ------------------------------------

def test_c01_bundle_merge_example():
    t = time.perf_counter()
    bundle = FeatureBundle.of([0, 1], [5, 10])
    got = [efb_merge_row(r, bundle) for r in [(0, 2), (0, 8), (4, 0), (1, 0), (0, 0)]]
    elapsed = time.perf_counter() - t
    verdict(1, "bundle merge example", got == [7, 13, 4, 1, 0] and elapsed < 1e-3,
            f"got {got}, {elapsed * 1e3:.3f} ms")


def test_c02_adjusted_probability_rows():
    rows = [(0.8007, 0.9750, 0.7806), (0.8820, 0.9952, 0.8777), (0.9494, 0.9965, 0.9460)]
    errs = [abs(adjust_probability(p, w) - want) * 100 for p, w, want in rows]
    verdict(2, "adjusted probability spot checks", max(errs) <= 0.02, f"worst {max(errs):.4f} pp")


def test_c03_baseline_weight_relation():
    # (similarity, printed base weight); every difference below is exactly 1e-4 in decimal,
    # so a few ulps of slack keep binary rounding from deciding the verdict
    rows = [(0.9626, 0.0375), (0.9203, 0.0796), (0.9076, 0.0925)]
    errs = [abs((1 - s) - w) for s, w in rows]
    verdict(3, "base weight is one minus similarity", max(errs) <= 1e-4 + 1e-12, f"worst {max(errs):.2e}")


# -- 4: embeddings -----------------------------------------------------------

def synthetic_tweets(n, seed):
    sc = generate_synthetic_corpus(SyntheticSpec(n_tweets=n, tweets_per_interval=10, seed=seed))
    raws = corpus.parse_tweets(io.BytesIO(sc.tweets_jsonl.encode()))
    clean, _ = corpus.sanitize_all(raws, corpus.load_stopwords())
    return [list(tw.tokens) for tw in clean]


def test_c04_embedding_gradient_and_descent():
    t = time.perf_counter()
    rng = np.random.default_rng(4)
    docs = [list(rng.choice(list("abcde"), size=rng.integers(3, 8))) for _ in range(20)]
    W = build_cooccurrence(docs, Vocabulary.build(docs), 3)
    cfg = GloveConfig(dim=6)
    model = init_model(W.vocab, cfg)
    for arr in (model.word, model.context, model.word_bias, model.context_bias):
        arr[...] = rng.normal(0, 0.5, size=arr.shape)
    grads = glove_gradient(model, W, cfg)
    blocks = [("word", model.word), ("context", model.context), ("word_bias", model.word_bias),
              ("context_bias", model.context_bias)]
    h, worst = 1e-5, 0.0
    for _ in range(100):
        name, arr = blocks[rng.integers(len(blocks))]
        idx = tuple(rng.integers(s) for s in arr.shape)
        old = arr[idx]
        arr[idx] = old + h
        up = reference_cost(model, W, cfg)
        arr[idx] = old - h
        down = reference_cost(model, W, cfg)
        arr[idx] = old
        numeric = (up - down) / (2 * h)
        worst = max(worst, abs(grads[name][idx] - numeric) / max(abs(grads[name][idx]), abs(numeric), 1e-8))

    tweets = synthetic_tweets(1000, seed=4)
    big = build_cooccurrence(tweets, Vocabulary.build(tweets))
    hist = train_embeddings(big, GloveConfig()).cost_history
    elapsed = time.perf_counter() - t
    ok = len(W.vocab) == 5 and worst < 1e-4 and hist[-1] < hist[0] and elapsed < 60
    verdict(4, "embedding gradients and descent", ok,
            f"worst rel {worst:.1e}, cost {hist[0]:.1f} -> {hist[-1]:.1f}, {elapsed:.1f} s")


# -- 5-8: boosting -----------------------------------------------------------

def test_c05_full_top_rate_is_plain_boosting():
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    X = rng.random((1000, 20))
    y = (X[:, 0] + X[:, 1] * X[:, 2] + 0.3 * rng.random(1000) > 0.9).astype(int)
    base = dict(num_iterations=100, learning_rate=0.1)
    plain = fit_ensemble(X, y, TrainConfig(**base))
    goss = fit_ensemble(X, y, TrainConfig(**base, goss=GossConfig(1.0, 0.0), seed=17))
    same_trees(plain, goss)
    elapsed = time.perf_counter() - t
    verdict(5, "sampling with every row kept equals plain boosting", elapsed < 30,
            f"{len(plain.trees)} identical trees, {elapsed:.1f} s")


def test_c06_bundling_is_lossless():
    X, y = exclusive_matrix(2000, seed=6)
    Xt, _ = exclusive_matrix(1000, seed=7)
    base = dict(num_iterations=60, learning_rate=0.1, min_data_in_leaf=10)
    plain = fit_ensemble(X, y, TrainConfig(**base))
    bundled = fit_ensemble(X, y, TrainConfig(**base, efb=0.0))
    same = np.array_equal(plain.raw_score(Xt), bundled.raw_score(Xt))
    verdict(6, "bundled and unbundled predictions agree", same and len(bundled.bundles) < 20,
            f"{len(bundled.bundles)} bundles for 20 features")


def test_c07_root_split_attains_exhaustive_maximum():
    rng = np.random.default_rng(7)
    misses = 0
    for _ in range(50):
        n = int(rng.integers(2, 201))
        X = np.column_stack([rng.random(n), rng.integers(0, 6, n).astype(float),
                             rng.random(n) * (rng.random(n) < 0.3), rng.exponential(size=n)])
        grad = rng.normal(size=n)
        want = brute_force_best(X, grad)
        best = best_root_split(prepare(X, TrainConfig()), grad)
        got = -np.inf if best is None else split_gain(grad, X[:, best[0]], best[1])
        misses += got != want
    verdict(7, "root split attains the exhaustive maximum", misses == 0, f"{misses} of 50 nodes missed")


def test_c08_sampled_gain_error_bound():
    rng = np.random.default_rng(8)
    H = 1000
    X = rng.random((H, 10))
    y = (X[:, 0] + 0.3 * rng.random(H) > 0.65).astype(float)
    # gradients after a short plain fit
    model = fit_ensemble(X, y, TrainConfig(num_iterations=20, learning_rate=0.05))
    g = y - model.raw_score(X)
    cfg = GossConfig()
    within = total = 0
    for _ in range(20):
        s = goss_partition(g, cfg, rng)
        for f in range(X.shape[1]):
            for z in np.quantile(X[:, f], np.linspace(0.05, 0.95, 19)):
                err = abs(goss_gain(g, X[:, f], z, s.large, s.small, s.amplification) - split_gain(g, X[:, f], z))
                within += err <= split_error_bound(g, X[:, f], z, s, cfg, 0.05)
                total += 1
    verdict(8, "sampled gains stay within the error bound", within / total >= 0.95,
            f"{within}/{total} splits within bound")


# -- 9-10: keyword extraction ------------------------------------------------

@pytest.mark.slow
def test_c09_keyword_properties(calibration):
    report, _ = calibration
    doc = [["solo", "lone", "beta"], ["gamma", "beta", "delta"], ["beta", "gamma"], ["gamma", "delta", "eps"]]
    first_only = {t for t in doc[0] if all(t not in tw for tw in doc[1:])}
    scores = dict(score_document(doc))
    zero_position = first_only == {"solo", "lone"} and all(scores[t].position == 0.0 for t in first_only)

    near = 0
    for res in report.intervals:
        for ks in res.keywords.values():
            terms = ks.terms
            near += sum(ratcliff_similarity(a, b) >= 0.9 for i, a in enumerate(terms) for b in terms[i + 1:])

    got = dict(score_document(TOY))
    worst = max(abs(got[t].kappa - ref[4]) for t, ref in reference_scores(TOY).items())
    verdict(9, "keyword score properties", zero_position and near == 0 and worst <= 1e-12,
            f"{near} near-duplicate pairs, toy worst {worst:.1e}")


def test_c10_similarity_matches_gestalt_oracle():
    rng = random.Random(10)
    mismatches = 0
    for _ in range(1000):
        a = "".join(rng.choice("abcde") for _ in range(rng.randint(1, 12)))
        b = "".join(rng.choice("abcde") for _ in range(rng.randint(1, 12)))
        mismatches += ratcliff_similarity(a, b) != oracle_ratio(a, b)
    verdict(10, "string similarity matches the recursion oracle", mismatches == 0, f"{mismatches} of 1000 differ")


# -- 11-13: end to end -------------------------------------------------------

def run_synthetic(directory, odds, robustness):
    prices, tweets, manifest = write_corpus(directory, odds_ratio=odds, seed=11)
    cfg = write_config(directory / "run.yaml", prices, tweets, directory / "out", seed=11,
                       intervals=["hourly"], encoder={"schemes": ["baseline"]},
                       robustness={"gbdt_only": robustness, "split_70_30": robustness})
    return run_pipeline(load_config(cfg)), manifest


@pytest.fixture(scope="module")
def timed_runs(tmp_path_factory):
    t = time.perf_counter()
    planted = run_synthetic(tmp_path_factory.mktemp("odds3"), 3.0, True)
    null = run_synthetic(tmp_path_factory.mktemp("odds1"), 1.0, False)
    return planted, null, time.perf_counter() - t


@pytest.fixture(scope="module")
def calibration(timed_runs):
    return timed_runs[0]


@pytest.mark.slow
def test_c11_planted_signal_end_to_end(timed_runs):
    (report, manifest), (null, _), elapsed = timed_runs
    acc = {m.table_id: m.metrics.accuracy for m in report.models}
    res = report.intervals[0]
    recovered = {d: len(set(res.keywords[d].terms) & set(manifest["planted"][d.value])) for d in Direction}
    null_acc = {m.table_id: m.metrics.accuracy for m in null.models}
    ok = (len(acc) == 2 and min(acc.values()) >= 0.85 and min(recovered.values()) >= 48
          and len(null_acc) == 2 and all(abs(a - 0.5) <= 0.05 for a in null_acc.values()) and elapsed < 600)
    detail = (", ".join(f"{k} {v:.3f}" for k, v in sorted(acc.items()))
              + ", recovered " + "/".join(f"{recovered[d]}" for d in Direction) + " of 64"
              + ", null " + ", ".join(f"{v:.3f}" for _, v in sorted(null_acc.items()))
              + f", {elapsed:.0f} s")
    verdict(11, "planted keywords are recovered and predictive", ok, detail)


@pytest.mark.slow
def test_c12_robustness_protocol(calibration, tmp_path):
    report, _ = calibration
    rows = report.robustness
    complete = len(rows) == 2 and all(r.adjp_gbdt is not None and r.adjp_70_30 is not None for r in rows)
    reports.emit_reports(report, tmp_path / "out")
    header = (tmp_path / "out" / "robustness.csv").read_text().splitlines()[1].split(",")
    shaped = header == ["dataset", "scheme", "interval", "adjp_goss_efb_80_20", "adjp_gbdt_80_20",
                        "adjp_goss_efb_70_30", "delta_gbdt", "delta_70_30"]
    worst = max(abs(r.delta_70_30) for r in rows) if complete else float("inf")
    # the raw probabilities move more than the adjusted ones, since the base weight is small
    if complete:
        base = report.intervals[0].base_wt
        print("info: 70-30 probability shifts (not asserted):",
              ", ".join(f"{r.table_id} {r.delta_70_30 / base * 100:+.2f} pp" for r in rows))
    verdict(12, "robustness reruns and deltas", complete and shaped and worst <= 0.02,
            f"worst 70-30 delta {worst * 100:.3f} pp")


def test_c13_reruns_are_byte_identical(small_corpus, tmp_path):
    prices, tweets, _ = small_corpus
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        sections = dict(SMALL_RUN, seed=13, intervals=["hourly", "4hourly", "daily"])
        cfg = write_config(d / "run.yaml", prices, tweets, d / "out", **sections)
        assert main(["run", "--config", str(cfg)]) == 0
        outs.append(d / "out")

    def listing(root):
        return sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file())

    files = listing(outs[0])
    _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], files, shallow=False)
    ok = bool(files) and files == listing(outs[1]) and not mismatch and not errors
    verdict(13, "identical runs give identical report files", ok, f"{len(files)} files compared")
