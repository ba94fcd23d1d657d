"""CSV report writers. Every CSV opens with a ``# seed=<seed>`` comment line."""

from __future__ import annotations

import csv
import io
import json
import shutil
import tempfile
from pathlib import Path

from ..corpus import Direction, format_timestamp
from ..gbm import feature_importance
from ..gbm.io import dumps

REPORT_FILES = ("similarity.csv", "metrics.csv", "probabilities.csv", "robustness.csv", "learning_curves.csv",
                "confusion.csv", "feature_importance.csv")


def _num(x):
    if x is None:
        return ""
    return repr(float(x))


class _Writer:
    """Collects files in memory, then publishes them into ``out_dir`` in one go."""

    def __init__(self, seed):
        self.seed = seed
        self.files = {}

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(f"# seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.files[name] = buf.getvalue()

    def text(self, name, content):
        self.files[name] = content

    def publish(self, out_dir):
        """Write everything to a staging directory next to ``out_dir`` and move it in.

        On any failure the staging directory is removed and ``out_dir`` keeps its
        previous contents.
        """
        out = Path(out_dir)
        out.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out.parent))
        try:
            for name, content in self.files.items():
                path = staging / name
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(content, encoding="utf-8")
            out.mkdir(parents=True, exist_ok=True)
            for name in sorted(self.files):
                target = out / name
                target.parent.mkdir(parents=True, exist_ok=True)
                (staging / name).replace(target)
        finally:
            shutil.rmtree(staging, ignore_errors=True)
        return [out / name for name in sorted(self.files)]


# -- per-stage report builders -----------------------------------------------


def counters(w, report):
    w.csv("counters.csv", ["counter", "value"], sorted(report.counters.items()))


def clean_tweets(w, tweets):
    lines = [json.dumps({"id": t.id, "timestamp": format_timestamp(t.timestamp), "tokens": list(t.tokens),
                         "retweet_count": t.retweet_count}) for t in tweets]
    w.text("tweets_clean.jsonl", "".join(line + "\n" for line in lines))


def intervals(w, report):
    for res in report.intervals:
        dataset_of = {}
        for d in Direction:
            ds = res.buckets.dataset(d)
            for m in ds.members:
                dataset_of[m.interval.start] = (ds.dataset_id, len(m.tweets))
        rows = []
        for iv in res.intervals:
            ds, n = dataset_of.get(iv.start, ("", 0))
            rows.append([format_timestamp(iv.start), format_timestamp(iv.end), _num(iv.log_return),
                         iv.label.value, ds, n])
        w.csv(f"intervals_{res.name}.csv", ["start", "end", "log_return", "label", "dataset", "tweets"], rows)


def similarity(w, report):
    rows = [[r.name, _num(r.similarity), _num(r.base_wt), r.vocab_size,
             r.extremes[Direction.INCREASE].tweet_count, r.extremes[Direction.DECREASE].tweet_count]
            for r in report.intervals]
    w.csv("similarity.csv", ["interval", "similarity", "baseline_weight", "vocab_size", "increase_tweets",
                             "decrease_tweets"], rows)


def keywords(w, report):
    for res in report.intervals:
        for d, ks in res.keywords.items():
            rows = [[rank, term, _num(s.kappa), _num(s.position), _num(s.frequency), _num(s.relevancy),
                     _num(s.dispersion), d.value, res.name] for rank, (term, s) in enumerate(ks, start=1)]
            w.csv(f"keywords_{res.name}_{d.value.lower()}.csv",
                  ["rank", "term", "kappa", "G_cp", "G_cf", "G_cr", "G_cd", "direction", "interval"], rows)


def tables(w, report):
    for res in report.intervals:
        for (d, scheme), table in res.tables.items():
            buf = io.StringIO()
            cw = csv.writer(buf, lineterminator="\n")
            cw.writerow(["interval_start", "label", "N", "R"] + [f"f_{i:03d}" for i in range(len(table.terms))])
            for r in table.rows:
                cw.writerow([format_timestamp(r.interval_start), r.label, r.tweet_count, r.retweet_total]
                            + [_num(v) for v in r.features])
            w.text(f"tables/{table.table_id}_{scheme.value}.csv", buf.getvalue())


def models(w, report):
    for m in report.models:
        w.text(f"models/{m.table_id}_{m.scheme.value}.model", dumps(m.model))
    rows = []
    for m in report.models:
        if m.cv is None:
            continue
        rows.append([m.table_id, m.scheme.value, len(m.cv.val_accuracy), _num(m.cv.mean_accuracy),
                     _num(m.cv.std_accuracy)])
    w.csv("cv.csv", ["dataset", "scheme", "repetitions", "mean_val_acc", "std_val_acc"], rows)
    curves = []
    for m in report.models:
        if m.cv is None:
            continue
        for rep, h in enumerate(m.cv.curves):
            for it in range(len(h["train_loss"])):
                curves.append([m.table_id, m.scheme.value, rep, it + 1, _num(h["train_loss"][it]),
                               _num(h["val_loss"][it]), _num(h["train_acc"][it]), _num(h["val_acc"][it])])
    w.csv("learning_curves.csv", ["dataset", "scheme", "repetition", "iteration", "train_loss", "val_loss",
                                  "train_acc", "val_acc"], curves)


def evaluation(w, report):
    metrics, confusion, probs, importance = [], [], [], []
    for m in report.models:
        mt = m.metrics
        for label in (1, 0):
            c = mt.per_class[label]
            metrics.append([m.table_id, m.scheme.value, label, _num(c.precision), _num(c.recall), _num(c.f1),
                            c.support, _num(mt.accuracy)])
        confusion.append([m.table_id, m.scheme.value, mt.tp, mt.fp, mt.tn, mt.fn])
        probs.append([m.table_id, m.scheme.value, m.interval, _num(m.p_increase), _num(m.adjp_increase),
                      _num(m.p_decrease), _num(m.adjp_decrease), _num(m.base_wt),
                      mt.per_class[m.direction.label].support])
        for rank, (f, count) in enumerate(feature_importance(m.model), start=1):
            importance.append([m.table_id, m.scheme.value, rank, f"f_{f:03d}", m.terms[f], count])
    w.csv("metrics.csv", ["dataset", "scheme", "label", "precision", "recall", "f1", "support", "accuracy"],
          metrics)
    w.csv("confusion.csv", ["dataset", "scheme", "tp", "fp", "tn", "fn"], confusion)
    w.csv("probabilities.csv", ["dataset", "scheme", "interval", "p_increase", "adjp_increase", "p_decrease",
                                "adjp_decrease", "base_wt", "rows"], probs)
    w.csv("feature_importance.csv", ["dataset", "scheme", "rank", "feature", "term", "split_count"], importance)


def robustness(w, report):
    rows = [[r.table_id, r.scheme.value, r.interval, _num(r.adjp_main), _num(r.adjp_gbdt), _num(r.adjp_70_30),
             _num(r.delta_gbdt), _num(r.delta_70_30)] for r in report.robustness]
    w.csv("robustness.csv", ["dataset", "scheme", "interval", "adjp_goss_efb_80_20", "adjp_gbdt_80_20",
                             "adjp_goss_efb_70_30", "delta_gbdt", "delta_70_30"], rows)


def degenerate(w, report):
    w.csv("degenerate.csv", ["dataset", "scheme"], [[t, s.value] for t, s in report.degenerate])


def emit_reports(report, out_dir):
    """All run reports; returns the written paths."""
    w = _Writer(report.seed)
    for build in (counters, similarity, keywords, models, evaluation, robustness, degenerate):
        build(w, report)
    return w.publish(out_dir)
