"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..errors import PipelineError
from . import reports
from .config import PipelineConfig, check_seed, load_config
from .pipeline import Pipeline
from .synth import generate_synthetic_corpus

log = logging.getLogger("keywordboost")

COMMANDS = {
    "ingest": "parse and sanitize prices and tweets",
    "label": "label intervals and bucket tweets by next-interval direction",
    "similarity": "train embeddings on the extreme subsets and report baseline weights",
    "keywords": "extract the cross-unique keyword sets",
    "encode": "write the encoded training tables",
    "train": "cross-validate and fit one model per table",
    "evaluate": "test-set metrics, probabilities and feature importance",
    "robustness": "plain-GBDT and 70-30 reruns against the primary models",
    "synth": "write a seeded synthetic corpus",
    "run": "the full pipeline with every report",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="keywordboost", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=name != "synth", help="YAML configuration file")
        p.add_argument("--seed", help="run seed (unsigned 64-bit), overrides the config")
        p.add_argument("--out", help="output directory, overrides paths.output")
    return parser


def _emit(name, pipe: Pipeline):
    report = pipe.report
    w = reports._Writer(report.seed)
    if name == "ingest":
        reports.clean_tweets(w, pipe.ingest().tweets)
    elif name == "label":
        pipe.label()
        reports.intervals(w, report)
    elif name == "similarity":
        pipe.similarity()
        reports.similarity(w, report)
    elif name == "keywords":
        pipe.keywords()
        reports.keywords(w, report)
    elif name == "encode":
        pipe.encode()
        reports.tables(w, report)
    elif name == "train":
        pipe.train()
        reports.models(w, report)
        reports.degenerate(w, report)
    elif name == "evaluate":
        pipe.evaluate()
        reports.evaluation(w, report)
    elif name == "robustness":
        pipe.robustness()
        reports.robustness(w, report)
    elif name == "run":
        cfg = pipe.cfg
        pipe.run_all(robustness=cfg.robustness.gbdt_only or cfg.robustness.split_70_30)
        for build in (reports.intervals, reports.similarity, reports.keywords, reports.tables, reports.models,
                      reports.evaluation, reports.robustness, reports.degenerate):
            build(w, report)
    reports.counters(w, report)
    return w.publish(pipe.cfg.paths.output)


def _synth(args):
    cfg = load_config(args.config) if args.config else PipelineConfig()
    spec = cfg.synth
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=check_seed(args.seed))
    out = args.out or cfg.paths.output
    return generate_synthetic_corpus(spec).write(out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            written = _synth(args)
        else:
            cfg = load_config(args.config).with_overrides(args.seed, args.out)
            written = _emit(args.command, Pipeline(cfg))
    except PipelineError as exc:
        print(f"keywordboost {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"keywordboost {args.command}: {exc}", file=sys.stderr)
        return 3
    for path in written:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
