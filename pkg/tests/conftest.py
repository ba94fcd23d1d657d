import json

import pytest
import yaml

from keywordboost.cli.synth import SyntheticSpec, generate_synthetic_corpus


def write_corpus(directory, **spec):
    paths = generate_synthetic_corpus(SyntheticSpec(**spec)).write(directory)
    return paths[0], paths[1], json.loads(paths[2].read_text())


def write_config(path, prices, tweets, output, **sections):
    raw = {"paths": {"prices": str(prices), "tweets": str(tweets), "output": str(output)}}
    raw.update(sections)
    path.write_text(yaml.safe_dump(raw))
    return path


# a few seconds end to end: one interval, short training, tiny embeddings
SMALL_RUN = {
    "intervals": ["hourly"],
    "yake": {"keywords": 16},
    "glove": {"dim": 10, "iterations": 5},
    "encoder": {"schemes": ["baseline", "weighted"]},
    "train": {"num_iterations": 40, "learning_rate": 0.05},
    "cv": {"repetitions": 2},
}


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("small_corpus")
    return write_corpus(d, n_tweets=2000, tweets_per_interval=5, vocab_size=600, planted_per_direction=16, seed=5)


# verdict lines from the acceptance suite, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
