"""Versioned text model format.

    keywordboost-model 1
    config {json}
    features <n>
    bundles [[members...], ...]
    trees <count>
    tree <nodes>
    split <feature> <threshold>
    leaf <value>
    ...
Nodes of each tree are listed in preorder; floats use repr so they round-trip.
"""

import json
from dataclasses import asdict

from ..errors import ParseError
from .boosting import Ensemble, TrainConfig
from .efb import FeatureBundle
from .goss import GossConfig

MAGIC = "keywordboost-model"
VERSION = 1


def dumps(model: Ensemble) -> str:
    cfg = asdict(model.config)
    lines = [f"{MAGIC} {VERSION}",
             "config " + json.dumps(cfg, sort_keys=True),
             f"features {model.n_features}",
             "bundles " + json.dumps([list(b.members) for b in model.bundles]),
             f"trees {len(model.trees)}"]
    for tree in model.trees:
        order = tree.preorder()
        lines.append(f"tree {len(order)}")
        for n in order:
            if tree.feature[n] >= 0:
                lines.append(f"split {int(tree.feature[n])} {float(tree.threshold[n])!r}")
            else:
                lines.append(f"leaf {float(tree.value[n])!r}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Ensemble:
    from .tree import Tree

    lines = text.splitlines()
    try:
        magic, version = lines[0].split()
        if magic != MAGIC or int(version) != VERSION:
            raise ParseError(f"unsupported model header {lines[0]!r}", 1)
        cfg = json.loads(lines[1].split(" ", 1)[1])
        if cfg.get("goss"):
            cfg["goss"] = GossConfig(**cfg["goss"])
        config = TrainConfig(**cfg)
        n_features = int(lines[2].split()[1])
        members = json.loads(lines[3].split(" ", 1)[1])
        n_trees = int(lines[4].split()[1])
        pos = 5
        trees = []
        for _ in range(n_trees):
            count = int(lines[pos].split()[1])
            pos += 1
            nodes = []
            for line in lines[pos:pos + count]:
                kind, *rest = line.split()
                if kind == "split":
                    nodes.append((int(rest[0]), float(rest[1])))
                elif kind == "leaf":
                    nodes.append((None, float(rest[0])))
                else:
                    raise ParseError(f"unknown node kind {kind!r}", pos + 1)
            pos += count
            trees.append(Tree.from_preorder(nodes))
    except (IndexError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed model file: {exc}") from None
    bundles = [FeatureBundle.of(m, [0] * len(m)) for m in members]
    return Ensemble(trees, config.learning_rate, n_features, config, bundles)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps(model))


def load_model(path):
    with open(path) as fh:
        return loads(fh.read())
