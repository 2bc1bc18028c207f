#!/usr/bin/env python3
"""End-to-end smoke test for the sentigraph_py extension module.

Builds the extension with cargo if needed, then exercises the codec,
oracle, metrics, IO and a tiny training run. Exits nonzero on the first
failed check.
"""

import importlib.util
import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    lib = REPO / "target" / "debug" / "libsentigraph_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "sentigraph-python"], cwd=REPO, check=True
        )
    stage = Path(tempfile.mkdtemp(prefix="sentigraph-py-"))
    target = stage / "sentigraph_py.so"
    shutil.copy2(lib, target)
    spec = importlib.util.spec_from_file_location("sentigraph_py", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


sg = load_module()

FORMS = [
    "Some", "classmates", "said", "that", "all", "the", "instructors",
    "were", "too", "demanding", ",", "but", "really", "friendly",
]

sent = sg.Sentence.from_forms("ex01", FORMS)
assert len(sent) == 14
assert sent.forms == FORMS

graph = sg.SentimentGraph(
    sent,
    [
        {
            "holder": [1, 2],
            "target": [5, 6, 7],
            "expression": [9, 10],
            "polarity": "Negative",
        },
        {
            "holder": [1, 2],
            "target": [5, 6, 7],
            "expression": [13, 14],
            "polarity": "Positive",
        },
    ],
)

dep = sg.encode(graph, "head-first")
expected_arcs = {
    (9, 1, "holder"), (13, 1, "holder"), (1, 2, "holder#holder"),
    (9, 5, "target"), (13, 5, "target"), (5, 6, "target#target"),
    (5, 7, "target#target"), (0, 9, "exp:neg"), (9, 10, "exp:neg"),
    (0, 13, "exp:pos"), (13, 14, "exp:pos"),
}
assert set(dep.arcs) == expected_arcs, dep.arcs

seq = sg.oracle(dep)
assert len(seq) == 14 + 11
replayed = sg.replay(sent, seq)
assert sorted(replayed.arcs) == sorted(dep.arcs)

text = seq.to_text()
assert sg.TransitionSequence.from_text(text).to_text() == text

decoded, warnings = sg.decode(dep)
assert warnings == []
assert decoded.opinions == graph.opinions

report = sg.score([graph], [decoded])
for key, value in report.items():
    assert math.isclose(value, 1.0), (key, value)

stats = sg.stats([dep])
assert stats["per_sentence"] == [(14, 25)]
assert math.isclose(stats["arcs_per_token"], 11 / 14)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    sg.write_sentiment_corpus(tmp / "corpus.json", [graph])
    record = json.loads((tmp / "corpus.json").read_text())[0]
    assert record["sent_id"] == "ex01"
    graphs, warnings = sg.read_sentiment_corpus(tmp / "corpus.json")
    assert warnings == []
    assert graphs[0].opinions == graph.opinions

    sg.write_dependency_corpus(tmp / "corpus.dep", [dep])
    deps = sg.read_dependency_corpus(tmp / "corpus.dep")
    assert sorted(deps[0].arcs) == sorted(dep.arcs)

    tiny = {
        "epochs": 3,
        "batch_size": 2,
        "seed": 7,
        "word_dim": 16,
        "pos_dim": 4,
        "lemma_dim": 8,
        "char_dim": 4,
        "char_filters": 8,
        "encoder_hidden": 16,
        "decoder_hidden": 16,
        "arc_dim": 16,
        "label_dim": 8,
    }
    epochs = []
    parser = sg.train([dep], config=tiny, progress=lambda s: epochs.append(s))
    assert [e["epoch"] for e in epochs] == [1, 2, 3]
    assert all(e["dev_lf1"] is None for e in epochs)

    pred_dep, pred_seq = parser.parse(sent, beam=2)
    assert sg.replay(sent, pred_seq).arcs == pred_dep.arcs
    uf1, lf1 = parser.evaluate([dep])
    assert 0.0 <= lf1 <= uf1 <= 1.0

    parser.save(tmp / "model.ckpt")
    reloaded = sg.Parser.load(tmp / "model.ckpt")
    again_dep, again_seq = reloaded.parse(sent, beam=2)
    assert again_seq.to_text() == pred_seq.to_text()
    assert again_dep.arcs == pred_dep.arcs

print("smoke test passed")
