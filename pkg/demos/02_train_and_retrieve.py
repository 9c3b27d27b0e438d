"""Generate a labelled corpus, train the embedding and measure retrieval.

Run: python3 demos/02_train_and_retrieve.py [n_designs] [seed]
Takes a few seconds at the default 200 designs.
"""

import sys
import tempfile
from collections import Counter

import numpy as np

from dft_forge import lint, retrieval, tfidf
from dft_forge.corpus import admit_text, partition
from dft_forge.lint import DftErrorKind
from dft_forge.neural import TrainConfig, train
from dft_forge.synthetic import generate_corpus

n = int(sys.argv[1]) if len(sys.argv) > 1 else 200
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0

designs = generate_corpus(n, seed=seed)
by_id = {d.id: d for d in designs}
manifest = partition([admit_text(d.id, d.buggy_json) for d in designs], seed, tempfile.mkdtemp())
train_set, refs, tests = (manifest.split(s) for s in ("train", "reference", "test"))
print(f"{n} designs -> train {len(train_set)}, reference {len(refs)}, test {len(tests)}")

# the vocabulary is frozen on the train split
vec = tfidf.fit([manifest.read(e) for e in train_set])
X = tfidf.transform_many(vec, [manifest.read(e) for e in train_set])
Y = np.array([lint.one_hot(DftErrorKind[e.label]) for e in train_set], dtype=float)
model, log = train(X, Y, TrainConfig(seed=seed))
first, last = log.records[0], log.records[-1]
print(f"joint loss {first.loss.L:.4f} -> {last.loss.L:.4f}, train accuracy {last.accuracy:.2f}")

index = retrieval.build_index(
    model, vec,
    [(by_id[e.id].buggy_json, by_id[e.id].fixed_json, manifest.read(e)) for e in refs],
    [e.id for e in refs],
)
label = {e.id: e.label for e in manifest.entries}
misses = Counter()
hits = 0
for e in tests:
    _, best = retrieval.retrieve(index, retrieval.embed_json(model, vec, manifest.read(e)))
    if label[best.id] == e.label:
        hits += 1
    else:
        misses[(e.label, label[best.id])] += 1
print(f"top-1 reference shares the query's label: {hits}/{len(tests)} = {hits / len(tests):.3f}")
for (q, r), k in misses.most_common():
    print(f"  {q} query -> {r} reference: {k}")
