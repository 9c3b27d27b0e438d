"""TF-IDF features over netlist JSON text.

Smoothed idf ``ln((1 + n) / (1 + df)) + 1``, sublinear tf ``1 + ln(tf)``,
L2-normalised rows, vocabulary capped at 512 terms and zero-padded to a
fixed width.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DIM = 512
FORMAT_VERSION = 1

_TOKEN = re.compile(r"[a-z0-9_]{2,}")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class FeatureVector:
    x: np.ndarray
    oov: bool  # no in-vocabulary term; x is all zeros


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: tuple[str, ...]
    idf: np.ndarray
    fitted_on: str
    dim: int = DIM

    def __post_init__(self):
        if list(self.vocabulary) != sorted(self.vocabulary):
            raise ValueError("vocabulary must be sorted")
        if len(self.vocabulary) > self.dim:
            raise ValueError(f"vocabulary larger than {self.dim}")
        self.idf.setflags(write=False)

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.vocabulary)}

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "dim": self.dim,
            "fitted_on": self.fitted_on,
            "vocabulary": list(self.vocabulary),
            "idf": [float(v) for v in self.idf],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported TF-IDF model version {doc.get('version')!r}")
        return cls(tuple(doc["vocabulary"]), np.array(doc["idf"], dtype=np.float64), doc["fitted_on"], doc["dim"])


def corpus_fingerprint(corpus: list[str]) -> str:
    h = hashlib.sha256()
    for doc in corpus:
        h.update(hashlib.sha256(doc.encode()).digest())
    return h.hexdigest()


def fit(corpus: list[str], max_features: int = DIM) -> TfidfModel:
    """Select the most frequent terms (ties: alphabetical) and compute idf."""
    if not corpus:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    total: Counter[str] = Counter()
    df: Counter[str] = Counter()
    for doc in corpus:
        counts = Counter(tokenize(doc))
        total.update(counts)
        df.update(counts.keys())
    ranked = sorted(total, key=lambda t: (-total[t], t))[:max_features]
    vocab = tuple(sorted(ranked))
    n = len(corpus)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocab], dtype=np.float64)
    return TfidfModel(vocab, idf, corpus_fingerprint(corpus), max(max_features, DIM))


def transform(model: TfidfModel, text: str) -> FeatureVector:
    index = model.index
    x = np.zeros(model.dim, dtype=np.float64)
    for term, tf in Counter(tokenize(text)).items():
        i = index.get(term)
        if i is not None:
            x[i] = (1.0 + math.log(tf)) * model.idf[i]
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return FeatureVector(x, True)
    return FeatureVector(x / norm, False)


def transform_many(model: TfidfModel, texts: list[str]) -> np.ndarray:
    return np.stack([transform(model, t).x for t in texts]) if texts else np.zeros((0, model.dim))
