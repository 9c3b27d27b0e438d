"""Reference library of repaired designs and cosine top-1 lookup."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import lint as dft_lint
from .netlist import parse_netlist
from .neural import AutoencoderModel
from .synth import synthesize_to_json
from .tfidf import TfidfModel, transform

FORMAT_VERSION = 1


def cosine(z_t: np.ndarray, z_r: np.ndarray) -> float:
    nt, nr = np.linalg.norm(z_t), np.linalg.norm(z_r)
    if nt == 0.0 or nr == 0.0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return float(np.dot(z_t, z_r) / (nt * nr))


@dataclass(frozen=True)
class ReferenceEntry:
    id: str
    buggy_source: str
    fixed_source: str
    json_repr: str
    label: dft_lint.LabelVector
    embedding: np.ndarray


@dataclass(frozen=True)
class SimilarityResult:
    scores: np.ndarray
    best_index: int
    s_max: float

    def top(self, k: int) -> list[int]:
        # stable sort keeps index order among equal scores
        return [int(i) for i in np.argsort(-self.scores, kind="stable")[:k]]


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class ReferenceIndex:
    """Immutable list of reference entries, sorted by id."""

    def __init__(self, entries: Sequence[ReferenceEntry]):
        if not entries:
            raise ValueError("reference index is empty; retrieval impossible")
        self.entries = tuple(sorted(entries, key=lambda e: e.id))
        self.matrix = np.stack([e.embedding for e in self.entries])
        self.matrix.setflags(write=False)
        self._norms = np.linalg.norm(self.matrix, axis=1)

    def __len__(self) -> int:
        return len(self.entries)

    def scores(self, z_t: np.ndarray) -> np.ndarray:
        z_t = np.asarray(z_t, dtype=np.float64)
        nt = np.linalg.norm(z_t)
        if nt == 0.0:
            raise ValueError("query embedding has zero norm")
        return (self.matrix @ z_t) / (self._norms * nt)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        src_dir = directory / "sources"
        src_dir.mkdir(parents=True, exist_ok=True)
        records = []
        for e in self.entries:
            hashes = {}
            for field in ("buggy_source", "fixed_source", "json_repr"):
                text = getattr(e, field)
                h = _sha(text)
                (src_dir / f"{h}.txt").write_text(text)
                hashes[field] = h
            records.append({
                "id": e.id,
                "sources": hashes,
                "label": list(e.label),
                "embedding": [float(v) for v in e.embedding],
            })
        doc = {"version": FORMAT_VERSION, "entries": records}
        (directory / "index.json").write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "ReferenceIndex":
        directory = Path(directory)
        doc = json.loads((directory / "index.json").read_text())
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported index version {doc.get('version')!r}")
        entries = []
        for r in doc["entries"]:
            texts = {}
            for field, h in r["sources"].items():
                text = (directory / "sources" / f"{h}.txt").read_text()
                if _sha(text) != h:
                    raise ValueError(f"reference {r['id']}: {field} does not match its content hash")
                texts[field] = text
            entries.append(ReferenceEntry(
                r["id"], texts["buggy_source"], texts["fixed_source"], texts["json_repr"],
                tuple(r["label"]), np.array(r["embedding"], dtype=np.float64),
            ))
        return cls(entries)


def embed_json(model: AutoencoderModel, tfidf: TfidfModel, json_text: str) -> np.ndarray:
    return model.encode(transform(tfidf, json_text).x)


def build_index(model: AutoencoderModel, tfidf: TfidfModel, refs, ids: Sequence[str] | None = None,
                to_json: Callable[[str], str] = synthesize_to_json) -> ReferenceIndex:
    """Embed each ``(buggy, fixed, json)`` reference.

    The fixed source is converted with ``to_json`` and must lint clean.
    """
    refs = list(refs)
    if not refs:
        raise ValueError("reference list is empty; retrieval impossible")
    ids = list(ids) if ids is not None else [f"ref{i:04d}" for i in range(len(refs))]
    if len(set(ids)) != len(ids):
        raise ValueError("reference ids must be unique")
    entries = []
    for rid, (buggy, fixed, json_text) in zip(ids, refs):
        violations, label = dft_lint.lint(parse_netlist(json_text))
        fixed_violations, fixed_label = dft_lint.lint(parse_netlist(to_json(fixed)))
        if fixed_violations:
            raise ValueError(f"reference {rid}: fixed source is not DFT clean (label {fixed_label})")
        z = embed_json(model, tfidf, json_text)
        if np.linalg.norm(z) == 0.0:
            raise ValueError(f"reference {rid}: zero embedding")
        entries.append(ReferenceEntry(rid, buggy, fixed, json_text, label, z))
    return ReferenceIndex(entries)


def retrieve(index: ReferenceIndex, z_t: np.ndarray) -> tuple[SimilarityResult, ReferenceEntry]:
    """Best match by cosine similarity; ties go to the lowest id."""
    s = index.scores(z_t)
    best = int(np.argmax(s))
    return SimilarityResult(s, best, float(s[best])), index.entries[best]
