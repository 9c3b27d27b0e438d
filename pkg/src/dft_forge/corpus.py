"""Admission filtering and the stratified train/reference/test split."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import lint as dft_lint
from .lint import DftErrorKind
from .netlist import NetlistError, UnknownCellKind, parse_netlist
from .synth import SynthesisError, synthesize_to_json

log = logging.getLogger(__name__)

SPLITS = ("train", "reference", "test")
FRACTIONS = {"train": 0.20, "reference": 0.08}
REJECT_REASONS = ("no-logic", "synth-fail", "zero-violations", "multi-violation", "unsupported-error-type", "io-error")


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Admission:
    id: str
    source: str
    admitted: bool
    reason: str = ""
    label: DftErrorKind | None = None
    diagnostics: str = ""
    json_text: str | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "verdict": "admitted" if self.admitted else "rejected",
            "reason": self.reason,
            "label": self.label.name if self.label else None,
            "diagnostics": self.diagnostics,
        }


def admit_text(design_id: str, source_text: str, source: str = "",
               synth: Callable[[str], str] = synthesize_to_json) -> Admission:
    """Synthesize, parse and lint one design; keep it only with exactly one error type."""
    def reject(reason, diagnostics=""):
        return Admission(design_id, source, False, reason, diagnostics=diagnostics)

    try:
        json_text = synth(source_text)
    except SynthesisError as exc:
        return reject("synth-fail", exc.report)
    try:
        nl = parse_netlist(json_text)
    except UnknownCellKind as exc:
        return reject("unsupported-error-type", str(exc))
    except NetlistError as exc:
        return reject("synth-fail", f"netlist rejected: {exc}")
    if not nl.flat.cells:
        return reject("no-logic")
    violations, label = dft_lint.lint(nl)
    if not violations:
        return reject("zero-violations")
    kinds = dft_lint.root_cause_kinds(violations)
    if len(kinds) > 1:
        return reject("multi-violation", dft_lint.render_report(violations, label))
    return Admission(design_id, source, True, label=kinds.pop(), json_text=json_text)


def admit(path: str | Path, synth: Callable[[str], str] = synthesize_to_json) -> Admission:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        return Admission(path.stem, str(path), False, "io-error", diagnostics=str(exc))
    return admit_text(path.stem, text, str(path), synth)


def admit_many(paths: Iterable[str | Path], synth: Callable[[str], str] = synthesize_to_json,
               jobs: int = 1) -> list[Admission]:
    paths = list(paths)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(lambda p: admit(p, synth), paths))


# ------------------------------------------------------------ partition


def _round(x: float) -> int:
    return math.floor(x + 0.5)


def split_sizes(n: int) -> tuple[int, int, int]:
    """Per-stratum (train, reference, test) counts.

    Each share is rounded half up independently and the test split takes the
    rest, so every count is within one file of its target. Strata with fewer
    than three entries go to train first, then reference.
    """
    if n <= 0:
        return 0, 0, 0
    if n < 3:
        return (1, n - 1, 0)
    train = max(1, _round(FRACTIONS["train"] * n))
    ref = _round(FRACTIONS["reference"] * n)
    return train, ref, n - train - ref


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    source: str
    json: str
    label: str
    split: str
    hashes: dict[str, str]


class ManifestError(ValueError):
    pass


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    root: Path = Path(".")

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def counts(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {s: defaultdict(int) for s in SPLITS}
        for e in self.entries:
            out[e.split][e.label] += 1
        return {s: dict(sorted(c.items())) for s, c in out.items()}

    def read(self, entry: ManifestEntry, field_name: str = "json") -> str:
        return (self.root / getattr(entry, field_name)).read_text()

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for e in self.entries:
                fh.write(json.dumps(asdict(e), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        """Read a JSON-lines manifest; file paths are relative to its directory."""
        path = Path(path)
        root = path.parent
        entries = []
        for n, line in enumerate(path.read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                e = ManifestEntry(**json.loads(line))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ManifestError(f"{path}:{n}: malformed manifest line: {exc}") from exc
            if e.split not in SPLITS:
                raise ManifestError(f"{path}:{n}: unknown split {e.split!r}")
            if e.label not in DftErrorKind.__members__:
                raise ManifestError(f"{path}:{n}: unknown label {e.label!r}")
            for kind in ("source", "json"):
                actual = sha256_text((root / getattr(e, kind)).read_text())
                if actual != e.hashes[kind]:
                    raise ManifestError(f"{e.id}: {kind} file {getattr(e, kind)} does not match its recorded hash")
            entries.append(e)
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise ManifestError("manifest ids are not unique")
        return cls(entries, root)


def partition(admitted: Sequence[Admission], seed: int, out_dir: str | Path) -> Manifest:
    """Stratified, seeded split; writes netlist JSON copies under ``out_dir/netlists``."""
    out_dir = Path(out_dir)
    accepted = [a for a in admitted if a.admitted]
    ids = [a.id for a in accepted]
    if len(set(ids)) != len(ids):
        raise ValueError("admitted design ids are not unique")
    strata: dict[DftErrorKind, list[Admission]] = defaultdict(list)
    for a in sorted(accepted, key=lambda a: a.id):
        strata[a.label].append(a)
    rng = random.Random(seed)
    net_dir = out_dir / "netlists"
    src_dir = out_dir / "sources"
    net_dir.mkdir(parents=True, exist_ok=True)
    src_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for kind in dft_lint.KIND_ORDER:
        group = strata.get(kind, [])
        if not group:
            continue
        if len(group) < 3:
            log.warning("label %s has only %d design(s); best-effort split", kind.name, len(group))
        rng.shuffle(group)
        n_train, n_ref, _ = split_sizes(len(group))
        for i, a in enumerate(group):
            split = "train" if i < n_train else "reference" if i < n_train + n_ref else "test"
            source_text = Path(a.source).read_text() if a.source else a.json_text
            src_rel = Path("sources") / f"{a.id}{Path(a.source).suffix or '.json'}"
            json_rel = Path("netlists") / f"{a.id}.json"
            (out_dir / src_rel).write_text(source_text)
            (out_dir / json_rel).write_text(a.json_text)
            entries.append(ManifestEntry(a.id, str(src_rel), str(json_rel), kind.name, split,
                                         {"source": sha256_text(source_text), "json": sha256_text(a.json_text)}))
    entries.sort(key=lambda e: e.id)
    return Manifest(entries, out_dir)
