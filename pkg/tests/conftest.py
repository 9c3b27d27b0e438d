from __future__ import annotations

import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dft_forge import lint as dft_lint  # noqa: E402
from dft_forge import retrieval, tfidf  # noqa: E402
from dft_forge.neural import TrainConfig, train  # noqa: E402
from dft_forge.synth import default_command  # noqa: E402
from dft_forge.synthetic import NetlistBuilder, generate_corpus  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
HAVE_SYNTH = default_command() is not None

needs_synth = pytest.mark.skipif(not HAVE_SYNTH, reason="no yosys or yowasp-yosys on PATH")


def gate_netlist(kind: str, width: int = 1) -> str:
    b = NetlistBuilder("g")
    p, q = b.input("p", width), b.input("q", width)
    b.output("y", b.gate(kind, p, q))
    return b.to_json()


class SmallPipeline:
    """TF-IDF + autoencoder + reference index trained on a small synthetic corpus."""

    def __init__(self, n=48, seed=0, epochs=60):
        designs = generate_corpus(n, seed)
        self.train_set = designs[: n // 2]
        self.refs = designs[n // 2: n // 2 + 8]
        self.tfidf = tfidf.fit([d.buggy_json for d in self.train_set])
        X = tfidf.transform_many(self.tfidf, [d.buggy_json for d in self.train_set])
        Y = np.array([dft_lint.one_hot(d.family) for d in self.train_set], dtype=np.float64)
        self.model, self.log = train(X, Y, TrainConfig(epochs=epochs, seed=seed))
        self.index = retrieval.build_index(
            self.model, self.tfidf,
            [(d.buggy_json, d.fixed_json, d.buggy_json) for d in self.refs],
            [d.id for d in self.refs],
        )


@pytest.fixture(scope="session")
def pipeline() -> SmallPipeline:
    return SmallPipeline()


@pytest.fixture
def scenario_dir(tmp_path):
    def copy(name: str) -> Path:
        dst = tmp_path / f"{name}_{len(list(tmp_path.iterdir()))}"
        shutil.copytree(FIXTURES / "scenarios" / name, dst)
        return dst
    return copy


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns the verdict so the test can assert on it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
