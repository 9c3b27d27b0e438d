"""The retrieve, prompt, verify loop around an LLM."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .. import lint as dft_lint
from ..netlist import Netlist, NetlistError, parse_netlist
from ..neural import AutoencoderModel
from ..retrieval import ReferenceIndex, embed_json, retrieve
from ..sim import EquivBudget, EquivResult, Verdict, check_equivalence
from ..synth import SynthesisError, SynthToolMissing, synthesize_to_json
from ..tfidf import TfidfModel
from .llm import LlmClient, LlmTransportError, RequestContext
from .prompts import TEMPLATE_VERSION, Attempt, Reference, build_prompt, load_templates

DEFAULT_K = 5
NO_CODE_FEEDBACK = "no code block found"

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


class Status(str, Enum):
    REPAIRED = "REPAIRED"
    FAILED_MAX_ITER = "FAILED_MAX_ITER"
    FAILED_EQUIV = "FAILED_EQUIV"
    FAILED_SYNTH_TOOL = "FAILED_SYNTH_TOOL"
    ABORTED = "ABORTED"


class RepairAborted(RuntimeError):
    def __init__(self, message: str, session: "RepairSession"):
        super().__init__(message)
        self.session = session


def extract_code_block(text: str) -> str | None:
    m = _FENCE.search(text)
    return m.group(1) if m else None


@dataclass
class Iteration:
    index: int
    prompt_digest: str
    prompt: str
    response: str
    code: str | None
    synthesis_ok: bool | None
    lint_report: dict | None
    verdict: str  # no-code | synth-fail | parse-fail | lint-fail | equiv-fail | pass
    feedback: str
    equivalence: dict | None = None


@dataclass
class RepairSession:
    design_id: str
    k: int
    use_rag: bool
    model: str
    template_version: str = TEMPLATE_VERSION
    reference_id: str | None = None
    s_max: float | None = None
    target_report: str = ""
    iterations: list[Iteration] = field(default_factory=list)
    status: Status | None = None
    error: str = ""
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status.value if self.status else None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "RepairSession":
        d = dict(d)
        d["iterations"] = [Iteration(**it) for it in d["iterations"]]
        d["status"] = Status(d["status"]) if d["status"] else None
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "RepairSession":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def check_invariants(self) -> None:
        """Assert what a persisted session promises; raises AssertionError otherwise."""
        assert len(self.iterations) <= self.k
        if self.status is Status.REPAIRED:
            last = self.iterations[-1]
            assert last.lint_report is not None and last.lint_report["label"] == [0, 0, 0, 0]
            assert last.equivalence and last.equivalence["verdict"] == Verdict.EQUIVALENT_BOUNDED.value
        for prev, cur in zip(self.iterations, self.iterations[1:]):
            assert prev.feedback in cur.prompt


def render_equivalence(result: EquivResult) -> str:
    head = f"Equivalence check against the original design: {result.verdict.value}"
    if result.mode:
        head += f" ({result.mode}, {result.stimuli_run} stimuli, {result.skipped} skipped)"
    if result.reason:
        return f"{head}. {result.reason}"
    cex = result.counterexample
    if cex is None:
        return head
    lines = [head + ".",
             f"Output {cex.output}[{cex.bit}] differs at cycle {cex.cycle}: "
             f"original={cex.value_a}, repaired={cex.value_b}.",
             "Input stimulus per cycle (LSB-first bits):"]
    lines.extend(f"  cycle {t}: " + json.dumps(c, sort_keys=True) for t, c in enumerate(cex.stimulus))
    return "\n".join(lines)


def repair(target_source: str, *, design_id: str, llm: LlmClient, index: ReferenceIndex | None = None,
           model: AutoencoderModel | None = None, tfidf: TfidfModel | None = None, k: int = DEFAULT_K,
           synth: Callable[[str], str] = synthesize_to_json, budget: EquivBudget | None = None,
           use_rag: bool = True, templates=None, session_path: str | Path | None = None,
           provenance: dict | None = None) -> RepairSession:
    """Run up to ``k`` LLM attempts on one design and persist the session."""
    if k < 1:
        raise ValueError("k must be at least 1")
    templates = templates or load_templates()
    session = RepairSession(design_id, k, use_rag, getattr(llm, "model", "unknown"), provenance=dict(provenance or {}))

    def finish(status: Status) -> RepairSession:
        session.status = status
        if session_path is not None:
            session.save(session_path)
        return session

    original: Netlist | None = None
    previous: Attempt | None = None
    try:
        target_json = synth(target_source)
        original = parse_netlist(target_json)
        session.target_report = dft_lint.render_report(*dft_lint.lint(original))
    except SynthToolMissing as exc:
        session.error = str(exc)
        return finish(Status.FAILED_SYNTH_TOOL)
    except (SynthesisError, NetlistError) as exc:
        # nothing to embed or compare against; the first prompt carries the report
        session.target_report = f"The design does not synthesize:\n{getattr(exc, 'report', str(exc))}"
        target_json = None

    reference = None
    if use_rag and target_json is not None:
        if index is None or model is None or tfidf is None:
            raise ValueError("retrieval needs an index, a model and a TF-IDF vectorizer")
        result, entry = retrieve(index, embed_json(model, tfidf, target_json))
        session.reference_id, session.s_max = entry.id, result.s_max
        reference = Reference(entry.id, result.s_max, entry.buggy_source, entry.fixed_source)

    for i in range(1, k + 1):
        bundle = build_prompt(templates, design_id, target_source, session.target_report, reference, previous)
        text = bundle.render()
        try:
            response = llm.complete(bundle.messages(), RequestContext(design_id, i))
        except LlmTransportError as exc:
            session.error = str(exc)
            finish(Status.ABORTED)
            raise RepairAborted(str(exc), session) from exc
        it = _verify(i, bundle.digest, text, response, original, synth, budget)
        if it is None:
            session.error = "synthesis tool disappeared during the session"
            return finish(Status.FAILED_SYNTH_TOOL)
        session.iterations.append(it)
        if it.verdict == "pass":
            return finish(Status.REPAIRED)
        previous = Attempt(i, it.code if it.code is not None else response, it.feedback)
    last = session.iterations[-1]
    return finish(Status.FAILED_EQUIV if last.verdict == "equiv-fail" else Status.FAILED_MAX_ITER)


def _verify(i, digest, prompt, response, original, synth, budget) -> Iteration | None:
    code = extract_code_block(response)
    it = Iteration(i, digest, prompt, response, code, None, None, "no-code", NO_CODE_FEEDBACK)
    if code is None:
        return it
    try:
        json_text = synth(code)
    except SynthToolMissing:
        return None
    except SynthesisError as exc:
        it.synthesis_ok, it.verdict, it.feedback = False, "synth-fail", exc.report
        return it
    it.synthesis_ok = True
    try:
        nl = parse_netlist(json_text)
    except NetlistError as exc:
        it.verdict, it.feedback = "parse-fail", f"netlist rejected: {exc}"
        return it
    violations, label = dft_lint.lint(nl)
    it.lint_report = dft_lint.report_to_dict(violations, label)
    if violations:
        it.verdict, it.feedback = "lint-fail", dft_lint.render_report(violations, label)
        return it
    if original is None:
        result = EquivResult(Verdict.INCOMPARABLE, reason="the original design does not synthesize")
    else:
        result = check_equivalence(original, nl, budget)
    it.equivalence = result.to_dict()
    if result.verdict is Verdict.EQUIVALENT_BOUNDED:
        it.verdict, it.feedback = "pass", render_equivalence(result)
    else:
        it.verdict, it.feedback = "equiv-fail", render_equivalence(result)
    return it
