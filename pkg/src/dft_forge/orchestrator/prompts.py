"""Prompt assembly from versioned text templates."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from string import Template

TEMPLATE_VERSION = "v1"
SECTION_ORDER = ("task", "background", "errors", "reference", "target", "feedback")


class TemplateMissing(FileNotFoundError):
    pass


def _template_dir(version: str) -> Path:
    return Path(str(resources.files("dft_forge.orchestrator") / "templates" / version))


def load_templates(version: str = TEMPLATE_VERSION, directory: str | Path | None = None) -> dict[str, Template]:
    base = Path(directory) if directory is not None else _template_dir(version)
    out = {}
    for name in SECTION_ORDER:
        path = base / f"{name}.txt"
        if not path.is_file():
            raise TemplateMissing(f"prompt template missing: {path}")
        out[name] = Template(path.read_text())
    return out


@dataclass(frozen=True)
class Reference:
    id: str
    s_max: float
    buggy_source: str
    fixed_source: str


@dataclass(frozen=True)
class Attempt:
    iteration: int
    code: str
    feedback: str


@dataclass(frozen=True)
class PromptBundle:
    sections: tuple[tuple[str, str], ...]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.sections]

    def render(self) -> str:
        return "\n".join(text.rstrip("\n") + "\n" for _, text in self.sections)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()

    def messages(self) -> list[dict[str, str]]:
        return [{"role": "user", "content": self.render()}]


def build_prompt(templates: dict[str, Template], design_id: str, target_source: str, target_report: str,
                 reference: Reference | None, previous: Attempt | None) -> PromptBundle:
    """Sections in fixed order; the reference pair is omitted only without retrieval."""
    values = {
        "design_id": design_id,
        "target_source": target_source.rstrip("\n"),
        "target_report": target_report,
    }
    sections = [("task", templates["task"].substitute()), ("background", templates["background"].substitute()),
                ("errors", templates["errors"].substitute())]
    if reference is not None:
        sections.append(("reference", templates["reference"].substitute(
            reference_id=reference.id,
            s_max=f"{reference.s_max:.4f}",
            reference_buggy=reference.buggy_source.rstrip("\n"),
            reference_fixed=reference.fixed_source.rstrip("\n"),
        )))
    sections.append(("target", templates["target"].substitute(values)))
    if previous is not None:
        sections.append(("feedback", templates["feedback"].substitute(
            previous_iteration=previous.iteration,
            previous_code=previous.code.rstrip("\n"),
            feedback=previous.feedback,
        )))
    return PromptBundle(tuple(sections))
