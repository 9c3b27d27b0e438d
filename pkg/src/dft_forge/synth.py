"""Verilog to JSON conversion through an external Yosys executable.

Sources that already are JSON netlists bypass the tool. The default script
is ``read_verilog; hierarchy -auto-top; proc; flatten; write_json``.
"""

from __future__ import annotations

import json
import shlex
import shutil
import subprocess
import tempfile
from pathlib import Path

DEFAULT_SCRIPT = "read_verilog {input}; hierarchy -auto-top; proc; flatten; write_json {output}"
_CANDIDATES = ("yosys", "yowasp-yosys")


class SynthesisError(RuntimeError):
    """The tool ran and rejected the design; ``report`` holds its diagnostics."""

    def __init__(self, report: str):
        super().__init__(report)
        self.report = report


class SynthToolMissing(RuntimeError):
    pass


def looks_like_json(source: str) -> bool:
    return source.lstrip().startswith("{")


def default_command() -> list[str] | None:
    for exe in _CANDIDATES:
        path = shutil.which(exe)
        if path:
            return [path, "-q", "-p", DEFAULT_SCRIPT]
    return None


def _resolve(command) -> list[str]:
    if command is None:
        cmd = default_command()
        if cmd is None:
            raise SynthToolMissing(f"no synthesis tool found on PATH (tried {', '.join(_CANDIDATES)})")
        return cmd
    cmd = shlex.split(command) if isinstance(command, str) else list(command)
    if not cmd or shutil.which(cmd[0]) is None:
        raise SynthToolMissing(f"synthesis command not found: {cmd[0] if cmd else '<empty>'}")
    return cmd


def synthesize_to_json(source: str, command=None, timeout: float = 120.0) -> str:
    """Return the JSON netlist for ``source``.

    ``command`` is an argv list or a shell-style string; ``{input}`` and
    ``{output}`` placeholders are replaced by file names relative to a fresh
    working directory (the WebAssembly build of Yosys only sees its cwd).
    """
    if looks_like_json(source):
        try:
            json.loads(source)
        except json.JSONDecodeError as exc:
            raise SynthesisError(f"invalid JSON netlist: {exc}") from exc
        return source
    cmd = _resolve(command)
    with tempfile.TemporaryDirectory(prefix="dft_synth_") as work:
        Path(work, "design.v").write_text(source)
        argv = [a.replace("{input}", "design.v").replace("{output}", "design.json") for a in cmd]
        try:
            proc = subprocess.run(argv, cwd=work, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise SynthesisError(f"synthesis timed out after {timeout:.0f}s") from exc
        out = Path(work, "design.json")
        if proc.returncode != 0 or not out.exists():
            report = (proc.stderr + proc.stdout).strip() or f"synthesis failed with exit code {proc.returncode}"
            raise SynthesisError(report)
        return out.read_text()
