"""Structural detectors for four DFT rule classes.

The detectors are a reconstruction from the rule names, not a port of any
commercial rule deck:

ACNCPI
    The asynchronous reset of an ``$adff`` cannot be reached from any primary
    input through combinational logic.
CLKNPI
    A flip-flop clock pin is not wired directly to a primary input bit
    (gated, derived, flop-driven or constant clocks).
CDFDAT
    A bit that clocks some flip-flop is also consumed as data: on a D, EN,
    SRST or ARST pin, or by combinational logic whose fan-out reaches
    anything other than clock pins.
FFCKNP
    The fan-in cone of a clock pin contains a flip-flop output.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import IntEnum

from .netlist import Bit, CellKind, Netlist, bit_label, comb_fanin_cone, cone_cells, drivers_of


class DftErrorKind(IntEnum):
    """Ordinal ``i`` is the 1-based position in the label vector."""

    ACNCPI = 1
    CLKNPI = 2
    CDFDAT = 3
    FFCKNP = 4

    @property
    def index(self) -> int:
        return self.value - 1


KIND_ORDER = tuple(DftErrorKind)

# most specific pattern first; used when collapsing co-reported violations
COLLAPSE_PRIORITY = (DftErrorKind.FFCKNP, DftErrorKind.CDFDAT, DftErrorKind.CLKNPI, DftErrorKind.ACNCPI)

LabelVector = tuple[int, int, int, int]
CLEAN: LabelVector = (0, 0, 0, 0)

DESCRIPTIONS = {
    DftErrorKind.ACNCPI: "asynchronous set/reset not controllable from primary inputs",
    DftErrorKind.CLKNPI: "clock not driven directly by a primary input (internally generated clock)",
    DftErrorKind.CDFDAT: "clock signal used as data",
    DftErrorKind.FFCKNP: "flip-flop output drives a clock pin",
}


@dataclass(frozen=True)
class Violation:
    kind: DftErrorKind
    cell: str
    bit: Bit
    explanation: str
    # the net that carries the defect; co-reported violations share it
    anchor: Bit = None

    def sort_key(self):
        return (self.kind.value, self.cell, bit_label(self.bit))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.name,
            "cell": self.cell,
            "bit": bit_label(self.bit),
            "explanation": self.explanation,
        }


def _where(nl: Netlist, cell_name: str) -> str:
    cell = nl.flat.cells[cell_name]
    src = cell.source
    return f"cell {cell_name!r} ({cell.kind.name}{', ' + src if src else ''})"


def _describe_cone(sources) -> str:
    parts = []
    for s in sources:
        if s.kind == "input":
            parts.append(f"primary input {s.name}")
        elif s.kind == "seq":
            parts.append(f"flip-flop {s.name!r} output")
        elif s.kind == "const":
            parts.append(f"constant {s.name}")
        elif s.kind == "loop":
            parts.append(f"combinational loop at {s.name!r}")
        else:
            parts.append(f"undriven net {s.bit}")
    return ", ".join(parts) if parts else "nothing"


def collect_clock_bits(nl: Netlist) -> set[Bit]:
    return {cell.pin("CLK") for cell in nl.flat.sequential_cells}


def check_acncpi(nl: Netlist) -> list[Violation]:
    out = []
    for cell in nl.flat.sequential_cells:
        if cell.kind is not CellKind.ADFF:
            continue
        rst = cell.pin("ARST")
        cone = comb_fanin_cone(nl, rst)
        if any(s.is_controllable for s in cone):
            continue
        out.append(Violation(
            DftErrorKind.ACNCPI,
            cell.name,
            rst,
            f"ACNCPI: asynchronous reset (net {bit_label(rst)}) of {_where(nl, cell.name)} "
            f"cannot be controlled from a primary input; its fan-in reaches only {_describe_cone(cone)}",
            rst,
        ))
    return sorted(out, key=Violation.sort_key)


def check_clknpi(nl: Netlist) -> list[Violation]:
    out = []
    for cell in nl.flat.sequential_cells:
        clk = cell.pin("CLK")
        drv = drivers_of(nl, clk)
        if drv.kind == "input":
            continue
        if drv.kind == "cell":
            how = f"generated by {_where(nl, drv.name)}"
        elif drv.kind == "const":
            how = f"tied to constant {drv.name}"
        else:
            how = "undriven"
        out.append(Violation(
            DftErrorKind.CLKNPI,
            cell.name,
            clk,
            f"CLKNPI: clock (net {bit_label(clk)}) of {_where(nl, cell.name)} is {how}, "
            f"not a primary input; cone: {_describe_cone(comb_fanin_cone(nl, clk))}",
            clk,
        ))
    return sorted(out, key=Violation.sort_key)


def _reaches_only_clock_pins(nl: Netlist, cell_name: str) -> bool:
    """True if everything downstream of a combinational cell is a CLK pin."""
    outputs = {p for port in nl.flat.outputs for p in port.bits}
    seen_cells = {cell_name}
    queue = deque([cell_name])
    reached_clock = False
    while queue:
        cell = nl.flat.cells[queue.popleft()]
        for b in cell.connections[cell.kind.output]:
            if b in outputs:
                return False
            readers = nl.fanout.get(b, [])
            if not readers:
                return False
            for reader, role in readers:
                rcell = nl.flat.cells[reader]
                if rcell.kind.is_sequential:
                    if role != "CLK":
                        return False
                    reached_clock = True
                elif reader not in seen_cells:
                    if reader in nl.loop_cells:
                        return False
                    seen_cells.add(reader)
                    queue.append(reader)
    return reached_clock


def check_cdfdat(nl: Netlist) -> list[Violation]:
    clocks = collect_clock_bits(nl)
    out = []
    seen: set[tuple[str, str]] = set()
    for clk in sorted(clocks, key=bit_label):
        if not isinstance(clk, int):
            continue
        for reader, role in nl.fanout.get(clk, []):
            if role == "CLK" or (bit_label(clk), reader) in seen:
                continue
            cell = nl.flat.cells[reader]
            if not cell.kind.is_sequential and _reaches_only_clock_pins(nl, reader):
                continue
            seen.add((bit_label(clk), reader))
            out.append(Violation(
                DftErrorKind.CDFDAT,
                reader,
                clk,
                f"CDFDAT: clock net {bit_label(clk)} is consumed on data pin {role} of {_where(nl, reader)}",
                clk,
            ))
    return sorted(out, key=Violation.sort_key)


def check_ffcknp(nl: Netlist) -> list[Violation]:
    out = []
    for cell in nl.flat.sequential_cells:
        clk = cell.pin("CLK")
        cone = comb_fanin_cone(nl, clk)
        flops = [s for s in cone if s.kind == "seq"]
        if not flops:
            continue
        via = cone_cells(nl, clk)
        path = f" through {', '.join(repr(c) for c in via)}" if via else ""
        out.append(Violation(
            DftErrorKind.FFCKNP,
            cell.name,
            clk,
            f"FFCKNP: clock (net {bit_label(clk)}) of {_where(nl, cell.name)} is driven by "
            f"{_describe_cone(flops)}{path}",
            clk,
        ))
    return sorted(out, key=Violation.sort_key)


CHECKS = (check_acncpi, check_clknpi, check_cdfdat, check_ffcknp)


def label_vector(violations) -> LabelVector:
    present = {v.kind for v in violations}
    return tuple(int(k in present) for k in KIND_ORDER)


def lint(nl: Netlist) -> tuple[list[Violation], LabelVector]:
    violations = [v for check in CHECKS for v in check(nl)]
    return violations, label_vector(violations)


def root_cause_kinds(violations) -> set[DftErrorKind]:
    """Collapse violations that share an anchor net to the most specific kind.

    A flop-driven clock is also an internally generated clock and, if the
    flop output feeds logic, a clock used as data. Those co-reports describe
    one defect; only the highest-priority kind per anchor survives.
    """
    rank = {k: i for i, k in enumerate(COLLAPSE_PRIORITY)}
    best: dict[str, DftErrorKind] = {}
    for v in violations:
        key = bit_label(v.anchor if v.anchor is not None else v.bit)
        if key not in best or rank[v.kind] < rank[best[key]]:
            best[key] = v.kind
    return set(best.values())


def corpus_label(violations) -> DftErrorKind | None:
    """Single error type of a design, or None if clean or genuinely multi-error."""
    kinds = root_cause_kinds(violations)
    return next(iter(kinds)) if len(kinds) == 1 else None


def one_hot(kind: DftErrorKind) -> LabelVector:
    return tuple(int(k is kind) for k in KIND_ORDER)


def report_to_dict(violations, label: LabelVector) -> dict:
    return {"violations": [v.to_dict() for v in violations], "label": list(label)}


def report_to_json(violations, label: LabelVector) -> str:
    return json.dumps(report_to_dict(violations, label), indent=2)


def render_report(violations, label: LabelVector) -> str:
    """Plain-text report; the repair loop feeds this to the LLM verbatim."""
    if not violations:
        return "DFT lint: no violations found. label=" + "".join(map(str, label))
    lines = [f"DFT lint: {len(violations)} violation(s) found. label=" + "".join(map(str, label))]
    lines.extend(f"  [{i}] {v.explanation}" for i, v in enumerate(violations, 1))
    return "\n".join(lines)
