"""Ternary gate-level simulation and bounded equivalence checking.

Values are 0, 1 and 2 (X). A simulator runs many independent stimuli at
once: every net is a row of a ``(rows, lanes)`` uint8 matrix and each cell
evaluates with one vectorised table lookup per cycle.

A cycle applies the inputs, settles the combinational logic, then fires
every sequential cell whose (polarity-adjusted) clock went 0 -> 1 since the
previous observation. Fired cells change their outputs, which may create
edges on derived clocks, so the loop repeats until no new edge appears.
Each cell fires at most once per cycle; asynchronous resets are applied on
every pass and win over the clock.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .netlist import CellKind, Const, Netlist, NetlistError, topological_order

X = 2

_NOT = np.array([1, 0, X], dtype=np.uint8)
_AND = np.array([[0, 0, 0], [0, 1, X], [0, X, X]], dtype=np.uint8)
_OR = np.array([[0, 1, X], [1, 1, 1], [X, 1, X]], dtype=np.uint8)
_XOR = np.array([[0, 1, X], [1, 0, X], [X, X, X]], dtype=np.uint8)

_BINARY = {
    CellKind.AND: _AND.ravel(),
    CellKind.OR: _OR.ravel(),
    CellKind.XOR: _XOR.ravel(),
    CellKind.NAND: _NOT[_AND].ravel(),
    CellKind.NOR: _NOT[_OR].ravel(),
    CellKind.XNOR: _NOT[_XOR].ravel(),
}

_CONST_ROW = {Const.ZERO: 0, Const.ONE: 1, Const.X: 2}


class SimulationError(RuntimeError):
    """The design cannot be simulated (loop, oscillation, bad stimulus)."""


def merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Value that is certain only where both candidates agree."""
    return np.where(a == b, a, X).astype(np.uint8)


def _param_bits(value, width: int, default: int = 0) -> np.ndarray:
    """Yosys parameter (binary string, MSB first, or integer) as LSB-first bits."""
    if value is None:
        return np.full(width, default, dtype=np.uint8)
    if isinstance(value, int) or (isinstance(value, str) and value.lstrip("-").isdigit() and not set(value) <= {"0", "1"}):
        n = int(value)
        return np.array([(n >> i) & 1 for i in range(width)], dtype=np.uint8)
    bits = [0 if c == "0" else 1 if c == "1" else X for c in reversed(str(value).lower())]
    return np.array((bits + [0] * width)[:width], dtype=np.uint8)


def _polarity(cell, name: str) -> int:
    return int(_param_bits(cell.params.get(name), 1, default=1)[0])


@dataclass
class SimState:
    """Ternary value of every row plus the last observed clock of each flop."""

    values: np.ndarray  # (rows, lanes)
    prev_clk: np.ndarray  # (n_seq, lanes)

    @property
    def lanes(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "SimState":
        return SimState(self.values.copy(), self.prev_clk.copy())


@dataclass
class _Seq:
    kind: CellKind
    q: np.ndarray
    d: np.ndarray
    clk: int
    clk_pol: int
    ctrl: int = -1
    ctrl_pol: int = 1
    value: np.ndarray | None = None


class Simulator:
    def __init__(self, nl: Netlist):
        self.nl = nl
        m = nl.flat
        try:
            order = topological_order(nl)
        except NetlistError as exc:
            raise SimulationError(f"combinational loop: {exc}") from exc
        self._row: dict[int, int] = {}
        for b in sorted(m.nets):
            self._row[b] = len(self._row) + 3
        self.n_rows = len(self._row) + 3
        self.inputs = {p.name: self.rows(p.bits) for p in sorted(m.inputs, key=lambda p: p.name)}
        self.outputs = {p.name: self.rows(p.bits) for p in sorted(m.outputs, key=lambda p: p.name)}
        self._comb = []
        for name in order:
            c = m.cells[name]
            ins = [self.rows(c.connections[r]) for r in c.kind.inputs]
            self._comb.append((c.kind, self.rows(c.connections["Y"]), ins))
        self._seq: list[_Seq] = []
        for c in sorted(m.sequential_cells, key=lambda c: c.name):
            w = c.width
            s = _Seq(c.kind, self.rows(c.connections["Q"]), self.rows(c.connections["D"]),
                     self.rows(c.connections["CLK"])[0], _polarity(c, "CLK_POLARITY"))
            if c.kind is CellKind.ADFF:
                s.ctrl, s.ctrl_pol = self.rows(c.connections["ARST"])[0], _polarity(c, "ARST_POLARITY")
                s.value = _param_bits(c.params.get("ARST_VALUE"), w)
            elif c.kind is CellKind.DFFE:
                s.ctrl, s.ctrl_pol = self.rows(c.connections["EN"])[0], _polarity(c, "EN_POLARITY")
            elif c.kind is CellKind.SDFF:
                s.ctrl, s.ctrl_pol = self.rows(c.connections["SRST"])[0], _polarity(c, "SRST_POLARITY")
                s.value = _param_bits(c.params.get("SRST_VALUE"), w)
            self._seq.append(s)
        self._max_passes = 2 * len(self._seq) + 4

    @property
    def is_combinational(self) -> bool:
        return not self._seq

    @property
    def input_width(self) -> int:
        return sum(len(r) for r in self.inputs.values())

    def rows(self, bits) -> np.ndarray:
        return np.array([_CONST_ROW[b] if isinstance(b, Const) else self._row[b] for b in bits], dtype=np.intp)

    def reset(self, lanes: int = 1) -> SimState:
        """Matched reset: every flop holds 0 and every clock was last seen low."""
        v = np.full((self.n_rows, lanes), X, dtype=np.uint8)
        v[0], v[1] = 0, 1
        for s in self._seq:
            v[s.q] = 0
        return SimState(v, np.zeros((len(self._seq), lanes), dtype=np.uint8))

    # -------------------------------------------------------------- cycle

    def _eval_comb(self, v: np.ndarray) -> None:
        for kind, out, ins in self._comb:
            if kind is CellKind.NOT:
                v[out] = _NOT[v[ins[0]]]
            elif kind is CellKind.MUX:
                a, b, s = v[ins[0]], v[ins[1]], v[ins[2]]
                v[out] = np.where(s == 0, a, np.where(s == 1, b, merge(a, b)))
            else:
                v[out] = _BINARY[kind][v[ins[0]] * 3 + v[ins[1]]]

    def _active(self, v: np.ndarray, row: int, pol: int) -> np.ndarray:
        c = v[row]
        return c if pol else _NOT[c]

    def _async(self, v: np.ndarray) -> bool:
        changed = False
        for s in self._seq:
            if s.kind is not CellKind.ADFF:
                continue
            r = self._active(v, s.ctrl, s.ctrl_pol)
            if not np.any(r != 0):
                continue
            q = v[s.q]
            val = np.broadcast_to(s.value[:, None], q.shape)
            new = np.where(r == 1, val, np.where(r == X, merge(q, val), q))
            if np.any(new != q):
                v[s.q] = new
                changed = True
        return changed

    def _next_q(self, s: _Seq, v: np.ndarray) -> np.ndarray:
        d, q = v[s.d], v[s.q]
        if s.kind is CellKind.DFFE:
            en = self._active(v, s.ctrl, s.ctrl_pol)
            return np.where(en == 1, d, np.where(en == 0, q, merge(q, d)))
        if s.kind is CellKind.SDFF:
            r = self._active(v, s.ctrl, s.ctrl_pol)
            val = np.broadcast_to(s.value[:, None], d.shape)
            return np.where(r == 1, val, np.where(r == 0, d, merge(d, val)))
        if s.kind is CellKind.ADFF:
            # an asserted reset overrides the edge; _async re-applies it
            r = self._active(v, s.ctrl, s.ctrl_pol)
            val = np.broadcast_to(s.value[:, None], d.shape)
            return np.where(r == 0, d, np.where(r == 1, q, merge(d, val)))
        return d

    def step(self, state: SimState, inputs: Mapping[str, object]) -> tuple[SimState, dict[str, np.ndarray]]:
        """One clock cycle. ``inputs`` maps every input port to its bits."""
        v = state.values.copy()
        prev = state.prev_clk.copy()
        lanes = v.shape[1]
        missing = sorted(set(self.inputs) - set(inputs))
        if missing:
            raise SimulationError(f"no stimulus for input ports {missing}")
        for name, value in inputs.items():
            if name not in self.inputs:
                raise SimulationError(f"unknown input port {name!r}")
            rows = self.inputs[name]
            v[rows] = _as_lanes(value, len(rows), lanes)
        fired = np.zeros_like(prev, dtype=bool)
        for _ in range(self._max_passes):
            self._eval_comb(v)
            if self._async(v):
                continue
            updates = []
            for i, s in enumerate(self._seq):
                c = self._active(v, s.clk, s.clk_pol)
                edge = (prev[i] == 0) & (c == 1)
                maybe = ((prev[i] == X) | (c == X)) & (prev[i] != 1) & (c != 0)
                go = (edge | maybe) & ~fired[i]
                prev[i] = c
                if np.any(go):
                    nq = self._next_q(s, v)
                    q = v[s.q]
                    nq = np.where(maybe & ~edge, merge(q, nq), nq)
                    updates.append((i, s, np.where(go, nq, q)))
                    fired[i] |= go
            if not updates:
                break
            for _, s, nq in updates:
                v[s.q] = nq
        else:
            raise SimulationError("sequential logic did not settle within one cycle")
        outputs = {name: v[rows].copy() for name, rows in self.outputs.items()}
        return SimState(v, prev), outputs


def _as_lanes(value, width: int, lanes: int) -> np.ndarray:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        bits = np.array([(int(value) >> i) & 1 for i in range(width)], dtype=np.uint8)
        return np.repeat(bits[:, None], lanes, axis=1)
    arr = np.asarray(value, dtype=np.uint8)
    if arr.ndim == 1:
        arr = np.repeat(arr[:, None], lanes, axis=1)
    if arr.shape != (width, lanes):
        raise SimulationError(f"stimulus shape {arr.shape} does not match ({width}, {lanes})")
    if np.any(arr > X):
        raise SimulationError("stimulus values must be 0, 1 or 2 (X)")
    return arr


def simulate_cycle(nl: Netlist | Simulator, state: SimState | None, inputs: Mapping[str, object]):
    """Functional wrapper: ``state=None`` starts from the matched reset."""
    sim = nl if isinstance(nl, Simulator) else Simulator(nl)
    if state is None:
        state = sim.reset(1)
    return sim.step(state, inputs)


# ------------------------------------------------------------ equivalence


class Verdict(str, Enum):
    EQUIVALENT_BOUNDED = "EQUIVALENT_BOUNDED"
    COUNTEREXAMPLE = "COUNTEREXAMPLE"
    INCOMPARABLE = "INCOMPARABLE"


@dataclass(frozen=True)
class EquivBudget:
    stimuli: int = 1024
    cycles: int = 32
    seed: int = 0
    exhaustive_max_inputs: int = 16


@dataclass(frozen=True)
class Counterexample:
    """``stimulus[t][port]`` is the LSB-first bit list applied at cycle ``t``."""

    stimulus: list[dict[str, list[int]]]
    cycle: int
    output: str
    bit: int
    value_a: int
    value_b: int

    def to_dict(self) -> dict:
        return {
            "stimulus": self.stimulus,
            "cycle": self.cycle,
            "output": self.output,
            "bit": self.bit,
            "value_a": self.value_a,
            "value_b": self.value_b,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Counterexample":
        return cls(d["stimulus"], d["cycle"], d["output"], d["bit"], d["value_a"], d["value_b"])


@dataclass(frozen=True)
class EquivResult:
    verdict: Verdict
    mode: str = ""
    stimuli_run: int = 0
    skipped: int = 0
    counterexample: Counterexample | None = None
    reason: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "stimuli_run": self.stimuli_run, "skipped": self.skipped}
        if self.mode:
            out["mode"] = self.mode
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_dict()
        if self.reason:
            out["reason"] = self.reason
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _port_signature(nl: Netlist) -> dict[str, tuple[str, int]]:
    return {p.name: (p.direction, len(p.bits)) for p in nl.flat.ports.values()}


def _port_mismatch(a: Netlist, b: Netlist) -> str:
    sa, sb = _port_signature(a), _port_signature(b)
    diff = sorted(n for n in set(sa) | set(sb) if sa.get(n) != sb.get(n))
    if not diff:
        return ""
    parts = []
    for n in diff:
        da, db = sa.get(n), sb.get(n)
        fmt = lambda s: "absent" if s is None else f"{s[0]}[{s[1]}]"
        parts.append(f"{n} ({fmt(da)} vs {fmt(db)})")
    return "port mismatch: " + ", ".join(parts)


def _exhaustive_stimulus(sim: Simulator) -> dict[str, np.ndarray]:
    n = sim.input_width
    lanes = np.arange(1 << n, dtype=np.int64)
    out, k = {}, 0
    for name, rows in sim.inputs.items():
        out[name] = np.stack([((lanes >> (k + i)) & 1).astype(np.uint8) for i in range(len(rows))]) \
            if len(rows) else np.zeros((0, len(lanes)), dtype=np.uint8)
        k += len(rows)
    return out


def _random_stimuli(sim: Simulator, lanes: int, cycles: int, seed: int) -> list[dict[str, np.ndarray]]:
    rng = np.random.default_rng(seed)
    return [
        {name: rng.integers(0, 2, size=(len(rows), lanes), dtype=np.uint8) for name, rows in sim.inputs.items()}
        for _ in range(cycles)
    ]


def _compare(sa: Simulator, sb: Simulator, stimuli: list[dict[str, np.ndarray]], lanes: int):
    """First mismatching (cycle, output, bit) for each lane, or X-before-mismatch."""
    st_a, st_b = sa.reset(lanes), sb.reset(lanes)
    decided = np.zeros(lanes, dtype=bool)
    skipped = np.zeros(lanes, dtype=bool)
    first = {}
    for t, stim in enumerate(stimuli):
        st_a, oa = sa.step(st_a, stim)
        st_b, ob = sb.step(st_b, stim)
        ya = np.concatenate([oa[n] for n in sa.outputs]) if sa.outputs else np.zeros((0, lanes), np.uint8)
        yb = np.concatenate([ob[n] for n in sa.outputs]) if sa.outputs else np.zeros((0, lanes), np.uint8)
        has_x = np.any((ya == X) | (yb == X), axis=0)
        differs = np.any(ya != yb, axis=0)
        newly_x = has_x & ~decided
        skipped |= newly_x
        decided |= newly_x
        bad = differs & ~has_x & ~decided
        for lane in np.flatnonzero(bad):
            row = int(np.flatnonzero(ya[:, lane] != yb[:, lane])[0])
            first[int(lane)] = (t, row, int(ya[row, lane]), int(yb[row, lane]))
        decided |= bad
    return first, int(skipped.sum())


def _output_at(sim: Simulator, row: int) -> tuple[str, int]:
    for name, rows in sim.outputs.items():
        if row < len(rows):
            return name, row
        row -= len(rows)
    raise IndexError(row)


def check_equivalence(a: Netlist, b: Netlist, budget: EquivBudget | None = None) -> EquivResult:
    """Compare primary outputs under identical primary-input stimuli.

    Small combinational designs are enumerated exhaustively; everything else
    gets seeded random stimulus sequences from the matched reset. A pass is
    only ever reported as bounded equivalence.
    """
    budget = budget or EquivBudget()
    reason = _port_mismatch(a, b)
    if reason:
        return EquivResult(Verdict.INCOMPARABLE, reason=reason)
    try:
        sa, sb = Simulator(a), Simulator(b)
    except SimulationError as exc:
        return EquivResult(Verdict.INCOMPARABLE, reason=str(exc))
    exhaustive = sa.is_combinational and sb.is_combinational and sa.input_width <= budget.exhaustive_max_inputs
    if exhaustive:
        lanes = 1 << sa.input_width
        stimuli = [_exhaustive_stimulus(sa)]
        mode = "exhaustive"
    else:
        lanes = budget.stimuli
        stimuli = _random_stimuli(sa, lanes, budget.cycles, budget.seed)
        mode = "random"
    try:
        first, skipped = _compare(sa, sb, stimuli, lanes)
    except SimulationError as exc:
        return EquivResult(Verdict.INCOMPARABLE, mode, reason=str(exc))
    if first:
        lane = min(first)
        t, row, va, vb = first[lane]
        port, bit = _output_at(sa, row)
        stim = [
            {name: [int(v) for v in arr[:, lane]] for name, arr in cycle.items()}
            for cycle in stimuli[: t + 1]
        ]
        cex = Counterexample(stim, t, port, bit, va, vb)
        return EquivResult(Verdict.COUNTEREXAMPLE, mode, lanes, skipped, cex)
    if skipped * 2 > lanes:
        return EquivResult(Verdict.INCOMPARABLE, mode, lanes, skipped, reason="X-dominated")
    return EquivResult(Verdict.EQUIVALENT_BOUNDED, mode, lanes, skipped)


def replay(a: Netlist, b: Netlist, cex: Counterexample) -> bool:
    """Re-run a counterexample on one lane; True if the reported mismatch recurs."""
    sa, sb = Simulator(a), Simulator(b)
    st_a, st_b = sa.reset(1), sb.reset(1)
    for cycle in cex.stimulus:
        st_a, oa = sa.step(st_a, {k: np.array(v, dtype=np.uint8) for k, v in cycle.items()})
        st_b, ob = sb.step(st_b, {k: np.array(v, dtype=np.uint8) for k, v in cycle.items()})
    va = int(oa[cex.output][cex.bit, 0])
    vb = int(ob[cex.output][cex.bit, 0])
    return va == cex.value_a and vb == cex.value_b and va != vb and X not in (va, vb)

