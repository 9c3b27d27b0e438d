"""Bit-level circuit graph built from Yosys ``write_json`` netlists.

Only the small cell library below is understood. Hierarchical designs are
flattened into the top module at parse time, so every analysis works on
``Netlist.flat``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, NamedTuple, Union


class NetlistError(ValueError):
    """Raised for malformed or unsupported netlists.

    ``path`` names the offending module/cell, e.g. ``"top/$and$3"``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UnknownCellKind(NetlistError):
    """A cell type outside the supported library (latches, set/reset flops, ...)."""


class Const(str, Enum):
    ZERO = "0"
    ONE = "1"
    X = "x"

    def __repr__(self) -> str:
        return f"Const({self.value!r})"


Bit = Union[int, Const]


class CellKind(Enum):
    AND = "and"
    OR = "or"
    XOR = "xor"
    NOT = "not"
    NAND = "nand"
    NOR = "nor"
    XNOR = "xnor"
    MUX = "mux"
    DFF = "dff"
    ADFF = "adff"
    DFFE = "dffe"
    SDFF = "sdff"

    @property
    def is_sequential(self) -> bool:
        return self in SEQUENTIAL_KINDS

    @property
    def inputs(self) -> tuple[str, ...]:
        return _INPUT_ROLES[self]

    @property
    def output(self) -> str:
        return "Q" if self.is_sequential else "Y"

    @property
    def roles(self) -> tuple[str, ...]:
        return self.inputs + (self.output,)

    @classmethod
    def from_type(cls, type_name: str) -> "CellKind | None":
        try:
            return cls(type_name[1:] if type_name.startswith("$") else type_name)
        except ValueError:
            return None


SEQUENTIAL_KINDS = frozenset({CellKind.DFF, CellKind.ADFF, CellKind.DFFE, CellKind.SDFF})

_INPUT_ROLES = {
    CellKind.AND: ("A", "B"),
    CellKind.OR: ("A", "B"),
    CellKind.XOR: ("A", "B"),
    CellKind.NAND: ("A", "B"),
    CellKind.NOR: ("A", "B"),
    CellKind.XNOR: ("A", "B"),
    CellKind.NOT: ("A",),
    CellKind.MUX: ("A", "B", "S"),
    CellKind.DFF: ("CLK", "D"),
    CellKind.ADFF: ("CLK", "ARST", "D"),
    CellKind.DFFE: ("CLK", "EN", "D"),
    CellKind.SDFF: ("CLK", "SRST", "D"),
}

# single-bit control pins; every other role is a data lane of the cell width
CONTROL_ROLES = frozenset({"S", "CLK", "ARST", "EN", "SRST"})

# metadata cells emitted by recent Yosys versions after `flatten`
_IGNORED_TYPES = frozenset({"$scopeinfo"})

_DIRECTIONS = {"input": "in", "output": "out", "inout": "inout"}


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # "in" | "out" | "inout"
    bits: tuple[Bit, ...]


@dataclass(frozen=True)
class Cell:
    name: str
    kind: CellKind
    connections: dict[str, tuple[Bit, ...]]
    attrs: dict[str, str] = field(default_factory=dict)
    params: dict[str, str] = field(default_factory=dict)

    @property
    def width(self) -> int:
        return len(self.connections[self.kind.output])

    def pin(self, role: str) -> Bit:
        """The single bit on a control pin such as CLK or ARST."""
        return self.connections[role][0]

    @property
    def source(self) -> str | None:
        return self.attrs.get("src")


@dataclass(frozen=True)
class Module:
    name: str
    ports: dict[str, Port]
    cells: dict[str, Cell]
    # submodule instances; always empty on a flattened module
    instances: dict[str, tuple[str, dict[str, tuple[Bit, ...]]]] = field(default_factory=dict)

    @cached_property
    def nets(self) -> frozenset[int]:
        bits: set[int] = set()
        for port in self.ports.values():
            bits.update(b for b in port.bits if isinstance(b, int))
        for cell in self.cells.values():
            for conn in cell.connections.values():
                bits.update(b for b in conn if isinstance(b, int))
        return frozenset(bits)

    @property
    def inputs(self) -> list[Port]:
        return [p for p in self.ports.values() if p.direction != "out"]

    @property
    def outputs(self) -> list[Port]:
        return [p for p in self.ports.values() if p.direction != "in"]

    @property
    def sequential_cells(self) -> list[Cell]:
        return [c for c in self.cells.values() if c.kind.is_sequential]


class Driver(NamedTuple):
    """What drives a bit: ``kind`` is ``cell``, ``input``, ``const`` or ``undriven``."""

    kind: str
    name: str = ""
    role: str = ""
    index: int = 0


class Source(NamedTuple):
    """A leaf of a combinational fan-in cone.

    ``kind`` is one of ``input`` (primary input port), ``seq`` (output of a
    sequential cell), ``const``, ``loop`` (combinational cycle, traversal
    stopped there) or ``undriven``.
    """

    kind: str
    name: str
    bit: str

    @property
    def is_controllable(self) -> bool:
        return self.kind == "input"


@dataclass(frozen=True)
class Netlist:
    modules: dict[str, Module]
    top: str
    flat: Module

    @cached_property
    def _drivers(self) -> dict[int, Driver]:
        return _driver_map(self.flat)

    @cached_property
    def input_bits(self) -> frozenset[int]:
        return frozenset(b for p in self.flat.inputs for b in p.bits if isinstance(b, int))

    @cached_property
    def loop_cells(self) -> frozenset[str]:
        """Combinational cells that sit on a combinational cycle."""
        return _loop_cells(self.flat, self._drivers)

    @cached_property
    def fanout(self) -> dict[int, list[tuple[str, str]]]:
        """bit -> sorted list of (cell, input role) that read it."""
        out: dict[int, list[tuple[str, str]]] = {}
        for cell in self.flat.cells.values():
            for role in cell.kind.inputs:
                for b in cell.connections[role]:
                    if isinstance(b, int):
                        out.setdefault(b, []).append((cell.name, role))
        for readers in out.values():
            readers.sort()
        return out

    def to_dict(self) -> dict:
        return {"modules": {name: _module_to_dict(m, name == self.top) for name, m in self.modules.items()}}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def bit_label(bit: Bit) -> str:
    return bit.value if isinstance(bit, Const) else str(bit)


# ---------------------------------------------------------------- parsing


def _parse_bit(raw, path: str) -> Bit:
    if isinstance(raw, bool):
        raise NetlistError(f"invalid bit {raw!r}", path)
    if isinstance(raw, int):
        if raw < 0:
            raise NetlistError(f"negative bit index {raw}", path)
        return raw
    if isinstance(raw, str):
        low = raw.lower()
        if low == "0":
            return Const.ZERO
        if low == "1":
            return Const.ONE
        if low in ("x", "z"):
            return Const.X
    raise NetlistError(f"invalid bit {raw!r}", path)


def _parse_bits(raw, path: str) -> tuple[Bit, ...]:
    if not isinstance(raw, list):
        raise NetlistError("bit list must be a JSON array", path)
    return tuple(_parse_bit(b, path) for b in raw)


def _attr_str(value) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def _is_top_attr(module: dict) -> bool:
    v = module.get("attributes", {}).get("top")
    if v is None:
        return False
    if isinstance(v, int):
        return v == 1
    v = str(v)
    return v == "1" or (set(v) <= {"0", "1"} and int(v, 2) == 1)


class _RawModule(NamedTuple):
    ports: dict[str, Port]
    cells: dict[str, Cell]
    instances: dict[str, tuple[str, dict[str, tuple[Bit, ...]]]]


def _read_module(name: str, raw: dict, module_names: set[str]) -> _RawModule:
    if not isinstance(raw, dict):
        raise NetlistError("module must be a JSON object", name)
    ports: dict[str, Port] = {}
    for pname, p in raw.get("ports", {}).items():
        path = f"{name}/port {pname}"
        direction = _DIRECTIONS.get(p.get("direction"))
        if direction is None:
            raise NetlistError(f"bad port direction {p.get('direction')!r}", path)
        bits = _parse_bits(p.get("bits"), path)
        if not bits:
            raise NetlistError("port has no bits", path)
        ports[pname] = Port(pname, direction, bits)

    cells: dict[str, Cell] = {}
    instances: dict[str, tuple[str, dict[str, tuple[Bit, ...]]]] = {}
    for cname, c in raw.get("cells", {}).items():
        path = f"{name}/{cname}"
        ctype = c.get("type")
        if not isinstance(ctype, str):
            raise NetlistError("cell has no type", path)
        if ctype in _IGNORED_TYPES:
            continue
        conns = {role: _parse_bits(bits, path) for role, bits in c.get("connections", {}).items()}
        kind = CellKind.from_type(ctype)
        if kind is None:
            if ctype in module_names and not ctype.startswith("$"):
                instances[cname] = (ctype, conns)
                continue
            raise UnknownCellKind(f"unknown cell kind {ctype!r}", path)
        for role in kind.roles:
            if role not in conns:
                raise NetlistError(f"{ctype} cell missing required port {role}", path)
        extra = set(conns) - set(kind.roles)
        if extra:
            raise NetlistError(f"{ctype} cell has unexpected ports {sorted(extra)}", path)
        width = len(conns[kind.output])
        if width == 0:
            raise NetlistError("cell output has no bits", path)
        for role in kind.roles:
            expected = 1 if role in CONTROL_ROLES else width
            if len(conns[role]) != expected:
                raise NetlistError(
                    f"port {role} has width {len(conns[role])}, expected {expected}", path
                )
        cells[cname] = Cell(
            name=cname,
            kind=kind,
            connections=conns,
            attrs={k: _attr_str(v) for k, v in c.get("attributes", {}).items()},
            params={k: _attr_str(v) for k, v in c.get("parameters", {}).items()},
        )
    return _RawModule(ports, cells, instances)


def _check_drivers(module: Module, path: str) -> None:
    _driver_map(module, path)


def _driver_map(module: Module, path: str | None = None) -> dict[int, Driver]:
    path = module.name if path is None else path
    drivers: dict[int, Driver] = {}

    def claim(bit: Bit, drv: Driver, where: str) -> None:
        if not isinstance(bit, int):
            return
        if bit in drivers:
            prev = drivers[bit]
            raise NetlistError(
                f"bit {bit} has multiple drivers: {_describe(prev)} and {_describe(drv)}", where
            )
        drivers[bit] = drv

    for port in module.ports.values():
        if port.direction != "out":
            for i, b in enumerate(port.bits):
                claim(b, Driver("input", port.name, "", i), f"{path}/port {port.name}")
    for cname in sorted(module.cells):
        cell = module.cells[cname]
        role = cell.kind.output
        for i, b in enumerate(cell.connections[role]):
            claim(b, Driver("cell", cname, role, i), f"{path}/{cname}")
    return drivers


def _describe(d: Driver) -> str:
    if d.kind == "input":
        return f"input port {d.name}"
    return f"cell {d.name}.{d.role}"


def _choose_top(raw_modules: dict[str, _RawModule], raw_json: dict) -> str:
    flagged = [n for n, m in raw_json.items() if _is_top_attr(m)]
    if len(flagged) == 1:
        return flagged[0]
    if len(flagged) > 1:
        raise NetlistError(f"several modules marked top: {sorted(flagged)}")
    used = {t for m in raw_modules.values() for t, _ in m.instances.values()}
    roots = sorted(set(raw_modules) - used)
    if len(roots) != 1:
        raise NetlistError(f"cannot determine top module (candidates: {roots})")
    return roots[0]


class _Flattener:
    def __init__(self, raw: dict[str, _RawModule]):
        self.raw = raw
        biggest = 0
        for m in raw.values():
            for p in m.ports.values():
                biggest = max([biggest] + [b for b in p.bits if isinstance(b, int)])
            for c in m.cells.values():
                for conn in c.connections.values():
                    biggest = max([biggest] + [b for b in conn if isinstance(b, int)])
            for _, conns in m.instances.values():
                for conn in conns.values():
                    biggest = max([biggest] + [b for b in conn if isinstance(b, int)])
        self.next_bit = biggest + 1

    def flatten(self, top: str) -> Module:
        m = self.raw[top]
        cells: dict[str, Cell] = {}
        self._inline(top, {}, "", cells, (top,), None)
        return Module(top, dict(m.ports), cells)

    def _inline(self, name, bitmap, prefix, out, stack, inst_path):
        m = self.raw[name]
        for cname, cell in m.cells.items():
            conns = {r: tuple(self._map(b, bitmap, inst_path) for b in bits) for r, bits in cell.connections.items()}
            out[prefix + cname] = Cell(prefix + cname, cell.kind, conns, cell.attrs, cell.params)
        for iname, (sub, conns) in m.instances.items():
            path = f"{'/'.join(stack)}/{iname}"
            if sub in stack:
                raise NetlistError(f"recursive instantiation of {sub!r}", path)
            sub_mod = self.raw[sub]
            sub_map: dict[int, Bit] = {}
            for pname, port in sub_mod.ports.items():
                if pname not in conns:
                    raise NetlistError(f"instance of {sub} leaves port {pname} unconnected", path)
                actual = tuple(self._map(b, bitmap, inst_path) for b in conns[pname])
                if len(actual) != len(port.bits):
                    raise NetlistError(
                        f"port {pname} of {sub} has width {len(port.bits)}, connected with {len(actual)}", path
                    )
                for formal, a in zip(port.bits, actual):
                    if not isinstance(formal, int):
                        continue
                    if formal in sub_map and sub_map[formal] != a:
                        raise NetlistError(f"aliased ports inside {sub} are not supported", path)
                    sub_map[formal] = a
            self._inline(sub, sub_map, prefix + iname + ".", out, stack + (sub,), path)

    def _map(self, b: Bit, bitmap: dict[int, Bit], inst_path) -> Bit:
        if inst_path is None or not isinstance(b, int):
            return b
        if b not in bitmap:
            bitmap[b] = self.next_bit
            self.next_bit += 1
        return bitmap[b]


def parse_netlist(json_text: str) -> Netlist:
    """Parse a Yosys-style JSON netlist and flatten its top module.

    Raises :class:`NetlistError` for malformed JSON, unknown cell kinds,
    missing port roles, width mismatches or multiply driven bits.
    """
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise NetlistError(f"malformed JSON: {exc}") from exc
    return netlist_from_dict(doc)


def netlist_from_dict(doc: dict) -> Netlist:
    if not isinstance(doc, dict) or not isinstance(doc.get("modules"), dict) or not doc["modules"]:
        raise NetlistError('netlist JSON needs a non-empty "modules" object')
    raw_json = doc["modules"]
    names = set(raw_json)
    raw = {name: _read_module(name, m, names) for name, m in raw_json.items()}
    modules = {name: Module(name, r.ports, r.cells, r.instances) for name, r in raw.items()}
    for name, module in modules.items():
        _check_drivers(module, name)
    top = _choose_top(raw, raw_json)
    if raw[top].instances:
        flat = _Flattener(raw).flatten(top)
        _check_drivers(flat, f"{top} (flattened)")
    else:
        flat = modules[top]
    return Netlist(modules, top, flat)


# ---------------------------------------------------------------- queries


def drivers_of(nl: Netlist, bit: Bit) -> Driver:
    """Return the unique driver of ``bit`` in the flattened top module."""
    if isinstance(bit, Const):
        return Driver("const", bit.value)
    if bit not in nl.flat.nets:
        raise KeyError(f"bit {bit} is not part of module {nl.top}")
    return nl._drivers.get(bit, Driver("undriven"))


def comb_fanin_cone(nl: Netlist, bit: Bit) -> list[Source]:
    """Backward traversal through combinational cells only.

    Sequential outputs, primary inputs, constants, undriven nets and
    combinational loops terminate the walk. The result is sorted.
    """
    found: set[Source] = set()
    seen: set[int] = set()
    queue: deque[Bit] = deque([bit])
    while queue:
        b = queue.popleft()
        if isinstance(b, Const):
            found.add(Source("const", b.value, b.value))
            continue
        if b in seen:
            continue
        seen.add(b)
        drv = drivers_of(nl, b)
        if drv.kind == "input":
            found.add(Source("input", drv.name, str(b)))
        elif drv.kind == "undriven":
            found.add(Source("undriven", "", str(b)))
        else:
            cell = nl.flat.cells[drv.name]
            if cell.kind.is_sequential:
                found.add(Source("seq", cell.name, str(b)))
            elif cell.name in nl.loop_cells:
                found.add(Source("loop", cell.name, str(b)))
            else:
                for role in cell.kind.inputs:
                    lanes = cell.connections[role]
                    # bitwise gates only depend on the same lane; S drives every lane
                    queue.append(lanes[0] if role == "S" else lanes[drv.index])
    return sorted(found)


def cone_cells(nl: Netlist, bit: Bit) -> list[str]:
    """Names of the combinational cells crossed by :func:`comb_fanin_cone`."""
    cells: set[str] = set()
    seen: set[int] = set()
    queue: deque[Bit] = deque([bit])
    while queue:
        b = queue.popleft()
        if isinstance(b, Const) or b in seen:
            continue
        seen.add(b)
        drv = drivers_of(nl, b)
        if drv.kind != "cell":
            continue
        cell = nl.flat.cells[drv.name]
        if cell.kind.is_sequential or cell.name in nl.loop_cells:
            continue
        cells.add(cell.name)
        for role in cell.kind.inputs:
            lanes = cell.connections[role]
            queue.append(lanes[0] if role == "S" else lanes[drv.index])
    return sorted(cells)


def _loop_cells(module: Module, drivers: dict[int, Driver]) -> frozenset[str]:
    comb = {n: c for n, c in module.cells.items() if not c.kind.is_sequential}
    succ: dict[str, set[str]] = {n: set() for n in comb}
    for n, c in comb.items():
        for role in c.kind.inputs:
            for b in c.connections[role]:
                d = drivers.get(b) if isinstance(b, int) else None
                if d is not None and d.kind == "cell" and d.name in comb:
                    succ[d.name].add(n)
    looped: set[str] = set()
    for scc in _tarjan(succ):
        if len(scc) > 1 or next(iter(scc)) in succ[next(iter(scc))]:
            looped.update(scc)
    return frozenset(looped)


def _tarjan(graph: dict[str, set[str]]) -> Iterable[set[str]]:
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    for root in sorted(graph):
        if root in index:
            continue
        work = [(root, iter(sorted(graph[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(graph[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                scc = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.add(w)
                    if w == node:
                        break
                yield scc


def topological_order(nl: Netlist) -> list[str]:
    """Combinational cells in evaluation order; raises if there is a loop."""
    if nl.loop_cells:
        raise NetlistError(f"combinational loop through {sorted(nl.loop_cells)}", nl.top)
    module = nl.flat
    comb = sorted(n for n, c in module.cells.items() if not c.kind.is_sequential)
    deps: dict[str, set[str]] = {}
    for n in comb:
        c = module.cells[n]
        deps[n] = set()
        for role in c.kind.inputs:
            for b in c.connections[role]:
                d = nl._drivers.get(b) if isinstance(b, int) else None
                if d is not None and d.kind == "cell" and not module.cells[d.name].kind.is_sequential:
                    deps[n].add(d.name)
    order: list[str] = []
    done: set[str] = set()
    for n in comb:
        stack = [(n, False)]
        while stack:
            node, expanded = stack.pop()
            if node in done:
                continue
            if expanded:
                done.add(node)
                order.append(node)
                continue
            stack.append((node, True))
            stack.extend((d, False) for d in sorted(deps[node], reverse=True) if d not in done)
    return order


# ---------------------------------------------------------------- writing


def _bit_json(b: Bit):
    return b.value if isinstance(b, Const) else b


def _module_to_dict(m: Module, is_top: bool) -> dict:
    _inv = {v: k for k, v in _DIRECTIONS.items()}
    out = {
        "attributes": {"top": "00000000000000000000000000000001"} if is_top else {},
        "ports": {
            p.name: {"direction": _inv[p.direction], "bits": [_bit_json(b) for b in p.bits]}
            for p in m.ports.values()
        },
        "cells": {},
    }
    for c in m.cells.values():
        out["cells"][c.name] = {
            "type": "$" + c.kind.value,
            "parameters": dict(c.params),
            "attributes": dict(c.attrs),
            "connections": {r: [_bit_json(b) for b in bits] for r, bits in c.connections.items()},
        }
    for name, (sub, conns) in m.instances.items():
        out["cells"][name] = {
            "type": sub,
            "connections": {r: [_bit_json(b) for b in bits] for r, bits in conns.items()},
        }
    return out
