"""Programmatic netlist construction and a generator of synthetic DFT designs.

:class:`NetlistBuilder` writes the same JSON dialect Yosys emits, so built
designs go through :func:`dft_forge.netlist.parse_netlist` unchanged.

:func:`generate_corpus` produces (buggy, fixed) pairs for each of the four
error families. Each family has a few structural variants and is embedded
in random surrounding logic, so designs of one family are similar but not
identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lint import DftErrorKind

Bits = list  # list of int or "0"/"1"/"x"

_BINARY_GATES = ("and", "or", "xor", "nand", "nor", "xnor")


def _param(value: int, width: int = 32) -> str:
    return format(value, f"0{width}b")


class NetlistBuilder:
    """Incrementally build a flat single-module netlist."""

    def __init__(self, name: str = "top"):
        self.name = name
        self.next_bit = 2  # Yosys reserves 0 and 1
        self.ports: dict[str, dict] = {}
        self.cells: dict[str, dict] = {}
        self.netnames: dict[str, dict] = {}
        self._line = 1

    def new_bits(self, width: int = 1) -> Bits:
        bits = list(range(self.next_bit, self.next_bit + width))
        self.next_bit += width
        return bits

    def input(self, name: str, width: int = 1) -> Bits:
        bits = self.new_bits(width)
        self.ports[name] = {"direction": "input", "bits": bits}
        self.name_net(name, bits)
        return bits

    def output(self, name: str, bits: Bits) -> Bits:
        self.ports[name] = {"direction": "output", "bits": list(bits)}
        self.name_net(name, bits)
        return bits

    def name_net(self, name: str, bits: Bits) -> Bits:
        """Record a wire name, as Yosys does in its ``netnames`` section."""
        self.netnames[name] = {"hide_name": 0, "bits": list(bits), "attributes": {}}
        return bits

    def _cell(self, kind: str, params: dict, conns: dict, name: str | None) -> None:
        self._line += 1
        if name is None:
            name = f"${kind}${self.name}.v:{self._line}${len(self.cells) + 1}"
        if name in self.cells:
            raise ValueError(f"duplicate cell name {name!r}")
        self.cells[name] = {
            "hide_name": 1,
            "type": "$" + kind,
            "parameters": params,
            "attributes": {"src": f"{self.name}.v:{self._line}.3-{self._line}.40"},
            "connections": {k: list(v) for k, v in conns.items()},
        }

    def gate(self, kind: str, a: Bits, b: Bits | None = None, name: str | None = None) -> Bits:
        y = self.new_bits(len(a))
        w = _param(len(a))
        if kind == "not":
            self._cell("not", {"A_SIGNED": _param(0), "A_WIDTH": w, "Y_WIDTH": w}, {"A": a, "Y": y}, name)
        else:
            if b is None or len(b) != len(a):
                raise ValueError(f"{kind} gate needs two operands of equal width")
            params = {"A_SIGNED": _param(0), "A_WIDTH": w, "B_SIGNED": _param(0), "B_WIDTH": w, "Y_WIDTH": w}
            self._cell(kind, params, {"A": a, "B": b, "Y": y}, name)
        return y

    def mux(self, a: Bits, b: Bits, s: Bits, name: str | None = None) -> Bits:
        y = self.new_bits(len(a))
        self._cell("mux", {"WIDTH": _param(len(a))}, {"A": a, "B": b, "S": s, "Y": y}, name)
        return y

    def dff(self, d: Bits, clk: Bits, name: str | None = None, q: Bits | None = None) -> Bits:
        q = self.new_bits(len(d)) if q is None else q
        params = {"CLK_POLARITY": "1", "WIDTH": _param(len(d))}
        self._cell("dff", params, {"CLK": clk, "D": d, "Q": q}, name)
        return q

    def adff(self, d: Bits, clk: Bits, arst: Bits, value: int = 0, name: str | None = None,
             q: Bits | None = None, polarity: int = 1) -> Bits:
        q = self.new_bits(len(d)) if q is None else q
        params = {
            "ARST_POLARITY": str(polarity),
            "ARST_VALUE": _param(value, len(d)),
            "CLK_POLARITY": "1",
            "WIDTH": _param(len(d)),
        }
        self._cell("adff", params, {"ARST": arst, "CLK": clk, "D": d, "Q": q}, name)
        return q

    def dffe(self, d: Bits, clk: Bits, en: Bits, name: str | None = None, q: Bits | None = None) -> Bits:
        q = self.new_bits(len(d)) if q is None else q
        params = {"CLK_POLARITY": "1", "EN_POLARITY": "1", "WIDTH": _param(len(d))}
        self._cell("dffe", params, {"CLK": clk, "D": d, "EN": en, "Q": q}, name)
        return q

    def sdff(self, d: Bits, clk: Bits, srst: Bits, value: int = 0, name: str | None = None,
             q: Bits | None = None) -> Bits:
        q = self.new_bits(len(d)) if q is None else q
        params = {
            "CLK_POLARITY": "1",
            "SRST_POLARITY": "1",
            "SRST_VALUE": _param(value, len(d)),
            "WIDTH": _param(len(d)),
        }
        self._cell("sdff", params, {"CLK": clk, "D": d, "Q": q, "SRST": srst}, name)
        return q

    def to_dict(self) -> dict:
        return {
            "creator": "dft_forge.synthetic",
            "modules": {
                self.name: {
                    "attributes": {"top": _param(1)},
                    "ports": self.ports,
                    "cells": self.cells,
                    "netnames": self.netnames,
                }
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ------------------------------------------------------------ generator


FAMILIES = tuple(DftErrorKind)


@dataclass(frozen=True)
class SyntheticDesign:
    id: str
    family: DftErrorKind
    variant: str
    buggy_json: str
    fixed_json: str


class _Design:
    """Random surrounding logic shared by all families."""

    def __init__(self, name: str, rng: np.random.Generator):
        self.rng = rng
        self.b = NetlistBuilder(name)
        self.clk = self.b.input("clk")
        self.rst = self.b.input("rst")
        n_in = int(rng.integers(2, 6))
        width = int(rng.integers(1, 5))
        self.width = width
        self.data = [self.b.input(f"in{i}", width) for i in range(n_in)]
        self.pool = list(self.data)

    def pick(self) -> Bits:
        return self.pool[int(self.rng.integers(len(self.pool)))]

    def comb(self, n: int) -> Bits:
        y = self.pick()
        for _ in range(n):
            kind = str(self.rng.choice(_BINARY_GATES + ("not", "mux")))
            if kind == "not":
                y = self.b.gate("not", self.pick())
            elif kind == "mux":
                sel = [self.pick()[0]]
                y = self.b.mux(self.pick(), self.pick(), sel)
            else:
                y = self.b.gate(kind, self.pick(), self.pick())
            self.pool.append(y)
        return y

    def registers(self, n: int) -> None:
        for _ in range(n):
            d = self.comb(int(self.rng.integers(1, 4)))
            q = self.b.dff(d, self.clk)
            self.b.name_net(f"r{len(self.b.netnames)}", q)
            self.pool.append(q)

    def finish(self, extra: list[Bits]) -> str:
        for i, bits in enumerate(extra):
            self.b.output(f"out{i}", bits)
        self.b.output(f"out{len(extra)}", self.comb(1))
        return self.b.to_json()


def _acncpi(rng, name, fixed):
    d = _Design(name, rng)
    d.registers(int(rng.integers(0, 3)))
    variant = str(rng.choice(["flop", "flop_logic", "const"]))
    # the reset is produced by a register; the repair uses the external reset
    rflop = d.b.dff(d.comb(1)[:1], d.clk)
    if variant == "flop":
        internal = rflop
    elif variant == "flop_logic":
        internal = d.b.gate(str(rng.choice(["and", "or", "xor"])), rflop, d.b.dff(d.pick()[:1], d.clk))
    else:
        # reset tied off at its inactive level; the repair drops the dead reset
        internal = ["0"]
    d.b.name_net(str(rng.choice(["rst_int", "soft_rst", "rst_gen"])), internal)
    arst = d.rst if fixed else internal
    outs = []
    for k in range(int(rng.integers(1, 3))):
        data = d.comb(1)
        q = d.b.dff(data, d.clk) if fixed and variant == "const" else d.b.adff(data, d.clk, arst)
        outs.append(d.b.name_net(f"async_q{k}", q))
    d.registers(int(rng.integers(0, 2)))
    return variant, d.finish(outs + [rflop])


def _clknpi(rng, name, fixed):
    d = _Design(name, rng)
    d.registers(int(rng.integers(0, 3)))
    en = d.b.input("en")
    variant = str(rng.choice(["and_gate", "or_gate", "mux_gate"]))
    outs = []
    n = int(rng.integers(2, 4))
    if fixed:
        for _ in range(n):
            outs.append(d.b.dffe(d.comb(1), d.clk, en))
    else:
        if variant == "and_gate":
            gclk = d.b.gate("and", d.clk, en)
        elif variant == "or_gate":
            gclk = d.b.gate("or", d.clk, d.b.gate("not", en))
        else:
            gclk = d.b.mux(["0"], d.clk, en)
        d.b.name_net(str(rng.choice(["gclk", "clk_gated", "clk_g"])), gclk)
        for k in range(n):
            outs.append(d.b.name_net(f"gated_q{k}", d.b.dff(d.comb(1), gclk)))
    d.registers(int(rng.integers(0, 2)))
    return variant, d.finish(outs)


def _cdfdat(rng, name, fixed):
    d = _Design(name, rng)
    d.registers(int(rng.integers(0, 3)))
    variant = str(rng.choice(["to_logic", "to_d", "to_enable"]))
    sample = d.b.input("sample")
    src = sample if fixed else d.clk
    # a plain assign: the tap is an alias of the source net, no cell
    src = d.b.name_net(str(rng.choice(["clk_sample", "clk_data", "clk_tap"])), src)
    outs = []
    for k in range(int(rng.integers(2, 4))):
        if variant == "to_logic":
            mixed = d.b.gate(str(rng.choice(["and", "xor", "or"])), src, d.pick()[:1])
            outs.append(d.b.name_net(f"sampled_q{k}", d.b.dff(mixed, d.clk)))
            outs.append(mixed)
        elif variant == "to_d":
            outs.append(d.b.name_net(f"sampled_q{k}", d.b.dff(src, d.clk)))
        else:
            outs.append(d.b.name_net(f"sampled_q{k}", d.b.dffe(d.comb(1), d.clk, src)))
    d.registers(int(rng.integers(0, 2)))
    return variant, d.finish(outs)


def _ffcknp(rng, name, fixed):
    d = _Design(name, rng)
    d.registers(int(rng.integers(0, 3)))
    variant = str(rng.choice(["ripple", "ripple_logic", "chain"]))
    t_q = d.b.new_bits(1)
    d.b.sdff(d.b.gate("not", t_q), d.clk, d.rst, q=t_q)
    outs = [t_q]
    # the repair keeps the interface: the divider stays, only its use as a clock goes
    if variant == "ripple":
        dclk, tick = t_q, d.b.gate("not", t_q)
    elif variant == "ripple_logic":
        kind, div_en = str(rng.choice(["and", "xor", "or"])), d.b.input("div_en")
        dclk, tick = d.b.gate(kind, t_q, div_en), d.b.gate(kind, d.b.gate("not", t_q), div_en)
    else:
        second = d.b.new_bits(1)
        if fixed:
            d.b.dffe(d.b.gate("not", second), d.clk, d.b.gate("not", t_q), q=second)
        else:
            d.b.dff(d.b.gate("not", second), t_q, q=second)
        outs.append(second)
        dclk, tick = second, d.b.gate("and", d.b.gate("not", t_q), d.b.gate("not", second))
    d.b.name_net(str(rng.choice(["clk_div", "div_clk", "clk_half"])), dclk)
    for k in range(int(rng.integers(1, 3))):
        data = d.comb(1)
        q = d.b.dffe(data, d.clk, tick) if fixed else d.b.dff(data, dclk)
        outs.append(d.b.name_net(f"slow_q{k}", q))
    d.registers(int(rng.integers(0, 2)))
    return variant, d.finish(outs)


_FAMILY_BUILDERS = {
    DftErrorKind.ACNCPI: _acncpi,
    DftErrorKind.CLKNPI: _clknpi,
    DftErrorKind.CDFDAT: _cdfdat,
    DftErrorKind.FFCKNP: _ffcknp,
}


def generate_design(family: DftErrorKind, seed: int, name: str | None = None) -> SyntheticDesign:
    """One buggy/fixed pair. Both halves are built from the same random stream."""
    name = name or f"design_{seed}"
    build = _FAMILY_BUILDERS[family]
    variant, buggy = build(np.random.default_rng(seed), name, False)
    _, fixed = build(np.random.default_rng(seed), name, True)
    return SyntheticDesign(name, family, variant, buggy, fixed)


def generate_corpus(n: int, seed: int = 0) -> list[SyntheticDesign]:
    """``n`` designs, families assigned round-robin, per-design seeds from ``seed``."""
    seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=n)
    return [
        generate_design(FAMILIES[i % len(FAMILIES)], int(s), f"d{i:04d}")
        for i, s in enumerate(seeds)
    ]
