"""Hand-built lint fixtures: small netlists with their expected raw label vector.

Positives of a kind have that bit set, negatives are near misses that must
not trigger it. The vector is the uncollapsed lint output (ACNCPI, CLKNPI,
CDFDAT, FFCKNP), so a ripple divider legitimately expects 0111.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from dft_forge.lint import DftErrorKind
from dft_forge.synthetic import NetlistBuilder


@dataclass(frozen=True)
class Fixture:
    name: str
    kind: DftErrorKind  # the kind this fixture is about
    positive: bool
    expected: tuple[int, int, int, int]
    build: Callable[[], str]


def _base(name):
    b = NetlistBuilder(name)
    return b, b.input("clk"), b.input("d", 2)


# ----------------------------------------------------------------- ACNCPI


def acncpi_const_reset():
    b, clk, d = _base("acncpi_const")
    b.output("q", b.adff(d, clk, ["0"]))
    return b.to_json()


def acncpi_flop_reset():
    b, clk, d = _base("acncpi_flop")
    r = b.dff(d[:1], clk)
    b.output("q", b.adff(d, clk, r))
    return b.to_json()


def acncpi_logic_of_flops():
    b, clk, d = _base("acncpi_logic")
    r1, r2 = b.dff(d[:1], clk), b.dff(d[1:], clk)
    b.output("q", b.adff(d, clk, b.gate("and", r1, b.gate("not", r2))))
    return b.to_json()


def acncpi_undriven_reset():
    b, clk, d = _base("acncpi_undriven")
    b.output("q", b.adff(d, clk, b.new_bits(1)))
    return b.to_json()


def acncpi_neg_input_reset():
    b, clk, d = _base("acncpi_neg_input")
    b.output("q", b.adff(d, clk, b.input("rst")))
    return b.to_json()


def acncpi_neg_reset_logic():
    b, clk, d = _base("acncpi_neg_logic")
    rst = b.input("rst")
    r = b.dff(d[:1], clk)
    b.output("q", b.adff(d, clk, b.gate("or", rst, r)))
    return b.to_json()


def acncpi_neg_inverted_reset():
    b, clk, d = _base("acncpi_neg_inv")
    b.output("q", b.adff(d, clk, b.gate("not", b.input("rst_n")), polarity=1))
    return b.to_json()


def acncpi_neg_sync_reset():
    b, clk, d = _base("acncpi_neg_sync")
    r = b.dff(d[:1], clk)
    b.output("q", b.sdff(d, clk, r))
    return b.to_json()


# ----------------------------------------------------------------- CLKNPI


def clknpi_gated():
    b, clk, d = _base("clknpi_gated")
    b.output("q", b.dff(d, b.gate("and", clk, b.input("en"))))
    return b.to_json()


def clknpi_const_clock():
    b, clk, d = _base("clknpi_const")
    b.output("q", b.dff(d, ["0"]))
    b.output("q2", b.dff(d, clk))
    return b.to_json()


def clknpi_mux_clock():
    b, clk, d = _base("clknpi_mux")
    b.output("q", b.dff(d, b.mux(clk, b.input("clk2"), b.input("sel"))))
    return b.to_json()


def clknpi_neg_direct():
    b, clk, d = _base("clknpi_neg_direct")
    b.output("q", b.dff(b.gate("xor", d, d), clk))
    return b.to_json()


def clknpi_neg_enable():
    b, clk, d = _base("clknpi_neg_enable")
    b.output("q", b.dffe(d, clk, b.gate("and", b.input("en"), d[:1])))
    return b.to_json()


def clknpi_neg_two_domains():
    b, clk, d = _base("clknpi_neg_two")
    b.output("q", b.dff(d, clk))
    b.output("q2", b.dff(d, b.input("clk_b")))
    return b.to_json()


# ----------------------------------------------------------------- CDFDAT


def cdfdat_logic():
    b, clk, d = _base("cdfdat_logic")
    b.output("q", b.dff(b.gate("xor", d[:1], clk), clk))
    return b.to_json()


def cdfdat_d_pin():
    b, clk, d = _base("cdfdat_d_pin")
    b.output("q", b.dff(clk, clk))
    return b.to_json()


def cdfdat_select():
    b, clk, d = _base("cdfdat_select")
    b.output("q", b.dff(b.mux(d[:1], d[1:], clk), clk))
    return b.to_json()


def cdfdat_to_output():
    b, clk, d = _base("cdfdat_output")
    b.output("q", b.dff(d, clk))
    b.output("clk_copy", b.gate("and", clk, b.input("en")))
    return b.to_json()


def cdfdat_neg_gating_only():
    b, clk, d = _base("cdfdat_neg_gating")
    b.output("q", b.dff(d, b.gate("and", clk, b.input("en"))))
    return b.to_json()


def cdfdat_neg_clean():
    b, clk, d = _base("cdfdat_neg_clean")
    q = b.dff(d, clk)
    b.output("q", b.dff(b.gate("and", q, d), clk))
    return b.to_json()


def cdfdat_neg_sample_input():
    b, clk, d = _base("cdfdat_neg_sample")
    b.output("q", b.dff(b.gate("xor", d[:1], b.input("sample")), clk))
    return b.to_json()


# ----------------------------------------------------------------- FFCKNP


def ffcknp_ripple():
    b, clk, d = _base("ffcknp_ripple")
    t = b.new_bits(1)
    b.dff(b.gate("not", t), clk, q=t)
    b.output("q", b.dff(d, t))
    return b.to_json()


def ffcknp_through_logic():
    b, clk, d = _base("ffcknp_logic")
    t = b.dff(d[:1], clk)
    b.output("q", b.dff(d, b.gate("and", t, b.input("en"))))
    return b.to_json()


def ffcknp_adff_source():
    b, clk, d = _base("ffcknp_adff")
    t = b.adff(d[:1], clk, b.input("rst"))
    b.output("q", b.dff(d, t))
    return b.to_json()


def ffcknp_neg_enable():
    b, clk, d = _base("ffcknp_neg_enable")
    t = b.dff(d[:1], clk)
    b.output("q", b.dffe(d, clk, t))
    return b.to_json()


def ffcknp_neg_data_only():
    b, clk, d = _base("ffcknp_neg_data")
    t = b.dff(d, clk)
    b.output("q", b.dff(b.gate("or", t, d), clk))
    return b.to_json()


def ffcknp_neg_gated_input():
    b, clk, d = _base("ffcknp_neg_gated")
    b.output("q", b.dff(d, b.gate("or", clk, b.input("force"))))
    return b.to_json()


A, C, D, F = DftErrorKind.ACNCPI, DftErrorKind.CLKNPI, DftErrorKind.CDFDAT, DftErrorKind.FFCKNP

FIXTURES = [
    Fixture("acncpi_const_reset", A, True, (1, 0, 0, 0), acncpi_const_reset),
    Fixture("acncpi_flop_reset", A, True, (1, 0, 0, 0), acncpi_flop_reset),
    Fixture("acncpi_logic_of_flops", A, True, (1, 0, 0, 0), acncpi_logic_of_flops),
    Fixture("acncpi_undriven_reset", A, True, (1, 0, 0, 0), acncpi_undriven_reset),
    Fixture("acncpi_neg_input_reset", A, False, (0, 0, 0, 0), acncpi_neg_input_reset),
    Fixture("acncpi_neg_reset_logic", A, False, (0, 0, 0, 0), acncpi_neg_reset_logic),
    Fixture("acncpi_neg_inverted_reset", A, False, (0, 0, 0, 0), acncpi_neg_inverted_reset),
    Fixture("acncpi_neg_sync_reset", A, False, (0, 0, 0, 0), acncpi_neg_sync_reset),
    Fixture("clknpi_gated", C, True, (0, 1, 0, 0), clknpi_gated),
    Fixture("clknpi_const_clock", C, True, (0, 1, 0, 0), clknpi_const_clock),
    Fixture("clknpi_mux_clock", C, True, (0, 1, 0, 0), clknpi_mux_clock),
    Fixture("clknpi_neg_direct", C, False, (0, 0, 0, 0), clknpi_neg_direct),
    Fixture("clknpi_neg_enable", C, False, (0, 0, 0, 0), clknpi_neg_enable),
    Fixture("clknpi_neg_two_domains", C, False, (0, 0, 0, 0), clknpi_neg_two_domains),
    Fixture("cdfdat_logic", D, True, (0, 0, 1, 0), cdfdat_logic),
    Fixture("cdfdat_d_pin", D, True, (0, 0, 1, 0), cdfdat_d_pin),
    Fixture("cdfdat_select", D, True, (0, 0, 1, 0), cdfdat_select),
    Fixture("cdfdat_to_output", D, True, (0, 0, 1, 0), cdfdat_to_output),
    Fixture("cdfdat_neg_gating_only", D, False, (0, 1, 0, 0), cdfdat_neg_gating_only),
    Fixture("cdfdat_neg_clean", D, False, (0, 0, 0, 0), cdfdat_neg_clean),
    Fixture("cdfdat_neg_sample_input", D, False, (0, 0, 0, 0), cdfdat_neg_sample_input),
    Fixture("ffcknp_ripple", F, True, (0, 1, 1, 1), ffcknp_ripple),
    Fixture("ffcknp_through_logic", F, True, (0, 1, 0, 1), ffcknp_through_logic),
    Fixture("ffcknp_adff_source", F, True, (0, 1, 0, 1), ffcknp_adff_source),
    Fixture("ffcknp_neg_enable", F, False, (0, 0, 0, 0), ffcknp_neg_enable),
    Fixture("ffcknp_neg_data_only", F, False, (0, 0, 0, 0), ffcknp_neg_data_only),
    Fixture("ffcknp_neg_gated_input", F, False, (0, 1, 0, 0), ffcknp_neg_gated_input),
]
