"""Lint a clock-gated design, repair it by hand, and compare the two versions.

Run: python3 demos/01_lint_and_equivalence.py
"""

from dft_forge import lint
from dft_forge.netlist import parse_netlist
from dft_forge.sim import check_equivalence
from dft_forge.synthetic import NetlistBuilder


def gated(use_enable: bool) -> str:
    b = NetlistBuilder("counter_bit")
    clk, en, d = b.input("clk"), b.input("en"), b.input("d", 2)
    if use_enable:
        q = b.dffe(d, clk, en)  # the DFT-friendly form: a synchronous enable
    else:
        q = b.dff(d, b.gate("and", clk, en))  # the flop clock is no longer a primary input
    b.output("q", q)
    return b.to_json()


buggy, fixed = parse_netlist(gated(False)), parse_netlist(gated(True))

print(lint.render_report(*lint.lint(buggy)))
print()
print(lint.render_report(*lint.lint(fixed)))
print()

# primary outputs under identical random stimuli; the clock is just another input,
# so swapping a gated clock for an enable is observable and the checker says so
result = check_equivalence(buggy, fixed)
print(result.verdict.value, f"after {result.stimuli_run} stimuli")
if result.counterexample:
    cex = result.counterexample
    print(f"first difference: {cex.output}[{cex.bit}] at cycle {cex.cycle}")

# a pure rewrite of the combinational side is accepted
b = NetlistBuilder("a")
p, q = b.input("p"), b.input("q")
b.output("y", b.gate("not", b.gate("and", p, q)))
c = NetlistBuilder("b")
p, q = c.input("p"), c.input("q")
c.output("y", c.gate("or", c.gate("not", p), c.gate("not", q)))
r = check_equivalence(parse_netlist(b.to_json()), parse_netlist(c.to_json()))
print("De Morgan:", r.verdict.value, r.mode, f"{r.stimuli_run} rows")
