"""DFT lint, netlist embeddings and retrieval-guided repair for gate-level Verilog."""

from .lint import DftErrorKind, render_report
from .netlist import Netlist, NetlistError, parse_netlist
from .sim import EquivBudget, Verdict, check_equivalence, simulate_cycle

__version__ = "0.1.0"

__all__ = [
    "DftErrorKind", "EquivBudget", "Netlist", "NetlistError", "Verdict", "check_equivalence",
    "parse_netlist", "render_report", "simulate_cycle",
]
