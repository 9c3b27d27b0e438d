"""Random boolean expressions, their netlists and a brute-force truth table.

The oracle evaluates the expression tree directly in Python, so it shares
nothing with the simulator under test.
"""

from __future__ import annotations

import itertools
import random

from dft_forge.synthetic import NetlistBuilder

BINARY = ("and", "or", "xor", "nand", "nor", "xnor")
_EVAL = {
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
    "nand": lambda a, b: 1 - (a & b),
    "nor": lambda a, b: 1 - (a | b),
    "xnor": lambda a, b: 1 - (a ^ b),
}


def random_expr(rng: random.Random, n_inputs: int, depth: int):
    if depth == 0 or rng.random() < 0.2:
        return ("in", rng.randrange(n_inputs))
    r = rng.random()
    if r < 0.15:
        return ("not", random_expr(rng, n_inputs, depth - 1))
    if r < 0.3:
        return ("mux", random_expr(rng, n_inputs, depth - 1), random_expr(rng, n_inputs, depth - 1),
                random_expr(rng, n_inputs, depth - 1))
    return (rng.choice(BINARY), random_expr(rng, n_inputs, depth - 1), random_expr(rng, n_inputs, depth - 1))


def evaluate(expr, env) -> int:
    op = expr[0]
    if op == "in":
        return env[expr[1]]
    if op == "not":
        return 1 - evaluate(expr[1], env)
    if op == "mux":
        return evaluate(expr[2], env) if evaluate(expr[3], env) else evaluate(expr[1], env)
    return _EVAL[op](evaluate(expr[1], env), evaluate(expr[2], env))


def rewrite(expr):
    """Structurally different but logically identical expression."""
    op = expr[0]
    if op == "in":
        return ("not", ("not", expr))
    if op == "not":
        return ("nand", rewrite(expr[1]), rewrite(expr[1]))
    if op == "mux":
        a, b, s = (rewrite(e) for e in expr[1:])
        return ("or", ("and", a, ("not", s)), ("and", b, s))
    a, b = rewrite(expr[1]), rewrite(expr[2])
    if op == "and":
        return ("nor", ("not", a), ("not", b))
    if op == "or":
        return ("nand", ("not", a), ("not", b))
    if op == "xor":
        return ("or", ("and", a, ("not", b)), ("and", ("not", a), b))
    return (op, b, a)


def mutate(rng: random.Random, expr, n_inputs: int):
    """Change one node: a gate type or an input leaf."""
    nodes = []

    def walk(e, path):
        nodes.append(path)
        for i, child in enumerate(e[1:], start=1):
            if isinstance(child, tuple):
                walk(child, path + (i,))

    walk(expr, ())
    target = rng.choice(nodes)

    def change(e, path):
        if path:
            i = path[0]
            return e[:i] + (change(e[i], path[1:]),) + e[i + 1:]
        if e[0] == "in":
            return ("in", (e[1] + 1 + rng.randrange(n_inputs - 1)) % n_inputs)
        if e[0] == "not":
            return e[1]
        if e[0] == "mux":
            return ("mux", e[2], e[1], e[3])
        return (rng.choice([k for k in BINARY if k != e[0]]),) + e[1:]

    return change(expr, target)


def to_netlist(exprs, n_inputs: int, name: str = "f") -> str:
    """One 1-bit port per input (``i0``..), one 1-bit output per expression."""
    b = NetlistBuilder(name)
    ins = [b.input(f"i{k}") for k in range(n_inputs)]

    def build(e):
        op = e[0]
        if op == "in":
            return ins[e[1]]
        if op == "not":
            return b.gate("not", build(e[1]))
        if op == "mux":
            return b.mux(build(e[1]), build(e[2]), build(e[3]))
        return b.gate(op, build(e[1]), build(e[2]))

    for k, e in enumerate(exprs):
        b.output(f"o{k}", build(e))
    return b.to_json()


def truth_table(exprs, n_inputs: int):
    return {
        env: tuple(evaluate(e, env) for e in exprs)
        for env in itertools.product((0, 1), repeat=n_inputs)
    }


def random_pairs(seed: int, count: int = 20):
    """``count`` pairs over 2..8 inputs; the first half equivalent, the rest mutated and different."""
    rng = random.Random(seed)
    pairs = []
    while len(pairs) < count:
        n = rng.randint(2, 8)
        exprs = [random_expr(rng, n, 4) for _ in range(rng.randint(1, 2))]
        if len(pairs) < count // 2:
            other = [rewrite(e) for e in exprs]
        else:
            other = list(exprs)
            k = rng.randrange(len(other))
            other[k] = mutate(rng, other[k], n)
            if truth_table(exprs, n) == truth_table(other, n):
                continue
        pairs.append((n, exprs, other))
    return pairs
