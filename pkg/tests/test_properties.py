import itertools
import random

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import expr_oracle
from dft_forge import tfidf
from dft_forge.neural import contrastive_loss, reconstruction_loss
from dft_forge.netlist import parse_netlist
from dft_forge.retrieval import cosine
from dft_forge.sim import X, Simulator, check_equivalence, replay

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.data())
def test_x_never_contradicts_a_completion(seed, n, data):
    """A definite output under partially unknown inputs holds for every way of filling the unknowns."""
    rng = random.Random(seed)
    expr = expr_oracle.random_expr(rng, n, 4)
    sim = Simulator(parse_netlist(expr_oracle.to_netlist([expr], n)))
    partial = data.draw(st.lists(st.sampled_from([0, 1, X]), min_size=n, max_size=n))
    _, out = sim.step(sim.reset(), {f"i{k}": [v] for k, v in enumerate(partial)})
    got = int(out["o0"][0, 0])
    unknown = [k for k, v in enumerate(partial) if v == X]
    values = set()
    for fill in itertools.product((0, 1), repeat=len(unknown)):
        env = list(partial)
        for k, v in zip(unknown, fill):
            env[k] = v
        values.add(expr_oracle.evaluate(expr, tuple(env)))
    if got != X:
        assert values == {got}
    if not unknown:
        assert got in values


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_equivalence_is_symmetric_and_counterexamples_replay(seed):
    n, a, b = expr_oracle.random_pairs(seed, count=2)[1]
    na = parse_netlist(expr_oracle.to_netlist(a, n))
    nb = parse_netlist(expr_oracle.to_netlist(b, n))
    ab, ba = check_equivalence(na, nb), check_equivalence(nb, na)
    assert ab.verdict == ba.verdict
    assert replay(na, nb, ab.counterexample) and replay(nb, na, ba.counterexample)


words = st.text(alphabet="abcdxyz019_", min_size=2, max_size=6)


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(st.lists(words, min_size=1, max_size=12), min_size=1, max_size=8), st.lists(words, max_size=12))
def test_tfidf_vectors_are_unit_or_zero(corpus_words, query):
    docs = [" ".join(d) for d in corpus_words]
    model = tfidf.fit(docs)
    fv = tfidf.transform(model, " ".join(query))
    norm = np.linalg.norm(fv.x)
    assert fv.x.shape == (512,) and np.all(fv.x >= 0)
    assert norm == 0.0 if fv.oov else abs(norm - 1.0) < 1e-12
    shuffled = tfidf.transform(model, " ".join(reversed(query)))
    np.testing.assert_allclose(shuffled.x, fv.x, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (5, 3), elements=finite), st.permutations(range(5)), st.floats(0.1, 5.0))
def test_contrastive_invariances(Z, perm, scale):
    Z = Z + np.array([11.0, 0, 0])  # keep rows away from zero norm
    Y = np.eye(4)[[0, 1, 0, 2, 1]]
    base = contrastive_loss(Z, Y)
    assert base >= 0.0
    perm = list(perm)
    assert abs(contrastive_loss(Z[perm], Y[perm]) - base) < 1e-12
    assert abs(contrastive_loss(Z * scale, Y) - base) < 1e-12


@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (3, 4), elements=finite))
def test_reconstruction_symmetric_and_nonnegative(a, b):
    assert reconstruction_loss(a, b) == reconstruction_loss(b, a) >= 0.0
    assert reconstruction_loss(a, a) == 0.0


@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=finite), st.floats(0.1, 100))
def test_cosine_bounds_and_scale(u, v, c):
    if np.linalg.norm(u) < 1e-3 or np.linalg.norm(v) < 1e-3:
        return
    s = cosine(u, v)
    assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12
    assert abs(cosine(v, u) - s) < 1e-12
    assert abs(cosine(c * u, v) - s) < 1e-9
