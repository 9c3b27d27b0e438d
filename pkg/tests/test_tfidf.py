import math

import numpy as np
import pytest

from dft_forge import tfidf
from dft_forge.synthetic import generate_corpus
from tfidf_oracle import oracle, tie_free_corpus


def test_matches_reference_oracle():
    docs = tie_free_corpus()
    model = tfidf.fit(docs)
    vec, expected = oracle(docs, docs)
    assert list(model.vocabulary) == list(vec.get_feature_names_out())
    np.testing.assert_allclose(model.idf, vec.idf_, rtol=0, atol=1e-12)
    np.testing.assert_allclose(tfidf.transform_many(model, docs), expected, rtol=0, atol=1e-9)


def test_matches_oracle_on_netlists():
    docs = [d.buggy_json for d in generate_corpus(24, seed=1)]
    model = tfidf.fit(docs)
    assert len(model.vocabulary) < 512  # no truncation, so ties cannot matter
    _, expected = oracle(docs, docs)
    np.testing.assert_allclose(tfidf.transform_many(model, docs), expected, rtol=0, atol=1e-9)


def test_hand_computed_weights():
    docs = ["aa bb bb", "aa cc"]
    model = tfidf.fit(docs)
    assert model.vocabulary == ("aa", "bb", "cc")
    idf_aa = math.log(3 / 3) + 1
    idf_bb = math.log(3 / 2) + 1
    raw = np.array([idf_aa, (1 + math.log(2)) * idf_bb])
    want = raw / np.linalg.norm(raw)
    x = tfidf.transform(model, docs[0]).x
    assert x.shape == (512,)
    np.testing.assert_allclose(x[:2], want, atol=1e-15)
    assert not x[2:].any()


def test_tokenizer():
    assert tfidf.tokenize('{"A": [12, 3], "$dff$x.v:7$2"}') == ["12", "dff"]


def test_vocabulary_cap_and_tie_break():
    docs = ["bb aa cc dd"]
    model = tfidf.fit(docs, max_features=2)
    assert model.vocabulary == ("aa", "bb")
    assert model.dim == 512


def test_oov_document():
    model = tfidf.fit(["alpha beta"])
    fv = tfidf.transform(model, "gamma delta")
    assert fv.oov and not fv.x.any()


def test_empty_corpus():
    with pytest.raises(ValueError):
        tfidf.fit([])


def test_save_load_round_trip(tmp_path):
    docs = tie_free_corpus(n_docs=10, n_terms=600)
    model = tfidf.fit(docs)
    path = tmp_path / "t.json"
    model.save(path)
    again = tfidf.TfidfModel.load(path)
    assert again.vocabulary == model.vocabulary and again.dim == model.dim
    np.testing.assert_array_equal(again.idf, model.idf)
    assert again.fitted_on == tfidf.corpus_fingerprint(docs)
    np.testing.assert_array_equal(tfidf.transform(again, docs[0]).x, tfidf.transform(model, docs[0]).x)
