import random

import pytest
from hypothesis import given, strategies as st

from sumeval.errors import InvalidArgument
from sumeval.lexical import (VS_ARTICLE, VS_REFERENCE, lcs_length, rouge_l, rouge_n, score_pair,
                             tokenize)

from oracles import lcs_enumerate, rouge_l_oracle, rouge_n_oracle

tokens = st.lists(st.sampled_from("abcde"), max_size=12)

# an XL-Sum reference summary and the opening of its article
SHERWOOD_REFERENCE = "Sherwood Forest could get a £13m Robin Hood-themed attraction under new plans."
SHERWOOD_ARTICLE = (
    "The proposal features a new forest visitor centre, a medieval-style castle and areas for "
    "events and entertainment. Nottinghamshire County Council said the privately-funded venture, "
    "which could be open by spring 2015, could bring major investment into the area. At the same "
    "time Nottingham City Council said it would be looking to develop its own overhaul of the "
    "city's castle site, centred on the outlaw. The Sherwood project would mean the existing "
    "visitor facilities and car park near Edwinstowe closing down, with the new attraction built "
    "on nearby open land ..."
)


@pytest.mark.parametrize("text,expected", [
    ("The cat sat.", ["the", "cat", "sat"]),
    ("", []),
    ("Robin Hood £13m", ["robin", "hood", "13m"]),
    ("Hood-themed, 2015's", ["hood", "themed", "2015", "s"]),
    ("snake_case café", ["snake", "case", "café"]),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@given(st.text())
def test_tokenize_deterministic_and_nonempty(text):
    toks = tokenize(text)
    assert toks == tokenize(text)
    assert all(toks) and all(t == t.lower() for t in toks)


def test_rouge1_examples():
    s = rouge_n(["the", "cat", "sat"], ["the", "cat", "slept"], 1)
    assert s.precision == pytest.approx(2 / 3) and s.recall == pytest.approx(2 / 3)
    assert s.f1 == pytest.approx(0.6667, abs=1e-4)
    clipped = rouge_n(list("aab"), list("abb"), 1)
    assert (clipped.precision, clipped.recall) == (pytest.approx(2 / 3), pytest.approx(2 / 3))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_rouge_identity(n):
    seq = "x y z w x".split()
    s = rouge_n(seq, seq, n)
    assert s.precision == s.recall == s.f1 == 1.0


def test_rouge_n_short_sequences_give_zero():
    assert rouge_n(["a"], ["a", "b"], 2).f1 == 0.0
    assert rouge_n([], ["a"], 1).f1 == 0.0


def test_rouge_n_rejects_bad_n():
    with pytest.raises(InvalidArgument):
        rouge_n(["a"], ["a"], 0)


def test_rouge_l_examples():
    s = rouge_l(list("abcd"), list("acbd"))
    assert (s.precision, s.recall, s.f1) == (0.75, 0.75, 0.75)
    assert rouge_l(list("abc"), list("xyz")).f1 == 0.0
    s = rouge_l(list("abcdef"), list("abc"))
    assert s.recall == 1.0 and s.precision == pytest.approx(3 / 6)
    assert rouge_l([], ["a"]) == rouge_l(["a"], [])


def test_score_pair():
    r1, rl = score_pair("The cat sat.", "the cat sat", VS_REFERENCE)
    assert r1.f1 == rl.f1 == 1.0
    r1, rl = score_pair("", "anything here", VS_ARTICLE)
    assert r1.f1 == rl.f1 == 0.0
    with pytest.raises(InvalidArgument):
        score_pair("a", "b", "bogus")


def test_table2_reference_vs_article_is_low():
    r1, _ = score_pair(SHERWOOD_REFERENCE, SHERWOOD_ARTICLE, VS_ARTICLE)
    expected = rouge_n_oracle(tokenize(SHERWOOD_REFERENCE), tokenize(SHERWOOD_ARTICLE))
    assert r1.f1 == pytest.approx(expected[2], abs=1e-12)
    assert r1.f1 < 0.5


@given(tokens, tokens, st.integers(1, 3))
def test_rouge_n_matches_oracle(a, b, n):
    got = rouge_n(a, b, n)
    assert (got.precision, got.recall, got.f1) == pytest.approx(rouge_n_oracle(a, b, n), abs=1e-12)


@given(tokens, tokens, st.integers(1, 3))
def test_rouge_n_swap_symmetry(a, b, n):
    assert rouge_n(a, b, n).precision == rouge_n(b, a, n).recall


@given(st.lists(st.sampled_from("abcd"), max_size=8), st.lists(st.sampled_from("abcd"), max_size=8))
def test_lcs_matches_enumeration(a, b):
    assert lcs_length(a, b) == lcs_enumerate(a, b)


@given(tokens, tokens)
def test_rouge_l_matches_oracle_and_lcs_bound(a, b):
    got = rouge_l(a, b)
    assert (got.precision, got.recall, got.f1) == pytest.approx(rouge_l_oracle(a, b), abs=1e-12)
    overlap = rouge_n(a, b, 1).precision * len(a)
    assert lcs_length(a, b) <= round(overlap)
