"""Core data model: canonicalisation, trimming, temporal depth."""

import random

import pytest

from tiq.qcore import (
    TOP,
    And,
    Atom,
    Ev,
    EvR,
    Next,
    PropInstance,
    Signature,
    Until,
    canonicalize,
    conj,
    tdp,
    trim,
    word,
)
from tiq.semantics import eval_query

from conftest import rand_path_query, rand_word

A, B = Atom("A"), Atom("B")


class TestCanonicalize:
    def test_sorts_and_dedups_conjuncts(self):
        assert canonicalize(And((B, A, A))) == And((A, B))

    def test_drops_top_conjunct(self):
        assert canonicalize(And((A, TOP))) == A

    def test_recurses_into_children(self):
        assert canonicalize(Next(And((B, A)))) == Next(And((A, B)))

    def test_idempotent(self):
        rng = random.Random(0)
        for _ in range(200):
            q = rand_path_query(rng, ("A", "B", "C"), rng.randint(0, 4))
            assert canonicalize(q) == q

    def test_preserves_tdp(self):
        rng = random.Random(1)
        for _ in range(200):
            raw = And((B, A, Ev(EvR(And((A, TOP))))))
            assert tdp(canonicalize(raw)) == tdp(raw)
            q = rand_path_query(rng, ("A", "B"), rng.randint(0, 3))
            assert tdp(canonicalize(q)) == tdp(q)


class TestTrim:
    def test_removes_trailing_empty(self):
        assert trim(word({"A"}, set(), set())) == word({"A"})

    def test_keeps_interior_empty(self):
        d = word({"A"}, set(), {"B"})
        assert trim(d) == d

    def test_keeps_one_slice(self):
        d = word(set())
        assert trim(d) == d

    def test_eval_invariant_under_trim(self):
        rng = random.Random(2)
        for _ in range(1000):
            q = rand_path_query(rng, ("A", "B"), rng.randint(0, 3))
            d = rand_word(rng, ("A", "B"), 5)
            padded = PropInstance(d.word + (frozenset(),) * rng.randint(0, 3))
            assert eval_query(q, d) == eval_query(q, trim(padded))


class TestTdp:
    def test_nested_operators(self):
        assert tdp(EvR(conj([A, Next(conj([A, B]))]))) == 2

    def test_atom(self):
        assert tdp(A) == 0

    def test_exists_not_temporal(self):
        from tiq.qcore import Exists

        assert tdp(Exists("P", False, Ev(A))) == 1

    def test_until(self):
        assert tdp(Until(A, Until(A, B))) == 2


class TestSignature:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            Signature(atoms=("A", "A"))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Signature()
