"""Evaluation, NFA semantics, entailment, separators."""

import itertools
import random

import pytest

from tiq.qcore import (
    Atom,
    Bot,
    BOT,
    Ev,
    EvR,
    Next,
    PropInstance,
    RelSlice,
    Signature,
    TOP,
    TemporalInstance,
    UPathQuery,
    Until,
    conj,
    tdp,
    word,
)
from tiq.normalform import to_cq, to_upath, upath_to_query
from tiq.semantics import (
    entails,
    entails_bruteforce,
    equivalent,
    eval2d,
    eval_query,
    hom_exists,
    nfa_of,
    shortest_separator,
)

from conftest import rand_path_query, rand_upath, rand_word, sig_of

A, B, X = Atom("A"), Atom("B"), Atom("X")


class TestEval:
    def test_example_positive(self):
        q = EvR(conj([A, Next(conj([A, B]))]))
        assert eval_query(q, word({"A"}, {"A", "B"}), 0)

    def test_example_negative(self):
        q = Until(BOT, A)
        assert not eval_query(q, word({"A", "B"}, {"B"}, {"A"}), 0)

    def test_padding_next_top(self):
        assert eval_query(Next(TOP), word({"A"}), 0)

    def test_padding_soundness(self):
        rng = random.Random(3)
        for _ in range(300):
            q = rand_path_query(rng, ("A", "B"), rng.randint(0, 3))
            d = rand_word(rng, ("A", "B"), 4)
            pos = rng.randint(0, 2)
            for k in (1, 3):
                padded = PropInstance(d.word + (frozenset(),) * k)
                assert eval_query(q, d, pos) == eval_query(q, padded, pos)


class TestEval2d:
    def test_witness_same_slice(self):
        from tiq.qcore import Exists

        d = TemporalInstance(
            (RelSlice(frozenset({("A", "b")}), frozenset({("P", "a", "b")})),), "a"
        )
        assert eval2d(Exists("P", False, A), d)

    def test_witness_must_be_cotemporal(self):
        from tiq.qcore import Exists

        d = TemporalInstance(
            (
                RelSlice(frozenset(), frozenset({("P", "a", "b")})),
                RelSlice(frozenset({("A", "b")}), frozenset()),
            ),
            "a",
        )
        assert not eval2d(Exists("P", False, A), d)

    def test_later_slice_witness(self):
        from tiq.qcore import Exists

        edge = frozenset({("P", "a", "b")})
        d = TemporalInstance(
            (
                RelSlice(frozenset(), edge),
                RelSlice(frozenset({("A", "b")}), edge),
            ),
            "a",
        )
        assert eval2d(Ev(Exists("P", False, A)), d)

    def test_unknown_individual(self):
        d = TemporalInstance((RelSlice(frozenset({("A", "a")}), frozenset()),), "a")
        with pytest.raises(ValueError):
            eval2d(A, d, "zz")


class TestHom:
    def test_hom_positive(self):
        cq = to_cq(Ev(conj([A, B])))
        assert hom_exists(cq, word(set(), {"A", "B"}))

    def test_strict_needs_later_point(self):
        cq = to_cq(Ev(conj([A, B])))
        assert not hom_exists(cq, word({"A", "B"}))

    def test_agrees_with_eval(self):
        rng = random.Random(4)
        for _ in range(1000):
            q = rand_path_query(rng, ("A", "B"), rng.randint(0, 3))
            d = rand_word(rng, ("A", "B"), 5)
            assert hom_exists(to_cq(q), d) == eval_query(q, d, 0)


class TestNfa:
    def test_bot_until_a_language(self):
        u = to_upath(Until(BOT, A))
        nfa = nfa_of(u)
        for n in range(1, 4):
            for w in itertools.product([frozenset(), frozenset({"A"})], repeat=n):
                d = PropInstance(w)
                assert nfa.accepts(d.word) == eval_query(Until(BOT, A), d, 0)

    def test_a_until_b_loop(self):
        nfa = nfa_of(to_upath(Until(A, B)))
        assert frozenset({"A"}) in nfa.loops

    def test_acceptance_example(self):
        nfa = nfa_of(to_upath(Until(A, B)))
        d = word({"A", "B"}, {"A"}, {"B"})
        assert nfa.accepts(d.word)
        assert eval_query(Until(A, B), d, 0)

    def test_language_agreement_random(self):
        rng = random.Random(5)
        slices = [frozenset(s) for s in ({}, {"A"}, {"B"}, {"A", "B"})]
        for _ in range(100):
            u = rand_upath(rng, ("A", "B"), rng.randint(0, 2))
            q = upath_to_query(u)
            nfa = nfa_of(u)
            for n in range(1, 5):
                for w in itertools.product(slices, repeat=n):
                    assert nfa.accepts(w) == eval_query(q, PropInstance(w), 0)


def _chain_query(first_loop, trailing):
    """X loop* q2 q3 trailing, with q_l = (AB*)^{l-1} A A* B B*."""
    a, b, x = frozenset({"A"}), frozenset({"B"}), frozenset({"X"})

    def q_l(l):
        # pairs (lam, rho) contributed by q_l, entered with the preceding loop
        pairs = []
        for _ in range(l - 1):
            pairs.append((a, b))  # ... A then B* before the next rho
        return pairs

    steps = [(first_loop, a)]
    # q2 = A B* A A* B B*
    steps += [(b, a), (a, b)]
    # q3 = A B* A B* A A* B B*
    steps += [(b, a), (b, a), (b, a), (a, b)]
    steps += [(b, trailing)]
    return UPathQuery(x, tuple(steps))


class TestEntails:
    def test_conjunct_weakening(self):
        assert entails(Ev(conj([A, B])), Ev(A))

    def test_next_entails_evr(self):
        assert entails(Next(A), EvR(A))

    def test_chain_example(self):
        a, x = frozenset({"A"}), frozenset({"X"})
        q_bot = upath_to_query(_chain_query(None, x))
        q_a = upath_to_query(_chain_query(a, x))
        assert entails(q_bot, q_a)
        assert not entails(q_a, q_bot)
        witness = word(
            {"X"}, {"A"}, {"A"}, {"B"}, {"A"}, {"A"}, {"A"}, {"B"},
            {"A"}, {"A"}, {"A"}, {"B"}, {"X"},
        )
        assert eval_query(q_a, witness, 0)
        assert not eval_query(q_bot, witness, 0)

    def test_preorder(self):
        rng = random.Random(6)
        sig = sig_of("A", "B")
        checked = 0
        while checked < 200:
            q1 = rand_path_query(rng, ("A", "B"), rng.randint(0, 2))
            q2 = rand_path_query(rng, ("A", "B"), rng.randint(0, 2))
            q3 = rand_path_query(rng, ("A", "B"), rng.randint(0, 2))
            assert entails(q1, q1)
            if entails(q1, q2) and entails(q2, q3):
                assert entails(q1, q3)
            checked += 1


class TestBruteforce:
    def test_reflexive(self):
        assert entails_bruteforce(Ev(A), Ev(A), sig_of("A"), 3)

    def test_countermodel(self):
        assert not entails_bruteforce(Ev(A), Ev(B), sig_of("A", "B"), 3)

    def test_agreement_with_structural(self):
        rng = random.Random(7)
        sig = sig_of("A", "B")
        for _ in range(500):
            u1 = rand_upath(rng, ("A", "B"), rng.randint(0, 2))
            u2 = rand_upath(rng, ("A", "B"), rng.randint(0, 2))
            q1, q2 = upath_to_query(u1), upath_to_query(u2)
            maxlen = (max(tdp(q1), tdp(q2)) + 2) ** 2
            assert entails(q1, q2) == entails_bruteforce(q1, q2, sig, maxlen)


class TestEquivalent:
    def test_next_evr_is_strict_ev(self):
        assert equivalent(Next(EvR(A)), Ev(A))

    def test_bot_until_is_next(self):
        assert equivalent(Until(BOT, A), Next(A))

    def test_different_atoms(self):
        assert not equivalent(Ev(A), Ev(B))


class TestShortestSeparator:
    def test_example_pair_minimal_length(self):
        x, a, b = frozenset({"X"}), frozenset({"A"}), frozenset({"B"})
        # X 0* A b* B b* A B* A A* B 0*   vs   X 0* A b* B A* A B* A b* B 0*
        q = UPathQuery(
            x,
            ((frozenset(), a), (None, b), (None, a), (b, a), (a, b)),
        )
        q2 = UPathQuery(
            x,
            ((frozenset(), a), (None, b), (a, a), (b, a), (None, b)),
        )
        qq, qq2 = upath_to_query(q), upath_to_query(q2)
        sep = shortest_separator(qq, qq2, sig_of("A", "B", "X"), 9)
        assert sep is not None and len(sep.word) == 9
        named = word(
            {"X"}, {"A"}, {"B"}, {"A"}, {"B"}, {"B"}, {"A"}, {"A"}, {"B"}
        )
        assert eval_query(qq, named, 0) and not eval_query(qq2, named, 0)
        both = word(
            {"X"}, {"A"}, {"B"}, {"A"}, {"B"}, {"A"}, {"A"}, {"B"}
        )
        assert eval_query(qq, both, 0) and eval_query(qq2, both, 0)

    def test_equal_queries_no_separator(self):
        assert shortest_separator(Ev(A), Ev(A), sig_of("A"), 4) is None

    def test_simple_separator(self):
        sep = shortest_separator(Ev(A), Ev(B), sig_of("A", "B"), 4)
        assert sep == word(set(), {"A"})


class TestSeparationBound:
    def test_theorem_bound_random_pairs(self):
        rng = random.Random(8)
        sig = sig_of("A", "B")
        found = 0
        while found < 100:
            u1 = rand_upath(rng, ("A", "B"), rng.randint(0, 3))
            u2 = rand_upath(rng, ("A", "B"), rng.randint(0, 3))
            q1, q2 = upath_to_query(u1), upath_to_query(u2)
            if equivalent(q1, q2):
                continue
            n = min(tdp(q1), tdp(q2))
            assert shortest_separator(q1, q2, sig, (n + 2) ** 2) is not None
            found += 1
