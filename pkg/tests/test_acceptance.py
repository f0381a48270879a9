"""End-to-end desk-scale checks, one per headline guarantee of the library."""

import itertools
import random
import time

import pytest

import tiq.verify as verify
from tiq.qcore import (
    Atom,
    ClassSpec,
    Ev,
    EvR,
    ExampleSet,
    Exists,
    Next,
    PropInstance,
    Query,
    Signature,
    UPathQuery,
    canonicalize,
    conj,
    eli_key,
    qsize,
    tdp,
)
from tiq.characterize import (
    char_path_od,
    char_path_od_bounded,
    char_path_strict,
    char_upath_peerless,
)
from tiq.elilab import (
    eli_core,
    eli_entails,
    eli_hom,
    frontier,
    split_partner_el,
    split_partner_eli,
    to_eli_tree,
    tree_to_instance,
)
from tiq.learn import learn2d_path, learn_path_od_sized, learn_path_od_safe, simulated
from tiq.normalform import lone_conjuncts, normalize, upath_to_query
from tiq.semantics import (
    entails,
    entails_bruteforce,
    equivalent,
    eval_any,
    eval_query,
    nfa_contained,
    nfa_of,
)
from tiq.verify import class_equivalent, fits, lowerbound_family, verify_unique

from conftest import (
    enum_eli_trees,
    rand_node,
    rand_path_query,
    rand_upath,
    rand_word,
)

A, B = Atom("A"), Atom("B")
SIG_AB = Signature(atoms=("A", "B"))


def word(*parts) -> PropInstance:
    return PropInstance(tuple(map(frozenset, parts)))


@pytest.fixture
def big_budget(monkeypatch):
    # the sweeps below verify uniqueness within classes whose raw candidate
    # pools exceed the interactive default
    monkeypatch.setattr(verify, "MAX_CANDIDATES", 500_000)


class _EnumCache:
    """Enumerate each class spec once across a sweep."""

    def __init__(self):
        self.pools = {}

    def fitting(self, spec: ClassSpec, e: ExampleSet):
        key = (spec.signature.atoms, spec.tag, spec.max_tdp, spec.max_size)
        if key not in self.pools:
            self.pools[key] = list(verify.enumerate_class(spec, dedup=False))
        return [c for c in self.pools[key] if fits(c, e)]


def test_worked_example_sets_are_unique_within_their_classes():
    # strict-eventuality conjunction, characterised among strict path queries
    start = time.monotonic()
    q = Ev(conj([A, B]))
    r = verify_unique(q, char_path_strict(q),
                      ClassSpec("path-strict", SIG_AB, max_tdp=3, max_size=12))
    assert r.unique and r.candidate_count == 1204
    assert time.monotonic() - start < 30

    # nested reflexive eventuality, characterised among size-bounded
    # one-destination queries
    start = time.monotonic()
    q = EvR(conj([A, Next(conj([A, B]))]))
    r = verify_unique(q, char_path_od_bounded(q, qsize(q)),
                      ClassSpec("path-od", SIG_AB, max_tdp=3,
                                max_size=qsize(q)))
    assert r.unique and r.candidate_count == 147
    assert time.monotonic() - start < 30

    # single until step, characterised among until-path queries
    start = time.monotonic()
    u = UPathQuery(frozenset(), ((None, frozenset({"A"})),))
    r = verify_unique(upath_to_query(u), char_upath_peerless(u, SIG_AB),
                      ClassSpec("upath", SIG_AB, max_tdp=2, max_size=10))
    assert r.unique and r.candidate_count == 409
    assert time.monotonic() - start < 30


def test_lone_conjunct_chain_fits_every_short_negative_set():
    # a reflexive eventuality with a lone conjunct admits no finite
    # characterising set: whatever the examples, as long as every negative
    # is short enough, a deep alternating chain fits them all
    rng = random.Random(75)
    base = EvR(conj([A, B]))
    for n in (2, 3, 4):
        chain = lowerbound_family("lone-chain", n + 1)["chains"][-1]
        e = char_path_od_bounded(base, n)
        restricted = ExampleSet(
            e.positives, tuple(d for d in e.negatives if len(d.word) <= n)
        )
        assert fits(chain, restricted)
        for _ in range(30):
            pos, neg = [], []
            while len(pos) < 3:
                w = rand_word(rng, ("A", "B"), 2 * n + 3)
                if eval_any(base, w):
                    pos.append(w)
            while len(neg) < 3:
                w = rand_word(rng, ("A", "B"), n)
                if not eval_any(base, w):
                    neg.append(w)
            assert fits(chain, ExampleSet(tuple(pos), tuple(neg)))


def test_safe_query_sweep_characterises_uniquely_with_quadratic_sets(big_budget):
    start = time.monotonic()
    rng = random.Random(71)
    pools = (("A",), ("A", "B"), ("A", "B", "C"))
    cache = _EnumCache()
    done = 0
    while done < 200:
        atoms = pools[rng.randint(0, 2)]
        q = rand_path_query(rng, atoms, rng.randint(0, 4), ops=(Next, EvR))
        if lone_conjuncts(normalize(q)) or qsize(q) > 12:
            continue
        done += 1
        e = char_path_od(q)
        assert fits(q, e)
        slices = sum(len(d.word) for d in e.positives) + sum(
            len(d.word) for d in e.negatives
        )
        # total example length stays within the pinned quadratic envelope
        assert slices <= 4 * max(qsize(q), 1) ** 2
        spec = ClassSpec("path-od", Signature(atoms=atoms), max_tdp=4,
                         max_size=qsize(q))
        fitting = cache.fitting(spec, e)
        assert fitting
        for c in fitting:
            assert class_equivalent(c, q, spec)
    assert time.monotonic() - start < 600


# the loop-label pair whose shortest separator needs both letters interleaved
Q_SEP = UPathQuery(frozenset({"X"}), (
    (frozenset(), frozenset({"A"})), (None, frozenset({"B"})),
    (None, frozenset({"A"})), (frozenset({"B"}), frozenset({"A"})),
    (frozenset({"A"}), frozenset({"B"})),
))
Q_SEP2 = UPathQuery(frozenset({"X"}), (
    (frozenset(), frozenset({"A"})), (None, frozenset({"B"})),
    (frozenset({"A"}), frozenset({"A"})), (frozenset({"B"}), frozenset({"A"})),
    (None, frozenset({"B"})),
))


def test_peerless_until_sweep_characterises_uniquely(big_budget):
    rng = random.Random(72)
    cache = _EnumCache()
    done = 0
    while done < 50:
        n = rng.randint(1, 3)
        u = rand_upath(rng, ("A", "B"), n, peerless_only=True)
        q = upath_to_query(u)
        if qsize(q) > 12:
            continue
        done += 1
        e = char_upath_peerless(u, SIG_AB)
        assert fits(q, e)
        spec = ClassSpec("upath", SIG_AB, max_tdp=n + 1, max_size=qsize(q))
        fitting = cache.fitting(spec, e)
        assert fitting
        for c in fitting:
            assert class_equivalent(c, q, spec)

    # the breadth-first product search is exhaustive over shorter words, so
    # the returned separator of the pinned near-identical pair is a shortest
    # one; it interleaves both letters and has length exactly nine
    sig = Signature(atoms=("A", "B", "X"))
    ok, wit = nfa_contained(nfa_of(Q_SEP), nfa_of(Q_SEP2), sig)
    assert not ok
    assert wit == word(("X",), ("A",), ("B",), ("A",), ("B",),
                       ("B",), ("A",), ("A",), ("B",)).word
    assert len(wit) == 9


def test_until_separator_length_is_quadratic_in_depth():
    rng = random.Random(73)
    sig = SIG_AB
    done = 0
    while done < 100:
        n1, n2 = rng.randint(1, 3), rng.randint(1, 3)
        u1 = rand_upath(rng, ("A", "B"), n1)
        u2 = rand_upath(rng, ("A", "B"), n2)
        a1, a2 = nfa_of(u1), nfa_of(u2)
        c12, w12 = nfa_contained(a1, a2, sig)
        c21, w21 = nfa_contained(a2, a1, sig)
        if c12 and c21:
            continue
        done += 1
        bound = (min(n1, n2) + 2) ** 2
        for contained, wit in ((c12, w12), (c21, w21)):
            if not contained:
                assert len(wit) <= bound


EDGES_2R = (("P", False), ("P", True), ("Q", False), ("Q", True))


def test_frontier_conditions_hold_on_exhaustive_tree_instances():
    # weakening and non-entailment for every core within the assertion
    # budget; output size grows linearly with the budget
    expected = {2: (42, 2, 56), 3: (282, 3, 436), 4: (2115, 4, 3484)}
    fronts_by_budget = {}
    for budget, (n_cores, max_front, total) in expected.items():
        cores = {}
        for t in enum_eli_trees(("A", "B"), EDGES_2R, budget):
            c = eli_core(t)
            cores[eli_key(c)] = c
        fronts = {k: frontier(c) for k, c in cores.items()}
        assert len(cores) == n_cores
        assert max(len(f) for f in fronts.values()) == max_front
        assert sum(len(f) for f in fronts.values()) == total
        for k, front in fronts.items():
            for f in front:
                assert eli_entails(cores[k], f)
                assert not eli_entails(f, cores[k])
        fronts_by_budget[budget] = (cores, fronts)

    # coverage: every strictly weaker query within one extra assertion of
    # budget is entailed by some frontier member
    cores3, fronts3 = fronts_by_budget[3]
    queries = enum_eli_trees(("A", "B"), EDGES_2R, 4)
    for k, a in cores3.items():
        front = fronts3[k]
        for q in queries:
            if eli_entails(a, q) and not eli_entails(q, a):
                assert any(eli_entails(f, q) for f in front)


def _tree_depth(t) -> int:
    return 0 if not t.children else 1 + max(
        _tree_depth(c) for _, _, c in t.children
    )


def test_split_partners_cover_exactly_the_non_entailing_queries():
    # forward-only signature: the partner set satisfies a query precisely
    # when the query entails no target, for every target set of at most two
    # bounded-depth trees
    sig = Signature(concepts=("A", "B"), roles=("P",))
    el_edges = (("P", False),)
    targets = [t for t in enum_eli_trees(("A", "B"), el_edges, 3)
               if _tree_depth(t) <= 2]
    queries = enum_eli_trees(("A", "B"), el_edges, 3)
    sets = [[t] for t in targets] + [list(p) for p in
                                     itertools.combinations(targets, 2)]
    for target_set in sets:
        partner = split_partner_el(target_set, sig)
        for q in queries:
            covered = any(eli_hom(tree_to_instance(q), p) for p in partner)
            assert covered == all(
                not eli_entails(q, t) for t in target_set
            )

    # with inverse roles a single target can force exponentially many
    # partner elements: no element may cover two members of the family
    fam = lowerbound_family("eli-split", 2)
    members = {x: to_eli_tree(m) for x, m in fam["members"].items()}
    partner = split_partner_eli(
        [to_eli_tree(fam["query"])],
        Signature(concepts=("A1", "A2"), roles=("r",)),
    )
    assert len(partner) >= 4
    for m in members.values():
        assert not eli_entails(m, to_eli_tree(fam["query"]))
        assert any(eli_hom(tree_to_instance(m), p) for p in partner)
    for p in partner:
        assert sum(eli_hom(tree_to_instance(m), p)
                   for m in members.values()) <= 1


def _rand_rel_target(rng: random.Random) -> Query:
    node_opts = (conj([]), A, Exists("P", False, conj([])),
                 Exists("P", False, A), conj([A, Exists("P", False, A)]))
    q: Query = rng.choice(node_opts)
    for _ in range(rng.randint(0, 2)):
        op = rng.choice((Next, Ev, EvR))
        q = conj([rng.choice(node_opts), op(q)])
    return canonicalize(q)


def test_learners_recover_targets_within_query_budget():
    # safe targets over up to three atoms
    rng = random.Random(81)
    sig3 = Signature(atoms=("A", "B", "C"))
    done = 0
    while done < 100:
        q = rand_path_query(rng, ("A", "B", "C"), rng.randint(0, 4))
        if lone_conjuncts(normalize(q)):
            continue
        done += 1
        start = time.monotonic()
        oracle = simulated(q)
        out = learn_path_od_safe(oracle, sig3)
        assert equivalent(out, q)
        assert oracle.count <= 2 * (qsize(q) + 2) ** 2
        assert time.monotonic() - start < 5

    # the size-bounded variant handles the lone-conjunct target
    start = time.monotonic()
    q = EvR(conj([A, B]))
    out = learn_path_od_sized(simulated(q), SIG_AB, qsize(q))
    assert equivalent(out, q)
    assert time.monotonic() - start < 5

    # relational targets with existential nodes
    sig2d = Signature(concepts=("A",), roles=("P",))
    for _ in range(30):
        q = _rand_rel_target(rng)
        start = time.monotonic()
        out = learn2d_path(simulated(q), sig2d)
        assert equivalent(out, q)
        assert time.monotonic() - start < 5


def _rand_diamond(rng: random.Random, atoms) -> Query:
    parts = [conj([Atom(a) for a in sorted(rand_node(rng, atoms))])]
    for _ in range(rng.randint(1, 2)):
        sub: Query = conj([Atom(a) for a in sorted(rand_node(rng, atoms))])
        if rng.random() < 0.5:
            node = conj([Atom(a) for a in sorted(rand_node(rng, atoms))])
            sub = conj([node, Ev(sub)])
        parts.append(Ev(sub))
    return canonicalize(conj(parts))


def test_structural_entailment_agrees_with_brute_force():
    rng = random.Random(74)

    def sweep(gen, horizon):
        for _ in range(500):
            q1, q2 = gen(), gen()
            assert entails(q1, q2) == entails_bruteforce(
                q1, q2, SIG_AB, horizon(q1, q2)
            )

    # single-chain queries: a countermodel needs no more slices than the
    # combined depths allow, so the brute force at that horizon is exact
    sweep(lambda: rand_path_query(rng, ("A", "B"), rng.randint(0, 3)),
          lambda q1, q2: tdp(q1) + tdp(q2) + 2)
    sweep(lambda: upath_to_query(rand_upath(rng, ("A", "B"),
                                            rng.randint(1, 3))),
          lambda q1, q2: (min(tdp(q1), tdp(q2)) + 2) ** 2)
    sweep(lambda: _rand_diamond(rng, ("A", "B")),
          lambda q1, q2: tdp(q1) + tdp(q2) + 2)


def test_lowerbound_families_need_one_positive_per_member():
    rng = random.Random(82)

    fam = lowerbound_family("permutation", 2)
    for perm, p in fam["permutation_queries"].items():
        r = fam["refuters"][perm]
        assert eval_query(fam["query"], r)
        assert not eval_query(p, r)
        assert not eval_query(fam["extensions"][perm], r)
        for other, p2 in fam["permutation_queries"].items():
            if other != perm:
                assert eval_query(p2, r)
    found = 0
    while found < 200:
        w = rand_word(rng, ("A1", "A2"), 10)
        if not eval_query(fam["query"], w):
            continue
        found += 1
        assert sum(not eval_query(p, w)
                   for p in fam["permutation_queries"].values()) <= 1

    fam = lowerbound_family("fourletter", 2)
    assert len(fam["members"]) == 8
    for key in fam["members"]:
        r = fam["refuters"][key]
        assert eval_query(fam["query"], r)
        refuted = [k for k, m in fam["members"].items()
                   if not eval_query(m, r)]
        assert refuted == [key]
    found = 0
    while found < 200:
        w = rand_word(rng, ("A1", "A2", "B1", "B2"), 12)
        if not eval_query(fam["query"], w):
            continue
        found += 1
        assert sum(not eval_query(m, w)
                   for m in fam["members"].values()) <= 1
