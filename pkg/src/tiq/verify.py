"""Brute-force ground truth.

Class enumeration (smallest-first, canonical, semantically deduplicated at
desk scale), unique-characterisation checking against an enumerated class,
loop-label subsumption, and the lower-bound fixture families used to
demonstrate that certain classes need large example sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

from .qcore import (
    Atom,
    ClassSpec,
    EliTree,
    Ev,
    EvR,
    ExampleSet,
    Exists,
    Next,
    PropInstance,
    Query,
    RelSlice,
    Signature,
    TemporalInstance,
    UPathQuery,
    canonicalize,
    conj,
    eli_canon,
    qsize,
    query_key,
    trim,
)
from .normalform import is_peerless, node_entails, upath_to_query
from .semantics import entails_bruteforce, eval_any, equivalent, minimal_models

MAX_CANDIDATES = 50_000


# ---------------------------------------------------------------------------
# Class enumeration


def _node_sets(atoms):
    out = [frozenset()]
    for k in range(1, len(atoms) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(sorted(atoms), k))
    return out


def _node_query(node) -> Query:
    if isinstance(node, EliTree):
        from .elilab import tree_to_query

        return tree_to_query(node)
    return conj([Atom(a) for a in sorted(node)])


def _node_trees(sig: Signature, allow_inverse: bool):
    """Small relational node queries: depth at most one, one child."""
    labels = _node_sets(sig.concepts)
    out = [EliTree(ls, ()) for ls in labels]
    invs = (False, True) if allow_inverse else (False,)
    for ls in labels:
        for role in sorted(sig.roles):
            for inv in invs:
                for cls in labels:
                    out.append(EliTree(ls, ((role, inv, EliTree(cls, ())),)))
    return [eli_canon(t) for t in out]


def _node_cost(node) -> int:
    """Lower bound on the AST size a node query contributes."""
    if isinstance(node, EliTree):
        return len(node.labels) + sum(
            1 + _node_cost(c) for _, _, c in node.children
        )
    return len(node)


def _node_seqs(nodes, length: int, budget: int):
    """Node sequences whose total atom count stays within budget."""
    if length == 0:
        yield ()
        return
    for node in nodes:
        rest = budget - _node_cost(node)
        if rest < 0:
            continue
        for tail in _node_seqs(nodes, length - 1, rest):
            yield (node,) + tail


def _path_candidates(nodes, ops, max_tdp: int, max_size: int):
    for depth in range(max_tdp + 1):
        # every operator costs one AST node, every atom at least one
        for seq in _node_seqs(nodes, depth + 1, max_size - depth):
            for opseq in itertools.product(ops, repeat=depth):
                q: Query = _node_query(seq[depth])
                for lvl in range(depth - 1, -1, -1):
                    q = conj([_node_query(seq[lvl]), opseq[lvl](q)])
                q = canonicalize(q)
                if qsize(q) <= max_size:
                    yield q


def _branch_words(nodes, max_tdp: int):
    for depth in range(1, max_tdp + 1):
        yield from itertools.product(nodes, repeat=depth)


def _diamond_candidates(nodes, max_tdp, max_size, max_branch, balanced):
    words = list(_branch_words(nodes, max_tdp))
    for head in nodes:
        for m in range(max_branch + 1):
            for combo in itertools.combinations_with_replacement(words, m):
                if balanced and len({len(w) for w in combo}) > 1:
                    continue
                parts = [_node_query(head)]
                for w in combo:
                    sub: Query = _node_query(w[-1])
                    for node in reversed(w[:-1]):
                        sub = conj([_node_query(node), Ev(sub)])
                    parts.append(Ev(sub))
                q = canonicalize(conj(parts))
                if qsize(q) <= max_size:
                    yield q


def _upath_candidates(nodes, max_tdp, max_size, peerless_only):
    lam_opts = [None] + list(nodes)

    def steps_rec(depth: int, budget: int):
        # every step costs at least its atoms plus one operator node
        if depth == 0:
            yield ()
            return
        for lam in lam_opts:
            for rho in nodes:
                cost = len(rho) + 1 + (0 if lam is None else len(lam))
                if cost > budget:
                    continue
                for rest in steps_rec(depth - 1, budget - cost):
                    yield ((lam, rho),) + rest

    for depth in range(max_tdp + 1):
        for head in nodes:
            for steps in steps_rec(depth, max_size - len(head)):
                u = UPathQuery(head, steps)
                if peerless_only and not is_peerless(u):
                    continue
                q = canonicalize(upath_to_query(u))
                if qsize(q) <= max_size:
                    yield q


def _raw_candidates(spec: ClassSpec):
    sig = spec.signature
    tag = spec.tag
    if tag in ("path-od", "path-strict", "2d-path-od"):
        ops = (Next, EvR) if tag != "path-strict" else (Next, Ev)
        nodes = (
            _node_trees(sig, allow_inverse=True)
            if tag == "2d-path-od"
            else _node_sets(sig.atoms)
        )
        return _path_candidates(nodes, ops, spec.max_tdp, spec.max_size)
    if tag in ("diamond", "diamond-balanced-bounded", "2d-diamond"):
        nodes = (
            _node_trees(sig, allow_inverse=False)
            if tag == "2d-diamond"
            else _node_sets(sig.atoms)
        )
        return _diamond_candidates(
            nodes,
            spec.max_tdp,
            spec.max_size,
            spec.max_branch,
            balanced=tag != "diamond",
        )
    if tag in ("upath", "upath-peerless", "2d-upath"):
        nodes = (
            _node_trees(sig, allow_inverse=False)
            if tag == "2d-upath"
            else _node_sets(sig.atoms)
        )
        return _upath_candidates(
            nodes, spec.max_tdp, spec.max_size, peerless_only=tag == "upath-peerless"
        )
    raise ValueError(f"unknown class tag: {tag}")


def _sep_horizon(spec: ClassSpec) -> int:
    if spec.tag.endswith("upath"):
        return (spec.max_tdp + 1) ** 2
    return 2 * spec.max_tdp + 2


def class_equivalent(q1: Query, q2: Query, spec: ClassSpec) -> bool:
    """Equivalence of two class members, decided at the class's horizon."""
    if query_key(q1) == query_key(q2):
        return True
    if spec.tag.startswith("2d"):
        try:
            return equivalent(q1, q2)
        except (ValueError, NotImplementedError):
            return False
    h = _sep_horizon(spec)
    return entails_bruteforce(q1, q2, spec.signature, h) and entails_bruteforce(
        q2, q1, spec.signature, h
    )


def _covers(v, w) -> bool:
    """Monotone-order comparison: every extension of w satisfies whatever v
    witnesses (v trimmed, pointwise below a prefix of w)."""
    return len(v) <= len(w) and all(v[i] <= w[i] for i in range(len(v)))


def _model_key(q: Query, horizon: int):
    """Canonical semantics of q at the horizon: the antichain of minimal
    satisfying words.  Equal keys iff the queries agree on all words up to
    the horizon length."""
    from .qcore import PropInstance, tdp, trim

    # slack lets trailing-padding subqueries materialise before trimming
    models = {
        trim(PropInstance(w)).word
        for w in minimal_models(q, horizon + tdp(q) + 1)
    }
    models = {w for w in models if len(w) <= horizon}
    anti: list = []
    for v in sorted(models, key=lambda w: (len(w), sum(len(s) for s in w))):
        if not any(_covers(u, v) for u in anti):
            anti.append(v)
    return frozenset(anti)


def enumerate_class(spec: ClassSpec, dedup: bool = True) -> Iterator[Query]:
    """All class members within bounds, smallest first, without semantic
    duplicates.  dedup=False keeps syntactic duplicates-up-to-equivalence
    and is much cheaper on large classes."""
    raw = []
    for q in _raw_candidates(spec):
        raw.append(q)
        if len(raw) > MAX_CANDIDATES:
            raise ValueError(
                f"class enumeration exceeds budget of {MAX_CANDIDATES} candidates"
            )
    raw.sort(key=lambda q: (qsize(q), query_key(q)))
    seen_keys = set()
    if not dedup:
        for q in raw:
            k = query_key(q)
            if k in seen_keys:
                continue
            seen_keys.add(k)
            yield q
        return
    if spec.tag.startswith("2d"):
        reps: list[Query] = []
        for q in raw:
            k = query_key(q)
            if k in seen_keys:
                continue
            seen_keys.add(k)
            if any(class_equivalent(q, r, spec) for r in reps):
                continue
            reps.append(q)
            yield q
        return
    h = _sep_horizon(spec)
    seen_models = set()
    for q in raw:
        k = query_key(q)
        if k in seen_keys:
            continue
        seen_keys.add(k)
        mk = _model_key(q, h)
        if mk in seen_models:
            continue
        seen_models.add(mk)
        yield q


# ---------------------------------------------------------------------------
# Unique characterisation


@dataclass(frozen=True)
class VerifyReport:
    unique: bool
    witnesses: tuple
    witness_count: int
    candidate_count: int


def fits(q: Query, e: ExampleSet) -> bool:
    return all(eval_any(q, d) for d in e.positives) and not any(
        eval_any(q, d) for d in e.negatives
    )


def verify_unique(q: Query, e: ExampleSet, spec: ClassSpec,
                  dedup: bool = True) -> VerifyReport:
    """Check that q is the only class member fitting e, by enumeration.

    With dedup=False, equivalent candidates are only told apart once they
    fit e, trading duplicate counting for a much cheaper pass."""
    if not fits(q, e):
        raise ValueError("query does not fit the example set")
    witnesses = []
    count = 0
    for cand in enumerate_class(spec, dedup=dedup):
        count += 1
        if not fits(cand, e):
            continue
        if class_equivalent(cand, q, spec):
            continue
        witnesses.append(cand)
    return VerifyReport(
        unique=not witnesses,
        witnesses=tuple(witnesses[:10]),
        witness_count=len(witnesses),
        candidate_count=count,
    )


# ---------------------------------------------------------------------------
# Loop-label subsumption


def _node_le(x, y) -> bool:
    """x below y: every model of the stronger node query y satisfies x."""
    return node_entails(y, x)


def subsumes(q: UPathQuery, q2: UPathQuery, i: int, j: int) -> bool:
    """Whether loop label i of q subsumes loop label j of q2 (1-based),
    for queries sharing the node-query spine."""
    rhos = list(q.rhos())
    if list(q2.rhos()) != rhos:
        raise ValueError("queries must agree on their node queries")
    if not (1 <= i <= q.depth() and 1 <= j <= q2.depth()):
        raise ValueError("loop label index out of range")
    lam = q.lams()[i - 1]
    mu = q2.lams()[j - 1]
    if lam is None or mu is None:
        raise ValueError("subsumption is defined for non-bottom labels only")
    if i == j:
        return _node_le(mu, lam)
    if j < i:
        pairs = (
            [(mu, rhos[j])]
            + [(rhos[k], rhos[k + 1]) for k in range(j, i - 1)]
            + [(rhos[i - 1], lam)]
        )
        return all(_node_le(x, y) for x, y in pairs)
    pairs = [(rhos[i], lam)] + [
        (rhos[k + 1], rhos[k]) for k in range(i, j - 1)
    ] + [(mu, rhos[j - 1])]
    return all(_node_le(x, y) for x, y in pairs)


def matching_pair(q: UPathQuery, q2: UPathQuery, i: int, j: int) -> bool:
    return subsumes(q, q2, i, j) and subsumes(q2, q, j, i)


# ---------------------------------------------------------------------------
# Lower-bound fixture families


def _word_instance(parts) -> PropInstance:
    return trim(PropInstance(tuple(frozenset(p) for p in parts)))


def _word_query(parts) -> Query:
    """ρ0 ∧ ◇(ρ1 ∧ ◇(… ◇ρn)) read off a word of atom sets."""
    parts = [frozenset(p) for p in parts]
    q: Query = conj([Atom(a) for a in sorted(parts[-1])])
    for p in reversed(parts[:-1]):
        q = conj([Atom(a) for a in sorted(p)] + [Ev(q)])
    return canonicalize(q)


def _embed_query(parts) -> Query:
    """The word as a strict subsequence pattern starting anywhere: the first
    letter matches now or later, each next letter strictly later."""
    parts = [frozenset(p) for p in parts]
    q: Query = conj([Atom(a) for a in sorted(parts[-1])])
    for p in reversed(parts[:-1]):
        q = conj([Atom(a) for a in sorted(p)] + [Ev(q)])
    return canonicalize(EvR(q))


def _permutation_family(n: int) -> dict:
    if not 2 <= n <= 4:
        raise ValueError("permutation family supported for 2 <= n <= 4")
    atoms = [f"A{i}" for i in range(1, n + 1)]

    def s_word(i: int):
        return [
            {atoms[k - 1]}
            for _ in range(n)
            for k in range(1, n + 1)
            if k != i
        ]

    base = canonicalize(conj([_embed_query(s_word(i)) for i in range(1, n + 1)]))
    perm_queries = {}
    extensions = {}
    refuters = {}
    for perm in itertools.permutations(range(1, n + 1)):
        p = _embed_query([{atoms[k - 1]} for k in perm])
        perm_queries[perm] = p
        extensions[perm] = canonicalize(conj([base, p]))
        w: list = []
        for k in perm:
            w.extend(s_word(k))
        refuters[perm] = _word_instance(w)
    return {
        "query": base,
        "permutation_queries": perm_queries,
        "extensions": extensions,
        "refuters": refuters,
    }


def _fourletter_family(n: int) -> dict:
    if not 1 <= n <= 4:
        raise ValueError("fourletter family supported for 1 <= n <= 4")
    sigma = {"A1", "A2", "B1", "B2"}
    s = [{"A1", "A2"}, {"B1", "B2"}]
    q1_word: list = [set()]
    for _ in range(n):
        q1_word.extend(s)
        q1_word.append(set(sigma))
    q1_word.extend(s)
    q2_word = [set()] + [set(sigma)] * (2 * n + 1)
    q1 = _word_query(q1_word)
    q2 = _word_query(q2_word)
    members = {}
    refuters = {}
    for choice in itertools.product("AB", repeat=n + 1):
        w: list = [set()]
        for c in choice:
            w.extend([{c + "1"}, {c + "2"}])
        members[choice] = _word_query(w)
        d = [set(p) for p in q1_word]
        for j, c in enumerate(choice):
            if c == "A":
                d[3 * j + 1] = set(sigma)
            else:
                d[3 * j + 2] = set(sigma)
        refuters[choice] = _word_instance(d)
    return {
        "query": canonicalize(conj([q1, q2])),
        "q1": q1,
        "q2": q2,
        "members": members,
        "refuters": refuters,
    }


def _el_next_diamond_family(n: int) -> dict:
    if not 1 <= n <= 3:
        raise ValueError("el-next-diamond family supported for 1 <= n <= 3")
    A, B = Atom("A"), Atom("B")

    def s_chain(i: int) -> Query:
        # i-fold suffix of B-next blocks ending in a plain eventuality
        q: Query = conj([B, Next(conj([B, EvR(A)]))])
        for _ in range(i - 1):
            q = conj([B, Next(conj([B, EvR(conj([A, Next(q)]))]))])
        return q

    def r_block(l: int) -> Query:
        if l == n:
            return EvR(conj([B, EvR(A)]))
        return EvR(conj([B, EvR(conj([A, Next(s_chain(n - l))]))]))

    def q_i(i: int) -> Query:
        q = r_block(i)
        for _ in range(i - 1):
            q = conj([B, Next(conj([B, EvR(conj([A, Next(q)]))]))])
        return q

    base = canonicalize(
        conj([Exists("P", False, q_i(i)) for i in range(1, n + 1)])
    )

    variants = {}
    for bits in itertools.product((0, 1), repeat=n):
        # bit 0: tight step (next / blank); bit 1: loose step (ev-next / ev)
        inner: Optional[Query] = None
        for i in range(n, 0, -1):
            body = conj([B, Ev(A if inner is None else conj([A, inner]))])
            if i == 1:
                inner = body if bits[0] == 0 else Ev(body)
            else:
                inner = Next(body) if bits[i - 1] == 0 else Ev(Next(body))
        variants[bits] = canonicalize(conj([base, Exists("P", False, inner)]))

    instances = {}
    for bits in itertools.product((0, 1), repeat=n):
        i0 = {i for i in range(1, n + 1) if bits[i - 1] == 0}
        slices = []
        for k in range(3 * n):
            concepts = set()
            roles = set()
            if k == 0:
                roles = {("P", "a0", f"a{i}") for i in range(1, n + 1)}
            for i in range(1, n + 1):
                ai = f"a{i}"
                if k % 3 == 2:
                    concepts.add(("A", ai))
                elif not (3 * (i - 1) <= k < 3 * i):
                    concepts.add(("B", ai))
                elif i in i0 and k % 3 == 1:
                    concepts.add(("B", ai))
                elif i not in i0 and k % 3 == 0:
                    concepts.add(("B", ai))
            slices.append(RelSlice(frozenset(concepts), frozenset(roles)))
        instances[bits] = TemporalInstance(tuple(slices), "a0")
    return {"query": base, "variants": variants, "instances": instances}


def _eli_split_family(n: int) -> dict:
    if not 1 <= n <= 6:
        raise ValueError("eli-split family supported for 1 <= n <= 6")
    atoms = [f"A{i}" for i in range(1, n + 1)]
    q = Exists(
        "r",
        False,
        conj([Exists("r", True, Atom(a)) for a in atoms]),
    )
    members = {}
    for bits in itertools.product((0, 1), repeat=n):
        x = frozenset(i for i in range(1, n + 1) if bits[i - 1])
        parts: list[Query] = [Atom(atoms[i - 1]) for i in sorted(x)]
        for i in range(1, n + 1):
            if i in x:
                continue
            bar = conj([Atom(a) for k, a in enumerate(atoms, 1) if k != i])
            parts.append(Exists("r", False, Exists("r", True, bar)))
        members[x] = canonicalize(conj(parts))
    return {"query": canonicalize(q), "members": members}


def _lone_chain_family(n: int) -> dict:
    if not 1 <= n <= 8:
        raise ValueError("lone-chain family supported for 1 <= n <= 8")
    A, B = Atom("A"), Atom("B")
    base = EvR(conj([A, B]))
    chains = []
    q: Query = EvR(conj([A, EvR(B)]))
    chains.append(canonicalize(q))
    for _ in range(n - 1):
        q = EvR(conj([A, EvR(conj([B, EvR(q)]))]))
        chains.append(canonicalize(q))
    return {"query": canonicalize(base), "chains": tuple(chains)}


def lowerbound_family(kind: str, n: int) -> dict:
    """Named fixture families demonstrating lower bounds on example sets."""
    if n < 1:
        raise ValueError("n must be at least 1")
    builders = {
        "permutation": _permutation_family,
        "fourletter": _fourletter_family,
        "el-next-diamond": _el_next_diamond_family,
        "eli-split": _eli_split_family,
        "lone-chain": _lone_chain_family,
    }
    if kind not in builders:
        raise ValueError(f"unknown family tag: {kind}")
    return builders[kind](n)
