"""Evaluation and comparison of queries on instances.

Contains the recursive truth relation (1D and 2D), the homomorphism view of
path-query CQs, the NFA view of U-path queries, structural entailment with a
per-class dispatch, and the brute-force reference oracle built on minimal
models.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .qcore import (
    And,
    Atom,
    Bot,
    EliTree,
    Ev,
    EvR,
    Exists,
    Next,
    PathQueryCQ,
    PropInstance,
    Query,
    RelSlice,
    Signature,
    TemporalInstance,
    Top,
    UPathQuery,
    Until,
    atoms_of,
    is_1d,
    qsize,
    tdp,
    trim,
)

Word = tuple  # tuple of frozensets


# ---------------------------------------------------------------------------
# 1D evaluation


def _slice_at(word: Word, i: int) -> frozenset:
    return word[i] if i < len(word) else frozenset()


def eval_query(q: Query, d: PropInstance, pos: int = 0) -> bool:
    """Truth of a 1D query at a position; trailing empty slices are implied."""
    if pos < 0:
        raise ValueError("position must be non-negative")
    horizon = max(len(d.word), pos + 1) + tdp(q) + 1
    return _eval(q, d.word, pos, horizon)


def _eval(q: Query, w: Word, pos: int, horizon: int) -> bool:
    if isinstance(q, Top):
        return True
    if isinstance(q, Bot):
        return False
    if isinstance(q, Atom):
        return q.name in _slice_at(w, pos)
    if isinstance(q, And):
        return all(_eval(c, w, pos, horizon) for c in q.children)
    if isinstance(q, Next):
        return _eval(q.child, w, pos + 1, horizon)
    if isinstance(q, Ev):
        return any(_eval(q.child, w, m, horizon) for m in range(pos + 1, horizon))
    if isinstance(q, EvR):
        return any(_eval(q.child, w, m, horizon) for m in range(pos, horizon))
    if isinstance(q, Until):
        for m in range(pos + 1, horizon):
            if _eval(q.right, w, m, horizon) and all(
                _eval(q.left, w, k, horizon) for k in range(pos + 1, m)
            ):
                return True
        return False
    if isinstance(q, Exists):
        raise ValueError("exists-node in 1D evaluation; use eval2d")
    raise TypeError(f"not a query: {q!r}")


# ---------------------------------------------------------------------------
# 2D evaluation


def eval2d(q: Query, d: TemporalInstance, a: Optional[str] = None, pos: int = 0) -> bool:
    """Truth of a (possibly 2D) query at an individual and position."""
    a = d.point if a is None else a
    known = set().union(*(s.individuals() for s in d.slices)) if d.slices else set()
    if a not in known and a != d.point:
        raise ValueError(f"unknown individual: {a}")
    horizon = max(len(d.slices), pos + 1) + tdp(q) + 1
    return _eval2d(q, d.slices, a, pos, horizon)


def _rslice_at(slices, i: int) -> RelSlice:
    return slices[i] if i < len(slices) else RelSlice()


def _eval2d(q: Query, slices, a: str, pos: int, horizon: int) -> bool:
    if isinstance(q, Top):
        return True
    if isinstance(q, Bot):
        return False
    if isinstance(q, Atom):
        return (q.name, a) in _rslice_at(slices, pos).concepts
    if isinstance(q, And):
        return all(_eval2d(c, slices, a, pos, horizon) for c in q.children)
    if isinstance(q, Exists):
        sl = _rslice_at(slices, pos)
        return any(
            _eval2d(q.child, slices, b, pos, horizon)
            for b in sl.successors(a, q.role, q.inverted)
        )
    if isinstance(q, Next):
        return _eval2d(q.child, slices, a, pos + 1, horizon)
    if isinstance(q, Ev):
        return any(
            _eval2d(q.child, slices, a, m, horizon) for m in range(pos + 1, horizon)
        )
    if isinstance(q, EvR):
        return any(
            _eval2d(q.child, slices, a, m, horizon) for m in range(pos, horizon)
        )
    if isinstance(q, Until):
        for m in range(pos + 1, horizon):
            if _eval2d(q.right, slices, a, m, horizon) and all(
                _eval2d(q.left, slices, a, k, horizon) for k in range(pos + 1, m)
            ):
                return True
        return False
    raise TypeError(f"not a query: {q!r}")


def eval_any(q: Query, d, pos: int = 0) -> bool:
    if isinstance(d, PropInstance):
        return eval_query(q, d, pos)
    return eval2d(q, d, None, pos)


# ---------------------------------------------------------------------------
# Homomorphism view of path-query CQs


def _node_holds(node, d, p: int) -> bool:
    if isinstance(node, EliTree):
        from .elilab import tree_holds_in_slice

        sl = _rslice_at(d.slices, p)
        return tree_holds_in_slice(node, sl, d.point)
    if isinstance(d, PropInstance):
        return node <= _slice_at(d.word, p)
    # atom-set node against a 2D instance: concept assertions at the point
    sl = _rslice_at(d.slices, p)
    return all((a, d.point) in sl.concepts for a in node)


def hom_exists(cq: PathQueryCQ, d) -> bool:
    """Existence of a (generalised) homomorphism from the CQ into d.

    The answer variable is pinned to position 0; successor steps map to +1;
    gaps to the corresponding order constraints.  Trailing empty slices are
    implied, bounded by the query's total span.
    """
    span = sum(len(b) for b in cq.blocks) + sum(
        g[1] for g in cq.gaps if g[0] == "lt"
    )
    n = (len(d.word) if isinstance(d, PropInstance) else len(d.slices)) + span + 1

    # block 0 is anchored at position 0
    b0 = cq.blocks[0]
    if not all(_node_holds(b0[j], d, j) for j in range(len(b0))):
        return False
    end = len(b0) - 1
    for i in range(1, len(cq.blocks)):
        gap = cq.gaps[i - 1]
        lo = end if gap[0] == "le" else end + gap[1]
        blk = cq.blocks[i]
        placed = None
        for start in range(lo, n):
            if all(_node_holds(blk[j], d, start + j) for j in range(len(blk))):
                placed = start
                break
        if placed is None:
            return False
        end = placed + len(blk) - 1
    return True


# ---------------------------------------------------------------------------
# NFA view of U-path queries


@dataclass(frozen=True)
class UPathNfa:
    """Linear NFA over 2^sigma with superset transition semantics.

    States 0..n+1; state i steps to i+1 on any slice containing trans[i];
    state i (1 <= i <= n) loops on any slice containing loops[i-1] when that
    loop is not bottom; the accepting state n+1 loops on everything.
    """

    trans: tuple  # rho_0 .. rho_n (atom frozensets)
    loops: tuple  # lam_1 .. lam_n (atom frozensets or None for bottom)

    @property
    def n(self) -> int:
        return len(self.trans) - 1

    def step(self, states: frozenset, sl: frozenset) -> frozenset:
        out = set()
        n = self.n
        for s in states:
            if s <= n and self.trans[s] <= sl:
                out.add(s + 1)
            if 1 <= s <= n and self.loops[s - 1] is not None and self.loops[s - 1] <= sl:
                out.add(s)
            if s == n + 1:
                out.add(s)
        return frozenset(out)

    def pad_accepts(self, states: frozenset) -> bool:
        """Acceptance up to appending empty slices."""
        seen = set()
        cur = states
        for _ in range(self.n + 3):
            if self.n + 1 in cur:
                return True
            if cur in seen:
                return False
            seen.add(cur)
            cur = self.step(cur, frozenset())
        return self.n + 1 in cur

    def accepts(self, word: Word) -> bool:
        cur = frozenset([0])
        for sl in word:
            cur = self.step(cur, frozenset(sl))
        return self.pad_accepts(cur)


def nfa_of(q: UPathQuery) -> UPathNfa:
    return UPathNfa(trans=tuple(q.rhos()), loops=tuple(q.lams()))


def nfa_contained(
    a1: UPathNfa, a2: UPathNfa, sig: Signature
) -> tuple[bool, Optional[Word]]:
    """Language inclusion of a1 in a2 over the explicit alphabet 2^sigma.

    Returns (contained, witness) where witness is a word accepted by a1 but
    not a2 when not contained.
    """
    alphabet = [
        frozenset(c)
        for k in range(len(sig.atoms) + 1)
        for c in itertools.combinations(sig.atoms, k)
    ]
    start = (frozenset([0]), frozenset([0]))
    seen = {start}
    queue = [(start, ())]
    while queue:
        (s1, s2), path = queue.pop(0)
        if a1.pad_accepts(s1) and not a2.pad_accepts(s2):
            return False, path
        for sym in alphabet:
            nxt = (a1.step(s1, sym), a2.step(s2, sym))
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, path + (sym,)))
    return True, None


# ---------------------------------------------------------------------------
# Minimal models (brute-force reference machinery)
#
# Every query here is positive, so satisfaction is monotone under slice-wise
# supersets and a word satisfies q iff it contains a minimal model of q
# slice-wise.  That makes exhaustive countermodel search over all words of
# length <= maxlen equivalent to a search over minimal models only.


class ModelBudgetExceeded(RuntimeError):
    pass


def _overlay(w1: Word, w2: Word) -> Word:
    n = max(len(w1), len(w2))
    return tuple(
        _slice_at(w1, i) | _slice_at(w2, i) for i in range(n)
    )


def _conj_atoms(q: Query) -> Optional[frozenset]:
    """Atom set of an atom conjunction, None if not one (or bottom)."""
    if isinstance(q, Top):
        return frozenset()
    if isinstance(q, Atom):
        return frozenset([q.name])
    if isinstance(q, And):
        out = set()
        for c in q.children:
            s = _conj_atoms(c)
            if s is None:
                return None
            out |= s
        return frozenset(out)
    return None


def minimal_models(q: Query, maxlen: int, budget: int = 500_000) -> set[Word]:
    """All slice-wise minimal satisfying words of length <= maxlen."""
    out = _minmodels(q, maxlen, budget)
    return {w for w in out if len(w) <= maxlen}


def _minmodels(q: Query, maxlen: int, budget: int) -> set[Word]:
    empty = frozenset()
    if isinstance(q, Top):
        return {()}
    if isinstance(q, Bot):
        return set()
    if isinstance(q, Atom):
        return {(frozenset([q.name]),)}
    if isinstance(q, And):
        acc: set[Word] = {()}
        for c in q.children:
            sub = _minmodels(c, maxlen, budget)
            acc = {
                _overlay(a, b) for a in acc for b in sub
            }
            acc = {w for w in acc if len(w) <= maxlen}
            if len(acc) > budget:
                raise ModelBudgetExceeded(f"minimal-model budget {budget} exceeded")
        return acc
    if isinstance(q, Next):
        return {
            (empty,) + w
            for w in _minmodels(q.child, maxlen - 1, budget)
            if len(w) + 1 <= maxlen
        }
    if isinstance(q, (Ev, EvR)):
        lo = 1 if isinstance(q, Ev) else 0
        sub = _minmodels(q.child, maxlen - lo, budget)
        out = set()
        for w in sub:
            for k in range(lo, maxlen - len(w) + 1):
                out.add((empty,) * k + w)
        if len(out) > budget:
            raise ModelBudgetExceeded(f"minimal-model budget {budget} exceeded")
        return out
    if isinstance(q, Until):
        lset = None if isinstance(q.left, Bot) else _conj_atoms(q.left)
        if lset is None and not isinstance(q.left, Bot):
            raise ValueError("until left argument must be an atom conjunction or bottom")
        sub = _minmodels(q.right, maxlen - 1, budget)
        out = set()
        mmax = 1 if lset is None else maxlen
        for w in sub:
            for m in range(1, mmax + 1):
                filler = (lset,) * (m - 1) if lset is not None else ()
                word_m = (empty,) + filler + w
                if len(word_m) <= maxlen:
                    out.add(word_m)
        if len(out) > budget:
            raise ModelBudgetExceeded(f"minimal-model budget {budget} exceeded")
        return out
    raise TypeError(f"unsupported in minimal models: {q!r}")


def entails_bruteforce(q1: Query, q2: Query, sig: Signature, maxlen: int) -> bool:
    """Reference oracle: no word over 2^sig of length <= maxlen satisfies q1
    but not q2.  Implemented via minimal models of q1, which is equivalent by
    monotonicity and exact for the same maxlen."""
    for w in minimal_models(q1, maxlen):
        if not eval_query(q2, PropInstance(w), 0):
            return False
    return True


# ---------------------------------------------------------------------------
# Structural entailment


def is_upath_shape(q: Query) -> bool:
    """Does q have the rho0 and (lam U (rho1 and ...)) shape of eq-(2) queries?"""
    try:
        from .normalform import to_upath

        to_upath(q)
        return True
    except ValueError:
        return False


def is_tree_shape_1d(q: Query) -> bool:
    """U-free, exists-free positive query (path or branching diamond shape)."""
    if isinstance(q, (Top, Bot, Atom)):
        return True
    if isinstance(q, And):
        return all(is_tree_shape_1d(c) for c in q.children)
    if isinstance(q, (Next, Ev, EvR)):
        return is_tree_shape_1d(q.child)
    return False


def is_eli_shape(q: Query) -> bool:
    """Purely atemporal EL/ELI query."""
    if isinstance(q, (Top, Atom)):
        return True
    if isinstance(q, And):
        return all(is_eli_shape(c) for c in q.children)
    if isinstance(q, Exists):
        return is_eli_shape(q.child)
    return False


def is_tree_shape_2d(q: Query) -> bool:
    """U-free temporal query whose node parts are EL/ELI queries."""
    if is_eli_shape(q):
        return True
    if isinstance(q, And):
        return all(is_tree_shape_2d(c) for c in q.children)
    if isinstance(q, (Next, Ev, EvR)):
        return is_tree_shape_2d(q.child)
    return False


def _skeleton(q: Query):
    """Split a U-free query into (node query, [(edge, child)...]).

    The node query collects atemporal conjuncts; edges are 'suc', 'lt', 'le'.
    """
    node: list[Query] = []
    edges = []
    conjs = q.children if isinstance(q, And) else (q,)
    for c in conjs:
        if isinstance(c, Next):
            edges.append(("suc", c.child))
        elif isinstance(c, Ev):
            edges.append(("lt", c.child))
        elif isinstance(c, EvR):
            edges.append(("le", c.child))
        else:
            node.append(c)
    from .qcore import conj as mkconj

    return mkconj(node), edges


def _canonical_embeddings(q: Query, window: int):
    """Yield position-labelled skeleton trees: lists of (pos, node query).

    Each yielded assignment is one canonical model shape of q; gap distances
    range over the window for diamond edges and are fixed for next edges.
    """

    def rec(sub: Query, base: int):
        node, edges = _skeleton(sub)
        if not edges:
            yield [(base, node)]
            return
        child_opts = []
        for kind, child in edges:
            opts = []
            if kind == "suc":
                deltas = [1]
            elif kind == "lt":
                deltas = range(1, window + 2)
            else:
                deltas = range(0, window + 1)
            for delta in deltas:
                for placed in rec(child, base + delta):
                    opts.append(placed)
            child_opts.append(opts)
        for combo in itertools.product(*child_opts):
            placed = [(base, node)]
            for sub_placed in combo:
                placed.extend(sub_placed)
            yield placed

    from .qcore import canonicalize

    return rec(canonicalize(q), 0)


def _entails_canonical_1d(q1: Query, q2: Query) -> bool:
    window = qsize(q2)
    for placed in _canonical_embeddings(q1, window):
        n = max(p for p, _ in placed) + 1
        slices = [set() for _ in range(n)]
        for p, node in placed:
            s = _conj_atoms(node)
            if s is None:
                raise ValueError("non-atomic node query in 1D canonical model")
            slices[p] |= s
        w = PropInstance(tuple(frozenset(s) for s in slices))
        if not eval_query(q2, w, 0):
            return False
    return True


def _entails_canonical_2d(q1: Query, q2: Query) -> bool:
    from .elilab import to_eli_tree, tree_to_slice

    window = qsize(q2)
    point = "a"
    for placed in _canonical_embeddings(q1, window):
        n = max(p for p, _ in placed) + 1
        per_pos: dict[int, list] = {}
        for p, node in placed:
            per_pos.setdefault(p, []).append(node)
        slices = []
        for p in range(n):
            concepts: set = set()
            roles: set = set()
            for j, node in enumerate(per_pos.get(p, [])):
                sl = tree_to_slice(to_eli_tree(node), point, prefix=f"c{p}_{j}")
                concepts |= set(sl.concepts)
                roles |= set(sl.roles)
            slices.append(RelSlice(frozenset(concepts), frozenset(roles)))
        inst = TemporalInstance(tuple(slices), point)
        if not eval2d(q2, inst, point, 0):
            return False
    return True


def entails(q1: Query, q2: Query) -> bool:
    """Structural entailment with a per-class dispatch."""
    if is_tree_shape_1d(q1) and is_tree_shape_1d(q2):
        return _entails_canonical_1d(q1, q2)
    if is_1d(q1) and is_1d(q2) and is_upath_shape(q1) and is_upath_shape(q2):
        from .normalform import to_upath

        u1, u2 = to_upath(q1), to_upath(q2)
        sig = Signature(atoms=tuple(sorted(atoms_of(q1) | atoms_of(q2))) or ("_",))
        ok, _ = nfa_contained(nfa_of(u1), nfa_of(u2), sig)
        return ok
    if is_eli_shape(q1) and is_eli_shape(q2):
        from .elilab import eli_entails, to_eli_tree

        return eli_entails(to_eli_tree(q1), to_eli_tree(q2))
    if is_tree_shape_2d(q1) and is_tree_shape_2d(q2):
        return _entails_canonical_2d(q1, q2)
    raise ValueError("unsupported class pairing for structural entailment")


def equivalent(q1: Query, q2: Query) -> bool:
    return entails(q1, q2) and entails(q2, q1)


# ---------------------------------------------------------------------------
# Shortest separators


def word_sort_key(w: Word, sig: Signature):
    return (len(w), tuple(sig.slice_key(s) for s in w))


def shortest_separator(
    q1: Query, q2: Query, sig: Signature, maxlen: int
) -> Optional[PropInstance]:
    """Length-minimal, then lexicographically least word satisfying exactly
    one of the two queries, or None within maxlen.

    A separator word contains a same-or-shorter minimal model of whichever
    query it satisfies, and that model still fails the other query by
    monotonicity, so the search ranges over minimal models only.
    """
    best: Optional[Word] = None

    def consider(w: Word):
        nonlocal best
        t = trim(PropInstance(w)).word
        if best is None or word_sort_key(t, sig) < word_sort_key(best, sig):
            best = t

    for w in minimal_models(q1, maxlen):
        if not eval_query(q2, PropInstance(w), 0):
            consider(w)
    for w in minimal_models(q2, maxlen):
        if not eval_query(q1, PropInstance(w), 0):
            consider(w)
    return PropInstance(best) if best is not None else None
