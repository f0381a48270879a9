"""Shared random generators for queries and instances."""

from __future__ import annotations

import random

from tiq.qcore import (
    Atom,
    Ev,
    EvR,
    Next,
    PropInstance,
    Query,
    Signature,
    UPathQuery,
    canonicalize,
    conj,
)
from tiq.normalform import is_peerless


def rand_node(rng: random.Random, atoms, allow_empty: bool = True):
    low = 0 if allow_empty else 1
    return frozenset(rng.sample(list(atoms), rng.randint(low, len(atoms))))


def rand_path_query(rng: random.Random, atoms, depth: int,
                    ops=(Next, Ev, EvR)) -> Query:
    """A random 1D path query: node ∧ op(node ∧ op(...))."""
    node = conj([Atom(a) for a in sorted(rand_node(rng, atoms))])
    if depth == 0:
        return canonicalize(node)
    op = rng.choice(ops)
    return canonicalize(conj([node, op(rand_path_query(rng, atoms, depth - 1, ops))]))


def rand_upath(rng: random.Random, atoms, steps: int,
               peerless_only: bool = False) -> UPathQuery:
    """A random until-path query with the given number of U-steps."""
    while True:
        head = rand_node(rng, atoms)
        pairs = []
        for _ in range(steps):
            lam = None if rng.random() < 0.4 else rand_node(rng, atoms)
            rho = rand_node(rng, atoms)
            pairs.append((lam, rho))
        u = UPathQuery(head, tuple(pairs))
        if not peerless_only or is_peerless(u):
            return u


def rand_eli_tree(rng: random.Random, concepts, roles, depth: int,
                  max_children: int = 2):
    """A random ELI tree of the given maximum depth."""
    from tiq.qcore import EliTree, eli_canon

    labels = frozenset(c for c in concepts if rng.random() < 0.5)
    children = []
    if depth > 0:
        for _ in range(rng.randint(0, max_children)):
            child = rand_eli_tree(rng, concepts, roles, depth - 1, max_children)
            children.append((rng.choice(list(roles)), rng.random() < 0.5, child))
    return eli_canon(EliTree(labels, tuple(children)))


def enum_eli_trees(concepts, edge_types, budget: int):
    """All ELI trees with at most `budget` assertions (labels + edges),
    deduplicated up to isomorphism.  edge_types: (role, inverted) pairs."""
    import itertools

    from tiq.qcore import EliTree, eli_key

    memo: dict[int, list] = {}

    def trees(b: int):
        if b in memo:
            return memo[b]
        if b < 0:
            return []
        labels = [
            frozenset(c)
            for i in range(min(len(concepts), b) + 1)
            for c in itertools.combinations(concepts, i)
        ]
        units = [
            (cost + 1, (r, inv, t))
            for cost, t in trees(b - 1)
            for r, inv in edge_types
        ]
        out: dict = {}

        def go(rem, start, chosen, cost, lab):
            t = EliTree(lab, tuple(sorted(chosen, key=repr)))
            k = eli_key(t)
            if k not in out or out[k][0] > cost:
                out[k] = (cost, t)
            for i in range(start, len(units)):
                c, u = units[i]
                if c <= rem:
                    go(rem - c, i, chosen + [u], cost + c, lab)

        for lab in labels:
            go(b - len(lab), 0, [], len(lab), lab)
        memo[b] = list(out.values())
        return memo[b]

    return [t for _, t in trees(budget)]


def rand_word(rng: random.Random, atoms, max_len: int) -> PropInstance:
    length = rng.randint(1, max_len)
    return PropInstance(tuple(rand_node(rng, atoms) for _ in range(length)))


def sig_of(*atoms: str) -> Signature:
    return Signature(atoms=tuple(atoms))
