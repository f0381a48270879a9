"""Block decomposition and normal forms for path queries; U-path shape
handling, minimisation and peerlessness."""

from __future__ import annotations

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
    Query,
    Top,
    UPathQuery,
    Until,
    LE,
    conj,
    eli_canon,
    lt,
)


# ---------------------------------------------------------------------------
# Node queries
#
# A node query is a frozenset of atoms (1D) or an EliTree (2D).  The helpers
# below give both a common interface; emptiness means the trivial query.


def _node_empty(node) -> bool:
    if isinstance(node, EliTree):
        return not node.labels and not node.children
    return not node


def _node_union(n1, n2):
    if isinstance(n1, EliTree) or isinstance(n2, EliTree):
        from .elilab import to_eli_tree

        t1 = n1 if isinstance(n1, EliTree) else EliTree(frozenset(n1))
        t2 = n2 if isinstance(n2, EliTree) else EliTree(frozenset(n2))
        return eli_canon(EliTree(t1.labels | t2.labels, t1.children + t2.children))
    return frozenset(n1) | frozenset(n2)


def node_entails(n1, n2) -> bool:
    """Does node query n1 entail n2?  Set inclusion in 1D, ELI entailment in 2D."""
    if isinstance(n1, EliTree) or isinstance(n2, EliTree):
        from .elilab import eli_entails

        t1 = n1 if isinstance(n1, EliTree) else EliTree(frozenset(n1))
        t2 = n2 if isinstance(n2, EliTree) else EliTree(frozenset(n2))
        return eli_entails(t1, t2)
    return frozenset(n2) <= frozenset(n1)


# ---------------------------------------------------------------------------
# Parsing a query AST into path shapes


def _split_level(q: Query):
    """Split one nesting level into (node conjuncts, temporal operator, child).

    Raises ValueError when the level is not path-shaped (more than one
    temporal conjunct, or an until/bottom node).
    """
    conjs = q.children if isinstance(q, And) else (q,)
    node_parts: list[Query] = []
    op: Optional[str] = None
    child: Optional[Query] = None
    for c in conjs:
        if isinstance(c, (Next, Ev, EvR)):
            if op is not None:
                raise ValueError("not a path query: branching temporal conjuncts")
            op = {Next: "suc", Ev: "lt", EvR: "le"}[type(c)]
            child = c.child
        elif isinstance(c, (Until, Bot, And)):
            raise ValueError(f"not a path query: {type(c).__name__} node")
        else:
            node_parts.append(c)
    return node_parts, op, child


def _node_of(parts: list[Query], two_d: bool):
    if two_d:
        from .elilab import to_eli_tree

        return to_eli_tree(conj(parts))
    out: set[str] = set()
    for p in parts:
        if isinstance(p, Atom):
            out.add(p.name)
        elif isinstance(p, Top):
            pass
        else:
            raise ValueError(f"not a 1D node query: {p!r}")
    return frozenset(out)


def _has_exists(q: Query) -> bool:
    if isinstance(q, Exists):
        return True
    if isinstance(q, And):
        return any(_has_exists(c) for c in q.children)
    if isinstance(q, (Next, Ev, EvR)):
        return _has_exists(q.child)
    if isinstance(q, Until):
        return _has_exists(q.left) or _has_exists(q.right)
    return False


def to_cq(q: Query) -> PathQueryCQ:
    """Faithful CQ/block representation of a path query (no normalisation)."""
    from .qcore import canonicalize

    q = canonicalize(q)
    two_d = _has_exists(q)
    nodes = []
    edges = []  # edge i joins position i to i+1; in {suc, lt, le}
    cur: Optional[Query] = q
    while cur is not None:
        parts, op, child = _split_level(cur)
        nodes.append(_node_of(parts, two_d))
        if op is not None:
            edges.append(op)
        cur = child
    blocks: list[list] = [[nodes[0]]]
    gaps: list = []
    for i, e in enumerate(edges):
        if e == "suc":
            blocks[-1].append(nodes[i + 1])
        else:
            gaps.append(LE if e == "le" else lt(1))
            blocks.append([nodes[i + 1]])
    return PathQueryCQ(tuple(tuple(b) for b in blocks), tuple(gaps))


def cq_to_query(cq: PathQueryCQ) -> Query:
    """Rebuild a query AST from a block decomposition."""

    def node_query(node) -> Query:
        if isinstance(node, EliTree):
            from .elilab import tree_to_query

            return tree_to_query(node)
        return conj([Atom(a) for a in sorted(node)])

    def build(bi: int, pi: int) -> Query:
        blk = cq.blocks[bi]
        here = node_query(blk[pi])
        if pi + 1 < len(blk):
            rest: Optional[Query] = Next(build(bi, pi + 1))
        elif bi + 1 < len(cq.blocks):
            nxt = build(bi + 1, 0)
            gap = cq.gaps[bi]
            if gap == LE:
                rest = EvR(nxt)
            else:
                rest = nxt
                for _ in range(gap[1]):
                    rest = Ev(rest)
        else:
            rest = None
        if rest is None:
            return here
        return conj([here, rest])

    return build(0, 0)


# ---------------------------------------------------------------------------
# Normalisation


def _compose(g1, g2):
    """Gap composition when an intermediate empty position is removed."""
    if g1 == LE and g2 == LE:
        return LE
    a = 0 if g1 == LE else g1[1]
    b = 0 if g2 == LE else g2[1]
    return lt(max(a + b, 1)) if (a + b) > 0 else LE


def _extend(gap, extra: int):
    """Compose a gap with `extra` successor steps on either side."""
    if extra == 0:
        return gap
    base = 0 if gap == LE else gap[1]
    return lt(base + extra)


def normalize_cq(cq: PathQueryCQ) -> PathQueryCQ:
    """Rewrite to the (n1)-(n4) normal form; equivalence-preserving."""
    blocks = [list(b) for b in cq.blocks]
    gaps = list(cq.gaps)

    changed = True
    while changed:
        changed = False

        # drop trailing empty node queries / blocks (trailing-empty identity)
        last = blocks[-1]
        if len(blocks) > 1 or len(last) > 1:
            if _node_empty(last[-1]):
                last.pop()
                if not last:
                    blocks.pop()
                    gaps.pop()
                changed = True
                continue

        # (n1): fold empty boundary nodes of non-initial blocks into gaps
        for i in range(1, len(blocks)):
            blk = blocks[i]
            if len(blk) > 1 and _node_empty(blk[0]):
                blk.pop(0)
                gaps[i - 1] = _extend(gaps[i - 1], 1)
                changed = True
                break
            if len(blk) > 1 and _node_empty(blk[-1]) and i < len(blocks) - 1:
                blk.pop()
                gaps[i] = _extend(gaps[i], 1)
                changed = True
                break
            if len(blk) == 1 and _node_empty(blk[0]):
                # empty primitive block: merge the two adjacent gaps
                if i < len(blocks) - 1:
                    gaps[i - 1] = _compose(gaps[i - 1], gaps[i])
                    del gaps[i]
                else:
                    del gaps[i - 1]
                del blocks[i]
                changed = True
                break
        if changed:
            continue

        # block 0: fold a trailing empty node into the first gap
        b0 = blocks[0]
        if len(b0) > 1 and _node_empty(b0[-1]) and len(blocks) > 1:
            b0.pop()
            gaps[0] = _extend(gaps[0], 1)
            changed = True
            continue

        # (n3): drop a primitive block subsumed by its left neighbour
        for i in range(len(blocks) - 1):
            if (
                len(blocks[i + 1]) == 1
                and gaps[i] == LE
                and node_entails(blocks[i][-1], blocks[i + 1][0])
            ):
                if i + 1 < len(gaps):
                    gaps[i] = gaps[i + 1]
                    del gaps[i + 1]
                else:
                    del gaps[i]
                del blocks[i + 1]
                changed = True
                break
        if changed:
            continue

        # (n4): drop a primitive block subsumed by its right neighbour
        for i in range(1, len(blocks) - 1):
            if (
                len(blocks[i]) == 1
                and gaps[i] == LE
                and node_entails(blocks[i + 1][0], blocks[i][0])
            ):
                del blocks[i]
                del gaps[i]
                changed = True
                break

    return PathQueryCQ(tuple(tuple(b) for b in blocks), tuple(gaps))


def normalize(q: Query) -> PathQueryCQ:
    return normalize_cq(to_cq(q))


def lone_conjuncts(nf: PathQueryCQ) -> list[int]:
    """Indices of lone conjuncts: non-initial primitive blocks whose node
    query splits into two strictly weaker conjuncts (two or more atoms in
    1D; a splittable root in 2D)."""
    out = []
    for i in range(1, len(nf.blocks)):
        if len(nf.blocks[i]) != 1:
            continue
        node = nf.blocks[i][0]
        if isinstance(node, EliTree):
            from .elilab import is_splittable

            if is_splittable(node):
                out.append(i)
        elif len(node) >= 2:
            out.append(i)
    return out


def is_safe(q: Query) -> bool:
    return not lone_conjuncts(normalize(q))


# ---------------------------------------------------------------------------
# U-path shape


def to_upath(q: Query) -> UPathQuery:
    """Parse the rho0 and (lam U (rho1 and ...)) shape into a UPathQuery."""
    from .qcore import canonicalize

    q = canonicalize(q)
    two_d = _has_exists(q)

    def node_of(parts):
        return _node_of(parts, two_d)

    def rec(cur: Query):
        conjs = cur.children if isinstance(cur, And) else (cur,)
        node_parts = []
        until: Optional[Until] = None
        for c in conjs:
            # strict steps embed: Oq = bot U q, Dq = top U q
            if isinstance(c, Next):
                c = Until(Bot(), c.child)
            elif isinstance(c, Ev):
                c = Until(Top(), c.child)
            if isinstance(c, Until):
                if until is not None:
                    raise ValueError("not a U-path query: branching until conjuncts")
                until = c
            elif isinstance(c, (EvR, Bot, And)):
                raise ValueError(f"not a U-path query: {type(c).__name__} node")
            else:
                node_parts.append(c)
        head = node_of(node_parts)
        if until is None:
            return head, []
        if isinstance(until.left, Bot):
            lam = None
        else:
            lam = node_of(
                until.left.children if isinstance(until.left, And) else (until.left,)
            )
        rhead, rsteps = rec(until.right)
        return head, [(lam, rhead)] + rsteps

    head, steps = rec(q)
    return UPathQuery(head, tuple(steps))


def upath_to_query(u: UPathQuery) -> Query:
    def node_query(node) -> Query:
        if node is None:
            return Bot()
        if isinstance(node, EliTree):
            from .elilab import tree_to_query

            return tree_to_query(node)
        return conj([Atom(a) for a in sorted(node)])

    rhos = u.rhos()
    lams = u.lams()
    out = node_query(rhos[-1])
    for i in range(len(lams) - 1, -1, -1):
        out = conj([node_query(rhos[i]), Until(node_query(lams[i]), out)])
    return out


def _upath_equivalent(u1: UPathQuery, u2: UPathQuery, sig_atoms) -> bool:
    from .qcore import Signature
    from .semantics import nfa_contained, nfa_of

    sig = Signature(atoms=tuple(sorted(sig_atoms)) or ("_",))
    a1, a2 = nfa_of(u1), nfa_of(u2)
    return nfa_contained(a1, a2, sig)[0] and nfa_contained(a2, a1, sig)[0]


def minimize_upath(q: UPathQuery) -> UPathQuery:
    """Replace loop labels by bottom left-to-right while equivalence holds."""
    atoms = set()
    for r in q.rhos():
        atoms |= set(r)
    for l in q.lams():
        if l is not None:
            atoms |= set(l)
    cur = q
    for i in range(len(cur.steps)):
        lam, rho = cur.steps[i]
        if lam is None:
            continue
        cand = UPathQuery(
            cur.head,
            cur.steps[:i] + ((None, rho),) + cur.steps[i + 1 :],
        )
        if _upath_equivalent(cur, cand, atoms):
            cur = cand
    return cur


def is_peerless(q: UPathQuery) -> bool:
    """Every loop label is bottom or incomparable with its node query."""
    for lam, rho in q.steps:
        if lam is None:
            continue
        if node_entails(lam, rho) or node_entails(rho, lam):
            return False
    return True
