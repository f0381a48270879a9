"""Core data model: signatures, query ASTs, data instances, example sets.

All values are immutable; equality is structural.  Query equality is
syntactic on canonical forms (see canonicalize); semantic equivalence
lives in tiq.semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union


# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class Signature:
    """Finite, ordered vocabulary.

    ``atoms`` is the 1D propositional alphabet; ``concepts`` and ``roles``
    form the 2D relational vocabulary.  Order is significant: it is the
    fixed total order used for deterministic tie-breaking everywhere.
    """

    atoms: tuple[str, ...] = ()
    concepts: tuple[str, ...] = ()
    roles: tuple[str, ...] = ()

    def __post_init__(self):
        if not (self.atoms or self.concepts or self.roles):
            raise ValueError("signature must be non-empty")
        for group in (self.atoms, self.concepts, self.roles):
            if len(set(group)) != len(group):
                raise ValueError("duplicate names in signature")

    def atom_index(self, name: str) -> int:
        return self.atoms.index(name)

    def slice_key(self, s: frozenset[str]) -> int:
        """Bitmask encoding of an atom set; subset implies smaller key."""
        mask = 0
        for a in s:
            mask |= 1 << self.atoms.index(a)
        return mask


# ---------------------------------------------------------------------------
# Query AST


@dataclass(frozen=True)
class Query:
    pass


@dataclass(frozen=True)
class Top(Query):
    pass


@dataclass(frozen=True)
class Bot(Query):
    pass


@dataclass(frozen=True)
class Atom(Query):
    name: str


@dataclass(frozen=True)
class And(Query):
    children: tuple[Query, ...]


@dataclass(frozen=True)
class Next(Query):
    child: Query


@dataclass(frozen=True)
class Ev(Query):
    """Strict eventually: a witness at a strictly later timepoint."""

    child: Query


@dataclass(frozen=True)
class EvR(Query):
    """Reflexive eventually: a witness now or later."""

    child: Query


@dataclass(frozen=True)
class Until(Query):
    """Strict until: witness strictly later, left side at strictly-between points."""

    left: Query
    right: Query


@dataclass(frozen=True)
class Exists(Query):
    """Existential role restriction (2D only)."""

    role: str
    inverted: bool
    child: Query


TOP = Top()
BOT = Bot()


def conj(children: Iterable[Query]) -> Query:
    """And-combinator that canonicalises on the fly."""
    return canonicalize(And(tuple(children)))


def _key(q: Query):
    if isinstance(q, Top):
        return (0,)
    if isinstance(q, Bot):
        return (1,)
    if isinstance(q, Atom):
        return (2, q.name)
    if isinstance(q, Exists):
        return (3, q.role, q.inverted, _key(q.child))
    if isinstance(q, And):
        return (4, tuple(_key(c) for c in q.children))
    if isinstance(q, Next):
        return (5, _key(q.child))
    if isinstance(q, Ev):
        return (6, _key(q.child))
    if isinstance(q, EvR):
        return (7, _key(q.child))
    if isinstance(q, Until):
        return (8, _key(q.left), _key(q.right))
    raise TypeError(f"not a query: {q!r}")


def query_key(q: Query):
    """Total order key on queries, used for deterministic tie-breaking."""
    return _key(q)


def canonicalize(q: Query) -> Query:
    """Sort and-children, drop duplicates and top conjuncts, flatten."""
    if isinstance(q, (Top, Bot, Atom)):
        return q
    if isinstance(q, Next):
        return Next(canonicalize(q.child))
    if isinstance(q, Ev):
        return Ev(canonicalize(q.child))
    if isinstance(q, EvR):
        return EvR(canonicalize(q.child))
    if isinstance(q, Until):
        return Until(canonicalize(q.left), canonicalize(q.right))
    if isinstance(q, Exists):
        return Exists(q.role, q.inverted, canonicalize(q.child))
    if isinstance(q, And):
        flat: list[Query] = []
        for c in q.children:
            c = canonicalize(c)
            if isinstance(c, And):
                flat.extend(c.children)
            elif isinstance(c, Top):
                continue
            else:
                flat.append(c)
        uniq = sorted(set(flat), key=_key)
        if not uniq:
            return TOP
        if len(uniq) == 1:
            return uniq[0]
        return And(tuple(uniq))
    raise TypeError(f"not a query: {q!r}")


def tdp(q: Query) -> int:
    """Temporal depth: maximum nesting of temporal operators."""
    if isinstance(q, (Top, Bot, Atom)):
        return 0
    if isinstance(q, And):
        return max(tdp(c) for c in q.children)
    if isinstance(q, (Next, Ev, EvR)):
        return 1 + tdp(q.child)
    if isinstance(q, Until):
        return 1 + max(tdp(q.left), tdp(q.right))
    if isinstance(q, Exists):
        return tdp(q.child)
    raise TypeError(f"not a query: {q!r}")


def qsize(q: Query) -> int:
    """Total AST node count (the size measure used for 2D queries too)."""
    if isinstance(q, (Top, Bot, Atom)):
        return 1
    if isinstance(q, And):
        return 1 + sum(qsize(c) for c in q.children)
    if isinstance(q, (Next, Ev, EvR, Exists)):
        return 1 + qsize(q.child)
    if isinstance(q, Until):
        return 1 + qsize(q.left) + qsize(q.right)
    raise TypeError(f"not a query: {q!r}")


def atoms_of(q: Query) -> frozenset[str]:
    if isinstance(q, Atom):
        return frozenset([q.name])
    if isinstance(q, And):
        return frozenset().union(*(atoms_of(c) for c in q.children))
    if isinstance(q, (Next, Ev, EvR, Exists)):
        return atoms_of(q.child)
    if isinstance(q, Until):
        return atoms_of(q.left) | atoms_of(q.right)
    return frozenset()


def is_1d(q: Query) -> bool:
    if isinstance(q, Exists):
        return False
    if isinstance(q, And):
        return all(is_1d(c) for c in q.children)
    if isinstance(q, (Next, Ev, EvR)):
        return is_1d(q.child)
    if isinstance(q, Until):
        return is_1d(q.left) and is_1d(q.right)
    return True


def pretty(q: Query) -> str:
    """Surface syntax with the usual temporal glyphs."""
    if isinstance(q, Top):
        return "⊤"
    if isinstance(q, Bot):
        return "⊥"
    if isinstance(q, Atom):
        return q.name
    if isinstance(q, And):
        return " ∧ ".join(
            f"({pretty(c)})" if isinstance(c, (Until,)) else pretty(c)
            for c in q.children
        )
    if isinstance(q, Next):
        return f"○{_wrap(q.child)}"
    if isinstance(q, Ev):
        return f"◇{_wrap(q.child)}"
    if isinstance(q, EvR):
        return f"◇r{_wrap(q.child)}"
    if isinstance(q, Until):
        return f"({pretty(q.left)} U {pretty(q.right)})"
    if isinstance(q, Exists):
        role = q.role + ("⁻" if q.inverted else "")
        return f"∃{role}.{_wrap(q.child)}"
    raise TypeError(f"not a query: {q!r}")


def _wrap(q: Query) -> str:
    s = pretty(q)
    if isinstance(q, (And, Until)):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# 1D data instances


@dataclass(frozen=True)
class PropInstance:
    """A finite word over 2^sigma; slice i lists atoms true at timepoint i."""

    word: tuple[frozenset[str], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "word", tuple(frozenset(s) for s in self.word)
        )

    def __len__(self) -> int:
        return len(self.word)

    def atom_count(self) -> int:
        return sum(len(s) for s in self.word)


def word(*slices: Iterable[str]) -> PropInstance:
    return PropInstance(tuple(frozenset(s) for s in slices))


def trim(d: PropInstance) -> PropInstance:
    """Drop trailing empty slices; at least one slice is retained."""
    w = list(d.word)
    while len(w) > 1 and not w[-1]:
        w.pop()
    if not w:
        w = [frozenset()]
    return PropInstance(tuple(w))


# ---------------------------------------------------------------------------
# 2D data instances


@dataclass(frozen=True)
class RelSlice:
    """One timepoint of a relational instance.

    ``concepts`` holds pairs (concept, individual); ``roles`` holds triples
    (role, a, b).  Inverse closure is logical, never stored: asking for
    P-inverse successors of a consults (P, b, a) triples.
    """

    concepts: frozenset[tuple[str, str]] = frozenset()
    roles: frozenset[tuple[str, str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "concepts", frozenset(self.concepts))
        object.__setattr__(self, "roles", frozenset(self.roles))

    def individuals(self) -> frozenset[str]:
        out = {a for _, a in self.concepts}
        for _, a, b in self.roles:
            out.add(a)
            out.add(b)
        return frozenset(out)

    def labels(self, ind: str) -> frozenset[str]:
        return frozenset(c for c, a in self.concepts if a == ind)

    def successors(self, ind: str, role: str, inverted: bool) -> frozenset[str]:
        if inverted:
            return frozenset(a for r, a, b in self.roles if r == role and b == ind)
        return frozenset(b for r, a, b in self.roles if r == role and a == ind)

    def size(self) -> int:
        return len(self.concepts) + len(self.roles)


EMPTY_SLICE = RelSlice()


@dataclass(frozen=True)
class TemporalInstance:
    """A finite sequence of relational slices with a designated individual."""

    slices: tuple[RelSlice, ...]
    point: str

    def __len__(self) -> int:
        return len(self.slices)

    def atom_count(self) -> int:
        return sum(s.size() for s in self.slices)


def trim2d(d: TemporalInstance) -> TemporalInstance:
    s = list(d.slices)
    while len(s) > 1 and s[-1].size() == 0:
        s.pop()
    if not s:
        s = [EMPTY_SLICE]
    return TemporalInstance(tuple(s), d.point)


Instance = Union[PropInstance, TemporalInstance]


# ---------------------------------------------------------------------------
# CQ view of path queries

# A gap between blocks is either a single reflexive step ("le",) or a chain
# of m strict steps ("lt", m).
Gap = tuple
LE: Gap = ("le",)


def lt(m: int) -> Gap:
    return ("lt", m)


@dataclass(frozen=True)
class PathQueryCQ:
    """Block-decomposed CQ form of a path query.

    Each block is a tuple of node-queries joined by successor steps; blocks
    are joined by gaps.  Node-queries are atom sets in the 1D case and
    EliTree values in the 2D case.
    """

    blocks: tuple[tuple, ...]
    gaps: tuple[Gap, ...]

    def __post_init__(self):
        if len(self.gaps) != len(self.blocks) - 1:
            raise ValueError("need exactly one gap between consecutive blocks")

    def is_primitive(self, i: int) -> bool:
        return len(self.blocks[i]) == 1

    def op_count(self) -> int:
        """Number of successor and strict steps (the b-bound input)."""
        sucs = sum(len(b) - 1 for b in self.blocks)
        strict = sum(g[1] for g in self.gaps if g[0] == "lt")
        return sucs + strict


# ---------------------------------------------------------------------------
# U-path queries

# lam is None for bottom (the loop that admits nothing), otherwise an atom
# set (1D) or an EliTree (2D).  Same for node queries rho.


@dataclass(frozen=True)
class UPathQuery:
    head: object
    steps: tuple[tuple, ...]  # sequence of (lam, rho) pairs

    def rhos(self) -> tuple:
        return (self.head,) + tuple(r for _, r in self.steps)

    def lams(self) -> tuple:
        return tuple(l for l, _ in self.steps)

    def depth(self) -> int:
        return len(self.steps)


# ---------------------------------------------------------------------------
# ELI trees


@dataclass(frozen=True)
class EliTree:
    """Rooted tree shape of an ELI query / tree-shaped pointed instance.

    Children are (role, inverted, subtree) triples; the root is the
    distinguished variable.
    """

    labels: frozenset[str] = frozenset()
    children: tuple[tuple[str, bool, "EliTree"], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "labels", frozenset(self.labels))

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for _, _, c in self.children)

    def size(self) -> int:
        """Assertion count: concept labels plus edges."""
        return len(self.labels) + sum(1 + c.size() for _, _, c in self.children)


def eli_key(t: EliTree):
    return (
        tuple(sorted(t.labels)),
        tuple(sorted((r, i, eli_key(c)) for r, i, c in t.children)),
    )


def eli_canon(t: EliTree) -> EliTree:
    """Sort children recursively for syntactic comparability."""
    kids = tuple(
        sorted(
            ((r, i, eli_canon(c)) for r, i, c in t.children),
            key=lambda e: (e[0], e[1], eli_key(e[2])),
        )
    )
    return EliTree(t.labels, kids)


# ---------------------------------------------------------------------------
# Example sets and class specifications


@dataclass(frozen=True)
class ExampleSet:
    positives: tuple
    negatives: tuple

    def size(self) -> int:
        """Total atom/assertion count across all entries."""
        return sum(e.atom_count() for e in self.positives + self.negatives)


@dataclass(frozen=True)
class ClassSpec:
    tag: str  # path-od | path-strict | upath | upath-peerless | diamond | ...
    signature: Signature
    max_tdp: int = 3
    max_size: int = 8
    max_branch: int = 1

    KNOWN = (
        "path-od",
        "path-strict",
        "upath",
        "upath-peerless",
        "diamond",
        "diamond-balanced-bounded",
        "2d-path-od",
        "2d-upath",
        "2d-diamond",
    )

    def __post_init__(self):
        if self.tag not in self.KNOWN:
            raise ValueError(f"unknown class tag: {self.tag}")
