"""EL/ELI machinery: tree conversions, homomorphisms, cores, frontiers
(atemporal and branching-temporal), split partners and unwinding."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct
from typing import Optional

from .qcore import (
    And,
    Atom,
    EliTree,
    Ev,
    Exists,
    Query,
    RelSlice,
    Signature,
    Top,
    canonicalize,
    conj,
    eli_canon,
    eli_key,
)


# ---------------------------------------------------------------------------
# Pointed instances


@dataclass(frozen=True)
class PointedInstance:
    """An atemporal relational instance with a designated individual.

    Unlike EliTree this may be cyclic; it is the carrier for saturated
    instances, split-partner members and learner hypotheses.
    """

    slice: RelSlice
    point: str


# ---------------------------------------------------------------------------
# Tree <-> query <-> instance conversions


def to_eli_tree(q: Query) -> EliTree:
    """Parse an atemporal EL/ELI query into its canonical tree."""
    q = canonicalize(q)
    conjs = q.children if isinstance(q, And) else (q,)
    labels: set[str] = set()
    kids: list[tuple[str, bool, EliTree]] = []
    for c in conjs:
        if isinstance(c, Atom):
            labels.add(c.name)
        elif isinstance(c, Top):
            pass
        elif isinstance(c, Exists):
            kids.append((c.role, c.inverted, to_eli_tree(c.child)))
        else:
            raise ValueError(f"not an EL/ELI query part: {c!r}")
    return eli_canon(EliTree(frozenset(labels), tuple(kids)))


def tree_to_query(t: EliTree) -> Query:
    parts: list[Query] = [Atom(a) for a in sorted(t.labels)]
    parts.extend(Exists(r, inv, tree_to_query(c)) for r, inv, c in t.children)
    return conj(parts)


def tree_to_slice(t: EliTree, point: str, prefix: str = "") -> RelSlice:
    """Canonical instance of a tree; child names are path-based, the
    root keeps the given point name, non-root names carry the prefix."""
    concepts: set[tuple[str, str]] = set()
    roles: set[tuple[str, str, str]] = set()

    def name_of(path: str) -> str:
        return path if path == point else prefix + path

    def walk(node: EliTree, path: str) -> None:
        n = name_of(path)
        for a in node.labels:
            concepts.add((a, n))
        for i, (r, inv, c) in enumerate(node.children):
            cpath = f"{path}.{i}"
            cn = name_of(cpath)
            roles.add((r, cn, n) if inv else (r, n, cn))
            walk(c, cpath)

    walk(t, point)
    return RelSlice(frozenset(concepts), frozenset(roles))


def tree_to_instance(t: EliTree, point: str = "a") -> PointedInstance:
    return PointedInstance(tree_to_slice(t, point), point)


def instance_to_tree(p: PointedInstance) -> EliTree:
    """Rebuild the tree of an acyclic connected pointed instance."""
    sl = p.slice
    adj: dict[str, list[tuple[str, bool, str]]] = {}
    for r, u, v in sl.roles:
        adj.setdefault(u, []).append((r, False, v))
        adj.setdefault(v, []).append((r, True, u))

    seen = {p.point}

    def build(n: str) -> EliTree:
        kids = []
        for r, inv, m in sorted(adj.get(n, [])):
            if m in seen:
                continue
            seen.add(m)
            kids.append((r, inv, build(m)))
        return EliTree(sl.labels(n), tuple(kids))

    tree = build(p.point)
    edge_count = tree.node_count() - 1
    reachable_edges = sum(
        1 for r, u, v in sl.roles if u in seen and v in seen
    )
    if reachable_edges != edge_count:
        raise ValueError("instance is not tree-shaped at the point")
    if (sl.individuals() or {p.point}) - seen:
        raise ValueError("instance has individuals disconnected from the point")
    return eli_canon(tree)


def tree_holds_in_slice(t: EliTree, sl: RelSlice, ind: str) -> bool:
    """Satisfaction of a tree query at an individual of one slice."""
    if not t.labels <= sl.labels(ind):
        return False
    for r, inv, c in t.children:
        if not any(
            tree_holds_in_slice(c, sl, b) for b in sl.successors(ind, r, inv)
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# Homomorphisms, entailment, cores


def _slice_hom(
    src: RelSlice,
    src_point: str,
    dst: RelSlice,
    dst_point: str,
    forbidden: frozenset[str] = frozenset(),
) -> Optional[dict[str, str]]:
    """Point-preserving homomorphism search; avoids forbidden targets."""
    targets = sorted((dst.individuals() | {dst_point}) - forbidden)
    if dst_point in forbidden:
        return None

    s_inds = sorted(src.individuals() | {src_point})
    # variable order: breadth-first from the point, then any leftovers
    adj: dict[str, set[str]] = {n: set() for n in s_inds}
    for _, u, v in src.roles:
        adj[u].add(v)
        adj[v].add(u)
    order = [src_point]
    queue = [src_point]
    placed = {src_point}
    while queue:
        n = queue.pop(0)
        for m in sorted(adj[n]):
            if m not in placed:
                placed.add(m)
                order.append(m)
                queue.append(m)
    order.extend(n for n in s_inds if n not in placed)

    src_labels = {n: src.labels(n) for n in s_inds}
    dst_labels = {n: dst.labels(n) for n in targets}
    role_atoms = list(src.roles)

    def consistent(h: dict[str, str]) -> bool:
        for r, u, v in role_atoms:
            if u in h and v in h and (r, h[u], h[v]) not in dst.roles:
                return False
        return True

    def extend(h: dict[str, str], k: int) -> Optional[dict[str, str]]:
        if k == len(order):
            return h
        u = order[k]
        for v in targets:
            if not src_labels[u] <= dst_labels.get(v, frozenset()):
                continue
            h[u] = v
            if consistent(h):
                got = extend(h, k + 1)
                if got is not None:
                    return got
            del h[u]
        return None

    if not src_labels[src_point] <= dst.labels(dst_point):
        return None
    h0 = {src_point: dst_point}
    if not consistent(h0):
        return None
    return extend(h0, 1)


@lru_cache(maxsize=8192)
def eli_hom(src: PointedInstance, dst: PointedInstance) -> bool:
    """Existence of a point-preserving homomorphism src -> dst."""
    return (
        _slice_hom(src.slice, src.point, dst.slice, dst.point) is not None
    )


@lru_cache(maxsize=65536)
def eli_entails(q1: EliTree, q2: EliTree) -> bool:
    """q1 entails q2 iff q2 is satisfied in the canonical instance of q1."""
    return tree_holds_in_slice(q2, tree_to_slice(q1, "a"), "a")


def is_splittable(t: EliTree) -> bool:
    """Can the root conjunction be split into two strictly weaker halves?

    The root units are the concept labels and the existential branches.
    The tree is splittable when some bipartition yields two conjunctions
    neither of which entails the whole tree.
    """
    units: list[EliTree] = [EliTree(frozenset([a])) for a in sorted(t.labels)]
    units.extend(EliTree(frozenset(), (k,)) for k in t.children)
    n = len(units)
    if n < 2:
        return False

    def merge(sel: list[EliTree]) -> EliTree:
        labels: frozenset[str] = frozenset()
        kids: tuple = ()
        for u in sel:
            labels |= u.labels
            kids += u.children
        return eli_canon(EliTree(labels, kids))

    for mask in range(1, 1 << (n - 1)):
        left = [units[0]] + [units[i] for i in range(1, n) if not mask >> (i - 1) & 1]
        right = [units[i] for i in range(1, n) if mask >> (i - 1) & 1]
        if not eli_entails(merge(left), t) and not eli_entails(merge(right), t):
            return True
    return False


def is_core(p: PointedInstance) -> bool:
    """No point-preserving endomorphism into a proper substructure."""
    inds = sorted(p.slice.individuals() | {p.point})
    for v in inds:
        if v == p.point:
            continue
        if (
            _slice_hom(p.slice, p.point, p.slice, p.point, frozenset([v]))
            is not None
        ):
            return False
    return True


def _restrict(sl: RelSlice, keep: set[str]) -> RelSlice:
    return RelSlice(
        frozenset((a, n) for a, n in sl.concepts if n in keep),
        frozenset((r, u, v) for r, u, v in sl.roles if u in keep and v in keep),
    )


def eli_core(t: EliTree) -> EliTree:
    """Hom-equivalent core, found by shrinking endomorphism images."""
    inst = tree_to_instance(t, "a")
    sl = inst.slice
    changed = True
    while changed:
        changed = False
        for v in sorted(sl.individuals()):
            if v == inst.point:
                continue
            h = _slice_hom(sl, inst.point, sl, inst.point, frozenset([v]))
            if h is not None:
                sl = _restrict(sl, set(h.values()) | {inst.point})
                changed = True
                break
    return instance_to_tree(PointedInstance(sl, inst.point))


# ---------------------------------------------------------------------------
# Frontiers of tree-shaped instances
#
# Structures below are triples (labels, edges, orig): labels maps node name
# to a concept set, edges is a list of directed tree edges
# (parent, role, inverted, child), and orig maps each node name back to the
# name of the underlying node of the input tree.


def _tree_struct(t: EliTree, name: str):
    labels: dict[str, frozenset[str]] = {}
    edges: list[tuple[str, str, bool, str]] = []

    def walk(node: EliTree, n: str) -> None:
        labels[n] = node.labels
        for i, (r, inv, c) in enumerate(node.children):
            cn = f"{n}.{i}"
            edges.append((n, r, inv, cn))
            walk(c, cn)

    walk(t, name)
    return labels, edges


def _children_of(edges, n):
    return [(r, inv, c) for p, r, inv, c in edges if p == n]


def _descendants(edges, root):
    out = {root}
    frontier = [root]
    while frontier:
        n = frontier.pop()
        for _, _, c in _children_of(edges, n):
            out.add(c)
            frontier.append(c)
    return out


def _pre_frontier_s(labels, edges, root):
    """Pre-frontier of a directed tree structure; identity orig maps."""
    kids = _children_of(edges, root)
    if not kids:
        return [
            ({root: labels[root] - {a}}, [], {root: root})
            for a in sorted(labels[root])
        ]

    out = []
    for i, (r, inv, c) in enumerate(kids):
        # replace the i-th subtree by copies of all its pre-frontier members
        base_labels = {root: labels[root]}
        base_edges: list = []
        orig = {root: root}
        for j, (r2, inv2, c2) in enumerate(kids):
            if j == i:
                continue
            dom = _descendants(edges, c2)
            for n in dom:
                base_labels[n] = labels[n]
                orig[n] = n
            base_edges.append((root, r2, inv2, c2))
            base_edges.extend(e for e in edges if e[0] in dom)
        cdom = _descendants(edges, c)
        sub = _pre_frontier_s(
            {n: labels[n] for n in cdom},
            [e for e in edges if e[0] in cdom],
            c,
        )
        for j, (sl, se, so) in enumerate(sub):
            ren = {n: f"{n}~{j}" for n in sl}
            for n, ls in sl.items():
                base_labels[ren[n]] = ls
                orig[ren[n]] = so[n]
            base_edges.extend((ren[p], rr, ii, ren[ch]) for p, rr, ii, ch in se)
            base_edges.append((root, r, inv, ren[c]))
        out.append((base_labels, base_edges, orig))

    # root label drops, children intact
    for a in sorted(labels[root]):
        e_labels = dict(labels)
        e_labels[root] = labels[root] - {a}
        out.append((e_labels, list(edges), {n: n for n in labels}))
    return out


def _frontier_structs_s(labels, edges, root):
    """Frontier members: each pre-frontier member glued with one copy of
    the full input per non-root element, attached at the parent edge of
    that element's original."""
    parent_edge = {c: (p, r, inv) for p, r, inv, c in edges}
    out = []
    for m_labels, m_edges, m_orig in _pre_frontier_s(labels, edges, root):
        g_labels = dict(m_labels)
        g_edges = list(m_edges)
        g_orig = dict(m_orig)
        d_elems = sorted(n for n in m_labels if n != root)
        for j, d in enumerate(d_elems, start=1):
            tag = f"@-{j}"
            for n, ls in labels.items():
                g_labels[n + tag] = ls
                g_orig[n + tag] = n
            g_edges.extend((p + tag, r, inv, c + tag) for p, r, inv, c in edges)
            p, r, inv = parent_edge[m_orig[d]]
            g_edges.append((p + tag, r, inv, d))
        out.append((g_labels, g_edges, g_orig))
    return out


def _struct_to_tree(labels, edges, root) -> EliTree:
    adj: dict[str, list[tuple[str, bool, str]]] = {n: [] for n in labels}
    for p, r, inv, c in edges:
        adj[p].append((r, inv, c))
        adj[c].append((r, not inv, p))
    seen = {root}

    def build(n: str) -> EliTree:
        kids = []
        for r, inv, m in sorted(adj[n]):
            if m in seen:
                continue
            seen.add(m)
            kids.append((r, inv, build(m)))
        return EliTree(labels[n], tuple(kids))

    tree = build(root)
    if len(seen) != len(labels):
        raise ValueError("glued frontier structure is not connected")
    return eli_canon(tree)


def frontier(t: EliTree) -> list[EliTree]:
    """Frontier of a core tree under the homomorphism order."""
    labels, edges = _tree_struct(t, "a")
    out: list[EliTree] = []
    seen = set()
    for g_labels, g_edges, _ in _frontier_structs_s(labels, edges, "a"):
        tree = _struct_to_tree(g_labels, g_edges, "a")
        k = eli_key(tree)
        if k not in seen:
            seen.add(k)
            out.append(tree)
    return out


# ---------------------------------------------------------------------------
# Frontier for branching temporal queries over ELI nodes
#
# A query of this class is a tree whose nodes are ELI structures and whose
# child nodes hang off individual variables via a strict-eventually edge.


@dataclass
class _Node2d:
    labels: dict
    edges: list
    root: str
    kids: list  # (anchor variable, _Node2d)


def _parse_2d(q: Query, var: str) -> _Node2d:
    labels: dict[str, set] = {}
    edges: list = []
    kids: list = []
    counters: dict[str, int] = {}

    def fresh(parent: str) -> str:
        i = counters.get(parent, 0)
        counters[parent] = i + 1
        return f"{parent}.{i}"

    def walk(part: Query, v: str) -> None:
        labels.setdefault(v, set())
        conjs = part.children if isinstance(part, And) else (part,)
        for c in conjs:
            if isinstance(c, Atom):
                labels[v].add(c.name)
            elif isinstance(c, Top):
                pass
            elif isinstance(c, Exists):
                nv = fresh(v)
                edges.append((v, c.role, c.inverted, nv))
                walk(c.child, nv)
            elif isinstance(c, Ev):
                if any(a == v for a, _ in kids):
                    raise ValueError(
                        "more than one eventually-subquery at one variable"
                    )
                kids.append((v, _parse_2d(canonicalize(c.child), v)))
            else:
                raise ValueError(f"not a branching-temporal ELI query: {c!r}")

    walk(canonicalize(q), var)
    return _Node2d(
        {n: frozenset(ls) for n, ls in labels.items()}, edges, var, kids
    )


def _rebase_2d(node: _Node2d, new_root: str) -> _Node2d:
    def ren(n: str) -> str:
        if n == node.root:
            return new_root
        if n.startswith(node.root):
            return new_root + n[len(node.root):]
        return f"{new_root}|{n}"

    labels = {ren(n): ls for n, ls in node.labels.items()}
    edges = [(ren(p), r, inv, ren(c)) for p, r, inv, c in node.edges]
    kids = [(ren(a), _rebase_2d(k, ren(a))) for a, k in node.kids]
    return _Node2d(labels, edges, new_root, kids)


def _f2d(node: _Node2d) -> list[_Node2d]:
    out: list[_Node2d] = []
    for i, (anchor, kid) in enumerate(node.kids):
        for fk in _f2d(kid):
            kids = list(node.kids)
            kids[i] = (anchor, fk)
            out.append(_Node2d(dict(node.labels), list(node.edges), node.root, kids))
    for g_labels, g_edges, g_orig in _frontier_structs_s(
        node.labels, node.edges, node.root
    ):
        kids = []
        for y in sorted(g_labels):
            for anchor, kid in node.kids:
                if g_orig.get(y) == anchor:
                    kids.append((y, _rebase_2d(kid, y)))
        out.append(_Node2d(g_labels, g_edges, node.root, kids))
    return out


def _node2d_to_query(node: _Node2d) -> Query:
    kid_at: dict[str, list[_Node2d]] = {}
    for a, k in node.kids:
        kid_at.setdefault(a, []).append(k)

    # the skeleton may contain edges oriented against the walk (glued
    # copies attach via incoming edges), so traverse undirected
    adj: dict[str, list[tuple[str, bool, str]]] = {n: [] for n in node.labels}
    for p, r, inv, c in node.edges:
        adj[p].append((r, inv, c))
        adj[c].append((r, not inv, p))
    seen = {node.root}

    def build(v: str) -> Query:
        parts: list[Query] = [Atom(a) for a in sorted(node.labels[v])]
        for r, inv, c in sorted(adj[v]):
            if c in seen:
                continue
            seen.add(c)
            parts.append(Exists(r, inv, build(c)))
        for k in kid_at.get(v, []):
            parts.append(Ev(_node2d_to_query(k)))
        return conj(parts)

    return build(node.root)


def _aq_instance(node: _Node2d, t_role: str = "__T") -> PointedInstance:
    """Atemporal encoding: one individual per (variable, depth) pair, a
    fresh transitively-closed role linking repeats of a variable across
    consecutive depths."""
    concepts: set = set()
    roles: set = set()
    depth_vars: dict[int, set[str]] = {}

    def walk(n: _Node2d, m: int) -> None:
        depth_vars.setdefault(m, set()).update(n.labels)
        for v, ls in n.labels.items():
            concepts.update((a, f"{v}@{m}") for a in ls)
        for p, r, inv, c in n.edges:
            u, w = (c, p) if inv else (p, c)
            roles.add((r, f"{u}@{m}", f"{w}@{m}"))
        for _, k in n.kids:
            walk(k, m + 1)

    walk(node, 0)
    for m in sorted(depth_vars):
        for v in depth_vars[m]:
            if v in depth_vars.get(m + 1, set()):
                roles.add((t_role, f"{v}@{m}", f"{v}@{m+1}"))
    # transitive closure of the depth role
    changed = True
    while changed:
        changed = False
        t_edges = [(u, w) for r, u, w in roles if r == t_role]
        for u, w in t_edges:
            for w2 in [y for x, y in t_edges if x == w]:
                if (t_role, u, w2) not in roles:
                    roles.add((t_role, u, w2))
                    changed = True
    return PointedInstance(
        RelSlice(frozenset(concepts), frozenset(roles)), f"{node.root}@0"
    )


def frontier2d(q: Query) -> list[Query]:
    """Frontier of a branching-temporal ELI query within its class."""
    node = _parse_2d(q, "x")
    if not is_core(_aq_instance(node)):
        raise ValueError("frontier requires a core query; minimise it first")
    out: list[Query] = []
    seen = set()
    for member in _f2d(node):
        built = _node2d_to_query(member)
        if built not in seen:
            seen.add(built)
            out.append(built)
    return out


# ---------------------------------------------------------------------------
# Split partners


def a_sigma(sig: Signature) -> PointedInstance:
    """The single-individual saturated instance; satisfies everything."""
    return PointedInstance(
        RelSlice(
            frozenset((a, "a") for a in sig.concepts),
            frozenset((r, "a", "a") for r in sig.roles),
        ),
        "a",
    )


def a_sigma_minus(concept: str, sig: Signature) -> PointedInstance:
    """Saturated except for one concept at the point; the point has every
    role edge into a fully saturated looping individual."""
    concepts = {(b, "a") for b in sig.concepts if b != concept}
    concepts |= {(b, "b") for b in sig.concepts}
    roles = {(r, "a", "b") for r in sig.roles}
    roles |= {(r, "b", "b") for r in sig.roles}
    return PointedInstance(RelSlice(frozenset(concepts), frozenset(roles)), "a")


def _rename_instance(p: PointedInstance, new_point: str) -> tuple[set, set]:
    def ren(n: str) -> str:
        return new_point if n == p.point else f"{new_point}|{n}"

    concepts = {(a, ren(n)) for a, n in p.slice.concepts}
    roles = {(r, ren(u), ren(v)) for r, u, v in p.slice.roles}
    return concepts, roles


def _check_el(t: EliTree) -> None:
    for _, inv, c in t.children:
        if inv:
            raise ValueError("inverted edge present; use split_partner_eli")
        _check_el(c)


def _split_el_one(t: EliTree, sig: Signature) -> list[PointedInstance]:
    members: list[PointedInstance] = []
    for a in sorted(t.labels):
        members.append(a_sigma_minus(a, sig))
    for i, (role, _inv, c) in enumerate(t.children):
        sub = _split_el_one(c, sig)
        concepts = {(b, "a") for b in sig.concepts}
        roles: set = set()
        other = [r for r in sig.roles if r != role]
        if other:
            concepts |= {(b, "b") for b in sig.concepts}
            roles |= {(r, "a", "b") for r in other}
            roles |= {(r, "b", "b") for r in sig.roles}
        for j, m in enumerate(sub):
            cc, rr = _rename_instance(m, f"c{i}.{j}")
            concepts |= cc
            roles |= rr
            roles.add((role, "a", f"c{i}.{j}"))
        members.append(
            PointedInstance(RelSlice(frozenset(concepts), frozenset(roles)), "a")
        )
    return members


def _instance_product(p1: PointedInstance, p2: PointedInstance) -> PointedInstance:
    inds1 = p1.slice.individuals() | {p1.point}
    inds2 = p2.slice.individuals() | {p2.point}
    labels1 = {n: p1.slice.labels(n) for n in inds1}
    labels2 = {n: p2.slice.labels(n) for n in inds2}

    def name(u: str, v: str) -> str:
        return f"{u}*{v}"

    concepts = {
        (a, name(u, v))
        for u in inds1
        for v in inds2
        for a in labels1[u] & labels2[v]
    }
    roles = {
        (r1, name(u1, u2), name(v1, v2))
        for r1, u1, v1 in p1.slice.roles
        for r2, u2, v2 in p2.slice.roles
        if r1 == r2
    }
    point = name(p1.point, p2.point)
    # keep only the connected component of the point
    adj: dict[str, set[str]] = {}
    for _, u, v in roles:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    keep = {point}
    queue = [point]
    while queue:
        n = queue.pop()
        for m in adj.get(n, ()):
            if m not in keep:
                keep.add(m)
                queue.append(m)
    return PointedInstance(
        RelSlice(
            frozenset((a, n) for a, n in concepts if n in keep),
            frozenset((r, u, v) for r, u, v in roles if u in keep and v in keep),
        ),
        point,
    )


def split_partner_el(qs, sig: Signature) -> list[PointedInstance]:
    """Pointed instances whose members are satisfied by exactly the
    queries entailing none of qs (inverse-free trees only)."""
    qs = list(qs)
    if not qs:
        return [a_sigma(sig)]
    for q in qs:
        _check_el(q)
    partners = [_split_el_one(q, sig) for q in qs]
    out = []
    for combo in iproduct(*partners):
        m = combo[0]
        for other in combo[1:]:
            m = _instance_product(m, other)
        out.append(m)
    return out


def _tree_units(t: EliTree, acc: set) -> None:
    for r, inv, c in t.children:
        acc.add(("ex", r, inv, eli_canon(c)))
        _tree_units(c, acc)


def _sat_in_type(t: EliTree, ty: frozenset) -> bool:
    if not all(("atom", a) in ty for a in t.labels):
        return False
    return all(("ex", r, inv, eli_canon(c)) in ty for r, inv, c in t.children)


def split_partner_eli(
    qs, sig: Signature, max_units: int = 12
) -> list[PointedInstance]:
    """Split partner via type elimination; intrinsically exponential."""
    qs = [eli_canon(q) for q in qs]
    units: set = {("atom", a) for a in sig.concepts}
    for q in qs:
        _tree_units(q, units)
        units |= {("atom", a) for a in _all_labels(q)}
    unit_list = sorted(units, key=repr)
    if len(unit_list) > max_units:
        raise ValueError(
            f"type space too large: {len(unit_list)} units over cap "
            f"{max_units} ({2 ** len(unit_list)} candidate types)"
        )

    types = set()
    for mask in range(1 << len(unit_list)):
        types.add(
            frozenset(
                u for i, u in enumerate(unit_list) if mask >> i & 1
            )
        )

    ex_units = [u for u in unit_list if u[0] == "ex"]

    def coherent(t1: frozenset, t2: frozenset, role: str) -> bool:
        # t1 --role--> t2 edge admissible
        for u in ex_units:
            _, r, inv, c = u
            if r != role:
                continue
            if not inv and _sat_in_type(c, t2) and u not in t1:
                return False
            if inv and _sat_in_type(c, t1) and u not in t2:
                return False
        return True

    def witnessed(ty: frozenset, u, pool) -> bool:
        _, r, inv, c = u
        for t2 in pool:
            if not _sat_in_type(c, t2):
                continue
            if inv:
                if coherent(t2, ty, r):
                    return True
            elif coherent(ty, t2, r):
                return True
        return False

    changed = True
    while changed:
        changed = False
        for ty in list(types):
            for u in ex_units:
                if u in ty and not witnessed(ty, u, types):
                    types.discard(ty)
                    changed = True
                    break

    ordered = sorted(types, key=lambda ty: sorted(map(repr, ty)))
    name = {ty: f"t{i}" for i, ty in enumerate(ordered)}
    concepts = frozenset(
        (u[1], name[ty]) for ty in ordered for u in ty if u[0] == "atom"
    )
    roles = frozenset(
        (r, name[t1], name[t2])
        for r in sig.roles
        for t1 in ordered
        for t2 in ordered
        if coherent(t1, t2, r)
    )
    slice_ = RelSlice(concepts, roles)
    return [
        PointedInstance(slice_, name[ty])
        for ty in ordered
        if not any(_sat_in_type(q, ty) for q in qs)
    ]


def _all_labels(t: EliTree) -> set[str]:
    out = set(t.labels)
    for _, _, c in t.children:
        out |= _all_labels(c)
    return out


# ---------------------------------------------------------------------------
# Unwinding


def unwind(p: PointedInstance, node: str) -> PointedInstance:
    """Replace self-loops at a node by fresh saturated neighbours on both
    sides; the vocabulary is read off the instance itself."""
    loops = sorted({r for r, u, v in p.slice.roles if u == node and v == node})
    if not loops:
        return p
    all_concepts = sorted({a for a, _ in p.slice.concepts})
    all_roles = sorted({r for r, _, _ in p.slice.roles})
    concepts = set(p.slice.concepts)
    roles = set(p.slice.roles)
    for r in loops:
        roles.discard((r, node, node))
        down, up = f"{node}+{r}", f"{node}-{r}"
        roles.add((r, node, down))
        roles.add((r, up, node))
        for fresh in (down, up):
            concepts |= {(a, fresh) for a in all_concepts}
            roles |= {(r2, fresh, fresh) for r2 in all_roles}
    return PointedInstance(RelSlice(frozenset(concepts), frozenset(roles)), p.point)
