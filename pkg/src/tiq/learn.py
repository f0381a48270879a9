"""Exact learning of path queries with membership queries.

The direct learners rebuild the target's block skeleton by probing a
saturated word, weakening it one oracle-approved rule application at a
time, and finally reading the gap structure off merge/distance probes.
A generic learner works for any class with a characterising-set
constructor by enumerating candidates smallest-first.  Everything is also
exposed as a resumable session state machine for external answerers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .qcore import (
    ClassSpec,
    EliTree,
    LE,
    PathQueryCQ,
    Query,
    Signature,
    canonicalize,
    eli_canon,
    lt,
    pretty,
)
from .normalform import cq_to_query, normalize_cq, to_upath
from .semantics import eval_any
from .characterize import (
    _PropDim,
    _RelDim,
    _pslice,
    _render_layout,
    char2d_diamond_bounded,
    char2d_path,
    char2d_upath,
    char_diamond_bounded_balanced,
    char_path_od_bounded,
    char_path_strict,
    char_upath_peerless,
)
from .elilab import PointedInstance, a_sigma, instance_to_tree, unwind


class LearnFailure(Exception):
    """Limits exceeded or the oracle's answers are inconsistent."""


# ---------------------------------------------------------------------------
# Oracles


@dataclass
class Oracle:
    """Membership oracle with an invocation counter and an answer cache.

    Answers must be functionally determined by the instance; repeated
    queries are served from the cache without a new invocation.
    """

    fn: Callable[[object], bool]
    count: int = 0
    consistent: bool = True
    _cache: dict = field(default_factory=dict)

    def membership(self, instance) -> bool:
        if instance in self._cache:
            return self._cache[instance]
        answer = bool(self.fn(instance))
        self.count += 1
        self._cache[instance] = answer
        return answer


def simulated(q: Query) -> Oracle:
    """An oracle that evaluates the target query itself."""
    return Oracle(lambda d: eval_any(q, d))


@dataclass(frozen=True)
class Limits:
    max_b: int = 64
    max_queries: int = 100_000
    max_steps: int = 10_000


# ---------------------------------------------------------------------------
# Shared skeleton machinery
#
# The working hypothesis is a list of blocks (words of node queries) kept
# at uniform separator distance b.  Rule candidates propose a new block
# list; a candidate is adopted when its rendering still satisfies the
# target according to the oracle.


class _Run:
    def __init__(self, oracle: Oracle, dim, limits: Limits, phase_box):
        self.oracle = oracle
        self.dim = dim
        self.limits = limits
        self.phase_box = phase_box
        self.steps = 0

    def phase(self, name: str) -> None:
        self.phase_box[0] = name

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise LearnFailure("step limit exceeded")
        if self.oracle.count > self.limits.max_queries:
            raise LearnFailure("membership-query limit exceeded")

    def ask_blocks(self, blocks, b, dists=None) -> bool:
        self.tick()
        if dists is None:
            dists = [b] * (len(blocks) - 1)
        inst = _render_layout(blocks, dists, self.dim)
        return self.oracle.membership(inst)


def _rule_a(blocks, dim):
    """Weaken one node, or drop an empty one.

    Unlike the characterising-set negatives, the head position is included:
    every candidate is adopted only on an accepting oracle answer, and a
    stable hypothesis still rejects all of them.
    """
    for i, blk in enumerate(blocks):
        for j, node in enumerate(blk):
            if dim.is_empty_node(node):
                if i == 0 and j == 0:
                    continue
                nb = blk[:j] + blk[j + 1 :]
                if nb:
                    yield blocks[:i] + [nb] + blocks[i + 1 :]
                elif i > 0:
                    yield blocks[:i] + blocks[i + 1 :]
            else:
                for w in dim.weakenings(node):
                    nb = blk[:j] + (w,) + blk[j + 1 :]
                    yield blocks[:i] + [nb] + blocks[i + 1 :]


def _rule_b(blocks, dim):
    """Cut a successor step into a padding gap."""
    for i, blk in enumerate(blocks):
        for l in range(len(blk) - 1):
            yield blocks[:i] + [blk[: l + 1], blk[l + 1 :]] + blocks[i + 1 :]


def _rule_cde(blocks, dim):
    """Boundary-duplication splits: interior echo, weakened end or head
    with an echo of the original, and head duplication."""
    for i, blk in enumerate(blocks):
        for l in range(1, len(blk) - 1):
            if not dim.is_empty_node(blk[l]):
                yield blocks[:i] + [blk[: l + 1], blk[l:]] + blocks[i + 1 :]
        if len(blk) >= 2:
            if dim.can_weaken(blk[-1]):
                for w in dim.weakenings(blk[-1]):
                    yield blocks[:i] + [blk[:-1] + (w,), (blk[-1],)] + blocks[i + 1 :]
            if dim.can_weaken(blk[0]):
                for w in dim.weakenings(blk[0]):
                    yield blocks[:i] + [(blk[0],), (w,) + blk[1:]] + blocks[i + 1 :]
    blk0 = blocks[0]
    if not dim.is_empty_node(blk0[0]):
        if len(blk0) == 1:
            for w in dim.weakenings(blk0[0]):
                yield [(w,), blk0] + blocks[1:]
        else:
            yield [(blk0[0],), blk0] + blocks[1:]


def _saturate_rules(run: _Run, blocks, b):
    """Apply the block-perturbation rules as long as the oracle keeps
    accepting the result."""
    run.phase("saturate-rules")
    changed = True
    while changed:
        changed = False
        for gen in (_rule_a, _rule_b, _rule_cde):
            for cand in gen(blocks, run.dim):
                if run.ask_blocks(cand, b):
                    blocks = cand
                    changed = True
                    break
            if changed:
                break
    return blocks


def _splittable(node) -> bool:
    if isinstance(node, EliTree):
        from .elilab import is_splittable

        return is_splittable(node)
    return len(node) >= 2


def _lone_positions(blocks):
    return [
        i
        for i in range(1, len(blocks))
        if len(blocks[i]) == 1 and _splittable(blocks[i][0])
    ]


def _lone_parts(node):
    """Decompose a node query into its indivisible conjuncts."""
    if isinstance(node, EliTree):
        parts = [EliTree(frozenset({l}), ()) for l in sorted(node.labels)]
        parts.extend(
            eli_canon(EliTree(frozenset(), (ch,))) for ch in node.children
        )
        return parts
    return [frozenset({a}) for a in sorted(node)]


def _resolve_lone(run: _Run, blocks, b):
    """Expand unresolved single-node blocks into repeated weaker parts and
    prune the copies the target does not need.  A block whose expansions
    are all rejected is a genuine conjunction and is kept as is."""
    run.phase("resolve-lone")
    i = 1
    while i < len(blocks):
        if len(blocks[i]) != 1 or not _splittable(blocks[i][0]):
            i += 1
            continue
        parts = _lone_parts(blocks[i][0])
        expanded = None
        for k in range(1, run.limits.max_b + 1):
            words = [(p,) for p in parts] * k
            cand = blocks[:i] + words + blocks[i + 1 :]
            if run.ask_blocks(cand, b):
                expanded = cand
                break
        if expanded is None:
            i += 1
            continue
        blocks = expanded
        changed = True
        while changed:
            changed = False
            for j in range(len(blocks)):
                if len(blocks[j]) != 1 or (j == 0 and len(blocks) == 1):
                    continue
                cand = blocks[:j] + blocks[j + 1 :]
                if cand and run.ask_blocks(cand, b):
                    blocks = cand
                    changed = True
                    break
        blocks = _saturate_rules(run, blocks, b)
        i = 1
    return blocks


def _infer_gaps(run: _Run, blocks, b):
    """Read each gap off a merge probe and, failing that, the minimal
    accepted distance."""
    run.phase("infer-gaps")
    gaps = []
    for i in range(len(blocks) - 1):
        dists = [b] * (len(blocks) - 1)
        dists[i] = 0
        if run.ask_blocks(blocks, b, dists):
            gaps.append(LE)
            continue
        n_i = None
        for d in range(1, b + 1):
            dists[i] = d
            if run.ask_blocks(blocks, b, dists):
                n_i = d
                break
        if n_i is None:
            raise LearnFailure("no accepted distance between adjacent blocks")
        gaps.append(lt(n_i))
    return gaps


def _read_off(blocks, gaps) -> Query:
    cq = PathQueryCQ(tuple(tuple(blk) for blk in blocks), tuple(gaps))
    return canonicalize(cq_to_query(normalize_cq(cq)))


def _validate(oracle: Oracle, result: Query) -> Query:
    for inst, answer in oracle._cache.items():
        if eval_any(result, inst) != answer:
            oracle.consistent = False
            raise LearnFailure(
                "oracle answers are inconsistent with every candidate; "
                f"hypothesis {pretty(result)} conflicts with a logged answer"
            )
    return result


# ---------------------------------------------------------------------------
# 1D learners


def _probe_b_1d(run: _Run, sig: Signature):
    run.phase("probe-depth")
    sigma = frozenset(sig.atoms)
    for k in range(1, run.limits.max_b + 1):
        if run.ask_blocks([tuple([sigma] * k)], 1):
            return k + 1
    raise LearnFailure("saturated words up to the probe limit never satisfied "
                       "the target")


def _learn_1d(oracle: Oracle, sig: Signature, limits: Limits,
              size_bound: Optional[int], phase_box=None) -> Query:
    run = _Run(oracle, _PropDim(), limits, phase_box if phase_box is not None else [""])
    b = _probe_b_1d(run, sig)
    sigma = frozenset(sig.atoms)
    blocks = [tuple([sigma] * b)]
    blocks = _saturate_rules(run, blocks, b)
    if size_bound is None:
        blocks = _resolve_lone(run, blocks, b)
    else:
        # bounded variant: alternate weakened copies instead of singletons,
        # returning to rule saturation after every adopted expansion
        while True:
            fired = False
            for i in _lone_positions(blocks):
                parts = run.dim.weakenings(blocks[i][0])
                words = [(p,) for p in parts] * size_bound
                cand = blocks[:i] + words + blocks[i + 1 :]
                if run.ask_blocks(cand, b):
                    blocks = _saturate_rules(run, cand, b)
                    fired = True
                    break
            if not fired:
                break
    gaps = _infer_gaps(run, blocks, b)
    result = _read_off(blocks, gaps)
    run.phase("done")
    return _validate(oracle, result)


def learn_path_od_safe(oracle: Oracle, sig: Signature,
                       limits: Limits = Limits()) -> Query:
    """Learn a safe next/reflexive-eventually path query over sig."""
    return _learn_1d(oracle, sig, limits, size_bound=None)


def learn_path_od_sized(oracle: Oracle, sig: Signature, n: int,
                        limits: Limits = Limits()) -> Query:
    """Learn a next/reflexive-eventually path query of size at most n."""
    return _learn_1d(oracle, sig, limits, size_bound=n)


# ---------------------------------------------------------------------------
# 2D learner


def _tree_shape_slices(run: _Run, oracle: Oracle, slices, limits: Limits):
    """Unwind self-loops and minimise each slice until all are tree-shaped,
    keeping the whole instance accepted throughout."""

    def render(sls):
        return run.dim.make([_pslice(p, i) for i, p in enumerate(sls)])

    def accepted(sls) -> bool:
        run.tick()
        return oracle.membership(render(sls))

    for _ in range(limits.max_steps):
        loop_at = None
        for i, p in enumerate(slices):
            if any(u == v for _, u, v in p.slice.roles):
                loop_at = i
                break
        if loop_at is None:
            return slices
        i = loop_at
        p = slices[i]
        node = next(u for _, u, v in sorted(p.slice.roles) if u == v)
        p = unwind(p, node)
        slices = slices[:i] + [p] + slices[i + 1 :]
        # minimise the unwound slice atom by atom
        changed = True
        while changed:
            changed = False
            sl = slices[i].slice
            atoms = [("c", a) for a in sorted(sl.concepts)] + [
                ("r", r) for r in sorted(sl.roles)
            ]
            for kind, atom in atoms:
                if kind == "c":
                    nsl = type(sl)(sl.concepts - {atom}, sl.roles)
                else:
                    nsl = type(sl)(sl.concepts, sl.roles - {atom})
                cand = slices[:i] + [PointedInstance(nsl, slices[i].point)] + slices[i + 1 :]
                if accepted(cand):
                    slices = cand
                    changed = True
                    break
    raise LearnFailure("slice unwinding did not terminate within limits")


def learn2d_path(oracle: Oracle, sig: Signature, limits: Limits = Limits(),
                 n: Optional[int] = None, phase_box=None) -> Query:
    """Learn a next/reflexive-eventually path query with tree-shaped
    relational node queries over a 2D signature."""
    run = _Run(oracle, _RelDim(), limits, phase_box if phase_box is not None else [""])
    run.phase("probe-depth")
    asig = a_sigma(sig)
    b = None
    for k in range(1, limits.max_b + 1):
        run.tick()
        inst = run.dim.make([_pslice(asig, i) for i in range(k)])
        if oracle.membership(inst):
            b = k + 1
            break
    if b is None:
        raise LearnFailure("saturated instances up to the probe limit never "
                           "satisfied the target")
    slices = [asig] * (b)
    slices = _tree_shape_slices(run, oracle, slices, limits)
    blocks = [tuple(eli_canon(instance_to_tree(p)) for p in slices)]
    blocks = _saturate_rules(run, blocks, b)
    if n is None:
        blocks = _resolve_lone(run, blocks, b)
    else:
        while True:
            fired = False
            for i in _lone_positions(blocks):
                parts = run.dim.weakenings(blocks[i][0])
                words = [(p,) for p in parts] * n
                cand = blocks[:i] + words + blocks[i + 1 :]
                if run.ask_blocks(cand, b):
                    blocks = _saturate_rules(run, cand, b)
                    fired = True
                    break
            if not fired:
                break
    gaps = _infer_gaps(run, blocks, b)
    result = _read_off(blocks, gaps)
    run.phase("done")
    return _validate(oracle, result)


# ---------------------------------------------------------------------------
# Enumeration learner


def _char_for(spec: ClassSpec):
    tag = spec.tag
    if tag == "path-od":
        return lambda q: char_path_od_bounded(q, spec.max_size)
    if tag == "path-strict":
        return char_path_strict
    if tag in ("upath", "upath-peerless"):
        return lambda q: char_upath_peerless(to_upath(q), spec.signature)
    if tag in ("diamond", "diamond-balanced-bounded"):
        return lambda q: char_diamond_bounded_balanced(q, spec.max_branch)
    if tag == "2d-path-od":
        return char2d_path
    if tag == "2d-upath":
        return lambda q: char2d_upath(q, spec.signature)
    if tag == "2d-diamond":
        return lambda q: char2d_diamond_bounded(q, spec.max_branch, spec.signature)
    raise ValueError(f"no characterising-set constructor for class {tag}")


def learn_by_enumeration(oracle: Oracle, spec: ClassSpec) -> Query:
    """Learn by checking each class member's characterising set against the
    oracle, smallest candidates first."""
    from .verify import enumerate_class

    constructor = _char_for(spec)
    for cand in enumerate_class(spec):
        try:
            e = constructor(cand)
        except ValueError:
            continue
        if all(oracle.membership(d) for d in e.positives) and not any(
            oracle.membership(d) for d in e.negatives
        ):
            return _validate(oracle, cand)
    raise LearnFailure("no class member within bounds matches the oracle")


# ---------------------------------------------------------------------------
# Resumable sessions


class _NeedAnswer(Exception):
    def __init__(self, instance):
        self.instance = instance


@dataclass(frozen=True)
class LearnSession:
    """A paused learning run, resumable by answering the pending query.

    The answered log replays deterministically: the session is
    reconstructed from scratch on every step.
    """

    kind: str  # path-od-safe | path-od-sized | 2d-path
    signature: Signature
    n: Optional[int]
    limits: Limits
    answers: tuple
    phase: str
    pending: object
    result: Optional[Query] = None
    error: Optional[str] = None


_SESSION_KINDS = ("path-od-safe", "path-od-sized", "2d-path")


def _drive(kind: str, sig: Signature, n: Optional[int], limits: Limits,
           answers: tuple) -> LearnSession:
    idx = 0

    def scripted(instance) -> bool:
        nonlocal idx
        if idx >= len(answers):
            raise _NeedAnswer(instance)
        value = answers[idx]
        idx += 1
        return value

    oracle = Oracle(scripted)
    phase_box = ["probe-depth"]
    try:
        if kind == "path-od-safe":
            result = _learn_1d(oracle, sig, limits, None, phase_box)
        elif kind == "path-od-sized":
            result = _learn_1d(oracle, sig, limits, n, phase_box)
        else:
            result = learn2d_path(oracle, sig, limits, n, phase_box)
    except _NeedAnswer as need:
        return LearnSession(kind, sig, n, limits, answers, phase_box[0],
                            need.instance)
    except LearnFailure as failure:
        return LearnSession(kind, sig, n, limits, answers, "failed", None,
                            error=str(failure))
    return LearnSession(kind, sig, n, limits, answers, "done", None,
                        result=result)


def start_session(kind: str, sig: Signature, n: Optional[int] = None,
                  limits: Limits = Limits()) -> LearnSession:
    if kind not in _SESSION_KINDS:
        raise ValueError(f"unknown session kind: {kind}")
    if kind == "path-od-sized" and n is None:
        raise ValueError("path-od-sized sessions need the size bound n")
    return _drive(kind, sig, n, limits, ())


def session_step(s: LearnSession, answer: bool) -> LearnSession:
    """Consume one answer and advance to the next pending query."""
    if s.phase in ("done", "failed"):
        raise ValueError("session is already finished")
    return _drive(s.kind, s.signature, s.n, s.limits,
                  s.answers + (bool(answer),))
