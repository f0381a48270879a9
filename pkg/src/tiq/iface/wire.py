"""JSON wire codecs for queries, instances, example sets and sessions.

Decoding canonicalises: decode(encode(x)) structurally equals the
canonical form of x.  Inverse role assertions are never serialised; role
edges are written in their forward orientation only.
"""

from __future__ import annotations

from typing import Optional

from ..qcore import (
    And,
    Atom,
    BOT,
    Bot,
    ClassSpec,
    Ev,
    EvR,
    ExampleSet,
    Exists,
    Next,
    PropInstance,
    Query,
    RelSlice,
    Signature,
    TOP,
    TemporalInstance,
    Top,
    Until,
    canonicalize,
    conj,
)
from ..verify import VerifyReport


class WireError(ValueError):
    """Malformed wire payload."""


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise WireError(msg)


# ---------------------------------------------------------------------------
# Queries


def encode_query(q: Query) -> dict:
    if isinstance(q, Top):
        return {"op": "top"}
    if isinstance(q, Bot):
        return {"op": "bot"}
    if isinstance(q, Atom):
        return {"op": "atom", "name": q.name}
    if isinstance(q, And):
        return {"op": "and", "args": [encode_query(c) for c in q.children]}
    if isinstance(q, Next):
        return {"op": "next", "arg": encode_query(q.child)}
    if isinstance(q, Ev):
        return {"op": "eventually", "arg": encode_query(q.child)}
    if isinstance(q, EvR):
        return {"op": "eventually_r", "arg": encode_query(q.child)}
    if isinstance(q, Until):
        return {
            "op": "until",
            "left": encode_query(q.left),
            "right": encode_query(q.right),
        }
    if isinstance(q, Exists):
        return {
            "op": "exists",
            "role": q.role,
            "inverse": q.inverted,
            "arg": encode_query(q.child),
        }
    raise WireError(f"unknown query node: {type(q).__name__}")


def decode_query(obj) -> Query:
    _expect(isinstance(obj, dict) and "op" in obj, "query must be an object with 'op'")
    op = obj["op"]
    if op == "top":
        return TOP
    if op == "bot":
        return BOT
    if op == "atom":
        _expect(isinstance(obj.get("name"), str), "atom needs a string 'name'")
        return Atom(obj["name"])
    if op == "and":
        _expect(isinstance(obj.get("args"), list), "and needs an 'args' list")
        return canonicalize(conj([decode_query(a) for a in obj["args"]]))
    if op in ("next", "eventually", "eventually_r"):
        _expect("arg" in obj, f"{op} needs an 'arg'")
        child = decode_query(obj["arg"])
        cls = {"next": Next, "eventually": Ev, "eventually_r": EvR}[op]
        return canonicalize(cls(child))
    if op == "until":
        _expect("left" in obj and "right" in obj, "until needs 'left' and 'right'")
        return canonicalize(Until(decode_query(obj["left"]), decode_query(obj["right"])))
    if op == "exists":
        _expect(isinstance(obj.get("role"), str), "exists needs a string 'role'")
        return canonicalize(
            Exists(obj["role"], bool(obj.get("inverse", False)), decode_query(obj["arg"]))
        )
    raise WireError(f"unknown query op: {op!r}")


# ---------------------------------------------------------------------------
# Instances


def encode_instance(d) -> dict:
    if isinstance(d, PropInstance):
        return {"kind": "prop", "word": [sorted(s) for s in d.word]}
    if isinstance(d, TemporalInstance):
        slices = []
        for sl in d.slices:
            concepts: dict[str, list[str]] = {}
            for c, ind in sorted(sl.concepts):
                concepts.setdefault(ind, []).append(c)
            slices.append(
                {
                    "concepts": concepts,
                    "roles": [[r, u, v] for r, u, v in sorted(sl.roles)],
                }
            )
        return {"kind": "rel", "point": d.point, "slices": slices}
    raise WireError(f"unknown instance type: {type(d).__name__}")


def decode_instance(obj):
    _expect(isinstance(obj, dict), "instance must be an object")
    kind = obj.get("kind")
    if kind == "prop":
        word = obj.get("word")
        _expect(isinstance(word, list), "prop instance needs a 'word' list")
        for s in word:
            _expect(
                isinstance(s, list) and all(isinstance(a, str) for a in s),
                "each slice must be a list of atom names",
            )
        return PropInstance(tuple(frozenset(s) for s in word))
    if kind == "rel":
        _expect(isinstance(obj.get("point"), str), "rel instance needs a 'point'")
        _expect(isinstance(obj.get("slices"), list), "rel instance needs 'slices'")
        slices = []
        for sl in obj["slices"]:
            _expect(isinstance(sl, dict), "each slice must be an object")
            concepts = set()
            for ind, names in sl.get("concepts", {}).items():
                _expect(
                    isinstance(names, list) and all(isinstance(n, str) for n in names),
                    "slice concepts map individuals to name lists",
                )
                concepts.update((c, ind) for c in names)
            roles = set()
            for edge in sl.get("roles", []):
                _expect(
                    isinstance(edge, list) and len(edge) == 3
                    and all(isinstance(x, str) for x in edge),
                    "each role edge is [role, from, to]",
                )
                roles.add(tuple(edge))
            slices.append(RelSlice(frozenset(concepts), frozenset(roles)))
        return TemporalInstance(tuple(slices), obj["point"])
    raise WireError(f"unknown instance kind: {kind!r}")


# ---------------------------------------------------------------------------
# Example sets, signatures, class specs, reports


def encode_examples(e: ExampleSet) -> dict:
    return {
        "positives": [encode_instance(d) for d in e.positives],
        "negatives": [encode_instance(d) for d in e.negatives],
    }


def decode_examples(obj) -> ExampleSet:
    _expect(isinstance(obj, dict), "example set must be an object")
    for key in ("positives", "negatives"):
        _expect(isinstance(obj.get(key), list), f"example set needs a '{key}' list")
    return ExampleSet(
        tuple(decode_instance(d) for d in obj["positives"]),
        tuple(decode_instance(d) for d in obj["negatives"]),
    )


def encode_signature(sig: Signature) -> dict:
    return {
        "atoms": list(sig.atoms),
        "concepts": list(sig.concepts),
        "roles": list(sig.roles),
    }


def decode_signature(obj) -> Signature:
    _expect(isinstance(obj, dict), "signature must be an object")
    fields = {}
    for key in ("atoms", "concepts", "roles"):
        val = obj.get(key, [])
        _expect(
            isinstance(val, list) and all(isinstance(x, str) for x in val),
            f"signature '{key}' must be a list of names",
        )
        fields[key] = tuple(val)
    return Signature(**fields)


def encode_class_spec(spec: ClassSpec) -> dict:
    return {
        "class": spec.tag,
        "signature": encode_signature(spec.signature),
        "max_tdp": spec.max_tdp,
        "max_size": spec.max_size,
        "max_branch": spec.max_branch,
    }


def decode_class_spec(obj) -> ClassSpec:
    _expect(isinstance(obj, dict), "class spec must be an object")
    _expect(isinstance(obj.get("class"), str), "class spec needs a 'class' tag")
    _expect("signature" in obj, "class spec needs a 'signature'")
    kwargs = {}
    for key in ("max_tdp", "max_size", "max_branch"):
        if key in obj:
            _expect(isinstance(obj[key], int), f"'{key}' must be an integer")
            kwargs[key] = obj[key]
    return ClassSpec(obj["class"], decode_signature(obj["signature"]), **kwargs)


def encode_report(r: VerifyReport) -> dict:
    return {
        "unique": r.unique,
        "witnesses": [encode_query(w) for w in r.witnesses],
        "witness_count": r.witness_count,
        "candidate_count": r.candidate_count,
    }


# ---------------------------------------------------------------------------
# Sessions


def encode_session(session, session_id: Optional[str] = None,
                   asked: Optional[list] = None) -> dict:
    out = {
        "kind": session.kind,
        "signature": encode_signature(session.signature),
        "n": session.n,
        "status": session.phase,
        "answers": list(session.answers),
        "pending_query": (
            encode_instance(session.pending) if session.pending is not None else None
        ),
        "result": encode_query(session.result) if session.result is not None else None,
        "error": session.error,
    }
    if session_id is not None:
        out["id"] = session_id
    if asked is not None:
        out["asked"] = [
            {"instance": encode_instance(d), "answer": a} for d, a in asked
        ]
    return out
