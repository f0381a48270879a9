"""Wire codecs, command line interface, and the oracle-session service."""

import json
import random

import pytest
from fastapi.testclient import TestClient

from tiq.qcore import (
    Atom,
    BOT,
    ClassSpec,
    Ev,
    EvR,
    ExampleSet,
    Exists,
    Next,
    PropInstance,
    RelSlice,
    Signature,
    TOP,
    TemporalInstance,
    Until,
    canonicalize,
    conj,
    pretty,
)
from tiq.iface import (
    WireError,
    cli_run,
    create_app,
    decode_class_spec,
    decode_examples,
    decode_instance,
    decode_query,
    decode_signature,
    encode_class_spec,
    encode_examples,
    encode_instance,
    encode_query,
    encode_signature,
)
from tiq.semantics import equivalent, eval_any

from conftest import rand_node, rand_word

A, B = Atom("A"), Atom("B")


def rand_query(rng: random.Random, depth: int, relational: bool):
    atoms = ("A", "B")
    if depth == 0:
        picks = [a for a in atoms if rng.random() < 0.5]
        if relational and rng.random() < 0.4:
            return Exists("P", rng.random() < 0.5,
                          conj([Atom(a) for a in picks]))
        return conj([Atom(a) for a in picks])
    roll = rng.random()
    child = rand_query(rng, depth - 1, relational)
    if roll < 0.2:
        return Next(child)
    if roll < 0.4:
        return Ev(child)
    if roll < 0.55:
        return EvR(child)
    if roll < 0.7:
        left = BOT if rng.random() < 0.4 else conj(
            [Atom(a) for a in atoms if rng.random() < 0.5]
        )
        return Until(left, child)
    return conj([rand_query(rng, 0, relational), child])


def rand_rel_instance(rng: random.Random) -> TemporalInstance:
    inds = ("a", "b", "c")
    slices = []
    for _ in range(rng.randint(1, 3)):
        concepts = frozenset(
            (c, i) for c in ("A", "B") for i in inds if rng.random() < 0.3
        )
        roles = frozenset(
            ("P", u, v) for u in inds for v in inds if rng.random() < 0.2
        )
        slices.append(RelSlice(concepts, roles))
    return TemporalInstance(tuple(slices), "a")


class TestWireRoundTrips:
    def test_queries(self):
        rng = random.Random(61)
        for _ in range(1000):
            q = canonicalize(rand_query(rng, rng.randint(0, 4),
                                        rng.random() < 0.5))
            assert decode_query(encode_query(q)) == q

    def test_instances(self):
        rng = random.Random(62)
        for _ in range(1000):
            if rng.random() < 0.5:
                d = rand_word(rng, ("A", "B"), 5)
            else:
                d = rand_rel_instance(rng)
            assert decode_instance(encode_instance(d)) == d

    def test_example_sets(self):
        rng = random.Random(63)
        for _ in range(1000):
            e = ExampleSet(
                tuple(rand_word(rng, ("A", "B"), 4)
                      for _ in range(rng.randint(0, 3))),
                tuple(rand_rel_instance(rng)
                      for _ in range(rng.randint(0, 3))),
            )
            assert decode_examples(encode_examples(e)) == e

    def test_signatures_and_specs(self):
        rng = random.Random(64)
        pools = (("A",), ("A", "B"), ("A", "B", "C"))
        for _ in range(1000):
            sig = Signature(
                atoms=rng.choice(pools),
                concepts=rng.choice(pools) if rng.random() < 0.5 else (),
                roles=("P",) if rng.random() < 0.5 else (),
            )
            assert decode_signature(encode_signature(sig)) == sig
            spec = ClassSpec("path-od", sig, max_tdp=rng.randint(0, 5),
                             max_size=rng.randint(1, 9))
            assert decode_class_spec(encode_class_spec(spec)) == spec

    def test_decoding_canonicalises(self):
        obj = {"op": "and", "args": [
            {"op": "atom", "name": "B"},
            {"op": "and", "args": [{"op": "atom", "name": "A"},
                                   {"op": "top"}]},
        ]}
        assert decode_query(obj) == canonicalize(conj([A, B]))

    @pytest.mark.parametrize("obj", [
        {"no_op": 1},
        {"op": "atom", "name": 3},
        {"op": "mystery"},
        {"kind": "mystery"},
        {"kind": "prop", "word": [["A"], "B"]},
    ])
    def test_malformed_rejected(self, obj):
        with pytest.raises(WireError):
            (decode_query if "op" in obj or "no_op" in obj
             else decode_instance)(obj)


@pytest.fixture
def files(tmp_path):
    def write(name: str, payload) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)
    return write


SIG_AB_JSON = {"atoms": ["A", "B"], "concepts": [], "roles": []}


class TestCli:
    def test_eval_positive(self, files, capsys):
        q = EvR(conj([A, Next(conj([A, B]))]))
        d = PropInstance((frozenset({"A"}), frozenset({"A", "B"})))
        code = cli_run([
            "eval", "--query", files("q.json", encode_query(q)),
            "--instance", files("d.json", encode_instance(d)), "--pos", "0",
        ])
        assert code == 0
        assert capsys.readouterr().out.strip() == "true"

    def test_entail_reflexive(self, files, capsys):
        path = files("q.json", encode_query(Ev(conj([A, B]))))
        assert cli_run(["entail", "--q1", path, "--q2", path]) == 0
        assert capsys.readouterr().out.strip() == "true"

    def test_normalize(self, files, capsys):
        q = Next(EvR(A))
        code = cli_run(["normalize", "--query", files("q.json", encode_query(q))])
        assert code == 0
        assert capsys.readouterr().out.strip() == pretty(Ev(A))

    def test_characterize_fits(self, files, capsys):
        q = Ev(conj([A, B]))
        code = cli_run([
            "--format", "json", "characterize",
            "--class", "path-strict", "--sig", files("sig.json", SIG_AB_JSON),
            "--query", files("q.json", encode_query(q)),
        ])
        assert code == 0
        e = decode_examples(json.loads(capsys.readouterr().out))
        assert all(eval_any(q, d) for d in e.positives)
        assert not any(eval_any(q, d) for d in e.negatives)

    def test_verify_unique(self, files, capsys):
        q = Ev(conj([A, B]))
        spec = ClassSpec("path-strict", Signature(atoms=("A", "B")),
                         max_tdp=2, max_size=6)
        from tiq.characterize import char_path_strict

        code = cli_run([
            "verify", "--query", files("q.json", encode_query(q)),
            "--spec", files("spec.json", encode_class_spec(spec)),
            "--examples", files("e.json",
                                encode_examples(char_path_strict(q))),
        ])
        assert code == 0
        assert capsys.readouterr().out.strip() == "unique"

    def test_learn_simulated(self, files, capsys):
        target = files("t.json", encode_query(Ev(A)))
        code = cli_run([
            "--format", "json", "learn", "--mode", "safe",
            "--oracle", f"sim:{target}",
            "--sig", files("sig.json", SIG_AB_JSON),
        ])
        assert code == 0
        body = json.loads(capsys.readouterr().out)
        assert equivalent(decode_query(body["query"]), Ev(A))
        assert body["membership_queries"] > 0

    def test_domain_error_exit_one(self, files, capsys):
        code = cli_run([
            "eval", "--query", "/nonexistent.json",
            "--instance", files("d.json", {"kind": "prop", "word": []}),
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_usage_error_exit_two(self, capsys):
        assert cli_run(["mystery"]) == 2
        assert cli_run([]) == 2


@pytest.fixture
def client():
    return TestClient(create_app())


def run_to_done(client, sid: str, target) -> dict:
    state = client.get(f"/api/sessions/{sid}").json()
    while state["status"] not in ("done", "failed"):
        answer = eval_any(target, decode_instance(state["pending_query"]))
        resp = client.post(f"/api/sessions/{sid}/answer",
                           json={"value": answer})
        assert resp.status_code == 200
        state = resp.json()
    return state


class TestService:
    def test_scripted_transcript(self, client):
        resp = client.post("/api/sessions", json={
            "class": "path-od-safe", "signature": {"atoms": ["A"]},
        })
        assert resp.status_code == 201
        sid = resp.json()["id"]
        state = run_to_done(client, sid, Ev(A))
        assert state["status"] == "done"
        assert equivalent(decode_query(state["result"]), Ev(A))
        assert len(state["asked"]) == len(state["answers"]) == 7
        for entry in state["asked"]:
            d = decode_instance(entry["instance"])
            assert entry["answer"] == eval_any(Ev(A), d)

    def test_answer_after_done_conflicts(self, client):
        sid = client.post("/api/sessions", json={
            "class": "path-od-safe", "signature": {"atoms": ["A"]},
        }).json()["id"]
        run_to_done(client, sid, Ev(A))
        resp = client.post(f"/api/sessions/{sid}/answer", json={"value": True})
        assert resp.status_code == 409

    def test_unknown_session(self, client):
        assert client.get("/api/sessions/nope").status_code == 404
        assert client.post("/api/sessions/nope/answer",
                           json={"value": True}).status_code == 404

    def test_delete(self, client):
        sid = client.post("/api/sessions", json={
            "class": "path-od-safe", "signature": {"atoms": ["A"]},
        }).json()["id"]
        assert client.delete(f"/api/sessions/{sid}").status_code == 204
        assert client.get(f"/api/sessions/{sid}").status_code == 404

    def test_malformed_creation(self, client):
        resp = client.post("/api/sessions", json={
            "class": "mystery", "signature": {"atoms": ["A"]},
        })
        assert resp.status_code == 422
        resp = client.post("/api/sessions", json={
            "class": "path-od-safe", "signature": {"atoms": [1]},
        })
        assert resp.status_code == 422

    def test_malformed_answer(self, client):
        sid = client.post("/api/sessions", json={
            "class": "path-od-safe", "signature": {"atoms": ["A"]},
        }).json()["id"]
        resp = client.post(f"/api/sessions/{sid}/answer",
                           json={"value": "maybe"})
        assert resp.status_code == 422

    def test_concurrent_sessions_isolated(self, client):
        make = lambda: client.post("/api/sessions", json={
            "class": "path-od-safe", "signature": {"atoms": ["A"]},
        }).json()["id"]
        sid1, sid2 = make(), make()
        targets = {sid1: Ev(A), sid2: EvR(A)}
        states = {sid: client.get(f"/api/sessions/{sid}").json()
                  for sid in (sid1, sid2)}
        active = [sid1, sid2]
        while active:
            for sid in list(active):
                state = states[sid]
                if state["status"] in ("done", "failed"):
                    active.remove(sid)
                    continue
                answer = eval_any(targets[sid],
                                  decode_instance(state["pending_query"]))
                states[sid] = client.post(
                    f"/api/sessions/{sid}/answer", json={"value": answer}
                ).json()
        assert equivalent(decode_query(states[sid1]["result"]), Ev(A))
        assert equivalent(decode_query(states[sid2]["result"]), EvR(A))
