"""Command line interface: evaluation, entailment, normal forms,
characterising sets, verification, learning, and the session service."""

from __future__ import annotations

import argparse
import json
import sys

from ..qcore import ClassSpec, Signature, pretty
from ..semantics import entails, entails_bruteforce, eval_any
from ..normalform import cq_to_query, normalize
from ..verify import fits, verify_unique
from ..learn import (
    LearnFailure,
    Limits,
    Oracle,
    learn2d_path,
    learn_by_enumeration,
    learn_path_od_safe,
    learn_path_od_sized,
    simulated,
)
from .wire import (
    WireError,
    decode_class_spec,
    decode_examples,
    decode_instance,
    decode_query,
    decode_signature,
    encode_examples,
    encode_instance,
    encode_query,
    encode_report,
)


class DomainError(Exception):
    pass


def _load(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise DomainError(f"cannot read {path}: {err}")
    except json.JSONDecodeError as err:
        raise DomainError(f"{path} is not valid JSON: {err}")


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _signature_of(args) -> Signature:
    if getattr(args, "sig", None):
        return decode_signature(_load(args.sig))
    raise DomainError("a --sig signature file is required here")


def _cmd_eval(args) -> int:
    q = decode_query(_load(args.query))
    d = decode_instance(_load(args.instance))
    value = eval_any(q, d, args.pos)
    _emit(args, {"value": value}, "true" if value else "false")
    return 0


def _cmd_entail(args) -> int:
    q1 = decode_query(_load(args.q1))
    q2 = decode_query(_load(args.q2))
    try:
        value = entails(q1, q2)
    except (ValueError, NotImplementedError):
        if not args.sig:
            raise DomainError(
                "no structural entailment procedure for this pair; "
                "give --sig and --maxlen for a brute-force check"
            )
        sig = _signature_of(args)
        value = entails_bruteforce(q1, q2, sig, args.maxlen)
    _emit(args, {"value": value}, "true" if value else "false")
    return 0


def _cmd_normalize(args) -> int:
    q = decode_query(_load(args.query))
    nf = cq_to_query(normalize(q))
    _emit(args, {"query": encode_query(nf)}, pretty(nf))
    return 0


def _class_spec(args) -> ClassSpec:
    if getattr(args, "cls", None) is None:
        raise DomainError("--class is required here")
    sig = _signature_of(args)
    kwargs = {}
    if args.tdp is not None:
        kwargs["max_tdp"] = args.tdp
    if args.size is not None:
        kwargs["max_size"] = args.size
    if args.branch is not None:
        kwargs["max_branch"] = args.branch
    try:
        return ClassSpec(args.cls, sig, **kwargs)
    except ValueError as err:
        raise DomainError(str(err))


def _cmd_characterize(args) -> int:
    from ..learn import _char_for

    q = decode_query(_load(args.query))
    spec = _class_spec(args)
    try:
        examples = _char_for(spec)(q)
    except ValueError as err:
        raise DomainError(str(err))
    if not fits(q, examples):
        raise DomainError("internal error: constructed set does not fit the query")
    _emit(
        args,
        encode_examples(examples),
        json.dumps(encode_examples(examples), indent=2),
    )
    return 0


def _cmd_verify(args) -> int:
    q = decode_query(_load(args.query))
    spec = decode_class_spec(_load(args.spec))
    examples = decode_examples(_load(args.examples))
    try:
        report = verify_unique(q, examples, spec)
    except ValueError as err:
        raise DomainError(str(err))
    text = "unique" if report.unique else (
        "not unique; witnesses: "
        + ", ".join(pretty(w) for w in report.witnesses)
    )
    _emit(args, encode_report(report), text)
    return 0


def _make_oracle(desc: str) -> Oracle:
    if desc.startswith("sim:"):
        return simulated(decode_query(_load(desc[4:])))
    if desc == "stdio":
        def ask(instance) -> bool:
            sys.stdout.write(json.dumps(encode_instance(instance)) + "\n")
            sys.stdout.flush()
            line = sys.stdin.readline()
            if not line:
                raise DomainError("oracle input closed")
            token = line.strip().lower()
            if token in ("y", "yes", "true", "1"):
                return True
            if token in ("n", "no", "false", "0"):
                return False
            raise DomainError(f"unrecognised oracle answer: {token!r}")

        return Oracle(ask)
    if desc.startswith("http:") or desc.startswith("https:"):
        import httpx

        def ask(instance) -> bool:
            resp = httpx.post(desc, json=encode_instance(instance))
            resp.raise_for_status()
            body = resp.json()
            return bool(body["value"] if isinstance(body, dict) else body)

        return Oracle(ask)
    raise DomainError(f"unknown oracle: {desc!r} (use sim:<file>, stdio, http:<url>)")


def _cmd_learn(args) -> int:
    oracle = _make_oracle(args.oracle)
    limits = Limits(max_queries=args.max_queries)
    try:
        if args.mode == "safe":
            result = learn_path_od_safe(oracle, _signature_of(args), limits)
        elif args.mode == "sized":
            if args.n is None:
                raise DomainError("--n is required for the sized learner")
            result = learn_path_od_sized(oracle, _signature_of(args), args.n, limits)
        elif args.mode == "2d":
            result = learn2d_path(oracle, _signature_of(args), limits, n=args.n)
        else:
            result = learn_by_enumeration(oracle, _class_spec(args))
    except LearnFailure as err:
        raise DomainError(str(err))
    _emit(
        args,
        {"query": encode_query(result), "membership_queries": oracle.count},
        pretty(result),
    )
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port, idle_ttl=args.idle_ttl,
          static_dir=args.static)
    return 0


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="tiq", description="temporal instance queries toolkit"
    )
    top.add_argument("--format", choices=("text", "json"), default="text")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a query on an instance")
    p.add_argument("--query", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--pos", type=int, default=0)
    p.set_defaults(run=_cmd_eval)

    p = sub.add_parser("entail", help="decide query entailment")
    p.add_argument("--q1", required=True)
    p.add_argument("--q2", required=True)
    p.add_argument("--sig")
    p.add_argument("--maxlen", type=int, default=12)
    p.set_defaults(run=_cmd_entail)

    p = sub.add_parser("normalize", help="rewrite a query to normal form")
    p.add_argument("--query", required=True)
    p.set_defaults(run=_cmd_normalize)

    def class_args(p):
        p.add_argument("--class", dest="cls", required=True)
        p.add_argument("--sig", required=True)
        p.add_argument("--tdp", type=int, default=None)
        p.add_argument("--size", type=int, default=None)
        p.add_argument("--branch", type=int, default=None)

    p = sub.add_parser("characterize", help="build a characterising example set")
    class_args(p)
    p.add_argument("--query", required=True)
    p.set_defaults(run=_cmd_characterize)

    p = sub.add_parser("verify", help="check an example set for uniqueness")
    p.add_argument("--spec", required=True, help="class spec JSON file")
    p.add_argument("--query", required=True)
    p.add_argument("--examples", required=True)
    p.set_defaults(run=_cmd_verify)

    p = sub.add_parser("learn", help="learn a query with membership queries")
    p.add_argument("--mode", choices=("safe", "sized", "2d", "enumerate"),
                   default="safe")
    p.add_argument("--oracle", required=True,
                   help="sim:<target.json> | stdio | http:<url>")
    p.add_argument("--sig")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--max-queries", type=int, default=100_000)
    p.add_argument("--class", dest="cls")
    p.add_argument("--tdp", type=int, default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--branch", type=int, default=None)
    p.set_defaults(run=_cmd_learn)

    p = sub.add_parser("serve", help="run the oracle-session HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--idle-ttl", type=float, default=3600.0)
    p.add_argument("--static", default=None, help="directory of UI assets to host")
    p.set_defaults(run=_cmd_serve)

    return top


def cli_run(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_err:
        return 2 if exit_err.code not in (0, None) else 0
    try:
        return args.run(args)
    except (DomainError, WireError) as err:
        message = {"error": str(err)}
        if getattr(args, "format", "text") == "json":
            print(json.dumps(message), file=sys.stderr)
        else:
            print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
