"""Wire formats, command line interface and the oracle-session service."""

from .wire import (
    WireError,
    decode_class_spec,
    decode_examples,
    decode_instance,
    decode_query,
    decode_signature,
    encode_class_spec,
    encode_examples,
    encode_instance,
    encode_query,
    encode_report,
    encode_session,
    encode_signature,
)
from .cli import cli_run, main
from .service import create_app, serve

__all__ = [
    "WireError",
    "decode_class_spec",
    "decode_examples",
    "decode_instance",
    "decode_query",
    "decode_signature",
    "encode_class_spec",
    "encode_examples",
    "encode_instance",
    "encode_query",
    "encode_report",
    "encode_session",
    "encode_signature",
    "cli_run",
    "main",
    "create_app",
    "serve",
]
