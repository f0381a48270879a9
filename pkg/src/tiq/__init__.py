"""Temporal instance queries: evaluation, normal forms, characterising
example sets, exact learning, and verification."""

__version__ = "0.1.0"
