"""Termination proving and exact semantics for probabilistic term rewriting."""

__version__ = "0.1.0"
