"""Compile lexical rules and their interaction into definite-clause programs."""

__version__ = "0.1.0"
