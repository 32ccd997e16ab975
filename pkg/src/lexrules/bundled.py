"""The grammar shipped with the package (``data/paper.lex``)."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .grammar import Grammar, parse_grammar_text


def bundled_path():
    return resources.files("lexrules") / "data" / "paper.lex"


def bundled_text() -> str:
    return bundled_path().read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def example_grammar() -> Grammar:
    return parse_grammar_text(bundled_text(), "paper.lex").load()


def example_signature():
    return example_grammar().sig
