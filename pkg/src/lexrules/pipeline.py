"""Compiler driver: grammar in, :class:`~lexrules.transform.CompiledLexicon` out."""

from __future__ import annotations

import json
import os
from collections import OrderedDict
from dataclasses import asdict, dataclass, fields, replace

from .featstruct import FeatureStructure
from .grammar import Grammar
from .interaction import (build_global_fsa, compute_follow, encode_interaction, group_classes,
                          prune_for_entry, reduce_by_propagation)
from .rules import compile_rule
from .runtime import DEFAULT_DEPTH, Program
from .transform import (DEFAULT_LIFT_CAP, CompiledLexicon, ExtendedLexicalEntry, NaturalClass,
                        interaction_to_clause, lift_generalization, order_clauses, partial_unfold,
                        transition_survivors)

CONFIG_ENV = "LEXRULES_CONFIG"
FORMATS = ("text", "dot", "json")


@dataclass(frozen=True)
class RunConfig:
    unfurl_depth: int = 0
    reduce_cap: int = 8
    lift_cap: int = DEFAULT_LIFT_CAP
    depth_bound: int = DEFAULT_DEPTH
    format: str = "text"

    def __post_init__(self):
        for f in ("unfurl_depth", "reduce_cap", "lift_cap", "depth_bound"):
            v = getattr(self, f)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{f} must be a non-negative integer, got {v!r}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}")

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_env(cls, environ=None) -> "RunConfig":
        """Defaults overridden by the JSON file named in ``LEXRULES_CONFIG``."""
        environ = os.environ if environ is None else environ
        path = environ.get(CONFIG_ENV)
        if not path:
            return cls()
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))

    def updated(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)


def compile_lexicon(grammar: Grammar, config: RunConfig | None = None) -> CompiledLexicon:
    config = config or RunConfig()
    sig = grammar.sig
    word = FeatureStructure.of_type(sig, grammar.word_type)
    rules = {r.index: compile_rule(r) for r in grammar.rules}

    follow = compute_follow(rules.values())
    global_fsa = build_global_fsa(follow)
    reduced = reduce_by_propagation(global_fsa, rules, word, config.reduce_cap)

    pruned = OrderedDict()
    survivors = {}
    for name, base in grammar.entries.items():
        pruned[name] = prune_for_entry(reduced, base, rules, config.unfurl_depth, config.reduce_cap)
        survivors[name] = transition_survivors(pruned[name], rules)

    grouped = group_classes(pruned, key=lambda name, res: (
        res.automaton.key(), frozenset(survivors[name].items())))

    classes = OrderedDict()
    rule_defs = []
    interaction = []
    for cid, (fsa, members) in grouped.items():
        cls = NaturalClass(cid, fsa, list(members), survivors[members[0]])
        cls.clauses = encode_interaction(fsa, cid)
        cls.unfolded, rule_defs = partial_unfold(cls.clauses, rules, cls.survivors)
        classes[cid] = cls
        interaction += [interaction_to_clause(c, sig, grammar.word_type) for c in cls.unfolded]
    if not rule_defs:
        rule_defs = partial_unfold([], rules, {})[1]

    entries = OrderedDict()
    for cid, cls in classes.items():
        class_clauses = [interaction_to_clause(c, sig, grammar.word_type) for c in cls.unfolded]
        for name in cls.entries:
            ext = ExtendedLexicalEntry(name, grammar.entries[name], cid, cls.entry_predicate)
            entries[name] = lift_generalization(class_clauses, ext, rule_defs, word, config.lift_cap)
    entries = OrderedDict((name, entries[name]) for name in grammar.entries)

    program = Program(order_clauses(interaction) + rule_defs)
    return CompiledLexicon(sig, grammar.word_type, rules, follow, global_fsa, reduced, pruned,
                           classes, entries, rule_defs, program, config)


class LexiconCompiler:
    """Estimator-style façade: ``fit`` compiles a grammar, ``transform`` derives.

    >>> from lexrules.bundled import example_grammar
    >>> lex = LexiconCompiler().fit(example_grammar())
    >>> len(lex.transform(["e1"])["e1"])
    7
    """

    def __init__(self, unfurl_depth=0, reduce_cap=8, lift_cap=DEFAULT_LIFT_CAP, depth_bound=DEFAULT_DEPTH):
        self.unfurl_depth = unfurl_depth
        self.reduce_cap = reduce_cap
        self.lift_cap = lift_cap
        self.depth_bound = depth_bound

    def get_params(self, deep=True) -> dict:
        return {"unfurl_depth": self.unfurl_depth, "reduce_cap": self.reduce_cap,
                "lift_cap": self.lift_cap, "depth_bound": self.depth_bound}

    def set_params(self, **params) -> "LexiconCompiler":
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def config(self) -> RunConfig:
        return RunConfig(**self.get_params())

    def fit(self, grammar: Grammar) -> "LexiconCompiler":
        self.lexicon_ = compile_lexicon(grammar, self.config())
        return self

    def transform(self, entry_names=None) -> dict:
        from .runtime import derive_all
        lex = self._fitted()
        names = list(lex.entries) if entry_names is None else list(entry_names)
        return {n: derive_all(n, lex, self.depth_bound) for n in names}

    def lookup(self, query: FeatureStructure) -> list:
        from .runtime import lookup
        return list(lookup(query, self._fitted(), self.depth_bound))

    def _fitted(self) -> CompiledLexicon:
        if not hasattr(self, "lexicon_"):
            raise RuntimeError("call fit() first")
        return self.lexicon_
