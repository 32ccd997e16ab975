"""Grammar files: type declarations, lexical rules and lexical entries.

::

    type NAME sub {CHILD, ...} intro {FEAT:TYPE, ...}.
    rule NAME : AVM ==> AVM.
    entry NAME AVM.
    % comment to end of line

Parsing yields a :class:`GrammarFile` (syntax only, with positions);
:meth:`GrammarFile.load` resolves it against its signature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .avm import Node, SyntaxErrorAt, TokenStream, parse_avm_tokens, realize, tokenize
from .featstruct import FeatureStructure
from .signature import Signature

WORD = "word"


@dataclass
class TypeDecl:
    name: str
    subs: list[str]
    intro: dict[str, str]
    line: int = 0
    col: int = 0


@dataclass
class RuleDecl:
    name: str
    lhs: Node
    rhs: Node
    line: int = 0
    col: int = 0


@dataclass
class EntryDecl:
    name: str
    avm: Node
    line: int = 0
    col: int = 0


@dataclass
class GrammarFile:
    types: list[TypeDecl] = field(default_factory=list)
    rules: list[RuleDecl] = field(default_factory=list)
    entries: list[EntryDecl] = field(default_factory=list)
    source: str | None = None

    def declarations(self):
        subtypes: dict[str, list[str]] = {}
        intro: dict[str, dict[str, str]] = {}
        for d in self.types:
            subtypes.setdefault(d.name, [])
            for c in d.subs:
                if c not in subtypes[d.name]:
                    subtypes[d.name].append(c)
            intro.setdefault(d.name, {}).update(d.intro)
        return subtypes, intro

    def signature(self) -> Signature:
        return Signature(*self.declarations())

    def load(self, word_type: str = WORD) -> "Grammar":
        """Resolve declarations into a :class:`Grammar`.

        Raises :class:`~lexrules.signature.SignatureError` for a bad
        hierarchy and :class:`~lexrules.avm.DescriptionError` for rules or
        entries that are inconsistent with it.
        """
        from .rules import LexicalRule

        sig = self.signature()
        if self.rules or self.entries:
            if word_type not in sig:
                from .avm import DescriptionError
                raise DescriptionError(f"signature lacks the entry type {word_type!r}")
        rules = []
        for i, r in enumerate(self.rules, 1):
            spec = realize(sig, [r.lhs, r.rhs], [word_type, word_type])
            rules.append(LexicalRule(i, spec, name=r.name))
        entries = {}
        for e in self.entries:
            entries[e.name] = realize(sig, [e.avm], [word_type])
        return Grammar(sig, rules, entries, word_type)


@dataclass
class Grammar:
    sig: Signature
    rules: list
    entries: dict[str, FeatureStructure]
    word_type: str = WORD

    def restrict_rules(self, keep) -> "Grammar":
        """Keep only the rules whose index or name is in ``keep``, renumbered densely."""
        from .rules import LexicalRule
        keep = {str(k) for k in keep}
        chosen = [r for r in self.rules if str(r.index) in keep or r.name in keep]
        rules = [LexicalRule(i, r.spec, name=r.name) for i, r in enumerate(chosen, 1)]
        return Grammar(self.sig, rules, dict(self.entries), self.word_type)


def parse_grammar_text(text: str, source: str | None = None) -> GrammarFile:
    ts = TokenStream(tokenize(text, source), source)
    g = GrammarFile(source=source)
    while ts.peek.kind != "eof":
        kw = ts.expect(kind="name")
        if kw.text == "type":
            g.types.append(_type_decl(ts, kw))
        elif kw.text == "rule":
            name = ts.expect(kind="name")
            ts.expect(":")
            lhs = parse_avm_tokens(ts)
            ts.expect("==>")
            rhs = parse_avm_tokens(ts)
            ts.expect(".")
            g.rules.append(RuleDecl(name.text, lhs, rhs, kw.line, kw.col))
        elif kw.text == "entry":
            name = ts.expect(kind="name")
            avm = parse_avm_tokens(ts)
            ts.expect(".")
            g.entries.append(EntryDecl(name.text, avm, kw.line, kw.col))
        else:
            ts.error(f"expected 'type', 'rule' or 'entry', found {kw.text!r}", kw)
    return g


def _type_decl(ts, kw):
    name = ts.expect(kind="name").text
    subs, intro = [], {}
    seen_clause = False
    while not ts.at(".", "punct"):
        clause = ts.expect(kind="name")
        if clause.text == "sub":
            subs += _braced(ts, lambda: ts.expect(kind="name").text)
        elif clause.text == "intro":
            for f, t in _braced(ts, lambda: _feat_decl(ts)):
                intro[f] = t
        else:
            ts.error(f"expected 'sub' or 'intro', found {clause.text!r}", clause)
        seen_clause = True
    if not seen_clause:
        ts.error(f"type {name!r} declares neither subtypes nor features")
    ts.expect(".")
    return TypeDecl(name, subs, intro, kw.line, kw.col)


def _feat_decl(ts):
    f = ts.expect(kind="name").text
    ts.expect(":")
    return f, ts.expect(kind="name").text


def _braced(ts, item):
    ts.expect("{")
    out = []
    if ts.at("}", "punct"):
        ts.next()
        return out
    out.append(item())
    while ts.at(",", "punct"):
        ts.next()
        out.append(item())
    ts.expect("}")
    return out


def parse_grammar(path) -> GrammarFile:
    path = Path(path)
    return parse_grammar_text(path.read_text(encoding="utf-8"), str(path))


def load_grammar(path, word_type: str = WORD) -> Grammar:
    return parse_grammar(path).load(word_type)


__all__ = ["GrammarFile", "Grammar", "TypeDecl", "RuleDecl", "EntryDecl", "SyntaxErrorAt",
           "parse_grammar", "parse_grammar_text", "load_grammar"]
