"""AVM text syntax: tokenizer, parser, realisation and rendering.

Syntax::

    AVM ::= TYPE | #TAG | #TAG=AVM | (FEAT:AVM, ...) | TYPE & (FEAT:AVM, ...)
          | <AVM, ...> | <>

Tags share one namespace per call to :func:`realize`, so several AVMs
(the two sides of a rule, the arguments of a clause) can be tied together.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import featstruct as fsm
from .featstruct import FeatureStructure
from .signature import Signature

LIST, E_LIST, NE_LIST, HEAD, TAIL = "list", "e_list", "ne_list", "HD", "TL"


class SyntaxErrorAt(Exception):
    """Lexical or syntax error with a 1-based source position."""

    def __init__(self, message, line=0, col=0, source=None):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}")


class DescriptionError(Exception):
    """An AVM that parses but is inconsistent with the signature."""


_TOKEN = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<arrow>==>)
  | (?P<tag>\#[A-Za-z0-9_]+)
  | (?P<name>[A-Za-z0-9_+\-'*]+)
  | (?P<punct>[()<>{},:&=.|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, source: str | None = None) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SyntaxErrorAt(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- AST ---------------------------------------------------------------

@dataclass
class Node:
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class TagRef(Node):
    name: str = ""
    value: "Node | None" = None


@dataclass
class Desc(Node):
    type: str | None = None
    feats: list = field(default_factory=list)  # [(feature, Node)]


@dataclass
class ListDesc(Node):
    items: list = field(default_factory=list)


class TokenStream:
    def __init__(self, tokens, source=None):
        self.tokens = tokens
        self.i = 0
        self.source = source

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, text, kind=None) -> bool:
        tok = self.peek
        return tok.text == text and (kind is None or tok.kind == kind)

    def expect(self, text=None, kind=None) -> Token:
        tok = self.peek
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            self.error(f"expected {want}, found {got}", tok)
        return self.next()

    def error(self, message, tok=None):
        tok = tok or self.peek
        raise SyntaxErrorAt(message, tok.line, tok.col, self.source)


def parse_avm_tokens(ts: TokenStream) -> Node:
    tok = ts.peek
    if tok.kind == "tag":
        ts.next()
        value = None
        if ts.at("=", "punct"):
            ts.next()
            value = parse_avm_tokens(ts)
        return TagRef(tok.line, tok.col, tok.text[1:], value)
    if tok.kind == "name":
        ts.next()
        feats = []
        if ts.at("&", "punct"):
            ts.next()
            feats = _parse_feats(ts)
        return Desc(tok.line, tok.col, tok.text, feats)
    if tok.text == "(":
        return Desc(tok.line, tok.col, None, _parse_feats(ts))
    if tok.text == "<":
        ts.next()
        items = []
        if not ts.at(">", "punct"):
            items.append(parse_avm_tokens(ts))
            while ts.at(",", "punct"):
                ts.next()
                items.append(parse_avm_tokens(ts))
        ts.expect(">")
        return ListDesc(tok.line, tok.col, items)
    got = repr(tok.text) if tok.kind != "eof" else "end of input"
    ts.error(f"expected an AVM, found {got}", tok)


def _parse_feats(ts):
    ts.expect("(")
    feats = []
    if ts.at(")", "punct"):
        ts.next()
        return feats
    while True:
        name = ts.expect(kind="name")
        ts.expect(":")
        feats.append((name.text, parse_avm_tokens(ts)))
        if ts.at(",", "punct"):
            ts.next()
            continue
        ts.expect(")")
        return feats


def parse_avm(text: str) -> Node:
    ts = TokenStream(tokenize(text))
    node = parse_avm_tokens(ts)
    ts.expect(kind="eof")
    return node


# -- realisation -------------------------------------------------------

class _Builder:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.types: list[str] = []
        self.arcs: list[dict] = []
        self.tags: dict[str, int] = {}
        self.pairs: list[tuple[int, int]] = []

    def new(self, t, node=None):
        if t not in self.sig:
            where = f" at {node.line}:{node.col}" if node is not None and node.line else ""
            raise DescriptionError(f"unknown type {t!r}{where}")
        self.types.append(t)
        self.arcs.append({})
        return len(self.types) - 1

    def add_arc(self, n, f, m, node):
        if self.sig.introducer(f) is None:
            where = f" at {node.line}:{node.col}" if node.line else ""
            raise DescriptionError(f"unknown feature {f!r}{where}")
        if f in self.arcs[n]:
            self.pairs.append((self.arcs[n][f], m))
        else:
            self.arcs[n][f] = m

    def visit(self, node: Node) -> int:
        if isinstance(node, TagRef):
            if node.value is not None:
                n = self.visit(node.value)
            else:
                n = self.new(self.sig.root, node)
            if node.name in self.tags:
                self.pairs.append((self.tags[node.name], n))
            else:
                self.tags[node.name] = n
            return n
        if isinstance(node, Desc):
            n = self.new(node.type or self.sig.root, node)
            for f, sub in node.feats:
                self.add_arc(n, f, self.visit(sub), node)
            return n
        if isinstance(node, ListDesc):
            end = self.new(E_LIST, node)
            for item in reversed(node.items):
                cell = self.new(NE_LIST, node)
                self.arcs[cell][HEAD] = self.visit(item)
                self.arcs[cell][TAIL] = end
                end = cell
            return end
        raise TypeError(node)


def realize(sig: Signature, nodes, root_types=None) -> FeatureStructure:
    """Turn AVM ASTs into one structure with a root per AST.

    ``root_types`` optionally constrains each root (e.g. to ``word``).
    Raises :class:`DescriptionError` when the description is inconsistent.
    """
    b = _Builder(sig)
    roots = [b.visit(n) for n in nodes]
    if root_types is not None:
        for r, t in zip(roots, root_types):
            if t is not None:
                b.pairs.append((r, b.new(t)))
    find = fsm._identify(sig, b.types, b.arcs, b.pairs)
    if find is None:
        raise DescriptionError("inconsistent description: " + " ; ".join(render_ast(n) for n in nodes))
    fs = fsm._normalize(sig, b.types, b.arcs, [find(r) for r in roots])
    if fs is None:
        raise DescriptionError("ill-typed description: " + " ; ".join(render_ast(n) for n in nodes))
    return fs


def parse(sig: Signature, *texts: str, root_type: str | None = None) -> FeatureStructure:
    """Parse one or more AVMs sharing a tag namespace.

    >>> from lexrules.bundled import example_signature
    >>> print(parse(example_signature(), "(C:(Z:<a>))"))
    top & (C:t_2 & (Z:<a>))
    """
    nodes = [parse_avm(t) for t in texts]
    return realize(sig, nodes, [root_type] * len(nodes) if root_type else None)


def render_ast(node: Node) -> str:
    if isinstance(node, TagRef):
        return f"#{node.name}" + ("" if node.value is None else "=" + render_ast(node.value))
    if isinstance(node, ListDesc):
        return "<" + ", ".join(render_ast(i) for i in node.items) + ">"
    feats = "(" + ", ".join(f"{f}:{render_ast(v)}" for f, v in node.feats) + ")"
    if node.type is None:
        return feats
    return node.type + (f" & {feats}" if node.feats else "")


# -- rendering ---------------------------------------------------------

class Renderer:
    """Renders the roots of structures with one shared tag table.

    A renderer can be fed several structures (e.g. all literals of a
    clause when they live in one multi-rooted structure).
    """

    def __init__(self, fs: FeatureStructure):
        self.fs = fs
        self.sig = fs.sig
        indeg = [0] * len(fs.types)
        for r in fs.roots:
            indeg[r] += 1
        for a in fs.arcs:
            for _, m in a:
                indeg[m] += 1
        self.shared = {n for n, d in enumerate(indeg) if d > 1}
        self.tags: dict[int, int] = {}
        self.lists_ok = all(t in self.sig for t in (LIST, E_LIST, NE_LIST))

    def root(self, i: int) -> str:
        return self.node(self.fs.roots[i], None)

    def node(self, n: int, implied: str | None) -> str:
        if n in self.shared:
            if n in self.tags:
                return f"#{self.tags[n]}"
            self.tags[n] = len(self.tags) + 1
            return f"#{self.tags[n]}=" + self.body(n, implied)
        return self.body(n, implied)

    def body(self, n: int, implied: str | None) -> str:
        fs, sig = self.fs, self.sig
        t = fs.types[n]
        arcs = fs.arcs[n]
        items = self._as_list(n)
        if items is not None:
            return "<" + ", ".join(items) + ">"
        if not arcs:
            return "<>" if t == E_LIST and self.lists_ok else t
        feats = "(" + ", ".join(
            f"{f}:{self.node(m, sig.restriction(t, f))}" for f, m in arcs) + ")"
        if implied is not None:
            guess = implied
            for f, _ in arcs:
                guess = sig.meet(guess, sig.introducer(f))
            if guess == t:
                return feats
        return f"{t} & {feats}"

    def _as_list(self, n):
        if not self.lists_ok:
            return None
        fs, sig = self.fs, self.sig
        cells = []
        cur = n
        while True:
            t = fs.types[cur]
            arcs = dict(fs.arcs[cur])
            if t == E_LIST and not arcs and (cur == n or cur not in self.shared):
                break
            if t != NE_LIST or TAIL not in arcs or set(arcs) - {HEAD, TAIL}:
                return None
            if cur != n and cur in self.shared:
                return None
            cells.append(cur)
            cur = arcs[TAIL]
        if not cells:
            return None
        out = []
        for c in cells:
            head = dict(fs.arcs[c]).get(HEAD)
            restr = sig.restriction(NE_LIST, HEAD)
            out.append(restr if head is None else self.node(head, restr))
        return out


def render(fs: FeatureStructure) -> str:
    r = Renderer(fs)
    return ", ".join(r.root(i) for i in range(fs.arity))


def render_roots(fs: FeatureStructure) -> list[str]:
    r = Renderer(fs)
    return [r.root(i) for i in range(fs.arity)]
