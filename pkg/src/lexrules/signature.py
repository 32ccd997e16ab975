"""Closed-world type hierarchy with appropriateness conditions.

A :class:`Signature` is built from two declaration maps: immediate
subtypes (parent -> children) and feature introductions (type -> feature
-> value type).  Construction validates the declarations and raises
:class:`SignatureError` listing every problem found; :func:`validate`
returns the same diagnostics without raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping


class SignatureError(Exception):
    """Raised when a declared hierarchy is ill-formed."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class UnknownType(KeyError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


def _collect_types(subtypes, intro):
    names = set(subtypes)
    for children in subtypes.values():
        names.update(children)
    for t, feats in intro.items():
        names.add(t)
        names.update(feats.values())
    return names


def validate(subtypes: Mapping[str, Iterable[str]],
             intro: Mapping[str, Mapping[str, str]]) -> list[Diagnostic]:
    """Check hierarchy declarations; an empty list means well-formed."""
    subtypes = {t: list(cs) for t, cs in subtypes.items()}
    intro = {t: dict(fs) for t, fs in intro.items()}
    diags: list[Diagnostic] = []
    names = _collect_types(subtypes, intro)
    parents: dict[str, set[str]] = {t: set() for t in names}
    for t, children in subtypes.items():
        for c in children:
            if c == t:
                diags.append(Diagnostic("cycle", t, f"type {t!r} is declared as its own subtype"))
                continue
            parents[c].add(t)

    roots = sorted(t for t in names if not parents[t])
    if not names:
        return diags
    if len(roots) != 1:
        diags.append(Diagnostic(
            "root", ",".join(roots) or "-",
            f"expected exactly one most general type, found {roots or 'none'}"))

    # cycle detection over the subtype graph
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(names, WHITE)

    def visit(t, trail):
        colour[t] = GREY
        for c in subtypes.get(t, ()):
            if c == t:
                continue
            if colour[c] == GREY:
                loop = trail[trail.index(c):] + [c] if c in trail else [t, c]
                diags.append(Diagnostic("cycle", c, "cycle in hierarchy: " + " > ".join(loop)))
            elif colour[c] == WHITE:
                visit(c, trail + [c])
        colour[t] = BLACK

    for t in sorted(names):
        if colour[t] == WHITE:
            visit(t, [t])
    if any(d.kind == "cycle" for d in diags) or len(roots) != 1:
        return diags

    up = _upsets(names, parents)
    down: dict[str, set[str]] = {t: set() for t in names}
    for t, ups in up.items():
        for u in ups:
            down[u].add(t)

    root = roots[0]
    # the immediate subtypes of the root are disjoint sorts
    sorts = set(subtypes.get(root, ()))
    for t in sorted(names):
        shared = sorted(sorts & up[t])
        if len(shared) > 1:
            diags.append(Diagnostic(
                "ill-formed", t,
                f"type {t!r} lies below the disjoint sorts {shared}"))

    for s in sorted(names):
        for t in sorted(names):
            if s >= t:
                continue
            lower = down[s] & down[t]
            maximal = [x for x in lower if not any(x != y and x in down[y] for y in lower)]
            if len(maximal) > 1:
                diags.append(Diagnostic(
                    "non-unique meet", f"{s},{t}",
                    f"types {s!r} and {t!r} have no unique meet: {sorted(maximal)}"))
            upper = up[s] & up[t]
            minimal = [x for x in upper if not any(x != y and y in down[x] for y in upper)]
            if len(minimal) > 1:
                diags.append(Diagnostic(
                    "non-unique join", f"{s},{t}",
                    f"types {s!r} and {t!r} have no unique join: {sorted(minimal)}"))

    # feature introduction: the declaring types of a feature must share a
    # most general member
    declared: dict[str, list[str]] = {}
    for t in sorted(intro):
        for f in intro[t]:
            declared.setdefault(f, []).append(t)
    for f, where in sorted(declared.items()):
        tops = [t for t in where if not any(t != u and u in up[t] for u in where)]
        if len(tops) > 1:
            diags.append(Diagnostic(
                "feature introduced twice", f,
                f"feature {f!r} is introduced at {sorted(tops)} with no common introducer"))
            continue
        introducer = tops[0]
        for t in where:
            if t != introducer and t not in down[introducer]:
                diags.append(Diagnostic(
                    "feature introduced twice", f,
                    f"feature {f!r} declared at {t!r} outside its introducer {introducer!r}"))
    if any(d.kind in ("non-unique meet", "non-unique join", "feature introduced twice") for d in diags):
        return diags

    # restrictions may only narrow downwards
    for f, where in sorted(declared.items()):
        for t in where:
            for u in where:
                if t != u and u in up[t] and intro[t][f] not in down[intro[u][f]]:
                    diags.append(Diagnostic(
                        "restriction widened", f,
                        f"{t!r} restricts {f!r} to {intro[t][f]!r}, "
                        f"which is not below {intro[u][f]!r} declared at {u!r}"))
    return diags


def _upsets(names, parents):
    up: dict[str, set[str]] = {}

    def get(t):
        if t not in up:
            acc = {t}
            for p in parents[t]:
                acc |= get(p)
            up[t] = acc
        return up[t]

    for t in names:
        get(t)
    return up


class Signature:
    """Validated, immutable type hierarchy.

    >>> sig = Signature({"top": ["bool"], "bool": ["+", "-"]}, {})
    >>> sig.meet("bool", "+"), sig.meet("+", "-"), sig.join("+", "-")
    ('+', None, 'bool')
    """

    def __init__(self, subtypes: Mapping[str, Iterable[str]],
                 intro: Mapping[str, Mapping[str, str]] | None = None):
        intro = intro or {}
        diags = validate(subtypes, intro)
        if diags:
            raise SignatureError(diags)
        self._subtypes = {t: tuple(sorted(set(cs))) for t, cs in subtypes.items()}
        self._intro = {t: dict(fs) for t, fs in intro.items()}
        self.types = frozenset(_collect_types(self._subtypes, self._intro))
        parents: dict[str, set[str]] = {t: set() for t in self.types}
        for t, children in self._subtypes.items():
            for c in children:
                parents[c].add(t)
        self._parents = {t: frozenset(ps) for t, ps in parents.items()}
        (self.root,) = [t for t in self.types if not parents[t]]
        self._up = {t: frozenset(u) for t, u in _upsets(self.types, parents).items()}
        down: dict[str, set[str]] = {t: set() for t in self.types}
        for t, ups in self._up.items():
            for u in ups:
                down[u].add(t)
        self._down = {t: frozenset(d) for t, d in down.items()}
        self._introducer: dict[str, str] = {}
        for t in self._intro:
            for f in self._intro[t]:
                cur = self._introducer.get(f)
                if cur is None or cur in self._down[t]:
                    self._introducer[f] = t
        self._approp = {t: self._compute_approp(t) for t in self.types}
        self._species = {t: frozenset(s for s in self._down[t] if not self._subtypes.get(s))
                         for t in self.types}
        self.meet = lru_cache(maxsize=None)(self._meet)
        self.join = lru_cache(maxsize=None)(self._join)

    def _compute_approp(self, t):
        feats: dict[str, str] = {}
        for u in self._up[t]:
            for f, v in self._intro.get(u, {}).items():
                feats[f] = v if f not in feats else self._meet(feats[f], v)
        return dict(sorted(feats.items()))

    def _check(self, t):
        if t not in self.types:
            raise UnknownType(t)

    def __contains__(self, t):
        return t in self.types

    def __repr__(self):
        return f"<Signature root={self.root!r} types={len(self.types)}>"

    def subtypes(self, t: str) -> tuple[str, ...]:
        self._check(t)
        return self._subtypes.get(t, ())

    def supertypes(self, t: str) -> frozenset[str]:
        self._check(t)
        return self._parents[t]

    def is_subtype(self, s: str, t: str) -> bool:
        """True when ``s`` is ``t`` or lies below it."""
        self._check(s)
        self._check(t)
        return t in self._up[s]

    def _meet(self, s: str, t: str) -> str | None:
        self._check(s)
        self._check(t)
        if t in self._up[s]:
            return s
        if s in self._up[t]:
            return t
        lower = self._down[s] & self._down[t]
        if not lower:
            return None
        for x in lower:
            if lower <= self._down[x]:
                return x
        raise AssertionError("validated signature lost its unique meets")

    def _join(self, s: str, t: str) -> str:
        self._check(s)
        self._check(t)
        upper = self._up[s] & self._up[t]
        for x in upper:
            if upper <= self._up[x]:
                return x
        raise AssertionError("validated signature lost its unique joins")

    def species(self, t: str) -> frozenset[str]:
        """Minimal subtypes at or below ``t``."""
        self._check(t)
        return self._species[t]

    minimal_subtypes = species

    def is_species(self, t: str) -> bool:
        self._check(t)
        return not self._subtypes.get(t)

    def approp(self, t: str) -> dict[str, str]:
        """Appropriate features of ``t`` with their tightest value restriction."""
        self._check(t)
        return dict(self._approp[t])

    approp_features = approp

    def restriction(self, t: str, feature: str) -> str | None:
        self._check(t)
        return self._approp[t].get(feature)

    def introducer(self, feature: str) -> str | None:
        return self._introducer.get(feature)

    @property
    def features(self) -> frozenset[str]:
        return frozenset(self._introducer)

    def declarations(self):
        """The (subtypes, intro) maps this signature was built from."""
        return ({t: list(cs) for t, cs in self._subtypes.items()},
                {t: dict(fs) for t, fs in self._intro.items()})
