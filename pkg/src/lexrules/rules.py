"""Lexical rules, their transfer clauses, and rule application.

A rule is a two-rooted structure (input description, output
description); tags written across the arrow are reentrancies between the
two roots.  Compiling a rule derives one transfer clause per consistent
assignment of species to its frame nodes, so that everything the output
description leaves unspecified is carried over from the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import featstruct as fsm
from .featstruct import FeatureStructure, PathError


class RuleError(Exception):
    """A rule that can never apply, or mentions impossible features."""


@dataclass(frozen=True)
class LexicalRule:
    index: int
    spec: FeatureStructure  # roots: (in, out)
    name: str = ""

    def __post_init__(self):
        if self.spec.arity != 2:
            raise ValueError("a lexical rule has exactly two roots")

    @property
    def in_spec(self) -> FeatureStructure:
        return self.spec.select(0)

    @property
    def out_spec(self) -> FeatureStructure:
        return self.spec.select(1)

    @property
    def predicate(self) -> str:
        return f"lex_rule_{self.index}"

    def __str__(self):
        from .avm import render_roots
        lhs, rhs = render_roots(self.spec)
        return f"{self.name or self.predicate}: {lhs} ==> {rhs}"


@dataclass(frozen=True)
class TransferClause:
    rule_index: int
    frame: FeatureStructure  # roots: (in_frame, out_frame)
    shared: frozenset
    species: tuple  # ((path, species), ...) at frame paths
    program: FeatureStructure = field(compare=False, repr=False)  # rule spec unified with frame

    @property
    def in_frame(self) -> FeatureStructure:
        return self.frame.select(0)

    @property
    def out_frame(self) -> FeatureStructure:
        return self.frame.select(1)

    @property
    def predicate(self) -> str:
        return f"transfer_{self.rule_index}"


def _indegrees(fs):
    indeg = [0] * len(fs.types)
    for r in fs.roots:
        indeg[r] += 1
    for a in fs.arcs:
        for _, m in a:
            indeg[m] += 1
    return indeg


def changed_paths(rule: LexicalRule) -> frozenset:
    """Maximal output paths that carry a type restriction or a reentrancy."""
    spec, sig = rule.spec, rule.spec.sig
    indeg = _indegrees(spec)
    specified = set()

    def walk(n, p):
        for f, m in spec.arcs[n]:
            q = p + (f,)
            if indeg[m] > 1:
                specified.add(q)
                continue
            if spec.types[m] != sig.restriction(spec.types[n], f):
                specified.add(q)
            walk(m, q)

    walk(spec.roots[1], ())
    return frozenset(p for p in specified
                     if not any(len(q) > len(p) and q[:len(p)] == p for q in specified))


def frame_paths(changed) -> frozenset:
    """Proper prefixes of changed paths, including the empty path."""
    return frozenset(q[:i] for q in changed for i in range(len(q)))


def tagged_in_paths(rule: LexicalRule) -> frozenset:
    """Input paths tied to the output by an explicit tag."""
    spec = rule.spec
    out_nodes = set()
    stack = [spec.roots[1]]
    while stack:
        n = stack.pop()
        if n not in out_nodes:
            out_nodes.add(n)
            stack.extend(m for _, m in spec.arcs[n])
    found = set()
    stack = [((), spec.roots[0])]
    while stack:
        p, n = stack.pop()
        if n in out_nodes:
            found.add(p)
            continue
        stack.extend((p + (f,), m) for f, m in spec.arcs[n])
    return frozenset(found)


def derive_transfer_clauses(rule: LexicalRule) -> list[TransferClause]:
    """One transfer clause per consistent species assignment to frame nodes."""
    sig = rule.spec.sig
    changed = changed_paths(rule)
    frames = sorted(frame_paths(changed), key=lambda p: (len(p), p))
    exempt = tagged_in_paths(rule)
    out = rule.out_spec
    label = rule.name or rule.predicate

    if not changed:
        # nothing specified: the output is the input itself
        root_type = rule.spec.types[rule.spec.roots[0]]
        frame = fsm.build(sig, [root_type], [{}], [0, 0])
        program = fsm.unify(rule.spec, frame)
        if program is None:
            raise RuleError(f"{label}: rule never applicable")
        return [TransferClause(rule.index, frame, frozenset({()}), (), program)]

    base = rule.in_spec
    for p in frames:
        t = out.type_at(p)
        if t is None:
            raise RuleError(f"{label}: output path {'.'.join(p)} is not appropriate")
        try:
            base = fsm.put_path(base, p, t)
        except PathError as exc:
            raise RuleError(f"{label}: {exc}") from None
        if base is None:
            raise RuleError(f"{label}: rule never applicable (input clashes with output frame typing)")

    clauses = []
    for res in fsm.species_resolutions(base, frames):
        species = {p: res.type_at(p) for p in frames}
        types, arcs, shared = [], [], set()

        def new(t):
            types.append(t)
            arcs.append({})
            return len(types) - 1

        def fill(p, ni, no):
            for f, restr in sig.approp(species[p]).items():
                q = p + (f,)
                if q in species:
                    ci, co = new(species[q]), new(species[q])
                    arcs[ni][f], arcs[no][f] = ci, co
                    fill(q, ci, co)
                elif q in changed or q in exempt:
                    continue
                else:
                    s = new(restr)
                    arcs[ni][f] = arcs[no][f] = s
                    shared.add(q)

        ri, ro = new(species[()]), new(species[()])
        fill((), ri, ro)
        frame = fsm.build(sig, types, arcs, [ri, ro])
        program = fsm.unify(rule.spec, frame) if frame is not None else None
        if program is None:
            continue
        clauses.append(TransferClause(rule.index, frame, frozenset(shared),
                                      tuple(sorted(species.items())), program))
    if not clauses:
        raise RuleError(f"{label}: rule never applicable (no consistent frame species)")
    return clauses


@dataclass(frozen=True)
class CompiledRule:
    rule: LexicalRule
    transfer: tuple

    @property
    def index(self) -> int:
        return self.rule.index

    def applications(self, entry: FeatureStructure):
        """(transfer clause, (in, out) structure) for each successful clause."""
        for clause in self.transfer:
            res = fsm.unify_at(clause.program, 0, entry)
            if res is not None:
                yield clause, res

    def apply(self, entry: FeatureStructure) -> list[FeatureStructure]:
        seen = {}
        for _, res in self.applications(entry):
            seen.setdefault(res.select(1))
        return list(seen)

    def generic_outputs(self) -> list[FeatureStructure]:
        return self.apply(self.rule.in_spec)


def compile_rule(rule: LexicalRule) -> CompiledRule:
    return CompiledRule(rule, tuple(derive_transfer_clauses(rule)))


def apply_rule(rule, transfer_clauses, entry: FeatureStructure) -> list[FeatureStructure]:
    """Derived entries (deduplicated) from applying ``rule`` to ``entry``."""
    return CompiledRule(rule, tuple(transfer_clauses)).apply(entry)


def generic_outputs(rule, transfer_clauses) -> list[FeatureStructure]:
    return CompiledRule(rule, tuple(transfer_clauses)).generic_outputs()
