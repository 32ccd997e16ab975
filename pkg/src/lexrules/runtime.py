"""Definite-clause resolution over feature structures.

Clause arguments are the roots of one multi-rooted structure (the clause's
variables); resolution renames a clause apart by disjoint union, identifies
argument roots pairwise and keeps only the variables still referenced.
The driver functions at the bottom execute a compiled lexicon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from . import featstruct as fsm
from .featstruct import FeatureStructure, canonical_form

DEFAULT_DEPTH = 32


class QueryError(Exception):
    """Unknown entry, ill-typed query or unknown predicate."""


@dataclass(frozen=True)
class Literal:
    pred: str
    args: tuple  # variable indices (roots of the clause bindings)

    def __str__(self):
        return f"{self.pred}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Clause:
    """``head :- body`` with variables = roots of ``bindings``.

    ``rule`` marks a clause that applies a lexical rule; using it costs one
    unit of depth and extends the derivation.
    """

    head: Literal
    body: tuple
    bindings: FeatureStructure
    rule: int | None = None
    names: tuple = ()

    @property
    def is_unit(self) -> bool:
        return not self.body

    def occurrences(self) -> list[int]:
        """Variable index of every argument position, head first."""
        out = list(self.head.args)
        for lit in self.body:
            out += lit.args
        return out


class Program:
    """Ordered clause lists per predicate."""

    def __init__(self, clauses: Iterable[Clause] = ()):
        self._defs: dict[str, list[Clause]] = {}
        for c in clauses:
            self.add(c)

    def add(self, clause: Clause):
        self._defs.setdefault(clause.head.pred, []).append(clause)

    def __getitem__(self, pred) -> list[Clause]:
        try:
            return self._defs[pred]
        except KeyError:
            raise QueryError(f"unknown predicate {pred!r}") from None

    def __contains__(self, pred):
        return pred in self._defs

    def __iter__(self) -> Iterator[Clause]:
        for cs in self._defs.values():
            yield from cs

    def __len__(self):
        return sum(len(cs) for cs in self._defs.values())

    @property
    def predicates(self) -> list[str]:
        return list(self._defs)

    def merged(self, other: "Program") -> "Program":
        return Program(list(self) + list(other))


@dataclass(frozen=True)
class Goal:
    predicate: str
    args: FeatureStructure  # one root per argument

    @property
    def arity(self) -> int:
        return self.args.arity


@dataclass(frozen=True)
class Solution:
    entry: FeatureStructure
    derivation: tuple
    class_id: str | None = None
    bindings: FeatureStructure | None = field(default=None, compare=False)  # all goal arguments

    def key(self):
        return canonical_form(self.entry), self.derivation


class SolutionStream:
    """Iterator of solutions with a summary once exhausted."""

    def __init__(self, gen):
        self._gen = gen
        self.truncated = False
        self.count = 0
        self.skipped: list[str] = []

    def __iter__(self):
        return self

    def __next__(self) -> Solution:
        sol = next(self._gen)
        self.count += 1
        return sol

    def summary(self) -> dict:
        return {"solutions": self.count, "truncated": self.truncated, "skipped": list(self.skipped)}


def _resolve_step(env, goals, clause, answer_arity):
    """Resolve the first goal with ``clause``; None on failure."""
    goal = goals[0]
    if len(goal.args) != len(clause.head.args):
        return None
    off = env.arity
    merged = fsm.combine_unify((env, clause.bindings), [(a, off + b) for a, b in zip(goal.args, clause.head.args)])
    if merged is None:
        return None
    new_goals = [Literal(l.pred, tuple(off + a for a in l.args)) for l in clause.body] + list(goals[1:])
    keep = list(range(answer_arity))
    for lit in new_goals:
        for a in lit.args:
            if a not in keep:
                keep.append(a)
    remap = {old: new for new, old in enumerate(keep)}
    env = merged.project(keep)
    return env, tuple(Literal(l.pred, tuple(remap[a] for a in l.args)) for l in new_goals)


def run(program: Program, env: FeatureStructure, goals, depth_bound: int = DEFAULT_DEPTH, stream=None):
    """Depth-first SLD resolution; yields (answer structure, derivation).

    ``env`` holds the query variables; the answer is ``env`` at success.
    Resolvents already seen with at least as much depth left are skipped.
    """
    answer_arity = env.arity
    table: dict = {}
    emitted = set()
    stack = [(env, tuple(goals), (), 0)]
    while stack:
        env, goals, deriv, used = stack.pop()
        if not goals:
            key = (canonical_form(env), deriv)
            if key not in emitted:
                emitted.add(key)
                yield env, deriv
            continue
        memo = (canonical_form(env), tuple((g.pred, g.args) for g in goals))
        if table.get(memo, -1) >= depth_bound - used:
            continue
        table[memo] = depth_bound - used
        children = []
        for clause in program[goals[0].pred]:
            cost = 1 if clause.rule is not None else 0
            if used + cost > depth_bound:
                if stream is not None:
                    stream.truncated = True
                continue
            step = _resolve_step(env, goals, clause, answer_arity)
            if step is None:
                continue
            d = deriv + (clause.rule,) if clause.rule is not None else deriv
            children.append((step[0], step[1], d, used + cost))
        stack.extend(reversed(children))


def solve_program(program: Program, goal: Goal, depth_bound: int = DEFAULT_DEPTH,
                  class_id: str | None = None, out_index: int = -1) -> SolutionStream:
    """Solve ``goal`` directly against ``program``."""
    if depth_bound < 0:
        raise ValueError("depth bound must be >= 0")
    lit = Literal(goal.predicate, tuple(range(goal.arity)))
    program[goal.predicate]  # raises QueryError early

    def gen():
        for env, deriv in run(program, goal.args, [lit], depth_bound, stream):
            yield Solution(env.select(out_index % env.arity), deriv, class_id, env)

    stream = SolutionStream(gen())
    return stream


# ----------------------------------------------------------------------
# compiled lexica
# ----------------------------------------------------------------------

def entry_goal(lexicon, name: str, out: FeatureStructure | None = None) -> Goal:
    """``c_q1(base, Out)`` for a named entry."""
    try:
        entry = lexicon.entries[name]
    except KeyError:
        raise QueryError(f"unknown entry {name!r}") from None
    if out is None:
        out = FeatureStructure.of_type(lexicon.sig, lexicon.word_type)
    return Goal(entry.predicate, fsm.combine(entry.base, out))


def solve(goal: Goal, lexicon, depth_bound: int = DEFAULT_DEPTH) -> SolutionStream:
    """Solve an interaction goal against the lexicon's unfolded program."""
    class_id = lexicon.class_of_predicate(goal.predicate)
    return solve_program(lexicon.program, goal, depth_bound, class_id)


def derive_all(entry_id: str, lexicon, depth_bound: int = DEFAULT_DEPTH) -> list[FeatureStructure]:
    """Distinct derived entries (base included), in order of discovery."""
    seen = {}
    for sol in solve(entry_goal(lexicon, entry_id), lexicon, depth_bound):
        seen.setdefault(sol.entry, None)
    return list(seen)


def lookup(query: FeatureStructure, lexicon, depth_bound: int = DEFAULT_DEPTH) -> SolutionStream:
    """Entries (derived or not) compatible with ``query``.

    The query is first unified with each entry's lifted output; entries
    whose lifted output clashes are skipped without running their rules.
    Solutions are the derived entries refined by the query.
    """
    if query.arity != 1:
        raise QueryError("a lookup query has one root")
    word = FeatureStructure.of_type(lexicon.sig, lexicon.word_type)
    q = fsm.unify(query, word)
    if q is None:
        raise QueryError(f"query is not a {lexicon.word_type} description")

    def gen():
        for name, entry in lexicon.entries.items():
            constrained = entry.lifted if entry.lifted is not None else fsm.combine(entry.base, word)
            refined = fsm.unify(constrained, fsm.combine(word, q))
            if refined is None:
                stream.skipped.append(name)
                continue
            goal = Goal(entry.predicate, refined)
            inner = solve(goal, lexicon, depth_bound)
            for sol in inner:
                yield sol
            stream.truncated |= inner.truncated

    stream = SolutionStream(gen())
    return stream


def replay(base: FeatureStructure, derivation: Iterable[int], rules: Mapping) -> list[FeatureStructure]:
    """All results of applying the rules in ``derivation`` in sequence."""
    current = [base]
    for k in derivation:
        nxt = {}
        for fs in current:
            for out in rules[k].apply(fs):
                nxt.setdefault(out)
        current = list(nxt)
    return current
