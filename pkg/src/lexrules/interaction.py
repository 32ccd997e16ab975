"""Rule interaction: follow relation, interaction automata, pruning.

States of an :class:`InteractionAutomaton` are identified by their rule
sequence along the trie (the tuple of labels from the initial state), so
state identity is stable across reduction and pruning.  Display names
``q<n>`` come from depth-first numbering of the global automaton.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .featstruct import FeatureStructure, subsumes, unify
from .rules import CompiledRule

Edge = tuple  # (source path, rule index, target path)


# ----------------------------------------------------------------------
# follow relation
# ----------------------------------------------------------------------

def compute_follow(rules: Iterable[CompiledRule]) -> dict[int, tuple[int, ...]]:
    """j follows i iff some generic output of i unifies with j's input."""
    rules = sorted(rules, key=lambda r: r.index)
    outputs = {r.index: r.generic_outputs() for r in rules}
    follow = {}
    for r in rules:
        follow[r.index] = tuple(
            s.index for s in rules
            if any(unify(o, s.rule.in_spec) is not None for o in outputs[r.index]))
    return follow


def format_follow(follow: Mapping[int, Iterable[int]]) -> str:
    return " ".join(f"follow({i}, [{', '.join(map(str, js))}])." for i, js in sorted(follow.items()))


# ----------------------------------------------------------------------
# automata
# ----------------------------------------------------------------------

class InteractionAutomaton:
    """Finite automaton over rule indices; every state is final."""

    def __init__(self, states: Iterable[tuple], edges: Iterable[Edge], numbers: Mapping[tuple, int],
                 unfurled: bool = False):
        self.states = tuple(states)
        self.edges = tuple(edges)
        self.numbers = dict(numbers)
        self.unfurled = unfurled
        self._out = {}
        for e in self.edges:
            self._out.setdefault(e[0], []).append(e)
        for v in self._out.values():
            v.sort(key=lambda e: e[1])

    initial = ()

    def __repr__(self):
        return f"<InteractionAutomaton states={len(self.states)} edges={len(self.edges)}>"

    def __eq__(self, other):
        return isinstance(other, InteractionAutomaton) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        """Identity of the labelled structure (state names normalised)."""
        return (frozenset(self.states), frozenset(self.edges))

    @staticmethod
    def is_tree_edge(edge: Edge) -> bool:
        src, label, dst = edge
        return dst == src + (label,)

    @property
    def tree_edges(self):
        return [e for e in self.edges if self.is_tree_edge(e)]

    @property
    def back_edges(self):
        return [e for e in self.edges if not self.is_tree_edge(e)]

    def out_edges(self, state) -> list:
        return list(self._out.get(state, ()))

    def name(self, state) -> str:
        return f"q{self.numbers[state]}"

    def transitions(self) -> list[tuple[int, str, str]]:
        """(label, source name, target name), in state order."""
        return [(l, self.name(s), self.name(d)) for s in self.states for (_, l, d) in self.out_edges(s)]

    def format_transitions(self) -> str:
        return ", ".join(f"{l}({s}, {d})" for l, s, d in self.transitions())

    def reachable(self) -> set:
        seen = {self.initial} if self.initial in self.states else set()
        stack = list(seen)
        while stack:
            s = stack.pop()
            for _, _, d in self._out.get(s, ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    def restrict(self, edges: Iterable[Edge]) -> "InteractionAutomaton":
        """Keep the given edges, then drop whatever became unreachable."""
        keep = set(edges)
        tmp = InteractionAutomaton(self.states, [e for e in self.edges if e in keep], self.numbers, self.unfurled)
        live = tmp.reachable()
        return InteractionAutomaton(
            [s for s in self.states if s in live],
            [e for e in tmp.edges if e[0] in live and e[2] in live],
            {s: n for s, n in self.numbers.items() if s in live},
            self.unfurled)

    def accepts(self, seq: Iterable[int]) -> bool:
        s = self.initial
        for label in seq:
            nxt = [d for _, l, d in self._out.get(s, ()) if l == label]
            if not nxt:
                return False
            s = nxt[0]
        return True

    def language(self, max_len: int) -> list[tuple[int, ...]]:
        out = []
        stack = [((), self.initial)]
        while stack:
            seq, s = stack.pop()
            out.append(seq)
            if len(seq) < max_len:
                for _, l, d in reversed(self.out_edges(s)):
                    stack.append((seq + (l,), d))
        return sorted(out, key=lambda w: (len(w), w))

    def check_invariants(self) -> list[str]:
        problems = []
        states = set(self.states)
        if self.initial not in states:
            return ["initial state missing"]
        for s in self.states:
            if s and (s[:-1] not in states or (s[:-1], s[-1], s) not in self.edges):
                problems.append(f"{s}: state not reached by its trie edge")
        for src, label, dst in self.back_edges:
            if not (len(dst) <= len(src) and src[:len(dst)] == dst and dst and dst[-1] == label):
                problems.append(f"{label}({src}, {dst}): back-edge does not target a trie ancestor entered by {label}")
                continue
            if not self.unfurled:
                recent = max(i for i, x in enumerate(src) if x == label)
                if dst != src[:recent + 1]:
                    problems.append(f"{label}({src}, {dst}): back-edge skips a more recent occurrence")
        for s in self.states:
            labels = [l for _, l, _ in self.out_edges(s)]
            if len(labels) != len(set(labels)):
                problems.append(f"{s}: nondeterministic labels")
        unreachable = states - self.reachable()
        if unreachable:
            problems.append(f"unreachable states: {sorted(unreachable)}")
        return problems

    def to_dot(self, name: str = "fsa") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=doublecircle];"]
        for s in self.states:
            attrs = f'label="{self.name(s)}"'
            if s == self.initial:
                attrs = f'label=">{self.name(s)}", style=bold'
            lines.append(f"  {self.name(s)} [{attrs}];")
        for l, s, d in self.transitions():
            lines.append(f'  {s} -> {d} [label="{l}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_global_fsa(follow: Mapping[int, Iterable[int]]) -> InteractionAutomaton:
    """Trie of repetition-free rule sequences with back-edges for repeats."""
    follow = {i: sorted(js) for i, js in follow.items()}
    everything = sorted(follow)
    states, edges = [()], []

    def visit(path):
        for j in (follow[path[-1]] if path else everything):
            if j in path:
                recent = max(i for i, x in enumerate(path) if x == j)
                edges.append((path, j, path[:recent + 1]))
            else:
                child = path + (j,)
                states.append(child)
                edges.append((path, j, child))
                visit(child)

    visit(())
    return InteractionAutomaton(states, edges, {s: i for i, s in enumerate(states, 1)})


def unfurl(fsa: InteractionAutomaton, depth: int) -> InteractionAutomaton:
    """Replace each cycle-closing edge by ``depth`` fresh copies of its cycle.

    Every back-edge s --r--> t becomes a trie edge to a copy of t's
    subtree; back-edges inside the copy that close onto t close onto the
    copy instead, others keep their targets, so the accepted language is
    unchanged.
    """
    states, edges = list(fsa.states), list(fsa.edges)
    for _ in range(depth):
        children = {}
        for e in edges:
            if InteractionAutomaton.is_tree_edge(e):
                children.setdefault(e[0], []).append(e[2])
        out = {}
        for e in edges:
            out.setdefault(e[0], []).append(e)
        new_states, new_edges = list(states), []
        for e in edges:
            src, label, dst = e
            if InteractionAutomaton.is_tree_edge(e):
                new_edges.append(e)
                continue
            top = src + (label,)

            def relocate(p, dst=dst, top=top):
                return top + p[len(dst):] if p[:len(dst)] == dst else p

            stack = [dst]
            while stack:
                u = stack.pop()
                new_states.append(relocate(u))
                for _, l, d in out.get(u, ()):
                    new_edges.append((relocate(u), l, relocate(d)))
                stack.extend(children.get(u, ()))
            new_edges.append((src, label, top))
        states, edges = new_states, new_edges
    order = _dfs_order(states, edges)
    return InteractionAutomaton(order, _sort_edges(order, edges), {s: i for i, s in enumerate(order, 1)},
                                unfurled=True)


def _dfs_order(states, edges):
    children = {}
    for s, l, d in edges:
        if d == s + (l,):
            children.setdefault(s, []).append(d)
    order = []

    def visit(s):
        order.append(s)
        for c in sorted(children.get(s, ()), key=lambda d: d[-1]):
            visit(c)

    visit(())
    return order


def _sort_edges(order, edges):
    pos = {s: i for i, s in enumerate(order)}
    return sorted(set(e for e in edges if e[0] in pos and e[2] in pos), key=lambda e: (pos[e[0]], e[1]))


# ----------------------------------------------------------------------
# propagation
# ----------------------------------------------------------------------

@dataclass
class Propagation:
    annotations: dict  # state -> list of structures
    succeeded: set  # edges whose application succeeded at least once
    unsettled: set  # states whose annotation set had not stabilised at the cap
    rounds: int = 0


def propagate(fsa: InteractionAutomaton, rules: Mapping[int, CompiledRule], start: Iterable[FeatureStructure],
              cap: int = 8, exact: bool = True) -> Propagation:
    """Push structures along every transition until nothing new arrives.

    With ``exact`` the annotation of a state is the set of distinct
    structures reaching it; otherwise structures subsumed by one already
    present are not added.  One round is one traversal of every edge, so
    after round 1 each further round is one more turn around the cycles.
    """
    ann = {s: [] for s in fsa.states}
    seen = {s: set() for s in fsa.states}
    succeeded = set()
    pushed = dict.fromkeys(fsa.edges, 0)

    def add(state, fs):
        if fs in seen[state]:
            return
        if not exact and any(subsumes(old, fs) for old in ann[state]):
            return
        seen[state].add(fs)
        ann[state].append(fs)

    for fs in start:
        add(fsa.initial, fs)
    rounds = 0
    while True:
        pending = [e for e in fsa.edges if pushed[e] < len(ann[e[0]])]
        if not pending:
            return Propagation(ann, succeeded, set(), rounds)
        if rounds >= max(cap, 1):
            break
        rounds += 1
        for e in fsa.edges:
            src, label, dst = e
            todo = ann[src][pushed[e]:]
            pushed[e] = len(ann[src])
            for a in todo:
                for out in rules[label].apply(a):
                    succeeded.add(e)
                    add(dst, out)
    stuck = {e[0] for e in fsa.edges if pushed[e] < len(ann[e[0]])}
    unsettled = set(stuck)
    stack = list(stuck)
    while stack:
        s = stack.pop()
        for _, _, d in fsa.out_edges(s):
            if d not in unsettled:
                unsettled.add(d)
                stack.append(d)
    return Propagation(ann, succeeded, unsettled, rounds)


def _failing_edges(fsa, prop):
    return {e for e in fsa.edges if e not in prop.succeeded and e[0] not in prop.unsettled}


def reduce_by_propagation(fsa: InteractionAutomaton, rules: Mapping[int, CompiledRule], word: FeatureStructure,
                          cap: int = 8) -> InteractionAutomaton:
    """Delete transitions that fail for every description reaching them."""
    prop = propagate(fsa, rules, [word], cap, exact=False)
    dead = _failing_edges(fsa, prop)
    return fsa.restrict(e for e in fsa.edges if e not in dead)


@dataclass
class PruneResult:
    automaton: InteractionAutomaton
    annotations: dict
    unsettled: set
    pruned: list = field(default_factory=list)  # failing edges removed, in order
    discarded: list = field(default_factory=list)  # arcs dropped as duplicates


def prune_for_entry(fsa: InteractionAutomaton, entry: FeatureStructure, rules: Mapping[int, CompiledRule],
                    unfurl_depth: int = 0, cap: int = 8) -> PruneResult:
    """Abstract lexicon expansion of one entry over the reduced automaton."""
    if unfurl_depth > 0:
        fsa = unfurl(fsa, unfurl_depth)
    pruned, discarded = [], []
    while True:
        prop = propagate(fsa, rules, [entry], cap, exact=True)
        dead = _failing_edges(fsa, prop)
        if dead:
            pruned += [e for e in fsa.edges if e in dead]
            fsa = fsa.restrict(e for e in fsa.edges if e not in dead)
            continue
        groups = OrderedDict()
        for s in sorted(fsa.states):
            if s in prop.unsettled:
                continue
            groups.setdefault(frozenset(prop.annotations[s]), []).append(s)
        drop = set()
        for members in groups.values():
            for s in members[1:]:
                drop.add((s[:-1], s[-1], s))
        if not drop:
            break
        discarded += [e for e in fsa.edges if e in drop]
        fsa = fsa.restrict(e for e in fsa.edges if e not in drop)
    annotations = {s: prop.annotations[s] for s in fsa.states}
    return PruneResult(fsa, annotations, prop.unsettled & set(fsa.states), pruned, discarded)


# ----------------------------------------------------------------------
# natural classes and clause encoding
# ----------------------------------------------------------------------

def group_classes(pruned: Mapping[str, object], key=None) -> "OrderedDict[str, tuple]":
    """Group entries by pruned automaton; class ids c1, c2, ... by first entry."""
    key = key or (lambda name, res: _automaton_of(res).key())
    classes: OrderedDict = OrderedDict()
    index = {}
    for name, res in pruned.items():
        k = key(name, res)
        if k not in index:
            index[k] = f"c{len(index) + 1}"
            classes[index[k]] = (_automaton_of(res), [])
        classes[index[k]][1].append(name)
    return classes


def _automaton_of(res):
    return res.automaton if isinstance(res, PruneResult) else res


@dataclass(frozen=True)
class InteractionClause:
    """``head(In, Out) :- lex_rule_k(In, Aux), next(Aux, Out).`` or ``head(In, In).``"""

    head: str
    state: tuple
    rule: int | None = None
    next: str | None = None
    target: tuple | None = None
    transfer: object = None  # TransferClause imposed on (In, Aux) after unfolding

    @property
    def is_unit(self) -> bool:
        return self.rule is None

    def __str__(self):
        if self.is_unit:
            return f"{self.head}(In, In)."
        return f"{self.head}(In, Out) :- lex_rule_{self.rule}(In, Aux), {self.next}(Aux, Out)."


def predicate_name(class_id: str, fsa: InteractionAutomaton, state) -> str:
    return f"{class_id}_{fsa.name(state)}"


def encode_interaction(fsa: InteractionAutomaton, class_id: str) -> list[InteractionClause]:
    """One clause per transition, then one unit clause per state."""
    steps, units = [], []
    for s in fsa.states:
        for _, label, d in fsa.out_edges(s):
            steps.append(InteractionClause(predicate_name(class_id, fsa, s), s, label,
                                           predicate_name(class_id, fsa, d), d))
        units.append(InteractionClause(predicate_name(class_id, fsa, s), s))
    return steps + units
