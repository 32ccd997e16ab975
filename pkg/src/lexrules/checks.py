"""Independent oracles, random generators and the property suite.

The brute-force closure applies rules freely (no automaton, no
unfolding) and is the reference that compiled lexica are checked against.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field

from . import featstruct as fsm
from .featstruct import FeatureStructure, canonical_form, generalize, subsumes, unify
from .rules import changed_paths, frame_paths


class ClosureLimit(Exception):
    pass


def closure(base: FeatureStructure, rules, limit: int = 10_000) -> dict:
    """Every entry derivable from ``base`` by free rule application.

    Returns entry -> shortest derivation (ties broken by rule indices).
    """
    found = {base: ()}
    frontier = [base]
    while frontier:
        nxt = []
        for fs in frontier:
            for k in sorted(rules):
                for out in rules[k].apply(fs):
                    if out not in found:
                        found[out] = found[fs] + (k,)
                        nxt.append(out)
                        if len(found) > limit:
                            raise ClosureLimit(f"more than {limit} derived entries")
        frontier = nxt
    return found


def canonical_set(structures) -> set:
    return {canonical_form(fs) for fs in structures}


# ----------------------------------------------------------------------
# random structures
# ----------------------------------------------------------------------

def random_total(sig, rng: random.Random, type_name: str, depth: int = 0, max_depth: int = 4) -> FeatureStructure:
    """A totally well-typed structure: every node a species, every appropriate arc present."""
    types, arcs = [], []

    def node(t, d):
        options = sig.species(t)
        if d >= max_depth:
            fewest = min(len(sig.approp(s)) for s in options)
            options = [s for s in options if len(sig.approp(s)) == fewest]
        s = rng.choice(sorted(options))
        n = len(types)
        types.append(s)
        arcs.append({})
        for f, r in sig.approp(s).items():
            arcs[n][f] = node(r, d + 1)
        return n

    root = node(type_name, depth)
    return fsm.build(sig, types, arcs, [root])


def random_partial(sig, rng: random.Random, type_name: str, max_depth: int = 4, keep: float = 0.3,
                   share: float = 0.15) -> FeatureStructure:
    """A total structure with most paths forgotten and a few reentrancies added."""
    full = random_total(sig, rng, type_name, max_depth=max_depth)
    fs = FeatureStructure.of_type(sig, type_name)
    paths = [p for p, _ in full.paths() if p]
    for p in paths:
        if rng.random() < keep:
            nxt = fsm.put_path(fs, p, full.type_at(p))
            if nxt is not None:
                fs = nxt
    if len(paths) > 1 and rng.random() < share:
        p, q = rng.sample(paths, 2)
        if not (p[:len(q)] == q or q[:len(p)] == p):
            tag = fsm.put_path(fs, p, sig.root)
            if tag is not None:
                tied = _tie(tag, p, q)
                if tied is not None:
                    fs = tied
    return fs


def _tie(fs, p, q):
    """Make paths p and q of root 0 reentrant, if consistent."""
    fs2 = fsm.put_path(fs, q, fs.sig.root)
    if fs2 is None:
        return None
    a, b = fs2.node_at(p), fs2.node_at(q)
    if a is None or b is None:
        return None
    types, arcs = fsm._raw(fs2)
    find = fsm._identify(fs2.sig, types, arcs, [(a, b)])
    if find is None:
        return None
    return fsm._normalize(fs2.sig, types, arcs, [find(r) for r in fs2.roots])


# ----------------------------------------------------------------------
# property checks (each returns a list of violation messages)
# ----------------------------------------------------------------------

def check_unification_laws(samples) -> list[str]:
    bad = []
    for a, b, c in itertools.islice(zip(samples, samples[1:], samples[2:]), None):
        ab, ba = unify(a, b), unify(b, a)
        if ab != ba:
            bad.append(f"commutativity: {a} / {b}")
        if unify(a, a) != a:
            bad.append(f"idempotence: {a}")
        if ab is not None and not (subsumes(a, ab) and subsumes(b, ab)):
            bad.append(f"result not below arguments: {a} / {b}")
        left = None if ab is None else unify(ab, c)
        bc = unify(b, c)
        right = None if bc is None else unify(a, bc)
        if left != right:
            bad.append(f"associativity: {a} / {b} / {c}")
    return bad


def check_generalize_lub(samples) -> list[str]:
    bad = []
    for a, b, c in zip(samples, samples[1:], samples[2:]):
        g = generalize(a, b)
        if not (subsumes(g, a) and subsumes(g, b)):
            bad.append(f"not an upper bound: {a} / {b}")
        if generalize(b, a) != g:
            bad.append(f"not symmetric: {a} / {b}")
        upper = generalize(g, c)
        if not subsumes(upper, g):
            bad.append(f"not least: {a} / {b} / {c}")
        ab = unify(a, b)
        if ab is not None and generalize(a, ab) != a:
            bad.append(f"absorption: {a} / {b}")
    return bad


def check_transfer_totality(entries, rules) -> list[str]:
    """Paths the output description leaves alone keep the input value."""
    bad = []
    for e in entries:
        for k, rule in rules.items():
            changed = changed_paths(rule.rule)
            frames = frame_paths(changed)
            for out in rule.apply(e):
                for p, _ in e.paths():
                    if p in frames or any(p[:len(c)] == c for c in changed):
                        continue
                    if out.type_at(p) != e.type_at(p):
                        bad.append(f"rule {k}: path {'.'.join(p)} not transferred for {e}")
                for c in changed:
                    want = rule.rule.out_spec.type_at(c)
                    got = out.type_at(c)
                    if got is None or not e.sig.is_subtype(got, want):
                        bad.append(f"rule {k}: changed path {'.'.join(c)} lost its output value")
    return bad


def check_lexicon(lexicon, rules=None, depth_bound: int = 32) -> list[str]:
    """Unfolding soundness, pruning transparency, lift soundness and replay."""
    from .runtime import entry_goal, replay, solve, solve_program

    rules = rules or lexicon.rules
    bad = list(lexicon.check())
    reference = lexicon.reference_program()
    for name, entry in lexicon.entries.items():
        goal = entry_goal(lexicon, name)
        sols = list(solve(goal, lexicon, depth_bound))
        unfolded = canonical_set(s.entry for s in sols)
        before = canonical_set(s.entry for s in solve_program(reference, goal, depth_bound))
        free = canonical_set(closure(entry.base, rules))
        if unfolded != before:
            bad.append(f"{name}: unfolding changed the solution set")
        if unfolded != free:
            bad.append(f"{name}: compiled solutions differ from free closure "
                       f"({len(unfolded)} vs {len(free)})")
        for s in sols:
            if s.entry not in replay(entry.base, s.derivation, rules):
                bad.append(f"{name}: derivation {s.derivation} does not replay")
            if entry.lifted is not None:
                pair = s.bindings.project([0, 1])
                if not subsumes(entry.lifted, pair):
                    bad.append(f"{name}: lifted entry does not subsume derivation {s.derivation}")
    return bad


def check_lookup(lexicon, queries, depth_bound: int = 32) -> list[str]:
    """lookup(q) equals derive_all filtered by q (refined by q)."""
    from .runtime import derive_all, lookup

    derived = {n: derive_all(n, lexicon, depth_bound) for n in lexicon.entries}
    bad = []
    for q in queries:
        got = canonical_set(s.entry for s in lookup(q, lexicon, depth_bound))
        want = set()
        for outs in derived.values():
            for s in outs:
                r = unify(q, s)
                if r is not None:
                    want.add(canonical_form(r))
        if got != want:
            bad.append(f"lookup mismatch for {q}: {len(got)} vs {len(want)}")
    return bad


def check_language(pruned, follow, base, rules, max_len: int = 6) -> list[str]:
    """Rejected follow-strings fail or only reproduce accepted results."""
    from .runtime import replay

    fsa = pruned.automaton
    cyclic = _cyclic_states(fsa)
    accepted_results = set()
    for w in fsa.language(max_len):
        accepted_results |= canonical_set(replay(base, w, rules))
    bad = []
    for w in _follow_strings(follow, max_len):
        results = replay(base, w, rules)
        if fsa.accepts(w):
            if not results and not _fails_on_cycle(fsa, w, base, rules, cyclic):
                bad.append(f"accepted {w} fails outside a cycle")
        elif not canonical_set(results) <= accepted_results:
            bad.append(f"rejected {w} derives a new entry")
    return bad


def _follow_strings(follow, max_len):
    out = []
    stack = [()]
    while stack:
        w = stack.pop()
        out.append(w)
        if len(w) < max_len:
            for j in (follow[w[-1]] if w else sorted(follow)):
                stack.append(w + (j,))
    return out


def _cyclic_states(fsa):
    on_cycle = set()
    for src, label, dst in fsa.back_edges:
        on_cycle |= {dst[:i] for i in range(len(dst), len(src) + 1)}
    return on_cycle


def _fails_on_cycle(fsa, w, base, rules, cyclic):
    from .runtime import replay

    state = fsa.initial
    for i, label in enumerate(w):
        if not replay(base, w[:i + 1], rules):
            return state in cyclic
        state = next(d for _, l, d in fsa.out_edges(state) if l == label)
    return True


@dataclass
class SuiteReport:
    results: dict = field(default_factory=dict)  # name -> (violations, seconds)

    @property
    def ok(self) -> bool:
        return all(not v for v, _ in self.results.values())

    def lines(self) -> list[str]:
        out = []
        for name, (violations, secs) in self.results.items():
            status = "PASS" if not violations else f"FAIL ({len(violations)})"
            out.append(f"{status:10} {name} [{secs:.2f}s]")
            out += [f"    {v}" for v in violations[:5]]
        return out


def run_property_suite(grammar=None, seed: int = 0, n_entries: int = 200, n_queries: int = 100,
                       n_algebra: int = 150, depth_bound: int = 32) -> SuiteReport:
    """The full invariant suite on a grammar (default: the bundled one)."""
    from .bundled import example_grammar
    from .grammar import Grammar
    from .pipeline import compile_lexicon
    from .rules import compile_rule

    grammar = grammar or example_grammar()
    sig, word = grammar.sig, grammar.word_type
    rng = random.Random(seed)
    report = SuiteReport()

    def timed(name, fn):
        t = time.perf_counter()
        report.results[name] = (fn(), time.perf_counter() - t)

    samples = [random_partial(sig, rng, word) for _ in range(n_algebra)]
    timed("unification algebra laws", lambda: check_unification_laws(samples))
    timed("generalize least upper bound", lambda: check_generalize_lub(samples))

    rules = {r.index: compile_rule(r) for r in grammar.rules}
    entries = [random_total(sig, rng, word) for _ in range(n_entries)]
    timed("transfer totality", lambda: check_transfer_totality(entries, rules))

    named = dict(grammar.entries)
    named.update({f"rand{i}": e for i, e in enumerate(entries)})
    lexicon = compile_lexicon(Grammar(sig, grammar.rules, named, word))
    timed("unfolding and lift soundness", lambda: check_lexicon(lexicon, rules, depth_bound))
    queries = [random_partial(sig, rng, word, keep=0.15) for _ in range(n_queries)]
    timed("lookup filter soundness", lambda: check_lookup(lexicon, queries, depth_bound))

    def language():
        bad = []
        for name, base in grammar.entries.items():
            bad += check_language(lexicon.pruned[name], lexicon.follow, base, rules)
        return bad

    timed("language soundness", language)
    return report
