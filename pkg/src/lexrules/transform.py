"""Program transformations on compiled interaction clauses.

* deletion of transfer clauses that can never succeed at a transition,
* partial unfolding of the surviving transfer clauses into the
  interaction clauses (rule predicates stay entry-independent),
* generalization lifting: a bottom-up summary of each interaction
  predicate, used to attach ``lifted_out`` to every entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from . import featstruct as fsm
from .featstruct import FeatureStructure, equivalent, generalize
from .interaction import InteractionClause
from .rules import CompiledRule, LexicalRule, TransferClause
from .runtime import Clause, Literal, Program

DEFAULT_LIFT_CAP = 16


@dataclass(frozen=True)
class ExtendedLexicalEntry:
    name: str
    base: FeatureStructure
    class_id: str
    predicate: str
    lifted: FeatureStructure | None = None  # roots (base, lifted_out)

    @property
    def lifted_out(self) -> FeatureStructure | None:
        return None if self.lifted is None else self.lifted.select(1)


@dataclass
class NaturalClass:
    class_id: str
    automaton: object
    entries: list
    survivors: dict  # (state, rule) -> tuple of transfer clause positions
    clauses: list = field(default_factory=list)  # InteractionClause, pre-unfolding
    unfolded: list = field(default_factory=list)  # InteractionClause with transfer set

    @property
    def entry_predicate(self) -> str:
        return f"{self.class_id}_{self.automaton.name(self.automaton.initial)}"


@dataclass
class CompiledLexicon:
    sig: object
    word_type: str
    rules: dict  # index -> CompiledRule
    follow: dict
    global_fsa: object
    reduced_fsa: object
    pruned: dict  # entry name -> PruneResult
    classes: dict  # class id -> NaturalClass
    entries: dict  # entry name -> ExtendedLexicalEntry
    rule_clauses: list  # transfer-free lex_rule_k definitions
    program: Program  # unfolded interaction clauses + rule clauses
    config: object = None

    def class_of_predicate(self, pred: str) -> str | None:
        cid = pred.split("_", 1)[0]
        return cid if cid in self.classes else None

    def reference_program(self) -> Program:
        """The program before transfer deletion and unfolding."""
        clauses = []
        for rule in self.rules.values():
            clauses.append(rule_clause(rule.rule, with_transfer=True))
            clauses += transfer_facts(rule)
        for cls in self.classes.values():
            clauses += [interaction_to_clause(c, self.sig, self.word_type) for c in cls.clauses]
        return Program(order_clauses(clauses))

    def check(self) -> list[str]:
        problems = []
        preds = {c.head.pred for c in self.program}
        for c in self.program:
            for lit in c.body:
                if lit.pred not in preds:
                    problems.append(f"{c.head.pred}: calls undefined {lit.pred}")
        for name, e in self.entries.items():
            if e.class_id not in self.classes:
                problems.append(f"{name}: unknown class {e.class_id}")
        return problems


# ----------------------------------------------------------------------
# transfer clause deletion
# ----------------------------------------------------------------------

def filter_transfer_clauses(annotations: Iterable[FeatureStructure], rule: CompiledRule,
                            settled: bool = True) -> list[TransferClause]:
    """Transfer clauses of ``rule`` that succeed on some annotation.

    A clause survives when its in-frame, together with the rule's input
    description, is compatible with a structure reaching the transition.
    Without settled annotations every clause whose in-frame is compatible
    with some annotation is kept.
    """
    annotations = list(annotations)
    out = []
    for clause in rule.transfer:
        test = clause.program if settled else clause.frame
        if any(fsm.unify_at(test, 0, a) is not None for a in annotations):
            out.append(clause)
    return out


def transition_survivors(prune_result, rules: Mapping[int, CompiledRule]) -> dict:
    """(source state, rule) -> positions of surviving transfer clauses."""
    survivors = {}
    fsa = prune_result.automaton
    for src, label, _ in fsa.edges:
        rule = rules[label]
        settled = src not in prune_result.unsettled
        kept = filter_transfer_clauses(prune_result.annotations[src], rule, settled)
        if not kept:
            kept = list(rule.transfer)
        survivors[(src, label)] = tuple(rule.transfer.index(c) for c in kept)
    return survivors


# ----------------------------------------------------------------------
# clause construction
# ----------------------------------------------------------------------

def rule_clause(rule: LexicalRule, with_transfer: bool = False) -> Clause:
    """``lex_rule_k(In, Out)``, optionally calling ``transfer_k(In, Out)``."""
    body = (Literal(f"transfer_{rule.index}", (0, 1)),) if with_transfer else ()
    return Clause(Literal(rule.predicate, (0, 1)), body, rule.spec, rule=rule.index, names=("In", "Out"))


def transfer_facts(rule: CompiledRule) -> list[Clause]:
    return [Clause(Literal(f"transfer_{rule.index}", (0, 1)), (), t.frame, names=("In", "Out"))
            for t in rule.transfer]


def interaction_to_clause(ic: InteractionClause, sig, word_type: str) -> Clause:
    word = FeatureStructure.of_type(sig, word_type)
    if ic.is_unit:
        return Clause(Literal(ic.head, (0, 0)), (), word, names=("In",))
    if ic.transfer is not None:
        bindings = fsm.combine(ic.transfer.frame, word).project([0, 2, 1])
    else:
        bindings = FeatureStructure.of_type(sig, word_type, 3)
    return Clause(Literal(ic.head, (0, 1)),
                  (Literal(f"lex_rule_{ic.rule}", (0, 2)), Literal(ic.next, (2, 1))),
                  bindings, names=("In", "Out", "Aux"))


def order_clauses(clauses: Iterable[Clause]) -> list[Clause]:
    """Per predicate: unit clauses first, then by called rule (stable)."""
    def called_rule(c):
        for lit in c.body:
            if lit.pred.startswith("lex_rule_"):
                return int(lit.pred.rsplit("_", 1)[1])
        return -1
    clauses = list(clauses)
    first = {}
    for c in clauses:
        first.setdefault(c.head.pred, len(first))
    return sorted(clauses, key=lambda c: (first[c.head.pred], not c.is_unit, called_rule(c)))


def partial_unfold(clauses: Iterable[InteractionClause], rules: Mapping[int, CompiledRule],
                   survivors: Mapping) -> tuple[list[InteractionClause], list[Clause]]:
    """Inline surviving transfer clauses; return (interaction clauses, rule clauses).

    Every non-unit clause becomes one clause per surviving transfer clause
    of its transition, carrying that clause's frame on (In, Aux).
    """
    unfolded = []
    for ic in clauses:
        if ic.is_unit:
            unfolded.append(ic)
            continue
        rule = rules[ic.rule]
        for pos in survivors.get((ic.state, ic.rule), range(len(rule.transfer))):
            unfolded.append(replace(ic, transfer=rule.transfer[pos]))
    rule_defs = [rule_clause(rules[k].rule) for k in sorted(rules)]
    return unfolded, rule_defs


# ----------------------------------------------------------------------
# generalization lifting
# ----------------------------------------------------------------------

def _through_rule(bindings, call, spec):
    """Bindings (In, Out, Aux) with In unified with ``call`` and (In, Aux) with ``spec``."""
    fs = fsm.unify_at(bindings, 0, call)
    if fs is None:
        return None
    n = fs.arity
    fs = fsm.combine(fs, spec)
    return fsm.unify_roots(fs, [(0, n), (2, n + 1)])


def _widen(old: dict, new: dict) -> tuple[dict, bool]:
    out, changed = dict(old), False
    for q, fs in new.items():
        if q not in old:
            out[q] = fs
            changed = True
            continue
        g = generalize(old[q], fs)
        if not equivalent(g, old[q]):
            out[q] = g
            changed = True
    return out, changed


def call_patterns(clauses: list[Clause], rule_specs: Mapping[str, FeatureStructure], entry_pred: str,
                  entry: FeatureStructure, word: FeatureStructure, cap: int = DEFAULT_LIFT_CAP) -> dict:
    """Most specific description of every In argument reaching each predicate."""
    steps = [c for c in clauses if not c.is_unit]
    patterns = {entry_pred: entry}
    for _ in range(max(cap, 1)):
        new = {}
        for c in steps:
            call = patterns.get(c.head.pred)
            if call is None:
                continue
            fs = _through_rule(c.bindings, call, rule_specs[c.body[0].pred])
            if fs is None:
                continue
            aux = fs.select(2)
            q = c.body[1].pred
            new[q] = aux if q not in new else generalize(new[q], aux)
        patterns, changed = _widen(patterns, new)
        if not changed:
            return patterns
    return {q: (entry if q == entry_pred else word) for q in patterns}


def summaries(clauses: list[Clause], rule_specs: Mapping[str, FeatureStructure], patterns: Mapping,
              word: FeatureStructure, cap: int = DEFAULT_LIFT_CAP) -> dict:
    """Generalization of all (In, Out) pairs each predicate can produce."""
    summary: dict = {}
    for _ in range(max(cap, 1)):
        contribs: dict = {}
        for c in clauses:
            q = c.head.pred
            call = patterns.get(q)
            if call is None:
                continue
            if c.is_unit:
                contribs.setdefault(q, []).append(call.project([0, 0]))
                continue
            callee = summary.get(c.body[1].pred)
            if callee is None:
                continue
            fs = _through_rule(c.bindings, call, rule_specs[c.body[0].pred])
            if fs is None:
                continue
            n = fs.arity
            fs = fsm.unify_roots(fsm.combine(fs, callee), [(2, n), (1, n + 1)])
            if fs is not None:
                contribs.setdefault(q, []).append(fs.project([0, 1]))
        new = {q: fsm.generalize_all(cs) for q, cs in contribs.items()}
        summary, changed = _widen(summary, new)
        if not changed:
            return summary
    return {q: fsm.combine(call, word) for q, call in patterns.items()}


def lift_generalization(class_clauses: list[Clause], entry: ExtendedLexicalEntry, rule_clauses: Iterable[Clause],
                        word: FeatureStructure, cap: int = DEFAULT_LIFT_CAP) -> ExtendedLexicalEntry:
    """Attach ``lifted_out``: what every derivation from ``entry`` has in common.

    Summaries are computed for the calls the entry actually makes, so
    values passed through unchanged stay shared with the base.
    """
    specs = {c.head.pred: c.bindings for c in rule_clauses}
    patterns = call_patterns(class_clauses, specs, entry.predicate, entry.base, word, cap)
    summary = summaries(class_clauses, specs, patterns, word, cap)
    top = summary.get(entry.predicate)
    start = fsm.combine(entry.base, word)
    lifted = fsm.unify(start, top) if top is not None else None
    if lifted is None:
        lifted = start
    return replace(entry, lifted=lifted)
