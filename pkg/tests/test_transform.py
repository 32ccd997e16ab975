import pytest

from conftest import REFERENCE_STATE
from lexrules.avm import parse, render
from lexrules.featstruct import FeatureStructure, equivalent, shared_paths, subsumes
from lexrules.grammar import Grammar
from lexrules.interaction import InteractionAutomaton, encode_interaction
from lexrules.pipeline import compile_lexicon
from lexrules.runtime import entry_goal, solve
from lexrules.transform import (ExtendedLexicalEntry, filter_transfer_clauses, interaction_to_clause,
                                lift_generalization, partial_unfold, rule_clause)
from oracles import fold_generalize

C, A, B = ("C",), ("A",), ("B",)
W, X, Y, Z = ("C", "W"), ("C", "X"), ("C", "Y"), ("C", "Z")

# (rule, source, target) -> paths shared between In and Aux after unfolding
E1_UNFOLDED_SHARING = {
    (1, "q1", "q2"): {B, W, Z},
    (2, "q1", "q3"): {A, B, X, Y, Z},
    (2, "q2", "q7"): {A, B, X, Y, Z},
    (3, "q7", "q14"): {A, B, W, X},
    (3, "q14", "q14"): {A, B, W, X},
    (4, "q14", "q19"): {A, W, Y, Z},
}


def c_species(clause):
    return dict(clause.species)[C]


def test_filter_discards_t1_clauses_for_e1(rules, e1):
    for k in (1, 2):
        kept = filter_transfer_clauses([e1], rules[k])
        assert [c_species(c) for c in kept] == ["t_2"]


def test_filter_keeps_t1_clauses_for_t1_entry(rules, sig):
    t1_entry = parse(sig, "word & (A:a, B:-, C:t_1 & (W:-, X:-, Y:-))")
    assert [c_species(c) for c in filter_transfer_clauses([t1_entry], rules[1])] == ["t_1"]
    both = filter_transfer_clauses([t1_entry, FeatureStructure.of_type(sig, "word")], rules[1])
    assert len(both) == 2


def test_filter_unsettled_uses_frames_only(rules, sig):
    clash = parse(sig, "word & (B:+, C:t_2)")
    assert filter_transfer_clauses([clash], rules[1]) == []
    assert [c_species(c) for c in filter_transfer_clauses([clash], rules[1], settled=False)] == ["t_2"]


def test_unfold_multiplicity(rules):
    fsa = InteractionAutomaton([(), (1,)], [((), 1, (1,))], {(): 1, (1,): 2})
    clauses = encode_interaction(fsa, "c1")
    unfolded, defs = partial_unfold(clauses, rules, {})
    steps = [c for c in unfolded if not c.is_unit]
    assert len(steps) == len(rules[1].transfer) == 2
    assert len(unfolded) == 4
    kept, _ = partial_unfold(clauses, rules, {((), 1): (1,)})
    assert [c.transfer for c in kept if not c.is_unit] == [rules[1].transfer[1]]
    assert [d.head.pred for d in defs] == ["lex_rule_1", "lex_rule_2", "lex_rule_3", "lex_rule_4"]
    assert all(d.body == () for d in defs)


def test_unfolded_sharings(lexicon, sig, grammar):
    cls = lexicon.classes["c1"]
    got = {}
    for ic in cls.unfolded:
        if ic.is_unit:
            continue
        clause = interaction_to_clause(ic, sig, grammar.word_type)
        key = (ic.rule, REFERENCE_STATE[ic.state], REFERENCE_STATE[ic.target])
        assert key not in got  # one surviving transfer clause per transition
        got[key] = shared_paths(clause.bindings, 0, 2)
        assert clause.bindings.type_at(C) == "t_2"
    assert got == E1_UNFOLDED_SHARING
    assert len(cls.unfolded) == 12


def test_rule_clause_shape(rules):
    c = rule_clause(rules[3].rule)
    assert c.head.pred == "lex_rule_3" and c.rule == 3 and c.body == ()
    t = rule_clause(rules[3].rule, with_transfer=True)
    assert [l.pred for l in t.body] == ["transfer_3"]


def test_lift_rules_1_2_exact(lexicon12, sig):
    lifted = lexicon12.entries["e1"].lifted
    expected = parse(sig, "word & (A:b, B:#1=-, C:(W:-, X:-, Y:-, Z:#2=<a, b>))",
                     "word & (A:b, B:#1, C:(Z:#2))")
    assert equivalent(lifted, expected)
    assert shared_paths(lifted, 0, 1) == {B, Z}


def test_lift_all_rules(lexicon, sig):
    out = lexicon.entries["e1"].lifted_out
    assert render(out) == "word & (A:b, C:t_2)"


def test_lift_equals_generalization_of_derivations(lexicon, lexicon12):
    for lex in (lexicon, lexicon12):
        e = lex.entries["e1"]
        pairs = [s.bindings.project([0, 1]) for s in solve(entry_goal(lex, "e1"), lex)]
        oracle = fold_generalize(pairs)
        assert subsumes(e.lifted, oracle)
        assert all(subsumes(e.lifted, p) for p in pairs)
    # with rules 1 and 2 the summary is exact
    pairs = [s.bindings.project([0, 1]) for s in solve(entry_goal(lexicon12, "e1"), lexicon12)]
    assert equivalent(lexicon12.entries["e1"].lifted, fold_generalize(pairs))


def test_lift_lone_initial_state(grammar, sig):
    entry = parse(sig, "word & (A:a, B:+, C:t_1 & (W:+, X:-, Y:+))")
    lex = compile_lexicon(Grammar(sig, grammar.rules, {"stuck": entry}, grammar.word_type))
    e = lex.entries["stuck"]
    assert lex.classes[e.class_id].automaton.states == ((),)
    assert equivalent(e.lifted, entry.project([0, 0]))


def test_lift_cap_zero_still_sound(grammar):
    from lexrules.pipeline import RunConfig
    lex = compile_lexicon(grammar, RunConfig(lift_cap=0))
    e = lex.entries["e1"]
    for s in solve(entry_goal(lex, "e1"), lex):
        assert subsumes(e.lifted, s.bindings.project([0, 1]))


def test_unfolding_preserves_solutions(lexicon, lexicon12):
    from lexrules.checks import canonical_set
    from lexrules.runtime import solve_program
    for lex in (lexicon, lexicon12):
        goal = entry_goal(lex, "e1")
        a = canonical_set(s.entry for s in solve(goal, lex))
        b = canonical_set(s.entry for s in solve_program(lex.reference_program(), goal))
        assert a == b


def test_reference_program_has_transfer_layer(lexicon):
    ref = lexicon.reference_program()
    assert "transfer_1" in ref and "transfer_1" not in lexicon.program
    assert len(ref["transfer_1"]) == 2
    assert lexicon.check() == []


def test_facade(grammar, sig):
    import doctest

    import lexrules.pipeline
    from lexrules.pipeline import LexiconCompiler
    assert doctest.testmod(lexrules.pipeline).failed == 0
    est = LexiconCompiler(depth_bound=1)
    assert est.get_params()["depth_bound"] == 1
    with pytest.raises(RuntimeError):
        est.transform()
    assert len(est.fit(grammar).transform()["e1"]) == 3
    assert len(est.set_params(depth_bound=32).lookup(parse(sig, "(B:+)"))) == 1
    with pytest.raises(ValueError):
        est.set_params(bogus=1)
