import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import REFERENCE_STATE, reference_transitions
from lexrules.avm import parse
from lexrules.checks import check_language, random_total
from lexrules.featstruct import FeatureStructure
from lexrules.grammar import Grammar, parse_grammar_text
from lexrules.interaction import (InteractionAutomaton, build_global_fsa, compute_follow, encode_interaction,
                                  format_follow, group_classes, prune_for_entry, reduce_by_propagation, unfurl)
from lexrules.pipeline import compile_lexicon
from lexrules.rules import compile_rule
from oracles import free_closure
from test_rules import SIGNATURE_ONLY

E1_PRUNED = {(1, "q1", "q2"), (2, "q1", "q3"), (2, "q2", "q7"), (3, "q7", "q14"), (3, "q14", "q14"), (4, "q14", "q19")}


def compiled(text):
    g = parse_grammar_text(SIGNATURE_ONLY + text).load()
    return g, {r.index: compile_rule(r) for r in g.rules}


@pytest.fixture(scope="module")
def follow(rules):
    return compute_follow(rules.values())


@pytest.fixture(scope="module")
def global_fsa(follow):
    return build_global_fsa(follow)


@pytest.fixture(scope="module")
def reduced(global_fsa, rules, sig):
    return reduce_by_propagation(global_fsa, rules, FeatureStructure.of_type(sig, "word"))


def test_follow_relation(follow):
    assert follow == {1: (2, 3, 4), 2: (1, 3, 4), 3: (3, 4), 4: ()}
    assert format_follow(follow) == \
        "follow(1, [2, 3, 4]). follow(2, [1, 3, 4]). follow(3, [3, 4]). follow(4, [])."


def test_follow_toggle_and_identity():
    _, toggle = compiled("rule tog : (B:-) ==> (B:+).")
    assert compute_follow(toggle.values()) == {1: ()}
    _, ident = compiled("rule id : word ==> word.")
    assert compute_follow(ident.values()) == {1: (1,)}


def test_global_fsa(global_fsa):
    assert len(global_fsa.states) == 20
    assert global_fsa.check_invariants() == []
    arcs = reference_transitions(global_fsa)
    assert {(1, "q1", "q2"), (2, "q1", "q3"), (2, "q2", "q7"), (1, "q3", "q9"), (3, "q14", "q14"),
            (1, "q7", "q2"), (2, "q9", "q3")} <= arcs
    back = {(l, REFERENCE_STATE[s], REFERENCE_STATE[d]) for s, l, d in global_fsa.back_edges}
    assert back == {(1, "q7", "q2"), (2, "q9", "q3"), (3, "q4", "q4"), (3, "q8", "q8"), (3, "q11", "q11"),
                    (3, "q14", "q14"), (3, "q16", "q16")}


def test_global_fsa_trivial():
    two = build_global_fsa({1: ()})
    assert len(two.states) == 2 and two.edges == (((), 1, (1,)),)
    loop = build_global_fsa({1: (1,)})
    assert loop.edges == (((), 1, (1,)), ((1,), 1, (1,)))


def test_dfs_numbering(global_fsa):
    assert global_fsa.states[:4] == ((), (1,), (1, 2), (1, 2, 3))
    assert [global_fsa.name(s) for s in global_fsa.states] == [f"q{i}" for i in range(1, 21)]


def test_reduction_removes_exactly_two_arcs(global_fsa, reduced):
    removed = reference_transitions(global_fsa) - reference_transitions(reduced)
    assert removed == {(1, "q7", "q2"), (2, "q9", "q3")}
    assert len(reduced.states) == len(global_fsa.states)
    assert reduced.check_invariants() == []


def test_reduction_identity_when_everything_survives():
    g, rules = compiled("rule tog : (B:-) ==> (B:+).")
    fsa = build_global_fsa(compute_follow(rules.values()))
    assert reduce_by_propagation(fsa, rules, FeatureStructure.of_type(g.sig, "word")) == fsa


def test_reduction_uses_propagation_along_chains():
    g, rules = compiled("""
        rule setw : (C:(W:-)) ==> (C:(W:+)).
        rule neutral : (A:a) ==> (A:b).
        rule needw : (C:(W:-)) ==> (C:(X:+)).
    """)
    follow = compute_follow(rules.values())
    assert 3 in follow[2] and 3 not in follow[1]
    fsa = build_global_fsa(follow)
    assert ((1, 2), 3, (1, 2, 3)) in fsa.edges
    red = reduce_by_propagation(fsa, rules, FeatureStructure.of_type(g.sig, "word"))
    assert ((1, 2), 3, (1, 2, 3)) not in red.edges
    assert red.check_invariants() == []


def test_prune_for_entry(reduced, rules, e1):
    res = prune_for_entry(reduced, e1, rules)
    assert reference_transitions(res.automaton) == E1_PRUNED
    assert res.automaton.check_invariants() == []
    pruned = {(l, REFERENCE_STATE[s], REFERENCE_STATE[d]) for s, l, d in res.pruned}
    assert {(3, "q2", "q8"), (4, "q2", "q6"), (3, "q3", "q11"), (4, "q3", "q10"), (3, "q1", "q4"),
            (4, "q1", "q5"), (4, "q7", "q13"), (4, "q9", "q17")} <= pruned
    # the duplicate state q9 goes, together with everything below it
    assert all(d[:2] == (2, 1) for _, _, d in res.discarded)
    assert {(l, REFERENCE_STATE[s], REFERENCE_STATE[d]) for s, l, d in res.discarded
            if len(d) == 2} == {(1, "q3", "q9")}


def test_prune_entry_failing_everything(reduced, rules, sig):
    entry = parse(sig, "word & (A:a, B:+, C:t_1 & (W:+, X:-, Y:+))")
    res = prune_for_entry(reduced, entry, rules)
    assert res.automaton.states == ((),) and res.automaton.edges == ()


def test_prune_with_unfurling(reduced, rules, e1):
    res = prune_for_entry(reduced, e1, rules, unfurl_depth=1)
    assert set(res.automaton.edges) == {
        ((), 1, (1,)), ((), 2, (2,)), ((1,), 2, (1, 2)), ((1, 2), 3, (1, 2, 3)),
        ((1, 2, 3), 3, (1, 2, 3, 3)), ((1, 2, 3, 3), 4, (1, 2, 3, 3, 4))}
    assert res.automaton.back_edges == []
    assert res.automaton.check_invariants() == []


def test_unfurl_preserves_language(reduced):
    once = unfurl(reduced, 1)
    twice = unfurl(reduced, 2)
    for a in (once, twice):
        assert a.check_invariants() == []
        assert a.language(7) == reduced.language(7)
    assert len(twice.states) > len(once.states) > len(reduced.states)


def test_group_classes(reduced, rules, sig, e1):
    other_z = parse(sig, "(A:b, B:-, C:t_2 & (W:-, X:-, Y:-, Z:<b, a>))")
    w_plus = parse(sig, "(A:b, B:-, C:t_2 & (W:+, X:-, Y:-, Z:<a, b>))")
    pruned = {name: prune_for_entry(reduced, fs, rules)
              for name, fs in [("e1", e1), ("other", other_z), ("wplus", w_plus)]}
    classes = group_classes(pruned)
    assert list(classes) == ["c1", "c2"]
    assert classes["c1"][1] == ["e1", "other"]
    assert classes["c2"][1] == ["wplus"]
    assert group_classes({}) == {}


def test_encode_interaction(reduced, rules, e1):
    fsa = prune_for_entry(reduced, e1, rules).automaton
    clauses = encode_interaction(fsa, "c1")
    steps = [c for c in clauses if not c.is_unit]
    units = [c for c in clauses if c.is_unit]
    assert len(steps) == 6 and len(units) == 6
    name = {s: REFERENCE_STATE[s] for s in fsa.states}
    assert {(name[c.state], c.rule, name[c.target]) for c in steps} == \
        {(s, l, d) for l, s, d in E1_PRUNED}
    assert {name[c.state] for c in units} == {"q1", "q2", "q3", "q7", "q14", "q19"}
    (loop,) = [c for c in steps if c.state == c.target]
    assert loop.head == loop.next and loop.rule == 3
    assert str(loop) == f"{loop.head}(In, Out) :- lex_rule_3(In, Aux), {loop.head}(Aux, Out)."
    single = InteractionAutomaton([()], [], {(): 1})
    assert [str(c) for c in encode_interaction(single, "c9")] == ["c9_q1(In, In)."]


def test_dot_export(reduced, rules, e1):
    dot = prune_for_entry(reduced, e1, rules).automaton.to_dot("e1")
    assert dot.startswith("digraph e1 {")
    assert 'q1 [label=">q1", style=bold];' in dot
    assert dot.count("->") == 6
    assert 'q4 -> q4 [label="3"];' in dot


def test_language_soundness(lexicon, rules, e1):
    assert check_language(lexicon.pruned["e1"], lexicon.follow, e1, rules, max_len=6) == []


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**31))
def test_pruning_is_complete_for_random_entries(grammar, rules, reduced, seed):
    entry = random_total(grammar.sig, random.Random(seed), "word")
    res = prune_for_entry(reduced, entry, rules)
    assert res.automaton.check_invariants() == []
    # every entry the free closure finds is reachable through the pruned automaton
    reached = {fs for anns in res.annotations.values() for fs in anns}
    assert set(free_closure(entry, rules)) == reached
