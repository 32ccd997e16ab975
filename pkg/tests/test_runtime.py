import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from lexrules.avm import parse, render
from lexrules.checks import canonical_set, random_partial
from lexrules.featstruct import FeatureStructure, canonical_form, combine, unify
from lexrules.runtime import (Clause, Goal, Literal, Program, QueryError, derive_all, entry_goal, lookup,
                              replay, solve, solve_program)
from oracles import apply_sequence, free_closure


def test_derive_all_matches_free_closure(lexicon, rules, e1):
    got = derive_all("e1", lexicon)
    oracle = free_closure(e1, rules)
    assert len(got) == 7
    assert canonical_set(got) == canonical_set(oracle)


def test_derivations(lexicon):
    derivs = sorted(s.derivation for s in solve(entry_goal(lexicon, "e1"), lexicon))
    assert derivs == sorted([(), (1,), (1, 2), (1, 2, 3), (1, 2, 3, 3), (1, 2, 3, 3, 4), (2,)])


@pytest.mark.parametrize("bound,count", [(0, 1), (1, 3), (2, 4), (5, 7), (100, 7)])
def test_depth_bounds(lexicon, bound, count):
    assert len(derive_all("e1", lexicon, bound)) == count


def test_truncated_flag(lexicon):
    s = solve(entry_goal(lexicon, "e1"), lexicon, 2)
    list(s)
    assert s.truncated and s.summary()["solutions"] == 4
    full = solve(entry_goal(lexicon, "e1"), lexicon, 32)
    list(full)
    assert not full.truncated


def test_negative_bound(lexicon):
    with pytest.raises(ValueError):
        solve(entry_goal(lexicon, "e1"), lexicon, -1)


def test_replay_reproduces_every_solution(lexicon, rules, e1):
    for s in solve(entry_goal(lexicon, "e1"), lexicon):
        assert s.entry in replay(e1, s.derivation, rules)
        assert canonical_set(replay(e1, s.derivation, rules)) == \
            canonical_set(apply_sequence(e1, s.derivation, rules))
        assert s.class_id == "c1"


def test_goal_with_instantiated_output(lexicon, sig):
    out = parse(sig, "word & (C:(Z:<>))")
    sols = list(solve(entry_goal(lexicon, "e1", out), lexicon))
    assert sorted(s.derivation for s in sols) == [(1, 2, 3, 3), (1, 2, 3, 3, 4)]


def test_unit_goal_at_final_state(lexicon, e1):
    # after 1 2 3 4 only the unit clause applies
    fsa = lexicon.classes["c1"].automaton
    pred = f"c1_{fsa.name((1, 2, 3, 4))}"
    assert [c.is_unit for c in lexicon.program[pred]] == [True]
    goal = Goal(pred, combine(e1, FeatureStructure.of_type(e1.sig, "word")))
    assert [(s.derivation, s.entry) for s in solve(goal, lexicon)] == [((), e1)]


def test_unknown_entry_and_predicate(lexicon, sig):
    with pytest.raises(QueryError):
        entry_goal(lexicon, "nope")
    with pytest.raises(QueryError):
        solve(Goal("c9_q1", FeatureStructure.of_type(sig, "word", 2)), lexicon)


def test_lookup_examples(lexicon, lexicon12, sig):
    plus = parse(sig, "(B:+)")
    stream = lookup(plus, lexicon12)
    assert list(stream) == [] and stream.skipped == ["e1"]
    q = parse(sig, "(A:b, C:(Z:<a, b>))")
    assert len(canonical_set(s.entry for s in lookup(q, lexicon))) == 4
    wx = parse(sig, "(C:(W:+, X:+))")
    got = sorted(s.derivation for s in lookup(wx, lexicon))
    assert got == [(1, 2), (1, 2, 3), (1, 2, 3, 3)]


def test_lookup_rejects_non_word_query(lexicon, sig):
    with pytest.raises(QueryError):
        list(lookup(parse(sig, "t_2"), lexicon))
    with pytest.raises(QueryError):
        list(lookup(FeatureStructure.of_type(sig, "word", 2), lexicon))


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**31))
def test_lookup_filter_soundness(lexicon, sig, seed):
    q = random_partial(sig, random.Random(seed), "word", keep=0.2)
    got = canonical_set(s.entry for s in lookup(q, lexicon))
    want = set()
    for s in derive_all("e1", lexicon):
        r = unify(q, s)
        if r is not None:
            want.add(canonical_form(r))
    assert got == want


def test_program_container(sig):
    word = FeatureStructure.of_type(sig, "word")
    fact = Clause(Literal("p", (0, 0)), (), word)
    prog = Program([fact])
    assert "p" in prog and len(prog) == 1 and prog.predicates == ["p"]
    assert list(prog.merged(Program([fact]))) == [fact, fact]
    with pytest.raises(QueryError):
        prog["q"]
    sols = list(solve_program(prog, Goal("p", FeatureStructure.of_type(sig, "word", 2))))
    assert len(sols) == 1 and sols[0].derivation == ()


def test_solutions_are_ordered_deterministically(lexicon):
    a = [(render(s.entry), s.derivation) for s in solve(entry_goal(lexicon, "e1"), lexicon)]
    b = [(render(s.entry), s.derivation) for s in solve(entry_goal(lexicon, "e1"), lexicon)]
    assert a == b
    assert a[0][1] == ()
