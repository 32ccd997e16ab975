import sys

import pytest

from lexrules.bundled import example_grammar
from lexrules.pipeline import compile_lexicon
from lexrules.rules import compile_rule

# Reference names of global-automaton states, keyed by their rule sequence.
REFERENCE_STATE = {
    (): "q1", (1,): "q2", (2,): "q3", (3,): "q4", (4,): "q5",
    (1, 4): "q6", (1, 2): "q7", (1, 3): "q8", (2, 1): "q9", (2, 4): "q10", (2, 3): "q11", (3, 4): "q12",
    (1, 2, 4): "q13", (1, 2, 3): "q14", (1, 3, 4): "q15", (2, 1, 3): "q16", (2, 1, 4): "q17",
    (2, 3, 4): "q18", (1, 2, 3, 4): "q19", (2, 1, 3, 4): "q20",
}


def reference_transitions(fsa):
    """Transitions as (rule, source, target) using reference state names."""
    return {(label, REFERENCE_STATE[src], REFERENCE_STATE[dst]) for src, label, dst in fsa.edges}


@pytest.fixture(scope="session")
def grammar():
    return example_grammar()


@pytest.fixture(scope="session")
def sig(grammar):
    return grammar.sig


@pytest.fixture(scope="session")
def rules(grammar):
    return {r.index: compile_rule(r) for r in grammar.rules}


@pytest.fixture(scope="session")
def e1(grammar):
    return grammar.entries["e1"]


@pytest.fixture(scope="session")
def lexicon(grammar):
    return compile_lexicon(grammar)


@pytest.fixture(scope="session")
def lexicon12(grammar):
    return compile_lexicon(grammar.restrict_rules([1, 2]))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
