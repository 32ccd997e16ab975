import json

import pytest

from lexrules.featstruct import equivalent
from lexrules.serialize import (HEADER, SECTIONS, format_artifact, format_clause, lexicon_to_json, parse_clause,
                                read_artifact)


def test_clause_round_trip(lexicon, sig):
    for clause in list(lexicon.program) + list(lexicon.reference_program()):
        again = parse_clause(sig, format_clause(clause))
        assert again.head == clause.head and again.body == clause.body
        assert equivalent(again.bindings, clause.bindings)
        assert again.rule == clause.rule
        assert format_clause(again) == format_clause(clause)


def test_clause_text_shapes(lexicon):
    texts = [format_clause(c) for c in lexicon.program]
    assert "c1_q1(#1=word, #1)." in texts
    assert "lex_rule_2(word & (A:b, B:-, C:(W:-)), word & (C:(W:+)))." in texts


def test_artifact_sections(lexicon):
    text = format_artifact(lexicon)
    assert text.splitlines()[0] == HEADER
    sections = read_artifact(text)
    assert list(sections) == list(SECTIONS)
    assert len(sections["RULES"]) == 4
    assert sections["CLASSES"] == ["class c1 {e1} : 1(q1, q2), 2(q1, q10), 2(q2, q3), 3(q3, q4), 3(q4, q4), 4(q4, q5)"]
    assert len(sections["CLAUSES"]) == len(lexicon.program) == 16
    assert sections["ENTRIES"] == ["entry e1 c1_q1 : word & (A:b, B:-, C:(W:-, X:-, Y:-, Z:<a, b>)), word & (A:b, C:t_2)."]


def test_artifact_is_deterministic(grammar):
    from lexrules.pipeline import compile_lexicon
    assert format_artifact(compile_lexicon(grammar)) == format_artifact(compile_lexicon(grammar))


def test_read_artifact_errors():
    with pytest.raises(ValueError):
        read_artifact("stray line\nSIGNATURE\n")
    with pytest.raises(ValueError):
        read_artifact("SIGNATURE\nRULES\n")


def test_json_export(lexicon):
    data = json.loads(json.dumps(lexicon_to_json(lexicon)))
    assert data["follow"] == {"1": [2, 3, 4], "2": [1, 3, 4], "3": [3, 4], "4": []}
    assert len(data["global_fsa"]["states"]) == 20
    assert len(data["reduced_fsa"]["transitions"]) == len(data["global_fsa"]["transitions"]) - 2
    assert [c["id"] for c in data["classes"]] == ["c1"]
    assert data["entries"][0]["lifted"].endswith("word & (A:b, C:t_2)")
    assert data["rules"][0]["transfer"][1]["species"] == {"<root>": "word", "C": "t_2"}
    assert data["config"]["depth_bound"] == 32
