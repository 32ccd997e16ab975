import pytest

from lexrules.avm import DescriptionError, SyntaxErrorAt, parse, render
from lexrules.bundled import bundled_path, bundled_text
from lexrules.grammar import load_grammar, parse_grammar_text
from lexrules.signature import SignatureError


def test_bundled_grammar_parses(grammar):
    assert [r.name for r in grammar.rules] == ["r1", "r2", "r3", "r4"]
    assert list(grammar.entries) == ["e1"]
    assert load_grammar(bundled_path()).rules[2].spec == grammar.rules[2].spec


def test_empty_file():
    g = parse_grammar_text("")
    assert g.types == g.rules == g.entries == []


def test_comments_only():
    assert parse_grammar_text("% nothing here\n  % still nothing\n").rules == []


def test_missing_out_spec_position():
    with pytest.raises(SyntaxErrorAt) as info:
        parse_grammar_text("rule r1 : (B:-) ==>")
    assert (info.value.line, info.value.col) == (1, 20)
    assert "expected an AVM" in info.value.message


def test_unexpected_keyword():
    with pytest.raises(SyntaxErrorAt) as info:
        parse_grammar_text("type top sub {a}.\nlemma x (A:b).")
    assert info.value.line == 2


def test_bad_character():
    with pytest.raises(SyntaxErrorAt):
        parse_grammar_text("type top sub {a}. ?")


def test_signature_errors_surface():
    with pytest.raises(SignatureError):
        parse_grammar_text("type top sub {a}. type a sub {top}.").load()


def test_unknown_type_in_rule():
    text = bundled_text() + "\nrule bad : (B:maybe) ==> (B:+).\n"
    with pytest.raises(DescriptionError):
        parse_grammar_text(text).load()


def test_combinable_type_declarations():
    g = parse_grammar_text("type top sub {t}. type t intro {F:top}. type t sub {u}.").load()
    assert g.sig.approp("u") == {"F": "top"}


def test_restrict_rules_renumbers(grammar):
    g = grammar.restrict_rules(["r2", "4"])
    assert [(r.index, r.name) for r in g.rules] == [(1, "r2"), (2, "r4")]


@pytest.mark.parametrize("text", [
    "word & (A:b, B:#1=-, C:(W:#1))",
    "(C:(Z:<a, <>, #1=b>, W:-))",
    "top",
    "(C:(Z:<>))",
])
def test_avm_roundtrip(sig, text):
    fs = parse(sig, text)
    assert parse(sig, render(fs)) == fs


def test_list_sugar(sig):
    assert parse(sig, "(C:(Z:<a>))") == parse(sig, "(C:(Z:ne_list & (HD:a, TL:e_list)))")
    assert render(parse(sig, "(C:(Z:<>))")) == "word & (C:(Z:<>))"
