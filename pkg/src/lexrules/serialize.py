"""Text and JSON forms of clauses and compiled lexica.

Clause text puts an AVM in every argument position; a variable used in
several positions is written with one tag::

    c1_q1(#1=word & (...), #2=word) :- lex_rule_1(#1, #3=word & (...)), c1_q2(#3, #2).

The compiled artifact is one text file with the sections ``SIGNATURE``,
``RULES``, ``CLASSES``, ``CLAUSES`` and ``ENTRIES``.
"""

from __future__ import annotations

import json

from .avm import TokenStream, parse_avm_tokens, realize, render, render_roots, tokenize
from .runtime import Clause, Literal

SECTIONS = ("SIGNATURE", "RULES", "CLASSES", "CLAUSES", "ENTRIES")
HEADER = "% lexrules compiled lexicon, format 1"


def format_clause(clause: Clause) -> str:
    occ = clause.occurrences()
    args = render_roots(clause.bindings.project(occ))
    pos = 0

    def literal(lit):
        nonlocal pos
        text = f"{lit.pred}({', '.join(args[pos:pos + len(lit.args)])})"
        pos += len(lit.args)
        return text

    head = literal(clause.head)
    if not clause.body:
        return head + "."
    return head + " :- " + ", ".join(literal(l) for l in clause.body) + "."


def _literal(ts):
    pred = ts.expect(kind="name").text
    ts.expect("(")
    args = [parse_avm_tokens(ts)]
    while ts.at(",", "punct"):
        ts.next()
        args.append(parse_avm_tokens(ts))
    ts.expect(")")
    return pred, args


def parse_clause(sig, text: str) -> Clause:
    """Inverse of :func:`format_clause` (variable names are not kept)."""
    ts = TokenStream(tokenize(text))
    lits = [_literal(ts)]
    if ts.at(":", "punct"):
        ts.next()
        ts.expect("-")
        lits.append(_literal(ts))
        while ts.at(",", "punct"):
            ts.next()
            lits.append(_literal(ts))
    ts.expect(".")
    ts.expect(kind="eof")
    nodes = [a for _, args in lits for a in args]
    fs = realize(sig, nodes)
    variables, first = {}, []
    for i, r in enumerate(fs.roots):
        if r not in variables:
            variables[r] = len(first)
            first.append(i)
    bindings = fs.project(first)
    pos = 0
    literals = []
    for pred, args in lits:
        literals.append(Literal(pred, tuple(variables[fs.roots[pos + k]] for k in range(len(args)))))
        pos += len(args)
    head = literals[0]
    rule = None
    if head.pred.startswith("lex_rule_"):
        rule = int(head.pred.rsplit("_", 1)[1])
    return Clause(head, tuple(literals[1:]), bindings, rule=rule)


def format_program(clauses) -> str:
    return "".join(format_clause(c) + "\n" for c in clauses)


def format_signature(sig) -> list[str]:
    subtypes, intro = sig.declarations()
    lines = []
    for t in sorted(set(subtypes) | set(intro), key=lambda t: (t != sig.root, t)):
        parts = []
        if subtypes.get(t):
            parts.append("sub {" + ", ".join(subtypes[t]) + "}")
        if intro.get(t):
            parts.append("intro {" + ", ".join(f"{f}:{v}" for f, v in intro[t].items()) + "}")
        if parts:
            lines.append(f"type {t} " + " ".join(parts) + ".")
    return lines


def format_rule(rule) -> str:
    lhs, rhs = render_roots(rule.spec)
    return f"rule {rule.name or 'r' + str(rule.index)} : {lhs} ==> {rhs}."


def format_artifact(lexicon) -> str:
    out = [HEADER, "SIGNATURE"]
    out += format_signature(lexicon.sig)
    out.append("RULES")
    out += [format_rule(r.rule) for r in lexicon.rules.values()]
    out.append("CLASSES")
    for cid, cls in lexicon.classes.items():
        out.append(f"class {cid} {{{', '.join(cls.entries)}}} : {cls.automaton.format_transitions()}")
    out.append("CLAUSES")
    out += [format_clause(c) for c in lexicon.program]
    out.append("ENTRIES")
    for name, e in lexicon.entries.items():
        out.append(f"entry {name} {e.predicate} : {render(e.lifted if e.lifted is not None else e.base)}.")
    return "\n".join(out) + "\n"


def read_artifact(text: str) -> dict:
    """Split an artifact into its sections (lists of lines)."""
    sections, current = {}, None
    for line in text.splitlines():
        if line.startswith("%") or not line.strip():
            continue
        if line in SECTIONS:
            current = sections.setdefault(line, [])
        elif current is None:
            raise ValueError(f"content before the first section: {line!r}")
        else:
            current.append(line)
    missing = [s for s in SECTIONS if s not in sections]
    if missing:
        raise ValueError(f"missing sections: {', '.join(missing)}")
    return sections


def lexicon_to_json(lexicon) -> dict:
    """Structured export with stable key order."""
    def fsa(a):
        return {"states": [a.name(s) for s in a.states],
                "transitions": [{"rule": l, "from": s, "to": d} for l, s, d in a.transitions()]}

    return {
        "signature": format_signature(lexicon.sig),
        "rules": [{"index": r.index, "name": r.rule.name, "spec": format_rule(r.rule),
                   "transfer": [{"species": {".".join(p) or "<root>": t for p, t in c.species},
                                 "shared": sorted(".".join(p) for p in c.shared)} for c in r.transfer]}
                  for r in lexicon.rules.values()],
        "follow": {str(i): list(js) for i, js in lexicon.follow.items()},
        "global_fsa": fsa(lexicon.global_fsa),
        "reduced_fsa": fsa(lexicon.reduced_fsa),
        "classes": [{"id": cid, "entries": cls.entries, "automaton": fsa(cls.automaton)}
                    for cid, cls in lexicon.classes.items()],
        "clauses": [format_clause(c) for c in lexicon.program],
        "entries": [{"name": n, "class": e.class_id, "predicate": e.predicate, "base": render(e.base),
                     "lifted": None if e.lifted is None else render(e.lifted)}
                    for n, e in lexicon.entries.items()],
        "config": lexicon.config.as_dict() if lexicon.config is not None else None,
    }


def dumps(data) -> str:
    return json.dumps(data, indent=2) + "\n"
