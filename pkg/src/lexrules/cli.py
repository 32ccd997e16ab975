"""Command line driver.

Exit codes: 0 ok, 1 failed check, 2 parse/usage error, 3 signature error,
4 compile error, 5 query error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .avm import DescriptionError, SyntaxErrorAt, parse, render
from .bundled import bundled_path
from .featstruct import FeatureStructureError
from .grammar import load_grammar
from .rules import RuleError
from .runtime import QueryError
from .signature import SignatureError

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_SIGNATURE, EXIT_COMPILE, EXIT_QUERY = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _grammar(args):
    path = args.grammar or bundled_path()
    try:
        g = load_grammar(path)
    except SyntaxErrorAt as exc:
        raise CliError(f"syntax error: {exc}", EXIT_PARSE) from None
    except OSError as exc:
        raise CliError(f"cannot read grammar: {exc}", EXIT_PARSE) from None
    except SignatureError as exc:
        raise CliError(f"signature error: {exc}", EXIT_SIGNATURE) from None
    except (DescriptionError, FeatureStructureError) as exc:
        raise CliError(f"compile error: {exc}", EXIT_COMPILE) from None
    if args.rules:
        g = g.restrict_rules(r.strip() for r in args.rules.split(",") if r.strip())
    return g


def _config(args):
    from .pipeline import RunConfig
    try:
        cfg = RunConfig.from_env()
        return cfg.updated(unfurl_depth=args.unfurl_depth, reduce_cap=args.reduce_cap,
                           lift_cap=args.lift_cap, depth_bound=args.max_depth, format=args.format)
    except (OSError, ValueError, TypeError) as exc:
        raise CliError(f"bad configuration: {exc}", EXIT_PARSE) from None


def _lexicon(args):
    from .pipeline import compile_lexicon
    grammar = _grammar(args)
    try:
        return compile_lexicon(grammar, _config(args))
    except (RuleError, DescriptionError, FeatureStructureError) as exc:
        raise CliError(f"compile error: {exc}", EXIT_COMPILE) from None


def _entry(lex, name):
    if name not in lex.entries:
        raise CliError(f"unknown entry {name!r}", EXIT_QUERY)
    return lex.entries[name]


def _emit_fsa(fsa, cfg, name):
    from .serialize import dumps
    if cfg.format == "dot":
        return fsa.to_dot(name)
    if cfg.format == "json":
        return dumps({"states": [fsa.name(s) for s in fsa.states],
                      "transitions": [{"rule": l, "from": s, "to": d} for l, s, d in fsa.transitions()]})
    return fsa.format_transitions() + "\n"


def cmd_compile(args):
    from .serialize import dumps, format_artifact, lexicon_to_json
    lex = _lexicon(args)
    text = dumps(lexicon_to_json(lex)) if lex.config.format == "json" else format_artifact(lex)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        return ""
    return text


def cmd_follow(args):
    from .interaction import compute_follow, format_follow
    from .rules import compile_rule
    g = _grammar(args)
    try:
        follow = compute_follow(compile_rule(r) for r in g.rules)
    except RuleError as exc:
        raise CliError(f"compile error: {exc}", EXIT_COMPILE) from None
    if _config(args).format == "json":
        return json.dumps({str(k): list(v) for k, v in follow.items()}) + "\n"
    return format_follow(follow) + "\n"


def cmd_fsa(args):
    lex = _lexicon(args)
    if args.dot:
        lex.config = lex.config.updated(format="dot")
    if args.entry:
        _entry(lex, args.entry)
        return _emit_fsa(lex.pruned[args.entry].automaton, lex.config, args.entry)
    if args.which == "global":
        return _emit_fsa(lex.global_fsa, lex.config, "global")
    return _emit_fsa(lex.reduced_fsa, lex.config, "reduced")


def cmd_prune(args):
    args.entry, args.which = args.name, None
    return cmd_fsa(args)


def cmd_clauses(args):
    from .serialize import dumps, format_clause
    lex = _lexicon(args)
    program = lex.program if args.unfolded else lex.reference_program()
    lines = [format_clause(c) for c in program]
    if lex.config.format == "json":
        return dumps(lines)
    return "".join(l + "\n" for l in lines)


def cmd_lift(args):
    from .avm import render_roots
    lex = _lexicon(args)
    e = _entry(lex, args.name)
    base, out = render_roots(e.lifted)
    if lex.config.format == "json":
        return json.dumps({"name": e.name, "class": e.class_id, "predicate": e.predicate,
                           "entry": render(e.lifted), "base": base, "lifted_out": out}, indent=2) + "\n"
    return f"entry {e.name} {e.predicate} : {render(e.lifted)}.\n"


def _solutions(stream, fmt):
    seen, rows = set(), []
    for s in stream:
        if s.entry in seen:
            continue
        seen.add(s.entry)
        rows.append(s)
    if fmt == "json":
        return json.dumps({"solutions": [{"entry": render(s.entry), "derivation": list(s.derivation),
                                          "class": s.class_id} for s in rows],
                           "summary": stream.summary()}, indent=2) + "\n"
    lines = [f"{render(s.entry)}  % rules: {' '.join(map(str, s.derivation)) or '-'}" for s in rows]
    summary = stream.summary()
    tail = f"% {len(rows)} entries"
    if summary["truncated"]:
        tail += ", truncated at the depth bound"
    if summary["skipped"]:
        tail += f", skipped by lifting: {', '.join(summary['skipped'])}"
    return "".join(l + "\n" for l in lines + [tail])


def cmd_derive(args):
    from .runtime import entry_goal, solve
    lex = _lexicon(args)
    _entry(lex, args.name)
    return _solutions(solve(entry_goal(lex, args.name), lex, lex.config.depth_bound), lex.config.format)


def cmd_lookup(args):
    from .runtime import lookup
    lex = _lexicon(args)
    try:
        query = parse(lex.sig, args.query)
        return _solutions(lookup(query, lex, lex.config.depth_bound), lex.config.format)
    except (SyntaxErrorAt, DescriptionError, QueryError, FeatureStructureError) as exc:
        raise CliError(f"query error: {exc}", EXIT_QUERY) from None


def cmd_check(args):
    from .checks import run_property_suite
    g = _grammar(args)
    report = run_property_suite(g, seed=args.seed, n_entries=args.entries, n_queries=args.queries)
    out = "\n".join(report.lines()) + "\n"
    if not report.ok:
        raise CliError(out.rstrip("\n"), EXIT_CHECK)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rules", help="comma-separated rule indices or names to keep")
    common.add_argument("--unfurl-depth", type=int, help="cycle copies before pruning (default 0)")
    common.add_argument("--reduce-cap", type=int, help="propagation rounds around cycles (default 8)")
    common.add_argument("--lift-cap", type=int, help="lifting fixpoint iterations (default 16)")
    common.add_argument("--max-depth", type=int, help="rule applications per derivation (default 32)")
    common.add_argument("--format", choices=["text", "dot", "json"], help="output format")

    p = argparse.ArgumentParser(prog="lexrules", description="Compile and run lexical rules over a typed lexicon.")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, fn, help):
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(func=fn)
        return sp

    def grammar_arg(sp):
        sp.add_argument("grammar", nargs="?", help="grammar file (default: the bundled example)")

    sp = command("compile", cmd_compile, "run every stage and write the compiled lexicon")
    grammar_arg(sp)
    sp.add_argument("-o", "--output", help="write to this file instead of stdout")

    grammar_arg(command("follow", cmd_follow, "print the follow relation"))

    sp = command("fsa", cmd_fsa, "print an interaction automaton")
    grammar_arg(sp)
    which = sp.add_mutually_exclusive_group()
    which.add_argument("--global", dest="which", action="store_const", const="global", help="before reduction")
    which.add_argument("--reduced", dest="which", action="store_const", const="reduced", help="after reduction (default)")
    which.add_argument("--entry", help="pruned for this entry")
    sp.add_argument("--dot", action="store_true", help="Graphviz output")

    sp = command("prune", cmd_prune, "print the pruned automaton of an entry")
    sp.add_argument("name")
    grammar_arg(sp)
    sp.add_argument("--dot", action="store_true", help="Graphviz output")

    sp = command("clauses", cmd_clauses, "print interaction and rule clauses")
    grammar_arg(sp)
    sp.add_argument("--unfolded", action="store_true", help="after transfer deletion and unfolding")

    sp = command("lift", cmd_lift, "print an extended entry with its lifted output")
    sp.add_argument("name")
    grammar_arg(sp)

    sp = command("derive", cmd_derive, "enumerate the entries derivable from one entry")
    sp.add_argument("name")
    grammar_arg(sp)

    sp = command("lookup", cmd_lookup, "entries compatible with a query AVM")
    grammar_arg(sp)
    sp.add_argument("--query", required=True, help="AVM, e.g. '(A:b, C:(Z:<a, b>))'")

    sp = command("check", cmd_check, "run the invariant suite")
    grammar_arg(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--entries", type=int, default=200, help="random entries")
    sp.add_argument("--queries", type=int, default=100, help="random lookup queries")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        # an optional grammar positional given after options ends up here
        if len(extra) == 1 and not extra[0].startswith("-") and getattr(args, "grammar", 1) is None:
            args.grammar = extra[0]
        elif extra:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    if getattr(args, "which", None) is None and args.command == "fsa":
        args.which = "reduced"
    try:
        out = args.func(args)
    except CliError as exc:
        print(f"lexrules: {exc}", file=sys.stderr)
        return exc.code
    sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
