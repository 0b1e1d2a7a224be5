"""``gts``: command-line front end.

Exit codes: 0 affirmative or valid, 1 negative, absent or invalid proof,
2 input error, 3 resource bound exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from .dpo import DerivationSeq, SearchExhausted, apply, find_matches, reachable
from .encoding import (
    LINEAR, NONLINEAR, Certificate, CertificationError, EncodingError, certify_step,
    certify_trace, constraint_violation, encode_context, encode_expr, encode_rule, encode_type,
    equivalence_certificate, formula_equiv, heating_implication,
)
from .graphs import GraphError, congruent, format_expression, heating, normalize
from .qill.checker import CheckError, check
from .qill.formulas import format_formula, is_graph_formula
from .qill.search import DEFAULT_DEPTH, SearchError, bounded_search
from .qill.terms import format_term
from .syntax import (
    ParseError, Workspace, certificate_to_json, format_context_entries, format_sequent,
    load_certificate, parse_workspace,
)

OK, NEGATIVE, INPUT_ERROR, EXHAUSTED = 0, 1, 2, 3
STATUS = {OK: "ok", NEGATIVE: "negative", INPUT_ERROR: "error", EXHAUSTED: "exhausted"}


class InputError(Exception):
    pass


class _Out:
    def __init__(self, command):
        self.command = command
        self.lines = []
        self.data = {}

    def say(self, text=""):
        self.lines.append(text.rstrip())


def _lookup(table, name, kind):
    try:
        return table[name]
    except KeyError:
        raise InputError(f"unknown {kind} {name!r}") from None


def _graph(ws, name):
    return _lookup(ws.graphs, name, "graph")


def _rule(ws, name):
    return _lookup(ws.rules, name, "rule")


def _gts(ws, args):
    try:
        return ws.gts(getattr(args, "initial", None))
    except KeyError as exc:
        raise InputError(exc.args[0]) from None


def _multiset(text):
    if not text:
        return None
    out = Counter()
    for part in text.split(","):
        part = part.strip()
        if "=" in part:
            name, k = part.split("=", 1)
            out[name.strip()] += int(k)
        elif part:
            out[part] += 1
    return out


def _match_json(m):
    return m.describe()


def _trace_json(trace):
    return {"steps": trace.describe(),
            "states": [format_expression(g) for g in trace.states]}


def _say_trace(out, trace):
    out.say(f"trace of {len(trace)} step(s)")
    out.say(f"  {format_expression(trace.states[0])}")
    for (name, m), g in zip(trace.steps, trace.states[1:]):
        d = ", ".join(f"{k}->{v}" for k, v in m.describe()["d"].items())
        out.say(f"  --{name}[{d}]--> {format_expression(g)}")


def _say_certificate(out, cert: Certificate, path=None):
    s = cert.sequent
    out.say(f"Gamma: {format_context_entries(s.ctx.gamma)}")
    out.say(f"Delta: {format_context_entries(s.ctx.delta)}")
    out.say(f"term:  {format_term(s.term)}")
    out.say(f"type:  {format_formula(s.ty)}")
    out.say("kernel: accepted")
    out.data["certificate"] = certificate_to_json(cert)
    if path:
        Path(path).write_text(json.dumps(certificate_to_json(cert), indent=2) + "\n")
        out.say(f"written to {path}")


def _find_trace(ws, args, target_name):
    gts = _gts(ws, args)
    target = _graph(ws, target_name)
    exact, at_least = _multiset(getattr(args, "exact", None)), _multiset(getattr(args, "at_least", None))
    trace = reachable(gts, target, args.max_steps, exact=exact, at_least=at_least,
                      max_states=args.max_states)
    return gts, target, trace


# -- commands ---------------------------------------------------------------

def cmd_normalize(ws, args, out):
    g = _graph(ws, args.graph)
    ng = normalize(g, canonical=args.canonical)
    out.say(str(ng))
    out.data["normal_form"] = str(ng)
    return OK


def cmd_congr(ws, args, out):
    sigma = congruent(_graph(ws, args.g1), _graph(ws, args.g2), ws.type_graph)
    if sigma is None:
        out.say("not congruent")
        out.data["renaming"] = None
        return NEGATIVE
    renaming = {a.name: b.name for a, b in sorted(sigma.items())}
    out.say("congruent")
    for a, b in renaming.items():
        out.say(f"  {a} -> {b}")
    out.data["renaming"] = renaming
    return OK


def cmd_heat(ws, args, out):
    g1, g2 = _graph(ws, args.g1), _graph(ws, args.g2)
    found = heating(g1, g2)
    if found is None:
        out.say(f"{args.g1} is not a heating of {args.g2}")
        out.data["restricted"] = None
        return NEGATIVE
    names = sorted(n.name for n in found)
    out.say(f"{args.g1} << {args.g2} by restricting {{{', '.join(names)}}}")
    out.data["restricted"] = names
    if args.certify:
        _say_certificate(out, heating_implication(g1, g2), args.out)
    return OK


def cmd_match(ws, args, out):
    matches = find_matches(_graph(ws, args.graph), _rule(ws, args.rule), ws.type_graph)
    out.data["matches"] = [_match_json(m) for m in matches]
    for k, m in enumerate(matches):
        desc = m.describe()
        d = ", ".join(f"{a}->{b}" for a, b in desc["d"].items())
        extra = [f"{a}->{b}" for a, b in desc["edges"].items()]
        extra += [f"{a}->{b}" for a, b in desc["nodes"].items()]
        out.say(f"[{k}] d: {d}" + (f"; {', '.join(extra)}" if extra else ""))
    out.say(f"{len(matches)} match(es)")
    return OK if matches else NEGATIVE


def _pick_match(ws, args):
    g, rule = _graph(ws, args.graph), _rule(ws, args.rule)
    matches = find_matches(g, rule, ws.type_graph)
    if not 0 <= args.match < len(matches):
        raise InputError(f"match index {args.match} out of range ({len(matches)} matches)")
    return g, rule, matches[args.match]


def cmd_apply(ws, args, out):
    g, rule, m = _pick_match(ws, args)
    h = apply(g, rule, m)
    out.say(format_expression(h))
    out.data["result"] = format_expression(h)
    return OK


def cmd_reach(ws, args, out):
    _, _, trace = _find_trace(ws, args, args.target)
    if trace is None:
        out.say(f"{args.target} not reachable within {args.max_steps} step(s)")
        out.data["trace"] = None
        return NEGATIVE
    _say_trace(out, trace)
    out.data["trace"] = _trace_json(trace)
    return OK


def cmd_encode(ws, args, out):
    g = _graph(ws, args.graph)
    der = encode_expr(g)
    ctx = encode_context(g)
    out.say(f"type:    {format_formula(der.main_type)}")
    out.say(f"term:    {format_term(der.main_term)}")
    out.say(f"context: {format_context_entries(ctx.entries)}")
    if args.derivation:
        for node in der.walk():
            out.say(f"  {node.rule}: {format_sequent(node.sequent)}")
    out.data.update(type=format_formula(der.main_type), term=format_term(der.main_term),
                    context=[{"name": n, "type": format_formula(f)} for n, f in ctx.entries])
    return OK


def cmd_encode_rule(ws, args, out):
    f = encode_rule(_rule(ws, args.rule))
    out.say(format_formula(f))
    out.data["formula"] = format_formula(f)
    return OK


def _sequent(ws, name):
    if name in ws.sequents:
        return ws.sequents[name]
    path = Path(name)
    if path.is_file():
        if path.suffix == ".json":
            try:
                return load_certificate(path)
            except json.JSONDecodeError as exc:
                raise InputError(f"{name}: not valid JSON ({exc})") from None
        other = parse_workspace([path])
        if len(other.sequents) != 1:
            raise InputError(f"{name} must contain exactly one sequent")
        return next(iter(other.sequents.values()))
    raise InputError(f"unknown sequent {name!r}")


def cmd_check(ws, args, out):
    seq = _sequent(ws, args.sequent)
    if seq.term is None:
        raise InputError("the sequent has no proof term (use `search`)")
    try:
        result = check(seq)
    except CheckError as exc:
        out.say(f"invalid ({exc.kind}): {exc}")
        out.data.update(valid=False, diagnostic=exc.kind, message=str(exc))
        return NEGATIVE
    out.say(f"valid: {format_formula(result.ty)}")
    out.data.update(valid=True, type=format_formula(result.ty))
    return OK


def _formula(ws, name):
    if name in ws.formulas:
        return ws.formulas[name]
    if name in ws.graphs:
        return encode_type(ws.graphs[name])
    raise InputError(f"unknown formula {name!r}")


def cmd_equiv(ws, args, out):
    f1, f2 = _formula(ws, args.f1), _formula(ws, args.f2)
    for name, f in ((args.f1, f1), (args.f2, f2)):
        if not is_graph_formula(f):
            raise InputError(f"{name} is not a graph formula")
    verdict = formula_equiv(f1, f2)
    out.data["equivalent"] = verdict
    if not verdict:
        out.say("not equivalent")
        return NEGATIVE
    out.say("equivalent")
    if args.certify:
        _say_certificate(out, equivalence_certificate(f1, f2), args.out)
    return OK


def cmd_search(ws, args, out):
    seq = _sequent(ws, args.sequent)
    term = bounded_search(seq.ctx, seq.ty, args.depth)
    if term is None:
        out.say(f"no proof within depth {args.depth}")
        out.data["term"] = None
        return NEGATIVE
    out.say(format_term(term))
    out.data["term"] = format_term(term)
    return OK


def cmd_certify_step(ws, args, out):
    g, rule, m = _pick_match(ws, args)
    cert = certify_step(g, rule, m, nonlinear=args.nonlinear)
    _say_certificate(out, cert, args.out)
    return OK


def cmd_certify_trace(ws, args, out):
    gts, target, trace = _find_trace(ws, args, args.target)
    if trace is None:
        out.say(f"{args.target} not reachable within {args.max_steps} step(s)")
        return NEGATIVE
    try:
        cert = certify_trace(gts, trace, style=args.style, initial=args.initial_form,
                             rule_instances=_multiset(args.instances), final=target)
    except CertificationError as exc:
        out.say(f"certification refused: {exc}")
        out.data["refused"] = str(exc)
        return NEGATIVE
    _say_trace(out, trace)
    out.data["trace"] = _trace_json(trace)
    _say_certificate(out, cert, args.out)
    return OK


def cmd_constraint(ws, args, out):
    alpha = _formula(ws, args.formula)
    gts = _gts(ws, args)
    if args.trace:
        _, _, trace = _find_trace(ws, args, args.trace)
        if trace is None:
            raise InputError(f"{args.trace} is not reachable within {args.max_steps} step(s)")
    else:
        trace = DerivationSeq((), (gts.initial,))
    cert = constraint_violation(gts, trace, alpha, style=args.style, initial=args.initial_form)
    if cert is None:
        out.say("no violation found")
        out.data["violation"] = False
        return NEGATIVE
    out.say(f"constraint violated after {len(trace)} step(s)")
    out.data["violation"] = True
    _say_certificate(out, cert, args.out)
    return OK


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-w", "--workspace", action="append", default=argparse.SUPPRESS,
                        metavar="FILE", help="workspace file (repeatable)")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")

    parser = argparse.ArgumentParser(prog="gts", description=__doc__.splitlines()[0])
    parser.add_argument("-w", "--workspace", action="append", default=[], metavar="FILE",
                        help="workspace file (repeatable)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    def search_opts(p, target=True):
        p.add_argument("--max-steps", type=int, default=3)
        p.add_argument("--max-states", type=int, default=100_000)
        p.add_argument("--initial", help="initial graph (overrides the workspace)")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--exact", metavar="RULES", help="exact rule multiset, e.g. p,p or p=2")
        group.add_argument("--at-least", metavar="RULES", help="minimum rule multiset")

    def style_opts(p):
        p.add_argument("--style", choices=[NONLINEAR, LINEAR], default=NONLINEAR)
        p.add_argument("--initial-form", choices=["components", "formula"], default="components")

    p = add("normalize", cmd_normalize, "normal form of a graph")
    p.add_argument("graph")
    p.add_argument("--canonical", action="store_true", help="canonical bound names and order")

    for name, func, help in (("congr", cmd_congr, "decide structural congruence"),
                             ("heat", cmd_heat, "decide heating G1 << G2")):
        p = add(name, func, help)
        p.add_argument("g1")
        p.add_argument("g2")
        if name == "heat":
            p.add_argument("--certify", action="store_true", help="emit the implication proof")
            p.add_argument("--out", metavar="FILE")

    p = add("match", cmd_match, "list the matches of a rule")
    p.add_argument("rule")
    p.add_argument("graph")

    for name, func, help in (("apply", cmd_apply, "apply a rule at a match"),
                             ("certify-step", cmd_certify_step, "certificate for one step")):
        p = add(name, func, help)
        p.add_argument("rule")
        p.add_argument("graph")
        p.add_argument("--match", type=int, default=0, metavar="K")
        if name == "certify-step":
            p.add_argument("--nonlinear", action="store_true", help="rule in the unrestricted zone")
            p.add_argument("--out", metavar="FILE")

    p = add("reach", cmd_reach, "find a derivation to a target graph")
    p.add_argument("target")
    search_opts(p)

    p = add("encode", cmd_encode, "translate a graph into the logic")
    p.add_argument("graph")
    p.add_argument("--derivation", action="store_true", help="print the derivation tree")

    p = add("encode-rule", cmd_encode_rule, "translate a rule into a formula")
    p.add_argument("rule")

    p = add("check", cmd_check, "check a sequent or certificate file")
    p.add_argument("sequent", help="sequent name, sequent file or certificate .json")

    p = add("equiv", cmd_equiv, "decide equivalence of graph formulas")
    p.add_argument("f1")
    p.add_argument("f2")
    p.add_argument("--certify", action="store_true", help="emit proofs of both directions")
    p.add_argument("--out", metavar="FILE")

    p = add("search", cmd_search, "bounded proof search")
    p.add_argument("sequent")
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)

    p = add("certify-trace", cmd_certify_trace, "certificate for a derivation to a target")
    p.add_argument("target")
    search_opts(p)
    style_opts(p)
    p.add_argument("--instances", metavar="RULES", help="rule copies for the linear style")
    p.add_argument("--out", metavar="FILE")

    p = add("constraint", cmd_constraint, "derive bot from a negative constraint")
    p.add_argument("formula")
    p.add_argument("--trace", metavar="TARGET", help="check after reaching this graph")
    search_opts(p)
    style_opts(p)
    p.add_argument("--out", metavar="FILE")
    return parser


def run(argv) -> tuple:
    """Run a command; returns ``(exit code, output text)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (OK if exc.code == 0 else INPUT_ERROR), ""
    out = _Out(args.command)
    try:
        ws = parse_workspace(args.workspace) if args.workspace else Workspace()
        code = args.func(ws, args, out)
    except SearchExhausted as exc:
        code = EXHAUSTED
        out.say(str(exc))
        out.data["message"] = str(exc)
    except (InputError, ParseError, GraphError, EncodingError, SearchError, CheckError,
            OSError, ValueError) as exc:
        code = INPUT_ERROR
        out.lines = [f"error: {exc}"]
        out.data = {"message": str(exc)}
    except CertificationError as exc:   # a certificate we built was refused: a bug
        code = NEGATIVE
        out.lines = [f"internal error: {exc}"]
        out.data = {"message": str(exc)}
    if args.json:
        doc = {"command": args.command, "status": STATUS[code], "exit_code": code, **out.data}
        return code, json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return code, "\n".join(out.lines) + "\n"


def main(argv=None) -> int:
    code, text = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
