"""Text formats: workspaces of types, graphs, rules, formulas and sequents.

::

    node A;
    edge b(A, A);
    graph G0 { body nu x y z:A . b(z, x); }
    graph G1 = {} |= nu x:A . e0:b(x, x);
    rule p { bind x1:A, x2:A; lhs Nil; rhs b(x1, x2); }
    initial G0;
    formula alpha = ex x y:A. b(x,y) | b(y,x);
    sequent s { Gamma: x:A; Delta: n:A @ x |- eps(n|x). nil :: ex y:A. 1; }

``nu`` binds tighter than ``||``; quantifiers and term binders extend as
far right as possible.  ``#`` and ``//`` start comments.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dpo import GTS, RuleExpr
from .graphs import (
    NIL, Edge, GraphError, GraphExpression, Node, Nu, Par, TypeGraph, format_constituent,
    format_expression,
)
from .qill.checker import Context, Sequent
from .qill.formulas import (
    BOT, ONE, TOP, Arrow, Atom, Bang, DynEx, Eq, Forall, Lolli, Or, Pred, RefTo, Tensor, With,
    format_formula,
)
from .qill.terms import (
    AppLin, AppNL, BangTm, CaseTm, EpsTm, ErrorTm, FstTm, InlTm, InrTm, LamInd, LamLin, LamNL,
    LetBang, LetEps, LetNil, LetTensor, NilEq, NilTm, PairTm, SndTm, TensorTm, UnitTm, Var,
    format_term,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = ""):
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}" if line else message)
        self.line, self.col = line, col


_TOKEN = re.compile(r"""
    (?P<space>[ \t\r\f]+) | (?P<newline>\n) | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<op>\|-|\|=|\|\||::|-o|->|=>|==|[|:;,.(){}\[\]*=&!@^?])
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.X)

TERM_KEYWORDS = {"eps", "lfn", "fn", "nfn", "let", "in", "case", "of", "inl", "inr", "fst",
                 "snd", "bang", "error", "nil", "unit", "nil_eq", "pair"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, source: str = "") -> list:
    out, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1, source)
        kind = m.lastgroup
        if kind == "newline":
            line, start = line + 1, m.end()
        elif kind not in ("space", "comment"):
            out.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text: str, source: str = ""):
        self.toks = tokenize(text, source)
        self.i = 0
        self.source = source

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, self.source)

    def at(self, *texts) -> bool:
        return self.tok.kind in ("op", "ident", "num") and self.tok.text in texts

    def accept(self, text) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what="identifier") -> str:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        name = self.tok.text
        self.i += 1
        return name

    def done(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- formulas -----------------------------------------------------------

    def formula(self):
        left = self._impl()
        if self.accept("=="):
            return Eq(left, self._impl())
        return left

    def _impl(self):
        left = self._or()
        if self.accept("-o"):
            return Lolli(left, self._impl())
        if self.accept("->"):
            return Arrow(left, self._impl())
        return left

    def _or(self):
        left = self._with()
        return Or(left, self._or()) if self.accept("|") else left

    def _with(self):
        left = self._tensor()
        return With(left, self._with()) if self.accept("&") else left

    def _tensor(self):
        left = self._unary()
        return Tensor(left, self._tensor()) if self.accept("*") else left

    def _unary(self):
        if self.accept("!"):
            return Bang(self._unary())
        return self._primary()

    def _primary(self):
        tok = self.tok
        if tok.kind == "num":
            if tok.text != "1":
                raise self.error(f"unexpected number {tok.text}")
            self.i += 1
            return ONE
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.at("all", "ex") and self.peek().kind == "ident":
            kind = Forall if self.tok.text == "all" else DynEx
            self.i += 1
            names = [self.ident("bound variable")]
            while self.tok.kind == "ident":
                names.append(self.ident())
            self.expect(":")
            sort = self.ident("node type")
            self.expect(".")
            body = self.formula()
            for name in reversed(names):
                body = kind(name, sort, body)
            return body
        if tok.kind != "ident":
            raise self.error(f"expected a formula, found {tok.text or 'end of input'!r}")
        name = self.ident()
        if name == "top":
            return TOP
        if name == "bot":
            return BOT
        if self.accept("("):
            args = []
            if not self.at(")"):
                args.append(self.ident("argument"))
                while self.accept(","):
                    args.append(self.ident("argument"))
            self.expect(")")
            return Pred(name, tuple(args))
        if self.accept("@"):
            return RefTo(name, self.ident("referring variable"))
        return Atom(name)

    # -- terms --------------------------------------------------------------

    def var(self, what="variable"):
        tok = self.tok
        name = self.ident(what)
        if name in TERM_KEYWORDS:
            raise self.error(f"{name!r} is a keyword", tok)
        return name

    def term(self):
        if self.at("eps"):
            self.i += 1
            ref, witness = self._eps_head()
            self.expect(".")
            return EpsTm(ref, witness, self.term())
        if self.at("lfn", "fn", "nfn"):
            kw = self.tok.text
            self.i += 1
            name = self.var()
            self.expect(":")
            ty = self.formula()
            self.expect("=>")
            body = self.term()
            if kw == "lfn":
                return LamLin(name, ty, body)
            if kw == "fn" and isinstance(ty, Atom):
                return LamInd(name, ty.name, body)
            return LamNL(name, ty, body)
        if self.at("let"):
            return self._let()
        if self.at("case"):
            self.i += 1
            scrut = self.term()
            self.expect("of")
            self.expect("inl")
            u = self.var()
            self.expect("=>")
            left = self.term()
            self.expect("|")
            self.expect("inr")
            v = self.var()
            self.expect("=>")
            return CaseTm(scrut, u, left, v, self.term())
        left = self._applin()
        if self.accept("*"):
            return TensorTm(left, self.term())
        return left

    def _eps_head(self):
        self.expect("(")
        ref = self.var("reference")
        self.expect("|")
        witness = self.var("witness")
        self.expect(")")
        return ref, witness

    def _let(self):
        self.expect("let")
        if self.accept("nil"):
            self.expect("=")
            bound = self.term()
            self.expect("in")
            return LetNil(bound, self.term())
        if self.accept("!"):
            p = self.var()
            self.expect("=")
            bound = self.term()
            self.expect("in")
            return LetBang(p, bound, self.term())
        if self.accept("eps"):
            ref, witness = self._eps_head()
            self.expect(".")
            v = self.var()
            self.expect("=")
            bound = self.term()
            self.expect("in")
            return LetEps(ref, witness, v, bound, self.term())
        u = self.var()
        self.expect("*")
        v = self.var()
        self.expect("=")
        bound = self.term()
        self.expect("in")
        return LetTensor(u, v, bound, self.term())

    def _applin(self):
        left = self._app()
        while self.accept("^"):
            left = AppLin(left, self._app())
        return left

    def _app(self):
        head = self._prefix()
        while self._starts_atom():
            head = AppNL(head, self._atom())
        return head

    def _prefix(self):
        if self.at("fst", "snd", "bang"):
            kind = {"fst": FstTm, "snd": SndTm, "bang": BangTm}[self.tok.text]
            self.i += 1
            return kind(self._atom())
        if self.at("inl", "inr", "error"):
            kw = self.tok.text
            self.i += 1
            self.expect("[")
            ann = self.formula()
            self.expect("]")
            body = self._atom()
            return {"inl": InlTm, "inr": InrTm, "error": ErrorTm}[kw](ann, body)
        return self._atom()

    def _starts_atom(self):
        tok = self.tok
        if tok.kind == "op":
            return tok.text == "("
        if tok.kind == "ident":
            return tok.text in ("nil", "unit", "nil_eq", "pair") or tok.text not in TERM_KEYWORDS
        return False

    def _atom(self):
        if self.accept("("):
            t = self.term()
            self.expect(")")
            return t
        if self.accept("nil"):
            return NilTm()
        if self.accept("unit"):
            return UnitTm()
        if self.accept("nil_eq"):
            if self.accept("["):
                ty = self.formula()
                self.expect("]")
                return NilEq(ty)
            return NilEq()
        if self.accept("pair"):
            self.expect("(")
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(")")
            return PairTm(a, b)
        return Var(self.var())

    # -- sequents -----------------------------------------------------------

    def sequent(self):
        gamma, delta = [], []
        if self.accept("Gamma"):
            self.expect(":")
            gamma = self._decls(";")
            self.expect(";")
        if self.accept("Delta"):
            self.expect(":")
            delta = self._decls("|-")
        self.expect("|-")
        term = None if self.accept("?") else self.term()
        self.expect("::")
        ty = self.formula()
        return Sequent(Context(gamma, delta), term, ty)

    def _decls(self, stop):
        out = []
        if self.at(stop):
            return out
        while True:
            name = self.var()
            self.expect(":")
            out.append((name, self.formula()))
            if not self.accept(","):
                return out

    # -- graphs -------------------------------------------------------------

    def node_decls(self, tg: Optional[TypeGraph], stop=(".", ";")):
        """``x y:A, z:B``"""
        out = []
        while True:
            names = [self.ident("node name")]
            while self.tok.kind == "ident":
                names.append(self.ident())
            self.expect(":")
            tok = self.tok
            ty = self.ident("node type")
            if tg is not None and ty not in tg.node_types:
                raise self.error(f"unknown node type {ty}", tok)
            out += [Node(n, ty) for n in names]
            if not self.accept(","):
                return out

    def constituent(self, scope, tg, ids):
        left = self._unit(scope, tg, ids)
        while self.accept("||"):
            left = Par(left, self._unit(scope, tg, ids))
        return left

    def _unit(self, scope, tg, ids):
        if self.accept("nu"):
            nodes = self.node_decls(tg)
            self.expect(".")
            inner = dict(scope)
            for n in nodes:
                inner[n.name] = n
            body = self._unit(inner, tg, ids)
            for n in reversed(nodes):
                body = Nu(n, body)
            return body
        if self.accept("Nil"):
            return NIL
        if self.accept("("):
            c = self.constituent(scope, tg, ids)
            self.expect(")")
            return c
        start = self.tok
        eid = None
        if self.tok.kind == "ident" and self.peek().text == ":":
            eid = self.ident()
            self.i += 1
        label = self.ident("edge label")
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                tok = self.tok
                name = self.ident("node name")
                if name not in scope:
                    raise self.error(f"unknown node {name}", tok)
                args.append(scope[name])
                if not self.accept(","):
                    break
        self.expect(")")
        if tg is not None:
            if label not in tg.edge_types:
                raise self.error(f"unknown edge type {label}", start)
            arity = tg.edge_types[label]
            if len(arity) != len(args):
                raise self.error(f"arity mismatch: {label} expects {len(arity)} arguments, "
                                 f"got {len(args)}", start)
            for k, (want, node) in enumerate(zip(arity, args)):
                if node.ty != want:
                    raise self.error(f"argument {k + 1} of {label} must have type {want}, "
                                     f"{node.name} has type {node.ty}", start)
        if eid is None:
            eid = ids.auto()
        elif not ids.claim(eid):
            raise self.error(f"duplicate edge id {eid}", start)
        return Edge(eid, label, tuple(args))

    def graph_expression(self, tg, iface=()):
        """``{x:A} |= body`` when at ``{``; otherwise just a body over ``iface``."""
        if self.accept("{"):
            iface = [] if self.at("}") else self.node_decls(tg)
            self.expect("}")
            self.expect("|=")
        ids = self._preassigned_ids()
        body = self.constituent({n.name: n for n in iface}, tg, ids)
        return GraphExpression(frozenset(iface), body)

    def _preassigned_ids(self):
        # explicit ids anywhere in the body are reserved before automatic numbering
        reserved, depth, j = set(), 0, self.i
        while j + 3 < len(self.toks):
            t = self.toks[j]
            if t.kind == "op":
                if t.text in (";", "}") and depth == 0:
                    break
                depth += {"(": 1, ")": -1}.get(t.text, 0)
            elif self.toks[j + 1].text == ":" and self.toks[j + 2].kind == "ident" \
                    and self.toks[j + 3].text == "(":
                reserved.add(t.text)
            j += 1
        return _EdgeIds(reserved)


class _EdgeIds:
    def __init__(self, reserved):
        self.reserved = set(reserved)
        self.used = set()

    def claim(self, eid):
        if eid in self.used:
            return False
        self.used.add(eid)
        return True

    def auto(self):
        k = 0
        while f"e{k}" in self.used or f"e{k}" in self.reserved:
            k += 1
        self.used.add(f"e{k}")
        return f"e{k}"


def parse_formula(text: str):
    p = _Parser(text)
    f = p.formula()
    p.done()
    return f


def parse_term(text: str):
    p = _Parser(text)
    t = p.term()
    p.done()
    return t


def parse_sequent(text: str) -> Sequent:
    p = _Parser(text)
    s = p.sequent()
    p.accept(";")
    p.done()
    return s


def parse_graph(text: str, type_graph: Optional[TypeGraph] = None) -> GraphExpression:
    """``{x:A} |= body`` (the interface part may be omitted for closed graphs)."""
    p = _Parser(text)
    g = p.graph_expression(type_graph)
    p.done()
    return g


# -- workspaces -------------------------------------------------------------

@dataclass
class Workspace:
    node_types: set = field(default_factory=set)
    edge_types: dict = field(default_factory=dict)
    graphs: dict = field(default_factory=dict)
    rules: dict = field(default_factory=dict)
    formulas: dict = field(default_factory=dict)
    sequents: dict = field(default_factory=dict)
    initial: Optional[str] = None

    @property
    def type_graph(self) -> TypeGraph:
        return TypeGraph(frozenset(self.node_types), dict(self.edge_types))

    def names(self) -> set:
        return set(self.graphs) | set(self.rules) | set(self.formulas) | set(self.sequents)

    def gts(self, initial: Optional[str] = None) -> GTS:
        name = initial or self.initial
        if name is None:
            raise KeyError("no initial graph declared")
        if name not in self.graphs:
            raise KeyError(f"unknown graph {name}")
        return GTS(self.type_graph, dict(self.rules), self.graphs[name])


def parse_workspace(paths, texts=None) -> Workspace:
    """Parse one or more files into a single workspace; redefinitions are errors."""
    ws = Workspace()
    if isinstance(paths, (str, Path)):
        paths = [paths]
    for path in paths:
        path = Path(path)
        _parse_into(ws, path.read_text(), path.name, path.stem)
    for source, text in (texts or {}).items():
        _parse_into(ws, text, source, Path(source).stem)
    return ws


def parse_workspace_text(text: str, source: str = "<input>") -> Workspace:
    ws = Workspace()
    _parse_into(ws, text, source, Path(source).stem)
    return ws


def _parse_into(ws: Workspace, text: str, source: str, stem: str) -> None:
    p = _Parser(text, source)
    anonymous = 0

    def define(table, name, value, tok):
        if name in ws.names():
            raise p.error(f"{name} is already defined", tok)
        table[name] = value

    while p.tok.kind != "eof":
        tok = p.tok
        if p.accept("node"):
            while True:
                t = p.tok
                name = p.ident("node type")
                if name in ws.node_types:
                    raise p.error(f"node type {name} is already declared", t)
                ws.node_types.add(name)
                if not p.accept(","):
                    break
            p.expect(";")
        elif p.accept("edge"):
            t = p.tok
            label = p.ident("edge label")
            if label in ws.edge_types:
                raise p.error(f"edge type {label} is already declared", t)
            p.expect("(")
            arity = []
            if not p.at(")"):
                while True:
                    t2 = p.tok
                    ty = p.ident("node type")
                    if ty not in ws.node_types:
                        raise p.error(f"unknown node type {ty}", t2)
                    arity.append(ty)
                    if not p.accept(","):
                        break
            p.expect(")")
            p.expect(";")
            ws.edge_types[label] = tuple(arity)
        elif p.accept("graph"):
            t = p.tok
            name = p.ident("graph name")
            tg = ws.type_graph
            if p.accept("="):
                g = p.graph_expression(tg)
                p.expect(";")
            else:
                p.expect("{")
                iface = []
                if p.accept("iface"):
                    iface = p.node_decls(tg)
                    p.expect(";")
                p.expect("body")
                g = _wrap(p, lambda: p.graph_expression(tg, iface), t)
                p.expect(";")
                p.expect("}")
            define(ws.graphs, name, g, t)
        elif p.accept("rule"):
            t = p.tok
            name = p.ident("rule name")
            tg = ws.type_graph
            p.expect("{")
            iface = []
            if p.accept("bind"):
                iface = p.node_decls(tg)
                p.expect(";")
            p.expect("lhs")
            lhs = _wrap(p, lambda: p.graph_expression(tg, iface), t)
            p.expect(";")
            p.expect("rhs")
            rhs = _wrap(p, lambda: p.graph_expression(tg, iface), t)
            p.expect(";")
            p.expect("}")
            rule = _wrap(p, lambda: RuleExpr(name, tuple(iface), lhs.body, rhs.body), t)
            define(ws.rules, name, rule, t)
        elif p.accept("formula"):
            t = p.tok
            name = p.ident("formula name")
            p.expect("=")
            f = p.formula()
            p.expect(";")
            _check_formula(p, ws, f, t)
            define(ws.formulas, name, f, t)
        elif p.accept("sequent"):
            t = p.tok
            name = p.ident("sequent name")
            p.expect("{")
            s = p.sequent()
            p.expect(";")
            p.expect("}")
            define(ws.sequents, name, s, t)
        elif p.accept("initial"):
            t = p.tok
            name = p.ident("graph name")
            p.expect(";")
            if ws.initial is not None:
                raise p.error("initial graph is already declared", t)
            ws.initial = name
        elif p.at("Gamma", "Delta", "|-"):
            s = p.sequent()
            p.expect(";")
            anonymous += 1
            if anonymous > 1:
                raise p.error("only one unnamed sequent per file", tok)
            define(ws.sequents, stem, s, tok)
        else:
            raise p.error(f"unexpected {tok.text or 'end of input'!r}")
    if ws.initial is not None and ws.initial not in ws.graphs:
        raise ParseError(f"initial graph {ws.initial} is not defined", source=source)


def _wrap(p, build, tok):
    try:
        return build()
    except ParseError:
        raise
    except GraphError as exc:
        raise p.error(str(exc), tok) from None


def _check_formula(p, ws, f, tok):
    """Predicates with a declared edge type must respect its arity."""
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Pred) and g.label in ws.edge_types:
            if len(ws.edge_types[g.label]) != len(g.args):
                raise p.error(f"arity mismatch: {g.label} expects "
                              f"{len(ws.edge_types[g.label])} arguments, got {len(g.args)}", tok)
        for attr in ("left", "right", "body"):
            if hasattr(g, attr):
                stack.append(getattr(g, attr))


# -- printing ---------------------------------------------------------------

def format_context_entries(entries) -> str:
    return ", ".join(f"{n}:{format_formula(f)}" for n, f in entries)


def format_sequent(s: Sequent) -> str:
    parts = []
    if s.ctx.gamma:
        parts.append(f"Gamma: {format_context_entries(s.ctx.gamma)};")
    if s.ctx.delta:
        parts.append(f"Delta: {format_context_entries(s.ctx.delta)}")
    term = "?" if s.term is None else format_term(s.term)
    parts.append(f"|- {term} :: {format_formula(s.ty)};")
    return " ".join(parts)


def format_rule(r: RuleExpr) -> str:
    bind = ", ".join(f"{x.name}:{x.ty}" for x in r.iface_vars)
    head = f"bind {bind}; " if bind else ""
    return (f"rule {r.name} {{ {head}lhs {format_constituent(r.lhs)}; "
            f"rhs {format_constituent(r.rhs)}; }}")


def format_workspace(ws: Workspace) -> str:
    lines = []
    if ws.node_types:
        lines.append(f"node {', '.join(sorted(ws.node_types))};")
    for label, arity in ws.edge_types.items():
        lines.append(f"edge {label}({', '.join(arity)});")
    for name, g in ws.graphs.items():
        lines.append(f"graph {name} = {format_expression(g)};")
    for r in ws.rules.values():
        lines.append(format_rule(r))
    if ws.initial:
        lines.append(f"initial {ws.initial};")
    for name, f in ws.formulas.items():
        lines.append(f"formula {name} = {format_formula(f)};")
    for name, s in ws.sequents.items():
        lines.append(f"sequent {name} {{ {format_sequent(s)} }}")
    return "\n".join(lines) + "\n"


# -- certificates as JSON ---------------------------------------------------

def certificate_to_json(cert) -> dict:
    s = cert.sequent
    out = {
        "gamma": [{"name": n, "type": format_formula(f)} for n, f in s.ctx.gamma],
        "delta": [{"name": n, "type": format_formula(f)} for n, f in s.ctx.delta],
        "term": format_term(s.term),
        "type": format_formula(s.ty),
    }
    if cert.trace is not None:
        out["trace"] = {
            "steps": cert.trace.describe(),
            "states": [format_expression(g) for g in cert.trace.states],
        }
    return out


def sequent_from_json(data: dict) -> Sequent:
    """The sequent recorded in a certificate (not yet checked)."""
    try:
        gamma = [(e["name"], parse_formula(e["type"])) for e in data["gamma"]]
        delta = [(e["name"], parse_formula(e["type"])) for e in data["delta"]]
        return Sequent(Context(gamma, delta), parse_term(data["term"]), parse_formula(data["type"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed certificate: missing {exc}") from None


def load_certificate(path) -> Sequent:
    return sequent_from_json(json.loads(Path(path).read_text()))
