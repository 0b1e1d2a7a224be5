"""Translation of graph expressions and DPO rules into the linear logic, and
the proof certificates built on top of it.

Naming: a node ``m`` of a graph becomes the individual variable ``x_m`` with
linear reference ``n_m :: A @ x_m``; an edge component with id ``e`` becomes
the linear variable ``c_e``.  Rule formulas are closed, so their variables
keep the plain node names of the rule.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Optional

from .dpo import GTS, DerivationSeq, Match, Rewrite, RuleExpr, replay, rewrite
from .graphs import (
    NIL, Edge, GraphExpression, Nil, Node, Nu, Par, congruent,
    fresh_name, heating_witness, nu, par,
)
from .qill.checker import CheckError, Context, Sequent, check
from .qill.formulas import (
    BOT, ONE, Atom, DynEx, Eq, Formula, Lolli, One, Or, Pred, RefTo, Tensor, Top, With,
    forall, free_vars, freshness, subst_formula, subst_many, tensor,
)
from .qill.terms import (
    AppLin, AppNL, EpsTm, ErrorTm, InlTm, InrTm, LamLin, LetEps, LetNil, LetTensor, NilEq,
    NilTm, PairTm, Term, TensorTm, UnitTm, Var, linear_let,
)


class EncodingError(ValueError):
    """Formula or context outside the image of the graph translation."""


class CertificationError(RuntimeError):
    """The kernel refused a certificate; carries the kernel's error as ``cause``."""

    def __init__(self, message: str, cause: Optional[CheckError] = None):
        super().__init__(message)
        self.cause = cause


def ivar(node: Node) -> str:
    return f"x_{node.name}"


def ref_var(node: Node) -> str:
    return f"n_{node.name}"


def edge_var(edge_id: str) -> str:
    return f"c_{edge_id}"


def _node_name(var: str) -> str:
    return var[2:] if var.startswith("x_") and len(var) > 2 else var


# -- graphs to formulas -----------------------------------------------------

def encode_constituent(c, name: Callable[[Node], str] = ivar) -> Formula:
    if isinstance(c, Edge):
        return Pred(c.label, tuple(name(a) for a in c.args))
    if isinstance(c, Nil):
        return ONE
    if isinstance(c, Par):
        return Tensor(encode_constituent(c.left, name), encode_constituent(c.right, name))
    if isinstance(c, Nu):
        return DynEx(name(c.bound), c.bound.ty, encode_constituent(c.body, name))
    raise TypeError(f"not a constituent: {c!r}")


def encode_type(expr: GraphExpression) -> Formula:
    """The main type: interface references (in name order) tensored left of the body."""
    body = encode_constituent(expr.body)
    refs = [RefTo(n.ty, ivar(n)) for n in sorted(expr.interface)]
    return Tensor(tensor(*refs), body) if refs else body


def individuals(expr: GraphExpression) -> tuple:
    """``x_m : A`` for every node ``m`` of ``expr``."""
    return tuple((ivar(n), Atom(n.ty)) for n in sorted(expr.nodes()))


@dataclass(frozen=True)
class GraphContext:
    """Typed nodes and typed edge components, with the bijection to ``gc(E)``."""

    entries: tuple
    nodes: dict = field(default_factory=dict)     # Node -> linear variable
    edges: dict = field(default_factory=dict)     # edge id -> linear variable

    def __len__(self):
        return len(self.entries)

    @property
    def delta(self) -> tuple:
        return self.entries


def encode_context(expr: GraphExpression) -> GraphContext:
    entries, nodes, edges = [], {}, {}
    for n in sorted(expr.nodes()):
        nodes[n] = ref_var(n)
        entries.append((ref_var(n), RefTo(n.ty, ivar(n))))
    for e in expr.edges():
        edges[e.edge_id] = edge_var(e.edge_id)
        entries.append((edge_var(e.edge_id), encode_constituent(e)))
    return GraphContext(tuple(entries), nodes, edges)


@dataclass(frozen=True)
class GraphDerivation:
    """An introduction-only derivation; ``rule`` is one of Id, NId, 1I, TensorI, ExI, Eq."""

    rule: str
    sequent: Sequent
    premises: tuple = ()

    @property
    def main_type(self) -> Formula:
        return self.sequent.ty

    @property
    def main_term(self) -> Term:
        return self.sequent.term

    @property
    def linear_context(self) -> tuple:
        return self.sequent.ctx.delta

    def walk(self):
        yield self
        for p in self.premises:
            yield from p.walk()


def encode_expr(expr: GraphExpression) -> GraphDerivation:
    gamma = individuals(expr)

    def leaf(rule, name, ty):
        return GraphDerivation(rule, Sequent(Context(gamma, [(name, ty)]), Var(name), ty))

    def build(c):
        if isinstance(c, Edge):
            return leaf("Id", edge_var(c.edge_id), encode_constituent(c))
        if isinstance(c, Nil):
            return GraphDerivation("1I", Sequent(Context(gamma), NilTm(), ONE))
        if isinstance(c, Par):
            return join(build(c.left), build(c.right))
        x = ivar(c.bound)
        ref = leaf("NId", ref_var(c.bound), RefTo(c.bound.ty, x))
        body = build(c.body)
        # the witness is the binder itself, so the freshness side condition is an identity
        side = Eq(subst_formula(subst_formula(body.main_type, x, x), x, x), body.main_type)
        fresh = GraphDerivation("Eq", Sequent(Context(gamma), NilEq(side), side))
        ctx = Context(gamma, ref.linear_context + body.linear_context)
        seq = Sequent(ctx, EpsTm(ref_var(c.bound), x, body.main_term),
                      DynEx(x, c.bound.ty, body.main_type))
        return GraphDerivation("ExI", seq, (ref, body, fresh))

    def join(a, b):
        ctx = Context(gamma, a.linear_context + b.linear_context)
        seq = Sequent(ctx, TensorTm(a.main_term, b.main_term), Tensor(a.main_type, b.main_type))
        return GraphDerivation("TensorI", seq, (a, b))

    out = build(expr.body)
    refs = [leaf("NId", ref_var(n), RefTo(n.ty, ivar(n))) for n in sorted(expr.interface)]
    if refs:
        iface = refs[-1]
        for r in reversed(refs[:-1]):
            iface = join(r, iface)
        out = join(iface, out)
    try:
        check(out.sequent)
    except CheckError as exc:     # would be a bug in the translation
        raise CertificationError(f"graph derivation rejected: {exc}", exc) from exc
    return out


def encode_rule(rule: RuleExpr) -> Formula:
    """``all x:A. [[L]] -o [[R]]`` with the interface references left out."""
    name = lambda n: n.name
    body = Lolli(encode_constituent(rule.lhs, name), encode_constituent(rule.rhs, name))
    return forall([(x.name, x.ty) for x in rule.iface_vars], body)


def encode_gts(gts: GTS):
    """``(gamma, gamma_p, delta0)`` for the initial graph and the rules."""
    gamma = individuals(gts.initial)
    gamma_p = tuple((name, encode_rule(gts.rules[name])) for name in sorted(gts.rules))
    return gamma, gamma_p, encode_context(gts.initial)


# -- formulas back to graphs ------------------------------------------------

@dataclass
class Layout:
    """Which node each binder and which edge each predicate of a formula stands for,
    in the order a left-to-right traversal meets them."""

    free: dict          # individual variable -> interface node
    binders: list
    preds: list


def _decode(gamma: Formula, edge_ids=None):
    free = {}

    def scan(f, bound):
        if isinstance(f, RefTo):
            if f.var in bound:
                raise EncodingError(f"reference to the restricted variable {f.var}")
            if f.var in free:
                raise EncodingError(f"two references to {f.var}")
            free[f.var] = f.sort
        elif isinstance(f, (Tensor,)):
            scan(f.left, bound)
            scan(f.right, bound)
        elif isinstance(f, DynEx):
            scan(f.body, bound | {f.var})
        elif isinstance(f, (Pred, One)):
            pass
        else:
            raise EncodingError(f"not a graph formula: {type(f).__name__} is not allowed")

    scan(gamma, frozenset())
    used = set()
    free_nodes = {}
    for var in sorted(free):
        name = _node_name(var)
        if name in used:
            raise EncodingError(f"interface names clash on {name}")
        used.add(name)
        free_nodes[var] = Node(name, free[var])
    layout = Layout(free_nodes, [], [])
    ids = list(edge_ids) if edge_ids is not None else None

    def build(f, scope):
        if isinstance(f, RefTo):
            return None
        if isinstance(f, One):
            return NIL
        if isinstance(f, Pred):
            args = []
            for a in f.args:
                node = scope.get(a) or free_nodes.get(a)
                if node is None:
                    raise EncodingError(f"{a} in {f.label}(...) has no reference")
                args.append(node)
            k = len(layout.preds)
            eid = ids[k] if ids is not None else f"e{k}"
            layout.preds.append(eid)
            return Edge(eid, f.label, tuple(args))
        if isinstance(f, Tensor):
            left, right = build(f.left, scope), build(f.right, scope)
            if left is None or right is None:
                return left if right is None else right
            return Par(left, right)
        name = fresh_name(_node_name(f.var), used) if _node_name(f.var) in used else _node_name(f.var)
        used.add(name)
        node = Node(name, f.sort)
        layout.binders.append(node)
        body = build(f.body, {**scope, f.var: node})
        return Nu(node, NIL if body is None else body)

    body = build(gamma, {})
    if ids is not None and len(ids) != len(layout.preds):
        raise EncodingError("edge identifiers do not fit the formula")
    expr = GraphExpression(frozenset(free_nodes.values()), NIL if body is None else body)
    return expr, layout


def decode(gamma: Formula, delta=None) -> GraphExpression:
    """Graph expression of a graph formula.

    Without ``delta`` edge ids are ``e0, e1, ...`` and bound nodes are named
    after their binders.  With a graph context (all nodes as references, as
    produced by :func:`encode_context`) names and ids are taken from it.
    """
    expr, _ = _decode(gamma)
    if delta is None:
        return expr
    entries = delta.entries if isinstance(delta, GraphContext) else tuple(delta)
    nodes, edges = {}, []
    for name, f in entries:
        if isinstance(f, RefTo):
            if f.var in nodes:
                raise EncodingError(f"two references to {f.var}")
            nodes[f.var] = Node(_node_name(f.var), f.sort)
    for name, f in entries:
        if isinstance(f, Pred):
            missing = [a for a in f.args if a not in nodes]
            if missing:
                raise EncodingError(f"edge resource {name} mentions {missing[0]} without a reference")
            eid = name[2:] if name.startswith("c_") else name
            edges.append(Edge(eid, f.label, tuple(nodes[a] for a in f.args)))
        elif not isinstance(f, RefTo):
            raise EncodingError(f"{name} is not a typed node or edge component")
    cooled = GraphExpression(frozenset(nodes.values()), par(*edges))
    found = heating_witness(cooled, expr)
    if found is None:
        raise EncodingError("the context does not match the formula")
    _, sigma = found
    back = {v: k for k, v in sigma.items()}
    node_map = {n: back.get(n, n) for n in expr.nodes()}
    pool = defaultdict(list)
    for e in edges:
        pool[e.shape].append(e.edge_id)
    id_map = {}
    for e in expr.edges():
        shape = (e.label, tuple(node_map[a] for a in e.args))
        id_map[e.edge_id] = pool[shape].pop(0)
    return GraphExpression(expr.interface, _rebuild(expr.body, node_map, id_map))


def _rebuild(c, node_map, id_map):
    if isinstance(c, Edge):
        return Edge(id_map.get(c.edge_id, c.edge_id), c.label,
                    tuple(node_map.get(a, a) for a in c.args))
    if isinstance(c, Par):
        return Par(_rebuild(c.left, node_map, id_map), _rebuild(c.right, node_map, id_map))
    if isinstance(c, Nu):
        return Nu(node_map.get(c.bound, c.bound), _rebuild(c.body, node_map, id_map))
    return c


def formula_equiv(g1: Formula, g2: Formula) -> bool:
    """Linear equivalence of two graph formulas, decided through congruence."""
    return congruent(decode(g1), decode(g2)) is not None


# -- certificates -----------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """A sequent with its proof term; construction runs the kernel."""

    sequent: Sequent
    trace: Optional[DerivationSeq] = None

    def __post_init__(self):
        try:
            check(self.sequent)
        except CheckError as exc:
            raise CertificationError(f"kernel rejected the certificate: {exc}", exc) from exc

    @property
    def term(self) -> Term:
        return self.sequent.term

    @property
    def ty(self) -> Formula:
        return self.sequent.ty

    def to_json(self) -> dict:
        from .syntax import certificate_to_json
        return certificate_to_json(self)


@dataclass
class Resources:
    """Linear variables standing for the nodes and edges of a graph."""

    nodes: dict = field(default_factory=dict)   # Node -> (reference var, individual var)
    edges: dict = field(default_factory=dict)   # edge id -> linear var


class _Names:
    def __init__(self, taken=()):
        self.taken = set(taken)

    def add(self, names):
        self.taken |= set(names)

    def fresh(self, base):
        k = 1
        while f"{base}{k}" in self.taken:
            k += 1
        self.taken.add(f"{base}{k}")
        return f"{base}{k}"

    def like(self, name):
        if name not in self.taken:
            self.taken.add(name)
            return name
        out = fresh_name(name, self.taken)
        self.taken.add(out)
        return out


def _names_of(*formulas):
    out = set()
    for f in formulas:
        out |= free_vars(f)
    return out


class _Builder:
    """Accumulates let-frames around a proof body."""

    def __init__(self, names: _Names):
        self.names = names
        self.frames = []

    def close(self, body: Term) -> Term:
        for frame in reversed(self.frames):
            body = frame(body)
        return body

    # whole graph formulas, guided by a layout
    def destructure(self, var: str, gamma: Formula, layout: Layout) -> Resources:
        res = Resources()
        binders, preds = iter(layout.binders), iter(layout.preds)

        def walk(v, f):
            if isinstance(f, Tensor):
                a, b = self.names.fresh("u"), self.names.fresh("u")
                self.frames.append(lambda body, a=a, b=b, v=v: LetTensor(a, b, Var(v), body))
                walk(a, f.left)
                walk(b, f.right)
            elif isinstance(f, One):
                self.frames.append(lambda body, v=v: LetNil(Var(v), body))
            elif isinstance(f, RefTo):
                res.nodes[layout.free[f.var]] = (v, f.var)
            elif isinstance(f, Pred):
                res.edges[next(preds)] = v
            elif isinstance(f, DynEx):
                node = next(binders)
                w = self.names.like(ivar(node))
                n, b = self.names.fresh("n"), self.names.fresh("u")
                self.frames.append(lambda body, n=n, w=w, b=b, v=v: LetEps(n, w, b, Var(v), body))
                res.nodes[node] = (n, w)
                walk(b, f.body)
            else:
                raise EncodingError(f"cannot take apart {type(f).__name__}")

        walk(var, gamma)
        return res

    # rule sides, guided by the constituent
    def destructure_constituent(self, var: str, c, res: Resources, name_of) -> None:
        if isinstance(c, Edge):
            res.edges[c.edge_id] = var
        elif isinstance(c, Nil):
            self.frames.append(lambda body: LetNil(Var(var), body))
        elif isinstance(c, Par):
            a, b = self.names.fresh("u"), self.names.fresh("u")
            self.frames.append(lambda body: LetTensor(a, b, Var(var), body))
            self.destructure_constituent(a, c.left, res, name_of)
            self.destructure_constituent(b, c.right, res, name_of)
        else:
            w = self.names.like(name_of(c.bound))
            n, b = self.names.fresh("n"), self.names.fresh("u")
            self.frames.append(lambda body: LetEps(n, w, b, Var(var), body))
            res.nodes[c.bound] = (n, w)
            self.destructure_constituent(b, c.body, res, name_of)

    def step(self, res: Resources, rule: RuleExpr, match: Match, rw: Rewrite,
             g: GraphExpression, head: Term) -> Resources:
        """Apply ``head :: [[rule]]`` to the pieces of ``g``; resources of the result."""
        d = match.assignment
        args = [res.nodes[d[x]][1] for x in rule.iface_vars]
        lres = Resources(
            nodes={b: res.nodes[m] for b, m in match.bound_map},
            edges={lid: res.edges[gid] for lid, gid in match.edge_map},
        )
        lhs = _assemble_constituent(rule.lhs, lres)
        inst = subst_many(encode_rule(rule), {})
        for a in args:
            inst = subst_formula(inst.body, a, inst.var)
        fn = head
        for a in args:
            fn = AppNL(fn, Var(a))
        v = self.names.fresh("v")
        app = AppLin(fn, lhs)
        self.frames.append(lambda body: linear_let(v, inst.right, app, body))
        rres = Resources()
        self.destructure_constituent(v, rule.rhs, rres, lambda b: ivar(rw.rhs_nodes[b]))
        gone = {m for _, m in match.bound_map}
        consumed = {gid for _, gid in match.edge_map}
        out = Resources()
        for n, r in res.nodes.items():
            if n not in gone:
                out.nodes[n] = r
        for b, r in rres.nodes.items():
            out.nodes[rw.rhs_nodes[b]] = r
        for eid, var in res.edges.items():
            if eid not in consumed:
                out.edges[eid] = var
        for rid, var in rres.edges.items():
            out.edges[rw.rhs_edges[rid]] = var
        return out


def _assemble_constituent(c, res: Resources) -> Term:
    if isinstance(c, Edge):
        return Var(res.edges[c.edge_id])
    if isinstance(c, Nil):
        return NilTm()
    if isinstance(c, Par):
        return TensorTm(_assemble_constituent(c.left, res), _assemble_constituent(c.right, res))
    ref, w = res.nodes[c.bound]
    return EpsTm(ref, w, _assemble_constituent(c.body, res))


def assemble(gamma: Formula, layout: Layout, res: Resources) -> Term:
    """A term of type ``gamma`` built from the resources of its decoded graph."""
    binders, preds = iter(layout.binders), iter(layout.preds)

    def walk(f):
        if isinstance(f, Tensor):
            return TensorTm(walk(f.left), walk(f.right))
        if isinstance(f, One):
            return NilTm()
        if isinstance(f, RefTo):
            return Var(res.nodes[layout.free[f.var]][0])
        if isinstance(f, Pred):
            return Var(res.edges[next(preds)])
        node = next(binders)
        ref, w = res.nodes[node]
        return EpsTm(ref, w, walk(f.body))

    return walk(gamma)


def layout_of(expr: GraphExpression) -> Layout:
    """Layout of ``encode_type(expr)`` keyed by the nodes and edge ids of ``expr``."""
    decoded, layout = _decode(encode_type(expr), [e.edge_id for e in expr.edges()])
    assert decoded.nodes() == expr.nodes(), "encoding must keep node names"
    return layout


def transport(res: Resources, src: GraphExpression, dst: GraphExpression,
              sigma: Optional[dict] = None) -> Resources:
    """Move resources along a congruence ``src == dst`` (``sigma`` on bound nodes)."""
    if sigma is None:
        sigma = congruent(src, dst)
        if sigma is None:
            raise EncodingError("graphs are not congruent")
    node_map = {n: sigma.get(n, n) for n in src.nodes()}
    out = Resources(nodes={node_map[n]: r for n, r in res.nodes.items() if n in node_map})
    pool = defaultdict(list)
    for e in src.edges():
        pool[(e.label, tuple(node_map[a] for a in e.args))].append(res.edges[e.edge_id])
    for e in dst.edges():
        out.edges[e.edge_id] = pool[e.shape].pop(0)
    return out


def heating_implication(e1: GraphExpression, e2: GraphExpression) -> Optional[Certificate]:
    """Certificate of ``[[e1]] -o [[e2]]`` when ``e1 << e2``, else None."""
    found = heating_witness(e1, e2)
    if found is None:
        return None
    restricted, sigma = found
    t1, t2 = encode_type(e1), encode_type(e2)
    gamma = tuple((ivar(n), Atom(n.ty)) for n in sorted(e1.interface))
    goal = Lolli(t1, t2)
    if e1 == e2:
        return Certificate(Sequent(Context(gamma), LamLin("u", t1, Var("u")), goal))
    names = _Names({g for g, _ in gamma} | _names_of(t1, t2) | {"u"})
    b = _Builder(names)
    res = b.destructure("u", t1, layout_of(e1))
    e3 = GraphExpression(e2.interface, nu(sorted(restricted), e1.body))
    res2 = transport(res, e3, e2, sigma)
    body = b.close(assemble(t2, layout_of(e2), res2))
    return Certificate(Sequent(Context(gamma), LamLin("u", t1, body), goal))


def equivalence_certificate(g1: Formula, g2: Formula) -> Optional[Certificate]:
    """``(g1 -o g2) & (g2 -o g1)`` for equivalent graph formulas, else None."""
    e1, l1 = _decode(g1)
    e2, l2 = _decode(g2)
    sigma = congruent(e1, e2)
    if sigma is None:
        return None
    inverse = {v: k for k, v in sigma.items()}
    gamma = tuple((var, Atom(node.ty)) for var, node in sorted(l1.free.items()))
    names = _Names({g for g, _ in gamma} | _names_of(g1, g2))

    def direction(src, lsrc, esrc, dst, ldst, edst, s):
        u = names.fresh("u")
        b = _Builder(names)
        res = b.destructure(u, src, lsrc)
        return LamLin(u, src, b.close(assemble(dst, ldst, transport(res, esrc, edst, s))))

    term = PairTm(direction(g1, l1, e1, g2, l2, e2, sigma),
                  direction(g2, l2, e2, g1, l1, e1, inverse))
    return Certificate(Sequent(Context(gamma), term, With(Lolli(g1, g2), Lolli(g2, g1))))


def certify_step(g: GraphExpression, rule: RuleExpr, match: Match,
                 nonlinear: bool = False) -> Certificate:
    """Certificate of ``rho :: [[rule]] |- M :: [[g]] -o [[h]]`` for one DPO step.

    The rule sits in the linear zone unless ``nonlinear`` is set.
    """
    rw = rewrite(g, rule, match)
    tg, th = encode_type(g), encode_type(rw.result)
    rho = encode_rule(rule)
    names = _Names({rule.name, "u"} | _names_of(tg, th, rho))
    b = _Builder(names)
    res = b.destructure("u", tg, layout_of(g))
    res = b.step(res, rule, match, rw, g, Var(rule.name))
    body = b.close(assemble(th, layout_of(rw.result), res))
    zone = ([(rule.name, rho)], []) if nonlinear else ([], [(rule.name, rho)])
    seq = Sequent(Context(*zone), LamLin("u", tg, body), Lolli(tg, th))
    trace = DerivationSeq(((rule.name, match),), (g, rw.result))
    return Certificate(seq, trace)


NONLINEAR, LINEAR = "nonlinear", "linear"


def _trace_setup(gts: GTS, trace: DerivationSeq, style: str, initial: str, rule_instances):
    if style not in (NONLINEAR, LINEAR):
        raise ValueError(f"unknown style {style!r}")
    if initial not in ("components", "formula"):
        raise ValueError(f"unknown initial form {initial!r}")
    rewrites = replay(gts, trace)
    g0 = trace.states[0]
    rules = {name: encode_rule(gts.rules[name]) for name in sorted(gts.rules)}
    names = _Names(set(rules) | _names_of(*rules.values()))
    b = _Builder(names)
    gamma, delta = [], []
    if initial == "components":
        gamma += individuals(g0)
        ctx = encode_context(g0)
        delta += ctx.entries
        res = Resources({n: (ctx.nodes[n], ivar(n)) for n in ctx.nodes}, dict(ctx.edges))
        names.add(v for v, _ in gamma)
        names.add(v for v, _ in delta)
    else:
        t0 = encode_type(g0)
        u0 = names.like("u0")
        delta.append((u0, t0))
        res = b.destructure(u0, t0, layout_of(g0))

    heads = []
    if style == NONLINEAR:
        gamma += list(rules.items())
        heads = [Var(name) for name, _ in trace.steps]
    else:
        wanted = rule_instances if rule_instances is not None else \
            {name: trace.rule_usage[name] for name in trace.rule_usage}
        pools = defaultdict(list)
        for name in sorted(wanted):
            if name not in rules:
                raise ValueError(f"unknown rule {name}")
            for _ in range(wanted[name]):
                var = names.fresh(f"{name}_")
                pools[name].append(var)
                delta.append((var, rules[name]))
        taken = defaultdict(int)
        for name, _ in trace.steps:
            pool = pools[name]
            # an under-provisioned pool reuses its last instance; the kernel will refuse
            var = pool[min(taken[name], len(pool) - 1)] if pool else f"{name}_1"
            taken[name] += 1
            heads.append(Var(var))

    for i, ((name, match), rw) in enumerate(zip(trace.steps, rewrites)):
        res = b.step(res, gts.rules[name], match, rw, trace.states[i], heads[i])
        res = transport(res, rw.result, trace.states[i + 1])
    return b, res, gamma, delta


def certify_trace(gts: GTS, trace: DerivationSeq, style: str = NONLINEAR,
                  initial: str = "components", rule_instances=None,
                  final: Optional[GraphExpression] = None) -> Certificate:
    """Certificate that the last state of ``trace`` is reachable.

    ``style`` puts the rule formulas in the unrestricted zone (``"nonlinear"``)
    or one instance per use in the linear zone (``"linear"``; ``rule_instances``
    overrides how many copies of each rule are supplied).  ``initial`` is
    ``"components"`` for the ground components of the first state or
    ``"formula"`` for its graph formula as one linear hypothesis.  ``final``
    may name any graph congruent to the last state to be used as the goal.
    """
    b, res, gamma, delta = _trace_setup(gts, trace, style, initial, rule_instances)
    last = trace.states[-1]
    target = last if final is None else final
    if target is not last:
        res = transport(res, last, target)
    goal = encode_type(target)
    body = b.close(assemble(goal, layout_of(target), res))
    return Certificate(Sequent(Context(gamma, delta), body, goal), trace)


def negation(f: Formula) -> Formula:
    return Lolli(f, BOT)


def constraint_violation(gts: GTS, trace: DerivationSeq, alpha: Formula,
                         style: str = NONLINEAR, initial: str = "components") -> Optional[Certificate]:
    """A bottom-certificate from ``not alpha`` and the trace, when ``alpha`` can be
    matched in its final graph; None when no such match is found."""
    if free_vars(alpha):
        raise ValueError("the constraint must be closed")
    b, res, gamma, delta = _trace_setup(gts, trace, style, initial, None)
    last = trace.states[-1]
    refs = {w: (ref, node.ty) for node, (ref, w) in res.nodes.items()}
    edges = []
    for e in last.edges():
        args = tuple(res.nodes[a][1] for a in e.args)
        edges.append((res.edges[e.edge_id], Pred(e.label, args)))
    found = next(_entails(alpha, refs, edges, frozenset()), None)
    if found is None:
        return None
    proof, _ = found
    w = b.names.like("neg")
    body = b.close(ErrorTm(BOT, AppLin(Var(w), proof)))
    seq = Sequent(Context(gamma, delta + [(w, negation(alpha))]), body, BOT)
    return Certificate(seq, trace)


def _entails(f, refs, edges, used):
    """Proofs of ``f`` from part of the available resources: ``(term, used)`` pairs."""
    if isinstance(f, One):
        yield NilTm(), used
    elif isinstance(f, Top):
        yield UnitTm(), used
    elif isinstance(f, Pred):
        for var, p in edges:
            if var not in used and p == f:
                yield Var(var), used | {var}
    elif isinstance(f, RefTo):
        ref = refs.get(f.var)
        if ref is not None and ref[1] == f.sort and ref[0] not in used:
            yield Var(ref[0]), used | {ref[0]}
    elif isinstance(f, Tensor):
        for t1, u1 in _entails(f.left, refs, edges, used):
            for t2, u2 in _entails(f.right, refs, edges, u1):
                yield TensorTm(t1, t2), u2
    elif isinstance(f, Or):
        for t, u in _entails(f.left, refs, edges, used):
            yield InlTm(f.right, t), u
        for t, u in _entails(f.right, refs, edges, used):
            yield InrTm(f.left, t), u
    elif isinstance(f, DynEx):
        for w in sorted(refs):
            ref, sort = refs[w]
            if sort != f.sort or ref in used or not freshness(f.body, f.var, w):
                continue
            for t, u in _entails(subst_formula(f.body, w, f.var), refs, edges, used | {ref}):
                yield EpsTm(ref, w, t), u
