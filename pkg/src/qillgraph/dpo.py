"""Double-pushout rewriting of closed graph expressions.

Rules are ``Lambda x. L => R`` with a discrete interface.  A match is an
interface assignment ``d`` plus injective maps for the bound nodes and the
edge components of ``L``; applying it replaces ``L[d]`` by ``R[d]`` in
``G == nu n. L[d] || C``.
"""
from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .graphs import (
    Edge, GraphError, GraphExpression, Node, NormalGraph, Nu, Par, TypeGraph,
    bound_nodes, canonical_key, congruent, edges_of, normalize, nu, par,
)


class RewriteError(GraphError):
    pass


class StaleMatch(RewriteError):
    """The match does not fit the graph it is applied to."""


class SearchExhausted(RuntimeError):
    """The state budget ran out before the step bound was reached."""

    def __init__(self, explored: int):
        super().__init__(f"state budget exhausted after {explored} states")
        self.explored = explored


@dataclass(frozen=True)
class RuleExpr:
    name: str
    iface_vars: tuple
    lhs: object
    rhs: object

    def __post_init__(self):
        object.__setattr__(self, "iface_vars", tuple(self.iface_vars))
        names = [v.name for v in self.iface_vars]
        if len(set(names)) != len(names):
            raise RewriteError(f"rule {self.name}: repeated interface variable")
        # the GraphExpression constructor enforces fn(side) <= iface and hygiene
        object.__setattr__(self, "lhs", self.left().body)
        object.__setattr__(self, "rhs", self.right().body)

    def left(self) -> GraphExpression:
        return GraphExpression(frozenset(self.iface_vars), self.lhs)

    def right(self) -> GraphExpression:
        return GraphExpression(frozenset(self.iface_vars), self.rhs)

    def check(self, tg: TypeGraph) -> None:
        tg.check(self.left())
        tg.check(self.right())


@dataclass(frozen=True)
class GTS:
    type_graph: TypeGraph
    rules: Mapping[str, RuleExpr]
    initial: GraphExpression

    def __post_init__(self):
        if not self.initial.is_closed:
            raise RewriteError("the initial graph must be closed")
        self.type_graph.check(self.initial)
        for name, rule in self.rules.items():
            if name != rule.name:
                raise RewriteError(f"rule registered as {name} is named {rule.name}")
            rule.check(self.type_graph)


@dataclass(frozen=True)
class Match:
    rule: str
    d: tuple            # ((iface var, G node), ...) in iface order
    edge_map: tuple     # ((lhs edge id, G edge id), ...) sorted by lhs id
    bound_map: tuple    # ((lhs bound node, G node), ...) in lhs preorder
    residual: Optional[NormalGraph] = field(default=None, compare=False)

    @property
    def assignment(self) -> dict:
        return dict(self.d)

    def describe(self) -> dict:
        return {
            "rule": self.rule,
            "d": {x.name: n.name for x, n in self.d},
            "edges": {a: b for a, b in self.edge_map},
            "nodes": {a.name: b.name for a, b in self.bound_map},
        }


@dataclass(frozen=True)
class DerivationSeq:
    steps: tuple        # ((rule name, Match), ...)
    states: tuple       # G0, G1, ..., Gn

    def __post_init__(self):
        if len(self.states) != len(self.steps) + 1:
            raise RewriteError("a derivation has one more state than steps")

    @property
    def rule_usage(self) -> Counter:
        return Counter(name for name, _ in self.steps)

    def __len__(self):
        return len(self.steps)

    def describe(self) -> list:
        """One record per step: the match, the host edges it consumed and a
        congruence-invariant key of the state it produced."""
        return [{**m.describe(),
                 "consumed_edges": sorted(host for _, host in m.edge_map),
                 "state_key": canonical_key(after)}
                for (_, m), after in zip(self.steps, self.states[1:])]


def _edge_order(e: Edge):
    return (e.label, [a.name for a in e.args], e.edge_id)


def _graph_parts(g: GraphExpression):
    if not g.is_closed:
        raise RewriteError("rewriting needs a closed graph")
    ng = normalize(g)
    nodes = sorted(ng.prefix)
    edges = sorted(ng.components, key=_edge_order)
    return ng, nodes, edges


def find_matches(g: GraphExpression, rule: RuleExpr,
                 type_graph: Optional[TypeGraph] = None) -> list:
    """Every match of ``rule`` in the closed graph ``g`` satisfying the gluing condition."""
    if type_graph is not None:
        type_graph.check(g)
        rule.check(type_graph)
    ng, nodes, gedges = _graph_parts(g)
    lhs_edges = sorted(edges_of(rule.lhs), key=lambda e: e.edge_id)
    lhs_bound = bound_nodes(rule.lhs)
    incident = {n: [e for e in gedges if n in e.args] for n in nodes}
    out = []

    def emit(assign, emap):
        # assign: L node (iface var or bound) -> G node, complete on the edge-bound part
        free_vars = [x for x in rule.iface_vars if x not in assign]
        free_bound = [b for b in lhs_bound if b not in assign]
        for d_rest in itertools.product(*[[n for n in nodes if n.ty == x.ty] for x in free_vars]):
            full = dict(assign)
            full.update(zip(free_vars, d_rest))
            d_image = {full[x] for x in rule.iface_vars}
            taken = {full[b] for b in lhs_bound if b in full}
            if d_image & taken:
                continue
            pools = [[n for n in nodes if n.ty == b.ty and n not in d_image and n not in taken]
                     for b in free_bound]
            for mv_rest in itertools.product(*pools):
                if len(set(mv_rest)) != len(mv_rest):
                    continue
                full2 = dict(full)
                full2.update(zip(free_bound, mv_rest))
                m_v = {b: full2[b] for b in lhs_bound}
                image_e = {e.edge_id for e in emap.values()}
                dangling = any(e.edge_id not in image_e for n in m_v.values() for e in incident[n])
                if dangling:
                    continue
                out.append(_make_match(ng, rule, full2, m_v, emap))

    def extend(i, assign, emap, used):
        if i == len(lhs_edges):
            emit(assign, emap)
            return
        le = lhs_edges[i]
        for ge in gedges:
            if ge.edge_id in used or ge.label != le.label or len(ge.args) != len(le.args):
                continue
            new = dict(assign)
            ok = True
            for la, ga in zip(le.args, ge.args):
                if la.ty != ga.ty or new.setdefault(la, ga) != ga:
                    ok = False
                    break
            if not ok:
                continue
            # m_v injective and disjoint from d, checked incrementally
            bimg = [new[b] for b in lhs_bound if b in new]
            dimg = {new[x] for x in rule.iface_vars if x in new}
            if len(set(bimg)) != len(bimg) or dimg & set(bimg):
                continue
            emap2 = dict(emap)
            emap2[le.edge_id] = ge
            extend(i + 1, new, emap2, used | {ge.edge_id})

    extend(0, {}, {}, frozenset())
    return out


def _make_match(ng: NormalGraph, rule: RuleExpr, assign, m_v, emap) -> Match:
    consumed = {e.edge_id for e in emap.values()}
    gone = set(m_v.values())
    residual = NormalGraph(
        interface=frozenset(n for n in ng.prefix if n not in gone),
        prefix=(),
        components=tuple(e for e in ng.components if e.edge_id not in consumed),
    )
    return Match(
        rule=rule.name,
        d=tuple((x, assign[x]) for x in rule.iface_vars),
        edge_map=tuple(sorted((k, e.edge_id) for k, e in emap.items())),
        bound_map=tuple((b, m_v[b]) for b in bound_nodes(rule.lhs)),
        residual=residual,
    )


@dataclass
class DPOReport:
    """Outcome of re-checking a candidate match condition by condition."""

    checks: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    def record(self, name: str, ok: bool, message: str = "") -> None:
        self.checks[name] = self.checks.get(name, True) and ok
        if not ok and message:
            self.messages.append(f"{name}: {message}")

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list:
        return [k for k, v in self.checks.items() if not v]


def verify_dpo_conditions(g: GraphExpression, rule: RuleExpr, match: Match) -> DPOReport:
    """Check a candidate match against ``g`` directly from the definitions.

    Deliberately independent of :func:`find_matches`: it works from the
    ground components only.
    """
    rep = DPOReport()
    for name in ("closed", "rule", "totality", "typing", "edges", "injective_nodes",
                 "injective_edges", "disjoint", "dangling"):
        rep.checks[name] = True
    rep.record("closed", g.is_closed, "graph has free nodes")
    rep.record("rule", match.rule == rule.name, f"match is for {match.rule}")
    g_nodes = g.nodes()
    g_edges = {e.edge_id: e for e in g.edges()}
    d = dict(match.d)
    m_v = dict(match.bound_map)
    lhs_edges = {e.edge_id: e for e in edges_of(rule.lhs)}
    lhs_bound = bound_nodes(rule.lhs)

    rep.record("totality", set(d) == set(rule.iface_vars), "d is not total on the interface")
    rep.record("totality", set(m_v) == set(lhs_bound), "m_v is not total on bn(L)")
    rep.record("totality", {a for a, _ in match.edge_map} == set(lhs_edges),
               "m_e is not total on ec(L)")
    for src, dst in itertools.chain(d.items(), m_v.items()):
        rep.record("typing", dst in g_nodes, f"{dst.name} is not a node of G")
        rep.record("typing", src.ty == dst.ty, f"{src.name}:{src.ty} sent to {dst.name}:{dst.ty}")
    node_map = {**d, **m_v}
    for lid, gid in match.edge_map:
        le, ge = lhs_edges.get(lid), g_edges.get(gid)
        if le is None or ge is None:
            rep.record("edges", False, f"unknown edge {lid} -> {gid}")
            continue
        rep.record("edges", le.label == ge.label, f"{lid} labelled {le.label}, {gid} {ge.label}")
        rep.record("edges", tuple(node_map.get(a) for a in le.args) == ge.args,
                   f"arguments of {lid} are not preserved")
    rep.record("injective_nodes", len(set(m_v.values())) == len(m_v), "m_v identifies nodes")
    targets = [gid for _, gid in match.edge_map]
    rep.record("injective_edges", len(set(targets)) == len(targets), "m_e identifies edges")
    clash = set(d.values()) & set(m_v.values())
    rep.record("disjoint", not clash,
               "d and m_v share " + ", ".join(sorted(n.name for n in clash)))
    image_e = set(targets)
    for n in set(m_v.values()):
        for e in g_edges.values():
            if n in e.args and e.edge_id not in image_e:
                rep.record("dangling", False, f"{e.edge_id} would dangle at {n.name}")
    return rep


@dataclass(frozen=True)
class Rewrite:
    """A performed step with the comatch ``m*`` of the right-hand side."""

    result: GraphExpression
    rhs_nodes: dict     # bound node of R -> fresh node of H
    rhs_edges: dict     # edge id in R -> edge id in H


def rewrite(g: GraphExpression, rule: RuleExpr, match: Match) -> Rewrite:
    report = verify_dpo_conditions(g, rule, match)
    if not report.ok:
        raise StaleMatch("; ".join(report.messages) or "match does not fit the graph")
    ng = normalize(g)
    d = dict(match.d)
    gone = {n for _, n in match.bound_map}
    consumed = {gid for _, gid in match.edge_map}
    used_names = {n.name for n in ng.prefix}
    used_ids = {e.edge_id for e in ng.components}

    rhs_nodes = {}
    for b in bound_nodes(rule.rhs):
        name = _fresh(b.name, used_names)
        used_names.add(name)
        rhs_nodes[b] = Node(name, b.ty)
    rhs_edges = {}
    for e in edges_of(rule.rhs):
        eid = _fresh(e.edge_id, used_ids)
        used_ids.add(eid)
        rhs_edges[e.edge_id] = eid

    def inst(c):
        if isinstance(c, Edge):
            return Edge(rhs_edges[c.edge_id], c.label, tuple(d.get(a, rhs_nodes.get(a, a)) for a in c.args))
        if isinstance(c, Par):
            return Par(inst(c.left), inst(c.right))
        if isinstance(c, Nu):
            return Nu(rhs_nodes[c.bound], inst(c.body))
        return c

    keep = [n for n in ng.prefix if n not in gone]
    rest = [e for e in ng.components if e.edge_id not in consumed]
    body = inst(rule.rhs)
    if rest:
        body = par(body, *rest)
    h = GraphExpression(frozenset(), nu(keep, body))
    return Rewrite(h, rhs_nodes, rhs_edges)


def _fresh(base: str, used: set) -> str:
    stem = base.rstrip("0123456789'") or base
    k = 1
    while f"{stem}{k}" in used:
        k += 1
    return f"{stem}{k}"


def apply(g: GraphExpression, rule: RuleExpr, match: Match) -> GraphExpression:
    """``H == nu n. R[d] || C`` for the match's residual context ``C``."""
    return rewrite(g, rule, match).result


def _usage_key(usage: Counter, bound: Optional[Counter]):
    if bound is not None:
        usage = Counter({k: min(v, bound[k]) for k, v in usage.items() if k in bound})
    return tuple(sorted(usage.items()))


def reachable(gts: GTS, target: GraphExpression, max_steps: int,
              exact: Optional[Mapping[str, int]] = None,
              at_least: Optional[Mapping[str, int]] = None,
              max_states: int = 100_000) -> Optional[DerivationSeq]:
    """Shortest derivation from ``gts.initial`` to a graph congruent to ``target``.

    ``exact`` demands the trace use precisely that multiset of rules,
    ``at_least`` that it contain it.  States are deduplicated by canonical
    key (together with the relevant part of the rule usage).  Raises
    :class:`SearchExhausted` when more than ``max_states`` states are seen.
    """
    if exact is not None and at_least is not None:
        raise ValueError("choose one of exact / at_least")
    want = Counter(exact) if exact is not None else Counter(at_least) if at_least is not None else None
    if want is not None:
        unknown = set(want) - set(gts.rules)
        if unknown:
            raise RewriteError("unknown rule(s): " + ", ".join(sorted(unknown)))
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    if not target.is_closed:
        raise RewriteError("target must be closed")
    goal = canonical_key(target)

    def done(key, usage):
        if key != goal:
            return False
        if exact is not None:
            return usage == want
        if at_least is not None:
            return all(usage[r] >= k for r, k in want.items())
        return True

    start = gts.initial
    frontier = deque([(start, (), (start,), Counter())])
    track = want if exact is not None or at_least is not None else None
    seen = {(canonical_key(start), _usage_key(Counter(), track) if track is not None else ())}
    while frontier:
        g, steps, states, usage = frontier.popleft()
        if done(canonical_key(g), usage):
            return DerivationSeq(steps, states)
        if len(steps) == max_steps:
            continue
        for name in sorted(gts.rules):
            if exact is not None and usage[name] >= want[name]:
                continue
            rule = gts.rules[name]
            for m in find_matches(g, rule):
                h = apply(g, rule, m)
                u2 = usage + Counter({name: 1})
                key = (canonical_key(h), _usage_key(u2, track) if track is not None else ())
                if key in seen:
                    continue
                seen.add(key)
                if len(seen) > max_states:
                    raise SearchExhausted(len(seen))
                frontier.append((h, steps + ((name, m),), states + (h,), u2))
    return None


def reachable_states(gts: GTS, max_steps: int, max_states: int = 100_000) -> dict:
    """Canonical key -> shortest derivation, for every graph within ``max_steps``."""
    start = gts.initial
    found = {canonical_key(start): DerivationSeq((), (start,))}
    layer = [found[canonical_key(start)]]
    for _ in range(max_steps):
        nxt = []
        for seq in layer:
            g = seq.states[-1]
            for name in sorted(gts.rules):
                rule = gts.rules[name]
                for m in find_matches(g, rule):
                    h = apply(g, rule, m)
                    key = canonical_key(h)
                    if key in found:
                        continue
                    new = DerivationSeq(seq.steps + ((name, m),), seq.states + (h,))
                    found[key] = new
                    nxt.append(new)
                    if len(found) > max_states:
                        raise SearchExhausted(len(found))
        layer = nxt
    return found


def replay(gts: GTS, trace: DerivationSeq) -> list:
    """Re-apply every step from ``gts.initial``; returns the per-step :class:`Rewrite` records."""
    if congruent(trace.states[0], gts.initial) is None:
        raise RewriteError("trace does not start at the initial graph")
    out = []
    for i, (name, m) in enumerate(trace.steps):
        rule = gts.rules.get(name)
        if rule is None:
            raise RewriteError(f"unknown rule {name}")
        rw = rewrite(trace.states[i], rule, m)
        if congruent(rw.result, trace.states[i + 1]) is None:
            raise RewriteError(f"step {i + 1} does not reproduce the recorded state")
        out.append(rw)
    return out
