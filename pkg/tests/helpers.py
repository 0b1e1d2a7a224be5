"""Shared fixtures: seeded random graphs, brute-force oracles, small systems."""
from __future__ import annotations

import itertools
from collections import Counter
from pathlib import Path

from qillgraph.dpo import GTS, Match, RuleExpr, apply, find_matches, verify_dpo_conditions
from qillgraph.graphs import (
    NIL, Edge, GraphExpression, Node, Nu, Par, TypeGraph, bound_nodes, congruent, edges_of, nu,
)
from qillgraph.syntax import parse_workspace

ROOT = Path(__file__).resolve().parent.parent
EXAMPLE = ROOT / "data" / "transformation.gts"
SCHEMAS = ROOT / "docs" / "schemas"

TG = TypeGraph({"A", "B"}, {"b": ("A", "A"), "c": ("A", "B"), "d": ("B",)})


def example_workspace():
    return parse_workspace([EXAMPLE])


# -- random graphs ----------------------------------------------------------

def _build(rng, edges, binders):
    """A random constituent over ``edges`` in which every node of ``binders``
    is restricted somewhere above all of its occurrences."""
    binders = list(binders)
    if binders and rng.random() < 0.25:
        b = binders.pop(rng.randrange(len(binders)))
        return Nu(b, _build(rng, edges, binders))
    if len(edges) <= 1 and (not edges or rng.random() < 0.7):
        leaf = edges[0] if edges else NIL
        if rng.random() < 0.15:
            leaf = Par(leaf, NIL) if rng.random() < 0.5 else Par(NIL, leaf)
        rng.shuffle(binders)
        return nu(binders, leaf)
    cut = rng.randint(0, len(edges))
    shuffled = list(edges)
    rng.shuffle(shuffled)
    left, right = shuffled[:cut], shuffled[cut:]
    here, bl, br = [], [], []
    for b in binders:
        in_l = any(b in e.args for e in left)
        in_r = any(b in e.args for e in right)
        if in_l and in_r or rng.random() < 0.3:
            here.append(b)
        elif in_l:
            bl.append(b)
        elif in_r:
            br.append(b)
        else:
            (bl if rng.random() < 0.5 else br).append(b)
    rng.shuffle(here)
    return nu(here, Par(_build(rng, left, bl), _build(rng, right, br)))


def random_graph(rng, max_nodes=8, max_edges=6, max_labels=3, closed=False, tg=TG, prefix="v"):
    """A seeded random graph expression over ``tg``."""
    labels = rng.sample(sorted(tg.edge_types), rng.randint(1, max_labels))
    n = rng.randint(1, max_nodes)
    nodes = [Node(f"{prefix}{i}", rng.choice(["A", "A", "B"])) for i in range(n)]
    for ty in ("A", "B"):        # make every chosen label usable
        if not any(m.ty == ty for m in nodes):
            nodes.append(Node(f"{prefix}{len(nodes)}", ty))
    edges = []
    for i in range(rng.randint(0, max_edges)):
        label = rng.choice(labels)
        args = tuple(rng.choice([m for m in nodes if m.ty == ty]) for ty in tg.edge_types[label])
        edges.append(Edge(f"e{i}", label, args))
    iface = set() if closed else {m for m in nodes if rng.random() < 0.35}
    binders = [m for m in nodes if m not in iface]
    return GraphExpression(frozenset(iface), _build(rng, edges, binders))


def shuffle(rng, expr: GraphExpression) -> GraphExpression:
    """A congruent copy: bound nodes renamed, edge ids changed, a fresh random
    arrangement of parallel composition, Nil and restriction."""
    bound = bound_nodes(expr.body)
    ren = {b: Node(f"w{i}_{b.name}", b.ty) for i, b in enumerate(bound)}
    edges = [Edge(f"f{i}", e.label, tuple(ren.get(a, a) for a in e.args))
             for i, e in enumerate(edges_of(expr.body))]
    return GraphExpression(expr.interface, _build(rng, edges, [ren[b] for b in bound]))


def mutate(rng, expr: GraphExpression) -> GraphExpression:
    """A near miss: one edge argument redirected, one edge dropped, or one node added."""
    edges = edges_of(expr.body)
    bound = bound_nodes(expr.body)
    choice = rng.randrange(3)
    if choice == 0 and edges:
        i = rng.randrange(len(edges))
        e = edges[i]
        pos = rng.randrange(len(e.args))
        pool = [m for m in expr.nodes() if m.ty == e.args[pos].ty]
        args = list(e.args)
        args[pos] = rng.choice(pool)
        edges[i] = Edge(e.edge_id, e.label, tuple(args))
    elif choice == 1 and edges:
        edges.pop(rng.randrange(len(edges)))
    else:
        bound = bound + [Node("extra", rng.choice(["A", "B"]))]
    return GraphExpression(expr.interface, _build(rng, edges, bound))


def restrict_some(rng, expr: GraphExpression) -> GraphExpression:
    """``expr`` with a random subset of its interface restricted (a heating)."""
    hide = sorted(m for m in expr.interface if rng.random() < 0.6)
    return GraphExpression(expr.interface - set(hide), nu(hide, expr.body))


# -- random rules -----------------------------------------------------------

def random_rule(rng, name="r", tg=TG):
    """A small rule: up to 2 interface variables, 2 bound nodes and 2 edges a side."""
    iface = [Node(f"i{k}", rng.choice("AAB")) for k in range(rng.randint(0, 2))]

    def side(prefix):
        bound = [Node(f"{prefix}{k}", rng.choice("AAB")) for k in range(rng.randint(0, 2))]
        nodes = iface + bound
        edges = []
        for k in range(rng.randint(0, 2)):
            label = rng.choice(sorted(tg.edge_types))
            pools = [[m for m in nodes if m.ty == ty] for ty in tg.edge_types[label]]
            if all(pools):
                edges.append(Edge(f"{prefix}e{k}", label, tuple(rng.choice(p) for p in pools)))
        return _build(rng, edges, bound)

    return RuleExpr(name, tuple(iface), side("l"), side("r"))


# -- oracles ----------------------------------------------------------------

def brute_force_matches(g: GraphExpression, rule: RuleExpr) -> set:
    """Every well-typed, label-respecting total assignment of the left-hand side
    into ``g`` that passes :func:`verify_dpo_conditions`.  Keys as in Match."""
    nodes = sorted(g.nodes())
    lhs_edges = sorted(edges_of(rule.lhs), key=lambda e: e.edge_id)
    lhs_bound = bound_nodes(rule.lhs)
    typed = lambda x: [n for n in nodes if n.ty == x.ty]
    labelled = lambda le: [e.edge_id for e in g.edges() if e.label == le.label]
    found = set()
    for d in itertools.product(*map(typed, rule.iface_vars)):
        for mv in itertools.product(*map(typed, lhs_bound)):
            for me in itertools.product(*map(labelled, lhs_edges)):
                m = Match(rule.name, tuple(zip(rule.iface_vars, d)),
                          tuple(zip([e.edge_id for e in lhs_edges], me)),
                          tuple(zip(lhs_bound, mv)))
                if verify_dpo_conditions(g, rule, m).ok:
                    found.add((m.d, m.edge_map, m.bound_map))
    return found


def _invariant(g: GraphExpression):
    return (len(g.nodes()), tuple(sorted(Counter(e.label for e in g.edges()).items())),
            tuple(sorted(Counter(n.ty for n in g.nodes()).items())))


def brute_force_reachable(gts: GTS, max_steps: int) -> list:
    """Representatives of every graph reachable within ``max_steps``, deduplicated by
    pairwise congruence rather than by canonical keys."""
    reps = {}

    def add(g):
        bucket = reps.setdefault(_invariant(g), [])
        if any(congruent(g, h) is not None for h in bucket):
            return False
        bucket.append(g)
        return True

    add(gts.initial)
    layer = [gts.initial]
    for _ in range(max_steps):
        nxt = []
        for g in layer:
            for name in sorted(gts.rules):
                rule = gts.rules[name]
                for m in find_matches(g, rule):
                    h = apply(g, rule, m)
                    if add(h):
                        nxt.append(h)
        layer = nxt
    return [g for bucket in reps.values() for g in bucket]


# -- a synthetic system -----------------------------------------------------

SYNTHETIC = """
node A;
edge b(A, A);
graph G0 { body nu m k:A . b(m, k); }
rule grow  { bind x:A;      lhs Nil;          rhs nu n:A . b(x, n); }
rule flip  { bind x:A, y:A; lhs b(x, y);      rhs b(y, x); }
rule prune { bind x:A;      lhs nu n:A . b(x, n); rhs Nil; }
initial G0;
"""
