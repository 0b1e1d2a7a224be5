"""Typed hypergraph expressions.

A graph expression ``X |= C`` pairs an interface ``X`` (a finite set of
typed node names) with a constituent ``C`` built from edge components,
``Nil``, parallel composition and node restriction.  This module holds
the syntax, the node classification, structural congruence (decided on
ground components), normal forms, heating, substitution and a canonical
key for deduplicating graphs up to congruence.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union


class GraphError(ValueError):
    """Malformed graph expression."""


class GraphTypeError(GraphError):
    """Node or edge used against the type graph."""


@dataclass(frozen=True)
class TypeGraph:
    node_types: frozenset
    edge_types: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "node_types", frozenset(self.node_types))
        object.__setattr__(self, "edge_types", {k: tuple(v) for k, v in self.edge_types.items()})
        for label, arity in self.edge_types.items():
            for ty in arity:
                if ty not in self.node_types:
                    raise GraphTypeError(f"edge type {label} uses unknown node type {ty}")

    def arity(self, label: str) -> tuple:
        try:
            return self.edge_types[label]
        except KeyError:
            raise GraphTypeError(f"unknown edge type {label}") from None

    def check_constituent(self, c: "Constituent") -> None:
        for node in _all_nodes(c):
            if node.ty not in self.node_types:
                raise GraphTypeError(f"node {node.name} has unknown type {node.ty}")
        for e in edges_of(c):
            arity = self.arity(e.label)
            if len(arity) != len(e.args):
                raise GraphTypeError(
                    f"edge {e.label} expects {len(arity)} arguments, got {len(e.args)}")
            for pos, (want, node) in enumerate(zip(arity, e.args)):
                if node.ty != want:
                    raise GraphTypeError(
                        f"argument {pos + 1} of {e.label} must have type {want}, "
                        f"{node.name} has type {node.ty}")

    def check(self, expr: "GraphExpression") -> None:
        for node in expr.interface:
            if node.ty not in self.node_types:
                raise GraphTypeError(f"node {node.name} has unknown type {node.ty}")
        self.check_constituent(expr.body)


@dataclass(frozen=True, order=True)
class Node:
    name: str
    ty: str

    def __str__(self):
        return self.name


# -- constituents -----------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    edge_id: str
    label: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def shape(self) -> tuple:
        """The edge without its identity: what congruence compares."""
        return (self.label, self.args)

    def __str__(self):
        return format_constituent(self)


@dataclass(frozen=True)
class Nil:
    def __str__(self):
        return "Nil"


@dataclass(frozen=True)
class Par:
    left: "Constituent"
    right: "Constituent"

    def __str__(self):
        return format_constituent(self)


@dataclass(frozen=True)
class Nu:
    bound: Node
    body: "Constituent"

    def __str__(self):
        return format_constituent(self)


Constituent = Union[Edge, Nil, Par, Nu]
NIL = Nil()


def par(*parts: "Constituent") -> "Constituent":
    """Left-nested parallel composition; ``par()`` is Nil."""
    if not parts:
        return NIL
    out = parts[0]
    for c in parts[1:]:
        out = Par(out, c)
    return out


def nu(nodes: Iterable[Node], body: "Constituent") -> "Constituent":
    """Restrict ``nodes`` around ``body``, first node outermost."""
    for n in reversed(list(nodes)):
        body = Nu(n, body)
    return body


def free_nodes(c: "Constituent") -> frozenset:
    if isinstance(c, Edge):
        return frozenset(c.args)
    if isinstance(c, Par):
        return free_nodes(c.left) | free_nodes(c.right)
    if isinstance(c, Nu):
        return free_nodes(c.body) - {c.bound}
    return frozenset()


def bound_nodes(c: "Constituent") -> list:
    """Restricted nodes in preorder (first occurrence first)."""
    out = []

    def walk(c):
        if isinstance(c, Par):
            walk(c.left)
            walk(c.right)
        elif isinstance(c, Nu):
            out.append(c.bound)
            walk(c.body)

    walk(c)
    return out


def edges_of(c: "Constituent") -> list:
    """Edge components in left-to-right order."""
    out = []

    def walk(c):
        if isinstance(c, Edge):
            out.append(c)
        elif isinstance(c, Par):
            walk(c.left)
            walk(c.right)
        elif isinstance(c, Nu):
            walk(c.body)

    walk(c)
    return out


def connected_nodes(c: "Constituent") -> frozenset:
    return frozenset(a for e in edges_of(c) for a in e.args)


def _all_nodes(c):
    return set(free_nodes(c)) | set(bound_nodes(c))


def rename_free(c: "Constituent", mapping: Mapping[Node, Node]) -> "Constituent":
    """Replace free occurrences.  Assumes no image is captured by a binder of ``c``."""
    if not mapping:
        return c
    if isinstance(c, Edge):
        return Edge(c.edge_id, c.label, tuple(mapping.get(a, a) for a in c.args))
    if isinstance(c, Par):
        return Par(rename_free(c.left, mapping), rename_free(c.right, mapping))
    if isinstance(c, Nu):
        inner = {k: v for k, v in mapping.items() if k != c.bound}
        return Nu(c.bound, rename_free(c.body, inner))
    return c


def fresh_name(base: str, used: Iterable[str]) -> str:
    used = set(used)
    name = base + "'"
    while name in used:
        name += "'"
    return name


def _hygienic(body: "Constituent", reserved: set) -> "Constituent":
    """Alpha-rename binders so that they are pairwise distinct and avoid ``reserved``."""
    used = set(reserved) | {n.name for n in _all_nodes(body)}
    taken = set(reserved)

    def walk(c):
        if isinstance(c, Par):
            return Par(walk(c.left), walk(c.right))
        if isinstance(c, Nu):
            b = c.bound
            body = c.body
            if b.name in taken:
                new = Node(fresh_name(b.name, used), b.ty)
                used.add(new.name)
                body = rename_free(body, {b: new})
                b = new
            taken.add(b.name)
            return Nu(b, walk(body))
        return c

    return walk(body)


@dataclass(frozen=True)
class GraphExpression:
    """``interface |= body``.  Construction enforces distinct bound names."""

    interface: frozenset
    body: "Constituent" = NIL

    def __post_init__(self):
        iface = frozenset(self.interface)
        object.__setattr__(self, "interface", iface)
        stray = free_nodes(self.body) - iface
        if stray:
            names = ", ".join(sorted(n.name for n in stray))
            raise GraphError(f"free nodes not in the interface: {names}")
        bn = bound_nodes(self.body)
        names = [n.name for n in bn]
        iface_names = {n.name for n in iface}
        if len(set(names)) != len(names) or iface_names & set(names):
            object.__setattr__(self, "body", _hygienic(self.body, iface_names))
        seen = {}
        for n in itertools.chain(iface, _all_nodes(self.body)):
            if seen.setdefault(n.name, n.ty) != n.ty:
                raise GraphError(f"node name {n.name} used with two types")
        ids = [e.edge_id for e in edges_of(self.body)]
        if len(set(ids)) != len(ids):
            dup = next(i for i, k in Counter(ids).items() if k > 1)
            raise GraphError(f"duplicate edge id {dup}")

    @property
    def is_closed(self) -> bool:
        return not self.interface

    def nodes(self) -> frozenset:
        return self.interface | frozenset(bound_nodes(self.body))

    def edges(self) -> list:
        return edges_of(self.body)

    def __str__(self):
        return format_expression(self)


def closed(body: "Constituent") -> GraphExpression:
    return GraphExpression(frozenset(), body)


# -- classification ---------------------------------------------------------

@dataclass(frozen=True)
class NodeClassification:
    free: frozenset
    bound: frozenset
    connected: frozenset
    isolated_bound: frozenset
    isolated_free: frozenset

    @property
    def isolated(self) -> frozenset:
        return self.isolated_bound | self.isolated_free

    @property
    def nodes(self) -> frozenset:
        return self.free | self.bound


def classify(expr: GraphExpression) -> NodeClassification:
    bound = frozenset(bound_nodes(expr.body))
    conn = connected_nodes(expr.body)
    return NodeClassification(
        free=expr.interface,
        bound=bound,
        connected=conn,
        isolated_bound=bound - conn,
        isolated_free=expr.interface - free_nodes(expr.body),
    )


def ground_components(expr: GraphExpression) -> tuple:
    """``(n(E), ec(E))``: all nodes and the edge components (a list, so a multiset)."""
    return expr.nodes(), expr.edges()


# -- normal forms -----------------------------------------------------------

@dataclass(frozen=True)
class NormalGraph:
    """``interface |= nu prefix. (c1 || ... || ck)``, or ``Nil`` when k = 0."""

    interface: frozenset
    prefix: tuple
    components: tuple

    def to_expression(self) -> GraphExpression:
        return GraphExpression(self.interface, nu(self.prefix, par(*self.components)))

    def __str__(self):
        return format_expression(self.to_expression())


def normalize(expr: GraphExpression, canonical: bool = False) -> NormalGraph:
    """Pull every restriction to the front and drop ``Nil``.

    Scope extrusion is always sound here since bound names are distinct and
    disjoint from the interface.  With ``canonical=True`` the bound names are
    renumbered ``n0, n1, ...`` along the canonical labeling and components are
    sorted, so congruent inputs give identical outputs.
    """
    prefix = tuple(bound_nodes(expr.body))
    comps = tuple(edges_of(expr.body))
    if not canonical:
        return NormalGraph(expr.interface, prefix, comps)
    order, _ = _canonical_form(expr)
    taken = {n.name for n in expr.interface}
    mapping = {}
    k = 0
    for old in order:
        while f"n{k}" in taken:
            k += 1
        mapping[old] = Node(f"n{k}", old.ty)
        k += 1
    comps = tuple(sorted(
        (Edge(e.edge_id, e.label, tuple(mapping.get(a, a) for a in e.args)) for e in comps),
        key=lambda e: (e.label, [a.name for a in e.args], e.edge_id)))
    return NormalGraph(expr.interface, tuple(mapping[n] for n in order), comps)


# -- congruence -------------------------------------------------------------

def congruent(e1: GraphExpression, e2: GraphExpression,
              type_graph: Optional[TypeGraph] = None) -> Optional[dict]:
    """Decide ``e1 == e2`` up to structural congruence.

    Returns a bijective renaming of the bound nodes of ``e1`` onto those of
    ``e2`` under which the ground components coincide (edge identities are
    ignored, edge multiplicities are not), or None.
    """
    if type_graph is not None:
        type_graph.check(e1)
        type_graph.check(e2)
    if e1.interface != e2.interface:
        return None
    b1 = bound_nodes(e1.body)
    b2 = bound_nodes(e2.body)
    if Counter(n.ty for n in b1) != Counter(n.ty for n in b2):
        return None
    s1 = [e.shape for e in e1.edges()]
    s2 = [e.shape for e in e2.edges()]
    if len(s1) != len(s2) or Counter(l for l, _ in s1) != Counter(l for l, _ in s2):
        return None
    return _bound_bijection(b1, b2, s1, s2)


def _incidence(nodes, shapes):
    sig = {n: Counter() for n in nodes}
    for label, args in shapes:
        for pos, a in enumerate(args):
            if a in sig:
                sig[a][(label, pos)] += 1
    return sig


def _bound_bijection(b1, b2, s1, s2):
    set1 = set(b1)
    sig1 = _incidence(b1, s1)
    sig2 = _incidence(b2, s2)
    cands = {}
    for n in b1:
        cands[n] = [m for m in b2 if m.ty == n.ty and sig2[m] == sig1[n]]
        if not cands[n]:
            return None
    order = sorted(b1, key=lambda n: (len(cands[n]), -sum(sig1[n].values()), n))
    rank = {n: i for i, n in enumerate(order)}
    # edges of e1 become checkable once their last bound argument is assigned
    due = [[] for _ in order]
    remaining = Counter(s2)
    for shape in s1:
        bound_args = [rank[a] for a in shape[1] if a in set1]
        if bound_args:
            due[max(bound_args)].append(shape)
        elif remaining[shape] > 0:
            remaining[shape] -= 1
        else:
            return None
    sigma = {}
    used = set()

    def extend(i):
        if i == len(order):
            return True
        n = order[i]
        for m in cands[n]:
            if m in used:
                continue
            sigma[n] = m
            used.add(m)
            taken = []
            ok = True
            for label, args in due[i]:
                img = (label, tuple(sigma.get(a, a) for a in args))
                if remaining[img] > 0:
                    remaining[img] -= 1
                    taken.append(img)
                else:
                    ok = False
                    break
            if ok and extend(i + 1):
                return True
            for img in taken:
                remaining[img] += 1
            used.discard(m)
            del sigma[n]
        return False

    return dict(sigma) if extend(0) else None


def heating_witness(e1: GraphExpression, e2: GraphExpression):
    """``(n, sigma)`` when ``e1 << e2``: restricting ``n`` in ``e1`` gives ``e2``."""
    if not e2.interface <= e1.interface:
        return None
    restricted = e1.interface - e2.interface
    e3 = GraphExpression(e2.interface, nu(sorted(restricted), e1.body))
    sigma = congruent(e3, e2)
    if sigma is None:
        return None
    return frozenset(restricted), sigma


def heating(e1: GraphExpression, e2: GraphExpression) -> Optional[frozenset]:
    """The node set whose restriction turns ``e1`` into ``e2`` (``e1 << e2``), or None.

    Since ``X3 = X1 \\ n`` must equal ``X2``, the only candidate is ``X1 \\ X2``.
    """
    found = heating_witness(e1, e2)
    return None if found is None else found[0]


def substitute(expr: GraphExpression, mapping: Mapping[Node, Node]) -> GraphExpression:
    """``E[m/x]`` for free names, renaming binders that would capture an image."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return expr
    for src, dst in mapping.items():
        if src not in expr.interface:
            raise GraphError(f"{src.name} is not a free node")
        if src.ty != dst.ty:
            raise GraphTypeError(
                f"cannot substitute {dst.name}:{dst.ty} for {src.name}:{src.ty}")
    images = {v.name for v in mapping.values()}
    body = _hygienic(expr.body, images | {n.name for n in expr.interface})
    if images & {n.name for n in bound_nodes(body)}:
        raise GraphError("substitution would capture a bound node")
    interface = (expr.interface - set(mapping)) | set(mapping.values())
    return GraphExpression(interface, rename_free(body, mapping))


# -- canonical labeling -----------------------------------------------------

def _canonical_form(expr: GraphExpression):
    """Canonical order of bound nodes and the serialization it induces.

    Colour refinement on (type, incidence signature), then
    individualization over every member of the first non-trivial cell,
    keeping the lexicographically least serialization.  Cells made only of
    isolated nodes are interchangeable and are split without branching.
    """
    bound = bound_nodes(expr.body)
    shapes = [e.shape for e in expr.edges()]
    bset = set(bound)
    incident = {n: [] for n in bound}
    for idx, (_, args) in enumerate(shapes):
        for a in set(args):
            if a in bset:
                incident[a].append(idx)
    iface = tuple(sorted((n.name, n.ty) for n in expr.interface))

    def token(a, colour):
        return ("b", colour[a]) if a in bset else ("f", a.name)

    def refine(colour):
        while True:
            sig = {}
            for n in bound:
                inc = sorted(
                    (shapes[i][0], tuple(pos for pos, a in enumerate(shapes[i][1]) if a == n),
                     tuple(token(a, colour) for a in shapes[i][1]))
                    for i in incident[n])
                sig[n] = (colour[n], tuple(inc))
            ranks = {s: r for r, s in enumerate(sorted(set(sig.values())))}
            new = {n: ranks[sig[n]] for n in bound}
            if len(set(new.values())) == len(set(colour.values())):
                return new
            colour = new

    def serialize(colour):
        order = sorted(bound, key=lambda n: colour[n])
        index = {n: i for i, n in enumerate(order)}
        edges = sorted(
            (label, tuple(("b", index[a]) if a in bset else ("f", a.name) for a in args))
            for label, args in shapes)
        return order, (iface, tuple(n.ty for n in order), tuple(edges))

    best = [None, None]

    def search(colour):
        colour = refine(colour)
        cells = {}
        for n in bound:
            cells.setdefault(colour[n], []).append(n)
        target = next((c for c in sorted(cells) if len(cells[c]) > 1), None)
        if target is None:
            order, ser = serialize(colour)
            if best[1] is None or ser < best[1]:
                best[0], best[1] = order, ser
            return
        members = cells[target]
        if all(not incident[n] for n in members):
            base = {n: (c, 0) for n, c in colour.items()}
            for k, n in enumerate(sorted(members)):
                base[n] = (target, k)
            search(_compress(base))
            return
        for n in members:
            split = {m: (c, 1 if m in members and m != n else 0) for m, c in colour.items()}
            search(_compress(split))

    search({n: (n.ty,) for n in bound})
    return best[0], best[1]


def _compress(colour):
    ranks = {c: r for r, c in enumerate(sorted(set(colour.values())))}
    return {n: ranks[c] for n, c in colour.items()}


def canonical_key(expr: GraphExpression) -> str:
    """A string equal for two expressions exactly when they are congruent."""
    _, (iface, types, edges) = _canonical_form(expr)
    def arg(a):
        return f"#{a[1]}" if a[0] == "b" else a[1]
    parts = [
        ",".join(f"{n}:{t}" for n, t in iface),
        ",".join(types),
        ";".join(f"{label}({','.join(arg(a) for a in args)})" for label, args in edges),
    ]
    return "|".join(parts)


# -- printing ---------------------------------------------------------------

def format_constituent(c: "Constituent", show_ids: bool = True) -> str:
    if isinstance(c, Edge):
        inner = f"{c.label}({', '.join(a.name for a in c.args)})"
        return f"{c.edge_id}:{inner}" if show_ids else inner
    if isinstance(c, Nil):
        return "Nil"
    if isinstance(c, Par):
        left = format_constituent(c.left, show_ids)
        right = format_constituent(c.right, show_ids)
        if isinstance(c.right, Par):
            right = f"({right})"
        return f"{left} || {right}"
    if isinstance(c, Nu):
        body = format_constituent(c.body, show_ids)
        if isinstance(c.body, Par):
            body = f"({body})"
        return f"nu {c.bound.name}:{c.bound.ty} . {body}"
    raise TypeError(f"not a constituent: {c!r}")


def format_expression(expr: GraphExpression, show_ids: bool = True) -> str:
    iface = ", ".join(f"{n.name}:{n.ty}" for n in sorted(expr.interface))
    return f"{{{iface}}} |= {format_constituent(expr.body, show_ids)}"


def iter_constituents(c: "Constituent") -> Iterator["Constituent"]:
    yield c
    if isinstance(c, Par):
        yield from iter_constituents(c.left)
        yield from iter_constituents(c.right)
    elif isinstance(c, Nu):
        yield from iter_constituents(c.body)
