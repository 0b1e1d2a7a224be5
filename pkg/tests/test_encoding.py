import json
import random

import pytest

from helpers import SYNTHETIC, TG, example_workspace, random_graph, random_rule
from qillgraph.dpo import find_matches, reachable, rewrite
from qillgraph.encoding import (
    CertificationError, EncodingError, certify_step, certify_trace, constraint_violation,
    decode, encode_context, encode_expr, encode_gts, encode_rule, encode_type,
    equivalence_certificate, formula_equiv, heating_implication,
)
from qillgraph.graphs import Node, congruent, ground_components
from qillgraph.qill import alpha_eq, check
from qillgraph.qill.formulas import BOT, Lolli, With
from qillgraph.qill.terms import LamLin, Var
from qillgraph.syntax import (
    certificate_to_json, parse_formula as F, parse_graph, parse_workspace_text,
    sequent_from_json,
)

A = lambda name: Node(name, "A")


def g(text):
    return parse_graph(text, TG)


RULES = """
node A;
edge b(A, A);
graph G0 { body nu x y z:A . b(z, x); }
rule p    { bind x1:A, x2:A; lhs Nil;       rhs b(x1, x2); }
rule same { bind x:A, y:A;   lhs b(x, y);   rhs b(x, y); }
rule del  { bind x:A, y:A;   lhs b(x, y);   rhs Nil; }
rule q    { lhs nu n:A . Nil; rhs Nil; }
initial G0;
"""


@pytest.fixture(scope="module")
def ws():
    return parse_workspace_text(RULES)


# -- graphs to formulas -------------------------------------------------------

def test_encode_worked_example(ws):
    assert alpha_eq(encode_type(ws.graphs["G0"]), F("ex x y z:A. b(z,x)"))


def test_encode_nil_and_open_graph():
    assert alpha_eq(encode_type(g("{} |= Nil")), F("1"))
    t = encode_type(g("{m:A} |= b(m, m)"))
    assert alpha_eq(t, F("(A @ x_m) * b(x_m, x_m)"))


def test_encode_expr_derivation_checks(ws):
    der = encode_expr(ws.graphs["G0"])
    check(der.sequent)
    assert {d.rule for d in der.walk()} >= {"ExI", "NId", "Id"}
    names = [v for v, _ in der.linear_context]
    assert len(names) == len(set(names)) == 4
    assert sum(n.startswith("n_") for n in names) == 3


def test_context_is_in_bijection_with_ground_components():
    rng = random.Random(3)
    for _ in range(30):
        e = random_graph(rng)
        nodes, edges = ground_components(e)
        ctx = encode_context(e)
        assert len(ctx) == len(nodes) + len(edges)
        assert set(ctx.nodes) == set(nodes)
        assert set(ctx.edges) == {c.edge_id for c in edges}


# -- formulas back to graphs --------------------------------------------------

@pytest.mark.parametrize("seed", range(25))
def test_decode_inverts_encode(seed):
    e = random_graph(random.Random(seed))
    assert congruent(decode(encode_type(e)), e) is not None
    assert congruent(decode(encode_type(e), encode_context(e)), e) is not None


def test_decode_rejects_non_graph_formulas():
    for text in ("a -o b", "!b(x,x)", "all x:A. b(x,x)"):
        with pytest.raises(EncodingError):
            decode(F(text))


# -- rules --------------------------------------------------------------------

def test_encode_rule_examples(ws):
    assert alpha_eq(encode_rule(ws.rules["p"]), F("all x1 x2:A. 1 -o b(x1,x2)"))
    assert alpha_eq(encode_rule(ws.rules["same"]), F("all x y:A. b(x,y) -o b(x,y)"))
    assert alpha_eq(encode_rule(ws.rules["q"]), F("(ex n:A. 1) -o 1"))


def test_encode_gts(ws):
    gts = ws.gts()
    gamma, gamma_p, delta0 = encode_gts(gts)
    nodes, edges = ground_components(gts.initial)
    assert len(delta0) == len(nodes) + len(edges) == 4
    assert [name for name, _ in gamma_p] == sorted(ws.rules)
    assert len(gamma) == 3


# -- equivalence --------------------------------------------------------------

def test_formula_equiv_examples():
    assert formula_equiv(F("ex x y:A. b(x,y)"), F("ex y x:A. b(x,y)"))
    f = F("ex x:A. b(x,x) * 1")
    assert formula_equiv(f, f)
    assert not formula_equiv(F("ex x:A. 1"), F("1"))
    assert not formula_equiv(F("ex x:A. b(x,x)"), F("ex x y:A. b(x,y)"))


def test_equivalence_certificate():
    f1, f2 = F("ex x y:A. b(x,y)"), F("ex y x:A. b(x,y)")
    cert = equivalence_certificate(f1, f2)
    check(cert.sequent)
    assert alpha_eq(cert.ty, With(Lolli(f1, f2), Lolli(f2, f1)))
    assert equivalence_certificate(F("ex x:A. 1"), F("1")) is None


# -- heating ------------------------------------------------------------------

def test_heating_implication_examples():
    open_ = g("{x:A, y:A} |= b(x, y)")
    shut = g("nu x:A . nu y:A . b(x, y)")
    cert = heating_implication(open_, shut)
    check(cert.sequent)
    assert alpha_eq(cert.ty, Lolli(encode_type(open_), encode_type(shut)))
    assert heating_implication(shut, open_) is None


def test_heating_implication_identity():
    e = g("{x:A} |= b(x, x)")
    cert = heating_implication(e, e)
    assert cert.term == LamLin("u", encode_type(e), Var("u"))


# -- single steps -------------------------------------------------------------

def test_certify_worked_step(ws):
    g0 = ws.graphs["G0"]
    m = next(m for m in find_matches(g0, ws.rules["p"])
             if m.assignment == {A("x1"): A("x"), A("x2"): A("y")})
    for nonlinear in (False, True):
        cert = certify_step(g0, ws.rules["p"], m, nonlinear=nonlinear)
        check(cert.sequent)
        assert alpha_eq(cert.ty.left, F("ex x y z:A. b(z,x)"))
        assert formula_equiv(cert.ty.right, F("ex x y z:A. b(z,x) * b(x,y)"))
        zone = cert.sequent.ctx.gamma if nonlinear else cert.sequent.ctx.delta
        assert [name for name, _ in zone] == ["p"]


def test_certify_identity_rule(ws):
    graph = g("nu m k:A . b(m, k)")
    (m,) = find_matches(graph, ws.rules["same"])
    cert = certify_step(graph, ws.rules["same"], m)
    assert alpha_eq(cert.ty.left, cert.ty.right)


def test_certify_deletion(ws):
    graph = g("nu m k:A . b(m, k)")
    (m,) = find_matches(graph, ws.rules["del"])
    cert = certify_step(graph, ws.rules["del"], m)
    assert congruent(decode(cert.ty.right), g("nu m k:A . Nil")) is not None


@pytest.mark.parametrize("seed", range(40))
def test_step_soundness(seed):
    rng = random.Random(seed)
    graph = random_graph(rng, max_nodes=5, max_edges=4, closed=True)
    rule = random_rule(rng)
    for m in find_matches(graph, rule, TG)[:3]:
        cert = certify_step(graph, rule, m)
        check(cert.sequent)
        h = rewrite(graph, rule, m).result
        assert alpha_eq(cert.ty, Lolli(encode_type(graph), encode_type(h)))


# -- traces -------------------------------------------------------------------

def test_empty_trace_certificate(ws):
    gts = ws.gts()
    trace = reachable(gts, gts.initial, 0)
    for style in ("nonlinear", "linear"):
        cert = certify_trace(gts, trace, style=style)
        assert alpha_eq(cert.ty, encode_type(gts.initial))


def test_linear_trace_needs_one_copy_per_use():
    ws = example_workspace()
    gts = ws.gts()
    target = g("nu x y z:A . (b(z, x) || b(x, y) || b(y, z))")
    trace = reachable(gts, target, 2)
    cert = certify_trace(gts, trace, style="linear", rule_instances={"p": 2})
    check(cert.sequent)
    assert sum(1 for _, f in cert.sequent.ctx.delta if alpha_eq(f, encode_rule(gts.rules["p"]))) == 2
    with pytest.raises(CertificationError) as info:
        certify_trace(gts, trace, style="linear", rule_instances={"p": 1})
    assert info.value.cause is not None


def test_trace_final_target():
    ws = example_workspace()
    gts = ws.gts()
    trace = reachable(gts, ws.graphs["G1"], 1)
    cert = certify_trace(gts, trace, initial="formula", final=ws.graphs["G1"])
    assert alpha_eq(cert.ty, encode_type(ws.graphs["G1"]))


def test_bad_style_rejected(ws):
    gts = ws.gts()
    trace = reachable(gts, gts.initial, 0)
    with pytest.raises(ValueError):
        certify_trace(gts, trace, style="affine")


def test_synthetic_traces_certify():
    ws = parse_workspace_text(SYNTHETIC)
    gts = ws.gts()
    trace = reachable(gts, gts.initial, 3, exact={"grow": 1, "prune": 1})
    for style in ("nonlinear", "linear"):
        check(certify_trace(gts, trace, style=style).sequent)


# -- constraints --------------------------------------------------------------

def test_constraint_violation():
    ws = example_workspace()
    gts = ws.gts()
    alpha = ws.formulas["alpha"]
    before = reachable(gts, gts.initial, 0)
    assert constraint_violation(gts, before, alpha) is None
    after = reachable(gts, ws.graphs["G1"], 1)
    cert = constraint_violation(gts, after, alpha)
    check(cert.sequent)
    assert cert.ty == BOT
    assert constraint_violation(gts, after, F("ex x:A. b(x,x)")) is None


def test_constraint_must_be_closed():
    ws = example_workspace()
    gts = ws.gts()
    with pytest.raises(ValueError):
        constraint_violation(gts, reachable(gts, gts.initial, 0), F("b(x,x)"))


# -- serialization ------------------------------------------------------------

def test_certificate_json_round_trip(ws):
    g0 = ws.graphs["G0"]
    m = find_matches(g0, ws.rules["p"])[0]
    cert = certify_step(g0, ws.rules["p"], m)
    data = json.loads(json.dumps(certificate_to_json(cert)))
    seq = sequent_from_json(data)
    check(seq)
    assert alpha_eq(seq.ty, cert.ty)
    assert seq.term == cert.term
