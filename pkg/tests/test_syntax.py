import json
import random

import pytest

from helpers import EXAMPLE, SYNTHETIC, TG, example_workspace, random_graph
from qillgraph.graphs import GraphError, congruent, format_expression
from qillgraph.qill import alpha_eq
from qillgraph.qill.formulas import format_formula
from qillgraph.qill.terms import format_term
from qillgraph.syntax import (
    ParseError, format_sequent, format_workspace, load_certificate, parse_formula,
    parse_graph, parse_sequent, parse_term, parse_workspace, parse_workspace_text,
    sequent_from_json,
)


def test_example_file():
    ws = example_workspace()
    assert list(ws.rules) == ["p"] and ws.initial == "G0"
    assert set(ws.graphs) == {"G0", "G1"}
    assert set(ws.formulas) == {"alpha", "rho"}
    assert ws.gts().initial is ws.graphs["G0"]


def test_empty_workspace():
    ws = parse_workspace_text("# nothing here\n")
    assert ws.names() == set() and ws.initial is None
    with pytest.raises(KeyError):
        ws.gts()


@pytest.mark.parametrize("text", [SYNTHETIC, EXAMPLE.read_text()])
def test_workspace_round_trip(text):
    ws = parse_workspace_text(text)
    again = parse_workspace_text(format_workspace(ws))
    assert format_workspace(again) == format_workspace(ws)
    for name, g in ws.graphs.items():
        assert congruent(g, again.graphs[name]) is not None
    assert set(again.rules) == set(ws.rules)


@pytest.mark.parametrize("seed", range(30))
def test_graph_round_trip(seed):
    e = random_graph(random.Random(seed))
    back = parse_graph(format_expression(e), TG)
    assert back == e or congruent(back, e) is not None


@pytest.mark.parametrize("text", [
    "all x:A. !(A @ x) -o ex y:A. b(x,y)",
    "(a -> b) & (c | bot) * T",
    "ex x y:A. b(x,y) * 1",
    "bot",
    "b(x,y) == b(x,y)",
])
def test_formula_round_trip(text):
    f = parse_formula(text)
    assert alpha_eq(parse_formula(format_formula(f)), f)


@pytest.mark.parametrize("text", [
    "lfn u:ex x:A. b(x,x) => let eps(n|w). v = u in eps(n|w). v",
    "fn x:A => nil",
    "let p * q = u in q * p",
    "f ^ (g x)",
])
def test_term_round_trip(text):
    t = parse_term(text)
    assert parse_term(format_term(t)) == t


def test_sequent_round_trip():
    s = parse_sequent("Gamma: x:A; Delta: n:A @ x |- eps(n|x). nil :: ex y:A. 1")
    again = parse_sequent(format_sequent(s))
    assert again == s


def test_open_sequent_prints_hole():
    s = parse_sequent("Gamma: ; Delta: |- ? :: 1")
    assert s.term is None and "|- ? ::" in format_sequent(s)


@pytest.mark.parametrize("text, fragment", [
    ("node A;\nedge b(A, A);\ngraph G { body nu x:A . b(x); }", "expects 2"),
    ("node A;\nnode A;", "already declared"),
    ("node A;\nedge b(A, C);", "C"),
    ("node A;\nedge b(A, A);\ngraph G { body b(x, x); }", "x"),
    ("node A;\ngraph G { body nu x:A . ; }", ""),
    ("node A;\nedge b(A, A);\ngraph G { body Nil; }\ngraph G { body Nil; }", "G"),
])
def test_parse_errors_have_positions(text, fragment):
    with pytest.raises((ParseError, GraphError)) as info:
        parse_workspace_text(text, "bad.gts")
    msg = str(info.value)
    assert fragment in msg
    if isinstance(info.value, ParseError):
        assert msg.startswith("bad.gts:") and info.value.line >= 1 and info.value.col >= 1


def test_unexpected_character():
    with pytest.raises(ParseError) as info:
        parse_formula("a $ b")
    assert info.value.col == 3


def test_trailing_input_rejected():
    with pytest.raises(ParseError):
        parse_formula("a b")


def test_multiple_files(tmp_path):
    extra = tmp_path / "more.gts"
    extra.write_text("formula beta = ex x:A. b(x,x);\n")
    ws = parse_workspace([EXAMPLE, extra])
    assert {"alpha", "beta"} <= set(ws.formulas)
    clash = tmp_path / "clash.gts"
    clash.write_text("formula alpha = 1;\n")
    with pytest.raises(ParseError):
        parse_workspace([EXAMPLE, clash])


def test_malformed_certificate(tmp_path):
    with pytest.raises(ParseError):
        sequent_from_json({"gamma": [], "term": "nil", "type": "1"})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"gamma": [], "delta": [], "term": "nil", "type": "1"}))
    s = load_certificate(path)
    assert s.ty == parse_formula("1")
