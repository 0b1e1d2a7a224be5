import pytest

from qillgraph.qill import (
    AdditiveMismatch, CheckError, Context, DuplicateUse, FreshnessViolation, NonlinearArgument,
    ScopeError, Sequent, TypeMismatch, UnboundVariable, UniquenessViolation, UnusedResource,
    alpha_eq, check, freshness, free_vars, is_valid, subst_formula, synthesize,
    validate_context,
)
from qillgraph.qill.formulas import (
    BOT, ONE, Atom, DynEx, Pred, RefTo, Tensor, format_formula,
)
from qillgraph.qill.terms import EpsTm, NilTm, TensorTm, Var, format_term
from qillgraph.syntax import parse_formula as F, parse_sequent, parse_term


def ok(text):
    return check(parse_sequent(text)).ty


def fails(text, cls):
    with pytest.raises(cls) as info:
        check(parse_sequent(text))
    assert type(info.value) is cls, info.value
    return info.value


# -- formula operations -------------------------------------------------------

def test_freshness():
    assert freshness(F("b(x,z)"), "x", "y")
    assert not freshness(F("b(x,y)"), "x", "y")
    assert freshness(F("ex y:A. b(x,y)"), "x", "y")


def test_substitution():
    assert subst_formula(F("b(x1,x2)"), "x", "x1") == F("b(x,x2)")
    f = F("b(y,y)")
    assert subst_formula(f, "z", "x") == f
    out = subst_formula(F("ex t:A. b(x,t)"), "t", "x")
    assert isinstance(out, DynEx) and out.var != "t"
    assert out.body == Pred("b", ("t", out.var))
    assert free_vars(out) == {"t"}


def test_alpha_equivalence():
    assert alpha_eq(F("ex x:A. b(x,x)"), F("ex y:A. b(y,y)"))
    assert not alpha_eq(F("ex x y:A. b(x,y)"), F("ex x y:A. b(y,x)"))
    assert alpha_eq(F("1"), F("1"))
    assert not alpha_eq(F("ex x:A. b(x,z)"), F("ex z:A. b(z,z)"))


def test_formula_printing_round_trips():
    for text in ["ex x y z:A. b(z,x) * b(x,y)", "all x1 x2:A. 1 -o b(x1,x2)",
                 "(a -o b) -o c", "a -o b -o c", "!(a & b) | top -> bot", "A @ x * (a == a)",
                 "(ex x:A. b(x,x)) * c", "a * (b * c)", "(a * b) * c"]:
        f = F(text)
        assert F(format_formula(f)) == f


# -- examples -----------------------------------------------------------------

def test_isolated_restriction():
    assert alpha_eq(ok("Gamma: x:A; Delta: n:A @ x |- eps(n|x). nil :: ex y:A. 1"),
                    F("ex y:A. 1"))


def test_initial_graph_formula():
    ty = ok("Gamma: x:A, y:A, z:A; Delta: n_x:A @ x, n_y:A @ y, n_z:A @ z, c:b(z,x)"
            " |- eps(n_x|x). eps(n_y|y). eps(n_z|z). c :: ex x y z:A. b(z,x)")
    assert alpha_eq(ty, F("ex x y z:A. b(z,x)"))


def test_double_use():
    e = fails("Gamma: ; Delta: u:a |- u * u :: a * a", DuplicateUse)
    assert e.var == "u" and "u" in str(e)


# -- every rule ---------------------------------------------------------------

VALID = [
    "Gamma: ; Delta: u:a |- u :: a",                                        # Id
    "Gamma: p:a; Delta: |- p :: a",                                          # UId
    "Gamma: x:A; Delta: n:A @ x |- n :: A @ x",                              # NId
    "Gamma: ; Delta: |- nil_eq :: a == a",                                   # Eq
    "Gamma: ; Delta: |- nil :: 1",                                           # 1I
    "Gamma: ; Delta: u:1, v:a |- let nil = u in v :: a",                     # 1E
    "Gamma: ; Delta: u:a, v:b |- u * v :: a * b",                            # tensor I
    "Gamma: ; Delta: w:a * b |- let u * v = w in v * u :: b * a",            # tensor E
    "Gamma: ; Delta: |- lfn u:a => u :: a -o a",                             # lolli I
    "Gamma: ; Delta: f:a -o b, u:a |- f ^ u :: b",                           # lolli E
    "Gamma: ; Delta: u:a |- pair(u, u) :: a & a",                            # with I
    "Gamma: ; Delta: w:a & b |- fst w :: a",                                 # with E1
    "Gamma: ; Delta: w:a & b |- snd w :: b",                                 # with E2
    "Gamma: ; Delta: u:a |- inl[b] u :: a | b",                              # or I1
    "Gamma: ; Delta: u:b |- inr[a] u :: a | b",                              # or I2
    "Gamma: ; Delta: w:a | b |- case w of inl u => inr[b] u | inr v => inl[a] v :: b | a",
    "Gamma: ; Delta: u:a, v:b |- unit :: top",                               # top I
    "Gamma: ; Delta: u:bot, v:a |- error[c] u :: c",                         # bot E
    "Gamma: p:a; Delta: |- bang p :: !a",                                    # bang I
    "Gamma: ; Delta: w:!a |- let !p = w in p * p :: a * a",                  # bang E
    "Gamma: ; Delta: |- nfn p:a => p * p :: a -> a * a",                     # arrow I
    "Gamma: f:a -> b, p:a; Delta: |- f p :: b",                              # arrow E
    "Gamma: ; Delta: |- fn x:A => nil :: all x:A. 1",                        # forall I
    "Gamma: y:A; Delta: f:all x:A. b(x,x) |- f y :: b(y,y)",                 # forall E
    "Gamma: y:A; Delta: n:A @ y, c:b(y,y) |- eps(n|y). c :: ex x:A. b(x,x)",  # eps I
    "Gamma: ; Delta: w:ex x:A. b(x,x) |- let eps(n|x). c = w in eps(n|x). c :: ex y:A. b(y,y)",
]


@pytest.mark.parametrize("text", VALID)
def test_rule(text):
    s = parse_sequent(text)
    assert alpha_eq(check(s).ty, s.ty)
    assert is_valid(s)


@pytest.mark.parametrize("text", [t for t in VALID if "Delta: |-" not in t and "unit" not in t
                                  and "error" not in t])
def test_resource_exactness(text):
    """An extra linear atom in Delta turns every valid sequent invalid."""
    s = parse_sequent(text)
    extra = Context(s.ctx.gamma, s.ctx.delta + (("spare", Pred("junk", ())),))
    with pytest.raises(UnusedResource):
        check(Sequent(extra, s.term, s.ty))


def test_sinks_absorb_extra_resources():
    for text in ["Gamma: ; Delta: u:a, v:b |- unit :: top",
                 "Gamma: ; Delta: u:bot, v:a |- error[c] u :: c"]:
        s = parse_sequent(text)
        extra = Context(s.ctx.gamma, s.ctx.delta + (("spare", Pred("junk", ())),))
        check(Sequent(extra, s.term, s.ty))


# -- diagnostics --------------------------------------------------------------

def test_unbound_variable():
    fails("Gamma: ; Delta: |- u :: a", UnboundVariable)


def test_unused_linear_resource():
    e = fails("Gamma: ; Delta: u:a, v:b |- u :: a", UnusedResource)
    assert e.var == "v"


def test_additive_branches_must_agree():
    fails("Gamma: ; Delta: u:a, v:b |- pair(u, v) :: a & b", AdditiveMismatch)
    fails("Gamma: ; Delta: w:a | b, z:c |- case w of inl u => z | inr v => z :: c", UnusedResource)


def test_nonlinear_arguments_consume_nothing():
    fails("Gamma: ; Delta: u:a |- bang u :: !a", NonlinearArgument)
    fails("Gamma: f:a -> b; Delta: u:a |- f u :: b", NonlinearArgument)


def test_forall_instance_must_be_an_individual():
    fails("Gamma: p:b(x,x); Delta: f:all x:A. b(x,x) |- f p :: b(p,p)", TypeMismatch)


def test_type_mismatch():
    fails("Gamma: ; Delta: u:a |- u :: b", TypeMismatch)
    fails("Gamma: ; Delta: u:a, v:a |- u ^ v :: a", TypeMismatch)


def test_freshness_violation():
    fails("Gamma: x:A; Delta: n:A @ x, c:b(x,x) |- eps(n|x). c :: ex y:A. b(y,x)",
          FreshnessViolation)


def test_synthesized_restriction_is_fresh():
    ctx = Context((("x", Atom("A")),), (("n", RefTo("A", "x")), ("c", Pred("b", ("x", "x")))))
    ty = synthesize(ctx, EpsTm("n", "x", Var("c"))).ty
    assert isinstance(ty, DynEx) and "x" not in free_vars(ty)
    assert freshness(ty.body, ty.var, "x")


def test_reference_must_be_a_reference():
    fails("Gamma: x:A; Delta: c:b(x,x) |- eps(c|x). nil :: ex y:A. 1", TypeMismatch)


def test_witness_must_be_fresh():
    fails("Gamma: x:A; Delta: w:ex y:A. b(y,y), m:A @ x"
          " |- let eps(n|x). c = w in m * (eps(n|x). c) :: (A @ x) * ex y:A. b(y,y)",
          UniquenessViolation)


def test_witness_may_not_escape():
    fails("Gamma: ; Delta: w:ex y:A. b(y,y) |- let eps(n|x). c = w in n * c"
          " :: (A @ x) * b(x,x)", ScopeError)


def test_witness_resources_must_be_consumed():
    fails("Gamma: ; Delta: w:ex y:A. b(y,y) |- let eps(n|x). c = w in nil :: 1", UnusedResource)


def test_uniqueness_constraint_on_input():
    with pytest.raises(UniquenessViolation):
        validate_context(Context((("x", Atom("A")),),
                                 (("n", RefTo("A", "x")), ("m", RefTo("A", "x")))))


def test_binders_may_not_shadow():
    fails("Gamma: ; Delta: u:a |- lfn u:b => u :: b -o b", ScopeError)


def test_all_check_errors_have_a_kind():
    kinds = set()
    for cls in (UnboundVariable, DuplicateUse, UnusedResource, AdditiveMismatch,
                NonlinearArgument, UniquenessViolation, FreshnessViolation, ScopeError,
                TypeMismatch):
        assert issubclass(cls, CheckError)
        kinds.add(cls.kind)
    assert len(kinds) == 9


def test_check_returns_consumption():
    s = parse_sequent("Gamma: ; Delta: u:a, v:b |- u * v :: a * b")
    assert check(s).consumed == {"u", "v"}


def test_constructed_terms_check():
    ctx = Context((("x", Atom("A")),), (("n", RefTo("A", "x")),))
    check(Sequent(ctx, TensorTm(Var("n"), NilTm()), Tensor(RefTo("A", "x"), ONE)))


# -- paired equivalence proofs ------------------------------------------------

EXCHANGE = ("pair(lfn u:ex x y:A. b(x,y) => let eps(n|w). u1 = u in let eps(m|v). u2 = u1 in"
            " eps(m|v). eps(n|w). u2,"
            " lfn u:ex y x:A. b(x,y) => let eps(n|w). u1 = u in let eps(m|v). u2 = u1 in"
            " eps(m|v). eps(n|w). u2)")
DISTRIBUTE = ("pair(lfn u:ex x:A. b(z,z) * b(x,z) => let eps(n|w). u1 = u in"
              " let p * q = u1 in p * (eps(n|w). q),"
              " lfn u:b(z,z) * (ex x:A. b(x,z)) => let p * u1 = u in"
              " let eps(n|w). q = u1 in eps(n|w). p * q)")


def test_exchange_equivalence():
    ok(f"Gamma: ; Delta: |- {EXCHANGE} :: ((ex x y:A. b(x,y)) -o ex y x:A. b(x,y))"
       " & ((ex y x:A. b(x,y)) -o ex x y:A. b(x,y))")


def test_distribution_equivalence():
    ok(f"Gamma: z:A; Delta: |- {DISTRIBUTE} :: ((ex x:A. b(z,z) * b(x,z)) -o b(z,z) * ex x:A. b(x,z))"
       " & ((b(z,z) * ex x:A. b(x,z)) -o ex x:A. b(z,z) * b(x,z))")


def test_no_eta_for_resource_bound_existential():
    fails("Gamma: ; Delta: |- lfn u:1 => u :: 1 -o ex x:A. 1", TypeMismatch)


def test_bot_constant():
    assert F("bot") == BOT


def test_term_printing_round_trips():
    for text in [EXCHANGE, DISTRIBUTE, "case w of inl u => inr[b] u | inr v => inl[a] v",
                 "let !p = w in p * p", "error[c] (f ^ u)", "f x y ^ (g ^ nil)",
                 "nfn p:a => fn x:A => p", "bang (fst pair(u, unit))"]:
        t = parse_term(text)
        assert parse_term(format_term(t)) == t
