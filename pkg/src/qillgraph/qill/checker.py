"""Proof checking for two-zone sequents ``Γ; Δ |- M :: f``.

Types are synthesized bottom-up from annotated terms.  Every judgement
also reports which linear variables it consumed and whether it contains
a resource sink (``unit`` for top, ``error`` for bottom elimination) that
may absorb whatever is left over.  Multiplicative context splits are thus
read off the term instead of being guessed.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .formulas import (
    BOT, ONE, TOP, Arrow, Atom, Bang, DynEx, Eq, Forall, Formula, Lolli, Or,
    RefTo, Tensor, With, alpha_eq, format_formula, free_vars, freshness, subst_formula,
)
from .terms import (
    AppLin, AppNL, BangTm, CaseTm, EpsTm, ErrorTm, FstTm, InlTm, InrTm, LamInd, LamLin,
    LamNL, LetBang, LetEps, LetNil, LetTensor, NilEq, NilTm, PairTm, SndTm, Term, TensorTm,
    UnitTm, Var, format_term,
)


class CheckError(Exception):
    """A sequent is not derivable as written."""

    kind = "invalid"


class UnboundVariable(CheckError):
    kind = "unbound"


class LinearityError(CheckError):
    kind = "linearity"

    def __init__(self, message: str, var: Optional[str] = None):
        super().__init__(message)
        self.var = var


class DuplicateUse(LinearityError):
    kind = "duplicate-use"


class UnusedResource(LinearityError):
    kind = "unused-resource"


class AdditiveMismatch(LinearityError):
    kind = "additive-mismatch"


class NonlinearArgument(LinearityError):
    kind = "nonlinear-argument"


class UniquenessViolation(CheckError):
    kind = "uniqueness"


class FreshnessViolation(CheckError):
    kind = "freshness"


class ScopeError(CheckError):
    kind = "scope"


class TypeMismatch(CheckError):
    kind = "type-mismatch"


class NotSynthesizable(CheckError):
    kind = "not-synthesizable"


@dataclass(frozen=True)
class Context:
    """``gamma`` holds non-linear and individual variables, ``delta`` linear ones."""

    gamma: tuple = ()
    delta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(self.gamma))
        object.__setattr__(self, "delta", tuple(self.delta))

    @property
    def individuals(self) -> dict:
        return {n: f for n, f in self.gamma if isinstance(f, Atom)}

    @property
    def references(self) -> dict:
        return {n: f for n, f in self.delta if isinstance(f, RefTo)}

    def extend(self, gamma=(), delta=()) -> "Context":
        return Context(self.gamma + tuple(gamma), self.delta + tuple(delta))


@dataclass(frozen=True)
class Sequent:
    ctx: Context
    term: Optional[Term]
    ty: Formula

    def __str__(self):
        from ..syntax import format_sequent
        return format_sequent(self)


@dataclass(frozen=True)
class Checked:
    ty: Formula
    consumed: frozenset
    absorbs: bool = False


def validate_context(ctx: Context) -> None:
    seen = Counter(n for n, _ in ctx.gamma) + Counter(n for n, _ in ctx.delta)
    dup = sorted(n for n, k in seen.items() if k > 1)
    if dup:
        raise ScopeError(f"variable {dup[0]} is declared twice")
    refs = Counter(f.var for f in ctx.references.values())
    dup = sorted(x for x, k in refs.items() if k > 1)
    if dup:
        raise UniquenessViolation(f"{dup[0]} is the referring variable of two linear entries")


def check(seq: Sequent) -> Checked:
    """Check ``seq``; raise a :class:`CheckError` subclass describing the first failure."""
    if seq.term is None:
        raise NotSynthesizable("sequent has no proof term")
    validate_context(seq.ctx)
    env = _Env(dict(seq.ctx.gamma), dict(seq.ctx.delta))
    ty, used, absorbs = _tc(env, seq.term, seq.ty)
    unused = sorted(set(env.delta) - used)
    if unused and not absorbs:
        raise UnusedResource(f"linear variable {unused[0]} is never used", unused[0])
    return Checked(ty, frozenset(used), absorbs)


def is_valid(seq: Sequent) -> bool:
    try:
        check(seq)
    except CheckError:
        return False
    return True


def synthesize(ctx: Context, term: Term) -> Checked:
    """Type of ``term`` in ``ctx`` without the exhaustive-consumption requirement."""
    validate_context(ctx)
    ty, used, absorbs = _tc(_Env(dict(ctx.gamma), dict(ctx.delta)), term, None)
    return Checked(ty, frozenset(used), absorbs)


@dataclass
class _Env:
    gamma: dict
    delta: dict

    def bound(self, name):
        return name in self.gamma or name in self.delta

    def fresh(self, *names):
        for n in names:
            if self.bound(n):
                raise ScopeError(f"binder {n} shadows a variable in scope")
        if len(set(names)) != len(names):
            raise ScopeError(f"binder {names[0]} bound twice in one pattern")

    def with_gamma(self, **more):
        return _Env({**self.gamma, **more}, self.delta)

    def with_delta(self, **more):
        return _Env(self.gamma, {**self.delta, **more})


def _show(f):
    return format_formula(f)


def _disjoint(u1, u2):
    both = sorted(u1 & u2)
    if both:
        raise DuplicateUse(f"linear variable {both[0]} is used twice", both[0])


def _additive(u1, s1, u2, s2, what):
    if s1 and s2:
        return u1 | u2, True
    if s1:
        u1, s1, u2, s2 = u2, s2, u1, s1
    # now branch 1 is exact
    if s2:
        extra = sorted(u2 - u1)
    else:
        extra = sorted(u1 ^ u2)
    if extra:
        raise AdditiveMismatch(
            f"{what}: branches consume different resources ({extra[0]})", extra[0])
    return u1, False


def _unused(names, used, absorbs):
    if absorbs:
        return
    for n in names:
        if n not in used:
            raise UnusedResource(f"linear variable {n} is never used", n)


def _unique(env, used):
    refs = Counter(env.delta[n].var for n in used if isinstance(env.delta.get(n), RefTo))
    dup = sorted(x for x, k in refs.items() if k > 1)
    if dup:
        raise UniquenessViolation(f"{dup[0]} would refer to two linear entries at once")


def _tc(env: _Env, t: Term, expected: Optional[Formula]):
    ty, used, absorbs = _rule(env, t, expected)
    if expected is not None and not alpha_eq(ty, expected):
        raise TypeMismatch(f"{format_term(t)} has type {_show(ty)}, expected {_show(expected)}")
    return ty, frozenset(used), absorbs


def _individual(env, name, sort=None):
    f = env.gamma.get(name)
    if f is None:
        if name in env.delta:
            raise TypeMismatch(f"{name} is linear, an individual variable is needed")
        raise UnboundVariable(f"unbound individual variable {name}")
    if not isinstance(f, Atom):
        raise TypeMismatch(f"{name} has type {_show(f)}, not a node type")
    if sort is not None and f.name != sort:
        raise TypeMismatch(f"{name} has type {f.name}, expected {sort}")
    return f.name


def _rule(env: _Env, t: Term, expected: Optional[Formula]):
    if isinstance(t, Var):
        if t.name in env.delta:
            return env.delta[t.name], {t.name}, False
        if t.name in env.gamma:
            return env.gamma[t.name], set(), False
        raise UnboundVariable(f"unbound variable {t.name}")

    if isinstance(t, NilTm):
        return ONE, set(), False

    if isinstance(t, UnitTm):
        return TOP, set(), True

    if isinstance(t, NilEq):
        ty = t.ty if t.ty is not None else expected
        if ty is None:
            raise NotSynthesizable("nil_eq needs an annotation or an expected type")
        if not isinstance(ty, Eq):
            raise TypeMismatch(f"nil_eq proves an equation, not {_show(ty)}")
        if not alpha_eq(ty.left, ty.right):
            raise TypeMismatch(f"{_show(ty.left)} and {_show(ty.right)} are not equal")
        return ty, set(), False

    if isinstance(t, TensorTm):
        le = re = None
        if isinstance(expected, Tensor):
            le, re = expected.left, expected.right
        a, u1, s1 = _tc(env, t.left, le)
        b, u2, s2 = _tc(env, t.right, re)
        _disjoint(u1, u2)
        return Tensor(a, b), u1 | u2, s1 or s2

    if isinstance(t, EpsTm):
        return _eps_intro(env, t, expected)

    if isinstance(t, LamInd):
        env.fresh(t.var)
        inner = env.with_gamma(**{t.var: Atom(t.sort)})
        body_exp = None
        if isinstance(expected, Forall) and expected.sort == t.sort:
            body_exp = subst_formula(expected.body, t.var, expected.var)
        a, used, s = _tc(inner, t.body, body_exp)
        return Forall(t.var, t.sort, a), used, s

    if isinstance(t, LamNL):
        env.fresh(t.var)
        inner = env.with_gamma(**{t.var: t.ty})
        body_exp = expected.right if isinstance(expected, Arrow) else None
        b, used, s = _tc(inner, t.body, body_exp)
        return Arrow(t.ty, b), used, s

    if isinstance(t, LamLin):
        env.fresh(t.var)
        inner = env.with_delta(**{t.var: t.ty})
        body_exp = expected.right if isinstance(expected, Lolli) else None
        b, used, s = _tc(inner, t.body, body_exp)
        _unused([t.var], used, s)
        _unique(inner, used)
        return Lolli(t.ty, b), used - {t.var}, s

    if isinstance(t, AppLin):
        f, u1, s1 = _tc(env, t.fn, None)
        if not isinstance(f, Lolli):
            raise TypeMismatch(f"{format_term(t.fn)} has type {_show(f)}, not a linear implication")
        _, u2, s2 = _tc(env, t.arg, f.left)
        _disjoint(u1, u2)
        return f.right, u1 | u2, s1 or s2

    if isinstance(t, AppNL):
        f, u1, s1 = _tc(env, t.fn, None)
        if isinstance(f, Arrow):
            _, u2, _ = _tc(env, t.arg, f.left)
            if u2:
                raise NonlinearArgument(
                    f"argument {format_term(t.arg)} of an unrestricted application "
                    f"consumes {sorted(u2)[0]}", sorted(u2)[0])
            return f.right, u1, s1
        if isinstance(f, Forall):
            if not isinstance(t.arg, Var):
                raise TypeMismatch("a universal is instantiated with an individual variable")
            _individual(env, t.arg.name, f.sort)
            return subst_formula(f.body, t.arg.name, f.var), u1, s1
        raise TypeMismatch(f"{format_term(t.fn)} has type {_show(f)}, cannot be applied")

    if isinstance(t, ErrorTm):
        _, used, _ = _tc(env, t.body, BOT)
        return t.ty, used, True

    if isinstance(t, PairTm):
        le = re = None
        if isinstance(expected, With):
            le, re = expected.left, expected.right
        a, u1, s1 = _tc(env, t.left, le)
        b, u2, s2 = _tc(env, t.right, re)
        used, s = _additive(u1, s1, u2, s2, "pair")
        return With(a, b), used, s

    if isinstance(t, (FstTm, SndTm)):
        f, used, s = _tc(env, t.body, None)
        if not isinstance(f, With):
            raise TypeMismatch(f"{format_term(t.body)} has type {_show(f)}, not an additive pair")
        return (f.left if isinstance(t, FstTm) else f.right), used, s

    if isinstance(t, InlTm):
        le = expected.left if isinstance(expected, Or) else None
        a, used, s = _tc(env, t.body, le)
        return Or(a, t.other), used, s

    if isinstance(t, InrTm):
        re = expected.right if isinstance(expected, Or) else None
        b, used, s = _tc(env, t.body, re)
        return Or(t.other, b), used, s

    if isinstance(t, CaseTm):
        f, u0, s0 = _tc(env, t.scrutinee, None)
        if not isinstance(f, Or):
            raise TypeMismatch(f"{format_term(t.scrutinee)} has type {_show(f)}, not a disjunction")
        env.fresh(t.left_var)
        env.fresh(t.right_var)
        left_env = env.with_delta(**{t.left_var: f.left})
        g1, u1, s1 = _tc(left_env, t.left, expected)
        _unused([t.left_var], u1, s1)
        _unique(left_env, u1)
        right_env = env.with_delta(**{t.right_var: f.right})
        g2, u2, s2 = _tc(right_env, t.right, g1)
        _unused([t.right_var], u2, s2)
        _unique(right_env, u2)
        used, s = _additive(u1 - {t.left_var}, s1, u2 - {t.right_var}, s2, "case")
        _disjoint(u0, used)
        return g1, u0 | used, s0 or s

    if isinstance(t, BangTm):
        inner = expected.body if isinstance(expected, Bang) else None
        a, used, _ = _tc(env, t.body, inner)
        if used:
            raise NonlinearArgument(
                f"!-introduction may not consume linear resources ({sorted(used)[0]})",
                sorted(used)[0])
        return Bang(a), set(), False

    if isinstance(t, LetTensor):
        f, u1, s1 = _tc(env, t.bound, None)
        if not isinstance(f, Tensor):
            raise TypeMismatch(f"{format_term(t.bound)} has type {_show(f)}, not a tensor")
        env.fresh(t.left, t.right)
        inner = env.with_delta(**{t.left: f.left, t.right: f.right})
        g, u2, s2 = _tc(inner, t.body, expected)
        _unused([t.left, t.right], u2, s2)
        _unique(inner, u2)
        rest = u2 - {t.left, t.right}
        _disjoint(u1, rest)
        return g, u1 | rest, s1 or s2

    if isinstance(t, LetNil):
        f, u1, s1 = _tc(env, t.bound, ONE)
        g, u2, s2 = _tc(env, t.body, expected)
        _disjoint(u1, u2)
        return g, u1 | u2, s1 or s2

    if isinstance(t, LetBang):
        f, u1, s1 = _tc(env, t.bound, None)
        if not isinstance(f, Bang):
            raise TypeMismatch(f"{format_term(t.bound)} has type {_show(f)}, not !-type")
        env.fresh(t.var)
        g, u2, s2 = _tc(env.with_gamma(**{t.var: f.body}), t.body, expected)
        _disjoint(u1, u2)
        return g, u1 | u2, s1 or s2

    if isinstance(t, LetEps):
        return _eps_elim(env, t, expected)

    raise NotSynthesizable(f"cannot type {t!r}")


def _eps_intro(env: _Env, t: EpsTm, expected):
    ref_ty = env.delta.get(t.ref)
    if ref_ty is None:
        if t.ref in env.gamma:
            raise TypeMismatch(f"{t.ref} must be a linear node reference")
        raise UnboundVariable(f"unbound reference {t.ref}")
    if not isinstance(ref_ty, RefTo):
        raise TypeMismatch(f"{t.ref} has type {_show(ref_ty)}, not a node reference")
    if ref_ty.var != t.witness:
        raise TypeMismatch(f"{t.ref} refers to {ref_ty.var}, not to {t.witness}")
    sort = _individual(env, t.witness, ref_ty.sort)

    if isinstance(expected, DynEx):
        if expected.sort != sort:
            raise TypeMismatch(f"witness {t.witness} has type {sort}, expected {expected.sort}")
        if not freshness(expected.body, expected.var, t.witness):
            raise FreshnessViolation(
                f"{t.witness} occurs free in {_show(expected)}; hiding it would not "
                f"capture every occurrence")
        instance = subst_formula(expected.body, t.witness, expected.var)
        _, used, s = _tc(env, t.body, instance)
        result = expected
    else:
        body_ty, used, s = _tc(env, t.body, None)
        # abstracting every occurrence makes the freshness side condition hold by construction
        result = DynEx(t.witness, sort, body_ty)
    if t.ref in used:
        raise DuplicateUse(f"reference {t.ref} is used both as witness and in the body", t.ref)
    assert t.witness not in free_vars(result)
    return result, used | {t.ref}, s


def _eps_elim(env: _Env, t: LetEps, expected):
    f, u1, s1 = _tc(env, t.bound, None)
    if not isinstance(f, DynEx):
        raise TypeMismatch(f"{format_term(t.bound)} has type {_show(f)}, not a resource-bound existential")
    if t.witness in env.gamma or t.witness in env.delta:
        raise UniquenessViolation(f"witness {t.witness} is not fresh")
    if any(isinstance(g, RefTo) and g.var == t.witness for g in env.delta.values()):
        raise UniquenessViolation(f"{t.witness} already refers to a linear entry")
    env.fresh(t.ref, t.var, t.witness)
    inner = _Env({**env.gamma, t.witness: Atom(f.sort)},
                 {**env.delta, t.ref: RefTo(f.sort, t.witness),
                  t.var: subst_formula(f.body, t.witness, f.var)})
    g, u2, s2 = _tc(inner, t.body, expected)
    if t.witness in free_vars(g):
        raise ScopeError(f"witness {t.witness} escapes into the result type {_show(g)}")
    _unused([t.ref, t.var], u2, s2)
    _unique(inner, u2)
    rest = u2 - {t.ref, t.var}
    _disjoint(u1, rest)
    return g, u1 | rest, s1 or s2
