"""Proof terms of the linear lambda-calculus, with annotations on binders."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .formulas import Atom, Formula, format_formula


@dataclass(frozen=True)
class Var:
    """Any variable; the zone it is bound in (Γ or Δ) decides Id/UId/NId."""

    name: str


@dataclass(frozen=True)
class NilTm:
    pass


@dataclass(frozen=True)
class UnitTm:
    pass


@dataclass(frozen=True)
class NilEq:
    ty: Optional[Formula] = None


@dataclass(frozen=True)
class TensorTm:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class EpsTm:
    """``eps(ref|witness). body``: introduce ``ex`` hiding ``witness``."""

    ref: str
    witness: str
    body: "Term"


@dataclass(frozen=True)
class LamInd:
    var: str
    sort: str
    body: "Term"


@dataclass(frozen=True)
class LamNL:
    var: str
    ty: Formula
    body: "Term"


@dataclass(frozen=True)
class LamLin:
    var: str
    ty: Formula
    body: "Term"


@dataclass(frozen=True)
class AppLin:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class AppNL:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class ErrorTm:
    ty: Formula
    body: "Term"


@dataclass(frozen=True)
class PairTm:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class FstTm:
    body: "Term"


@dataclass(frozen=True)
class SndTm:
    body: "Term"


@dataclass(frozen=True)
class CaseTm:
    scrutinee: "Term"
    left_var: str
    left: "Term"
    right_var: str
    right: "Term"


@dataclass(frozen=True)
class InlTm:
    other: Formula      # the right disjunct
    body: "Term"


@dataclass(frozen=True)
class InrTm:
    other: Formula      # the left disjunct
    body: "Term"


@dataclass(frozen=True)
class BangTm:
    body: "Term"


@dataclass(frozen=True)
class LetTensor:
    left: str
    right: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class LetNil:
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class LetBang:
    var: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class LetEps:
    """``let eps(ref|witness). var = bound in body``."""

    ref: str
    witness: str
    var: str
    bound: "Term"
    body: "Term"


Term = Union[Var, NilTm, UnitTm, NilEq, TensorTm, EpsTm, LamInd, LamNL, LamLin, AppLin,
             AppNL, ErrorTm, PairTm, FstTm, SndTm, CaseTm, InlTm, InrTm, BangTm,
             LetTensor, LetNil, LetBang, LetEps]

NIL_TM, UNIT_TM = NilTm(), UnitTm()


def tensor_tm(*parts: "Term") -> "Term":
    if not parts:
        return NIL_TM
    out = parts[-1]
    for t in reversed(parts[:-1]):
        out = TensorTm(t, out)
    return out


def linear_let(var: str, ty: Formula, bound: "Term", body: "Term") -> "Term":
    """Bind an arbitrary term to a linear variable: ``(lfn var:ty => body) ^ bound``."""
    return AppLin(LamLin(var, ty, body), bound)


def term_size(t: "Term") -> int:
    return 1 + sum(term_size(c) for c in children(t))


def children(t: "Term") -> tuple:
    if isinstance(t, (TensorTm, PairTm)):
        return (t.left, t.right)
    if isinstance(t, (AppLin, AppNL)):
        return (t.fn, t.arg)
    if isinstance(t, (EpsTm, LamInd, LamNL, LamLin, ErrorTm, FstTm, SndTm, InlTm, InrTm, BangTm)):
        return (t.body,)
    if isinstance(t, CaseTm):
        return (t.scrutinee, t.left, t.right)
    if isinstance(t, (LetTensor, LetNil, LetBang, LetEps)):
        return (t.bound, t.body)
    return ()


# -- printing ---------------------------------------------------------------

def format_term(t: "Term") -> str:
    return _fmt(t, 0)


def _atomic(t):
    return isinstance(t, (Var, NilTm, UnitTm, NilEq, PairTm))


def _arg(t):
    s = _fmt(t, 0)
    return s if _atomic(t) else f"({s})"


def _fmt(t, ctx):
    # ctx: 0 = anything, 1 = tensor operand, 2 = ^ operand, 3 = application operand
    if isinstance(t, Var):
        return t.name
    if isinstance(t, NilTm):
        return "nil"
    if isinstance(t, UnitTm):
        return "unit"
    if isinstance(t, NilEq):
        return "nil_eq" if t.ty is None else f"nil_eq[{format_formula(t.ty)}]"
    if isinstance(t, PairTm):
        return f"pair({_fmt(t.left, 0)}, {_fmt(t.right, 0)})"
    if isinstance(t, TensorTm):
        out = f"{_fmt(t.left, 2)} * {_fmt(t.right, 1)}"
        return out if ctx <= 1 else f"({out})"
    if isinstance(t, AppLin):
        out = f"{_fmt(t.fn, 2)} ^ {_fmt(t.arg, 3)}"
        return out if ctx <= 2 else f"({out})"
    if isinstance(t, AppNL):
        out = f"{_fmt(t.fn, 3)} {_arg(t.arg)}"
        return out
    prefix = {FstTm: "fst", SndTm: "snd", BangTm: "bang"}
    if type(t) in prefix:
        out = f"{prefix[type(t)]} {_arg(t.body)}"
        return out if ctx <= 2 else f"({out})"
    if isinstance(t, (InlTm, InrTm, ErrorTm)):
        kw = {InlTm: "inl", InrTm: "inr", ErrorTm: "error"}[type(t)]
        ann = t.other if not isinstance(t, ErrorTm) else t.ty
        out = f"{kw}[{format_formula(ann)}] {_arg(t.body)}"
        return out if ctx <= 2 else f"({out})"
    if isinstance(t, EpsTm):
        out = f"eps({t.ref}|{t.witness}). {_fmt(t.body, 0)}"
    elif isinstance(t, LamLin):
        out = f"lfn {t.var}:{format_formula(t.ty)} => {_fmt(t.body, 0)}"
    elif isinstance(t, LamInd):
        out = f"fn {t.var}:{t.sort} => {_fmt(t.body, 0)}"
    elif isinstance(t, LamNL):
        kw = "nfn" if isinstance(t.ty, Atom) else "fn"
        out = f"{kw} {t.var}:{format_formula(t.ty)} => {_fmt(t.body, 0)}"
    elif isinstance(t, LetTensor):
        out = f"let {t.left} * {t.right} = {_fmt(t.bound, 0)} in {_fmt(t.body, 0)}"
    elif isinstance(t, LetNil):
        out = f"let nil = {_fmt(t.bound, 0)} in {_fmt(t.body, 0)}"
    elif isinstance(t, LetBang):
        out = f"let !{t.var} = {_fmt(t.bound, 0)} in {_fmt(t.body, 0)}"
    elif isinstance(t, LetEps):
        out = (f"let eps({t.ref}|{t.witness}). {t.var} = {_fmt(t.bound, 0)} "
               f"in {_fmt(t.body, 0)}")
    elif isinstance(t, CaseTm):
        out = (f"case {_fmt(t.scrutinee, 0)} of inl {t.left_var} => {_fmt(t.left, 0)} "
               f"| inr {t.right_var} => {_fmt(t.right, 0)}")
        return f"({out})"
    else:
        raise TypeError(f"not a term: {t!r}")
    return out if ctx == 0 else f"({out})"

