"""Formulas of quantified intuitionistic linear logic with resource-bound
existentials (``ex x:A. f``) and the reference modifier (``A @ x``).

Individual terms are plain variable names.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Pred:
    label: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Tensor:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Lolli:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class With:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Arrow:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Bang:
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    sort: str
    body: "Formula"


@dataclass(frozen=True)
class DynEx:
    var: str
    sort: str
    body: "Formula"


@dataclass(frozen=True)
class RefTo:
    """``sort @ var``: a node of type ``sort`` referred to by ``var``."""

    sort: str
    var: str


@dataclass(frozen=True)
class Eq:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Pred, One, Top, Bot, Tensor, Lolli, With, Arrow, Or, Bang,
                Forall, DynEx, RefTo, Eq]
ONE, TOP, BOT = One(), Top(), Bot()
BINARY = (Tensor, Lolli, With, Arrow, Or, Eq)
QUANTIFIERS = (Forall, DynEx)


def tensor(*parts: Formula) -> Formula:
    """Right-nested tensor; the empty tensor is ``1``."""
    if not parts:
        return ONE
    out = parts[-1]
    for f in reversed(parts[:-1]):
        out = Tensor(f, out)
    return out


def tensor_factors(f: Formula) -> list:
    if isinstance(f, Tensor):
        return tensor_factors(f.left) + tensor_factors(f.right)
    return [f]


def dynex(binders, body: Formula) -> Formula:
    for var, sort in reversed(list(binders)):
        body = DynEx(var, sort, body)
    return body


def forall(binders, body: Formula) -> Formula:
    for var, sort in reversed(list(binders)):
        body = Forall(var, sort, body)
    return body


def free_vars(f: Formula) -> frozenset:
    """Free individual variables."""
    if isinstance(f, Pred):
        return frozenset(f.args)
    if isinstance(f, RefTo):
        return frozenset([f.var])
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Bang):
        return free_vars(f.body)
    if isinstance(f, QUANTIFIERS):
        return free_vars(f.body) - {f.var}
    return frozenset()


def all_vars(f: Formula) -> frozenset:
    if isinstance(f, Pred):
        return frozenset(f.args)
    if isinstance(f, RefTo):
        return frozenset([f.var])
    if isinstance(f, BINARY):
        return all_vars(f.left) | all_vars(f.right)
    if isinstance(f, Bang):
        return all_vars(f.body)
    if isinstance(f, QUANTIFIERS):
        return all_vars(f.body) | {f.var}
    return frozenset()


def fresh_var(base: str, avoid) -> str:
    avoid = set(avoid)
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def subst_formula(f: Formula, term: str, var: str) -> Formula:
    """``f[term/var]``, renaming binders that would capture ``term``."""
    return subst_many(f, {var: term})


def subst_many(f: Formula, mapping: dict) -> Formula:
    """Simultaneous capture-avoiding substitution of variables for variables."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return f
    if isinstance(f, Pred):
        return Pred(f.label, tuple(mapping.get(a, a) for a in f.args))
    if isinstance(f, RefTo):
        return RefTo(f.sort, mapping.get(f.var, f.var))
    if isinstance(f, BINARY):
        return type(f)(subst_many(f.left, mapping), subst_many(f.right, mapping))
    if isinstance(f, Bang):
        return Bang(subst_many(f.body, mapping))
    if isinstance(f, QUANTIFIERS):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        if not inner:
            return f
        relevant = {k: v for k, v in inner.items() if k in free_vars(f.body)}
        if not relevant:
            return f
        var, body = f.var, f.body
        if var in relevant.values():
            new = fresh_var(var, all_vars(body) | set(relevant) | set(relevant.values()))
            body = subst_many(body, {var: new})
            var = new
        return type(f)(var, f.sort, subst_many(body, relevant))
    return f


def alpha_eq(f: Formula, g: Formula) -> bool:
    """Structural equality up to renaming of quantifier-bound variables."""
    return _alpha(f, g, {}, {}, 0)


def _alpha(f, g, env_f, env_g, depth):
    if type(f) is not type(g):
        return False
    if isinstance(f, Pred):
        if f.label != g.label or len(f.args) != len(g.args):
            return False
        return all(_same_var(a, b, env_f, env_g) for a, b in zip(f.args, g.args))
    if isinstance(f, RefTo):
        return f.sort == g.sort and _same_var(f.var, g.var, env_f, env_g)
    if isinstance(f, BINARY):
        return (_alpha(f.left, g.left, env_f, env_g, depth)
                and _alpha(f.right, g.right, env_f, env_g, depth))
    if isinstance(f, Bang):
        return _alpha(f.body, g.body, env_f, env_g, depth)
    if isinstance(f, QUANTIFIERS):
        if f.sort != g.sort:
            return False
        return _alpha(f.body, g.body, {**env_f, f.var: depth}, {**env_g, g.var: depth}, depth + 1)
    return f == g


def _same_var(a, b, env_f, env_g):
    ia, ib = env_f.get(a), env_g.get(b)
    if ia is None and ib is None:
        return a == b
    return ia == ib


def freshness(f: Formula, x: str, y: str) -> bool:
    """``f#(x, y)``: ``(f[y/x])[x/y]`` is ``f`` again."""
    return alpha_eq(subst_formula(subst_formula(f, y, x), x, y), f)


def is_graph_formula(f: Formula) -> bool:
    """In the ``1, (x), ex, @`` fragment over primitive graph types."""
    if isinstance(f, (One, Pred, RefTo)):
        return True
    if isinstance(f, Tensor):
        return is_graph_formula(f.left) and is_graph_formula(f.right)
    if isinstance(f, DynEx):
        return is_graph_formula(f.body)
    return False


# -- printing ---------------------------------------------------------------

_PREC = {Eq: 0, Lolli: 1, Arrow: 1, Or: 2, With: 3, Tensor: 4}


def format_formula(f: Formula) -> str:
    return _fmt(f, 0)


def _fmt(f, ctx):
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Pred):
        return f"{f.label}({','.join(f.args)})"
    if isinstance(f, One):
        return "1"
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bot):
        return "bot"
    if isinstance(f, RefTo):
        return f"{f.sort} @ {f.var}"
    if isinstance(f, Bang):
        return "!" + _fmt(f.body, 5)
    if isinstance(f, QUANTIFIERS):
        kw = "all" if isinstance(f, Forall) else "ex"
        names = [f.var]
        body = f.body
        while type(body) is type(f) and body.sort == f.sort:
            names.append(body.var)
            body = body.body
        out = f"{kw} {' '.join(names)}:{f.sort}. {_fmt(body, 0)}"
        return f"({out})" if ctx > 0 else out
    op = {Tensor: "*", Lolli: "-o", With: "&", Arrow: "->", Or: "|", Eq: "=="}[type(f)]
    p = _PREC[type(f)]
    if isinstance(f, (Lolli, Arrow)):       # right associative
        left, right = _fmt(f.left, p + 1), _fmt(f.right, p)
    elif isinstance(f, Eq):                 # non associative
        left, right = _fmt(f.left, p + 1), _fmt(f.right, p + 1)
    else:                                   # right associative too, for symmetry
        left, right = _fmt(f.left, p + 1), _fmt(f.right, p)
    out = f"{left} {op} {right}"
    return f"({out})" if ctx > p else out
