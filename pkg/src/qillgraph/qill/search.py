"""Depth-bounded, goal-directed proof search.

Covers the ``1, *, -o, all, ex, @, !`` fragment with atoms and predicates.
Invertible right rules are applied first, then tensors, units, existentials
and bangs in the linear context are taken apart eagerly; only then does the
search branch over context splits, witnesses and instantiations.  Subgoals
share no unknowns, so the first proof found for a subgoal is as good as any.

A ``None`` result means no proof exists within the given depth, nothing more.
"""
from __future__ import annotations

from collections import Counter
from itertools import combinations
from typing import Optional

from .checker import Context, Sequent, check
from .formulas import (
    Arrow, Atom, Bang, DynEx, Eq, Forall, Formula, Lolli, One, Pred, RefTo, Tensor,
    all_vars, alpha_eq, freshness, subst_formula,
)
from .terms import (
    AppLin, AppNL, BangTm, EpsTm, LamInd, LamLin, LamNL, LetBang, LetEps, LetNil, LetTensor,
    NilEq, NilTm, TensorTm, Term, Var, linear_let,
)

DEFAULT_DEPTH = 12
FRAGMENT = (One, Tensor, Lolli, Forall, DynEx, RefTo, Bang, Atom, Pred)


class SearchError(ValueError):
    """The goal lies outside the searchable fragment."""


def in_fragment(f: Formula) -> bool:
    if not isinstance(f, FRAGMENT):
        return False
    if isinstance(f, (Tensor, Lolli)):
        return in_fragment(f.left) and in_fragment(f.right)
    if isinstance(f, (Forall, DynEx, Bang)):
        return in_fragment(f.body)
    return True


def bounded_search(ctx: Context, goal: Formula, depth: int = DEFAULT_DEPTH) -> Optional[Term]:
    """A proof term for ``ctx |- ? :: goal`` using at most ``depth`` rule applications
    on any branch, or ``None``."""
    if not in_fragment(goal):
        raise SearchError("goal is outside the searchable fragment")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    names = {n for n, _ in ctx.gamma} | {n for n, _ in ctx.delta} | set(all_vars(goal))
    for _, f in ctx.gamma + ctx.delta:
        names |= all_vars(f)
    prover = _Prover(names)
    term = prover.prove(dict(ctx.gamma), list(ctx.delta), goal, depth)
    if term is not None:
        check(Sequent(ctx, term, goal))     # soundness is not negotiable
    return term


class _Prover:
    def __init__(self, names):
        self.names = set(names)
        self.failed = {}

    def fresh(self, base):
        base = base.rstrip("'0123456789") or "v"
        k = 1
        while f"{base}{k}" in self.names:
            k += 1
        name = f"{base}{k}"
        self.names.add(name)
        return name

    def fresh_like(self, var):
        if var not in self.names:
            self.names.add(var)
            return var
        name = var + "'"
        while name in self.names:
            name += "'"
        self.names.add(name)
        return name

    # -- main loop ----------------------------------------------------------

    def prove(self, gamma, delta, goal, depth):
        if depth <= 0 or _surplus(gamma, delta, goal):
            return None
        key = self._key(gamma, delta, goal)
        if self.failed.get(key, -1) >= depth:
            return None
        out = self._prove(gamma, delta, goal, depth)
        if out is None:
            self.failed[key] = depth
        return out

    @staticmethod
    def _key(gamma, delta, goal):
        # linear names are fresh every time, so only the formulas matter there
        return (frozenset(gamma.items()), tuple(sorted(repr(f) for _, f in delta)), goal)

    def _prove(self, gamma, delta, goal, depth):
        d = depth - 1
        # axioms
        if len(delta) == 1 and alpha_eq(delta[0][1], goal):
            return Var(delta[0][0])
        if not delta:
            if isinstance(goal, One):
                return NilTm()
            if isinstance(goal, Eq) and alpha_eq(goal.left, goal.right):
                return NilEq(goal)
            for p, f in sorted(gamma.items()):
                if alpha_eq(f, goal):
                    return Var(p)

        # invertible right rules
        if isinstance(goal, Lolli):
            u = self.fresh("u")
            body = self.prove(gamma, delta + [(u, goal.left)], goal.right, d)
            return None if body is None else LamLin(u, goal.left, body)
        if isinstance(goal, Forall):
            x = self.fresh_like(goal.var)
            body = self.prove({**gamma, x: Atom(goal.sort)}, delta,
                              subst_formula(goal.body, x, goal.var), d)
            return None if body is None else LamInd(x, goal.sort, body)
        if isinstance(goal, Arrow):
            p = self.fresh("p")
            body = self.prove({**gamma, p: goal.left}, delta, goal.right, d)
            return None if body is None else LamNL(p, goal.left, body)

        # invertible left rules
        for i, (u, f) in enumerate(delta):
            rest = delta[:i] + delta[i + 1:]
            if isinstance(f, Tensor):
                a, b = self.fresh("u"), self.fresh("u")
                body = self.prove(gamma, rest + [(a, f.left), (b, f.right)], goal, d)
                return None if body is None else LetTensor(a, b, Var(u), body)
            if isinstance(f, One):
                body = self.prove(gamma, rest, goal, d)
                return None if body is None else LetNil(Var(u), body)
            if isinstance(f, DynEx):
                x = self.fresh_like(f.var)
                n, v = self.fresh("n"), self.fresh("u")
                inner = rest + [(n, RefTo(f.sort, x)), (v, subst_formula(f.body, x, f.var))]
                body = self.prove({**gamma, x: Atom(f.sort)}, inner, goal, d)
                return None if body is None else LetEps(n, x, v, Var(u), body)
            if isinstance(f, Bang):
                p = self.fresh("p")
                body = self.prove({**gamma, p: f.body}, rest, goal, d)
                return None if body is None else LetBang(p, Var(u), body)

        # right rules that choose
        if isinstance(goal, Tensor):
            found = self._tensor(gamma, delta, goal, d)
            if found is not None:
                return found
        if isinstance(goal, DynEx):
            found = self._dynex(gamma, delta, goal, d)
            if found is not None:
                return found
        if isinstance(goal, Bang) and not delta:
            body = self.prove(gamma, [], goal.body, d)
            if body is not None:
                return BangTm(body)

        # focus on an implication or universal in either zone
        return self._focus(gamma, delta, goal, d)

    def _splits(self, delta, left_goal):
        want = _demand(left_goal)
        atomic = all(isinstance(f, (Pred, RefTo, Atom)) for _, f in delta)
        idx = range(len(delta))
        seen = set()
        for k in range(len(delta) + 1):
            for pick in combinations(idx, k):
                left = [delta[i] for i in pick]
                right = [delta[i] for i in idx if i not in pick]
                if want is not None and atomic and _supply(left) != want:
                    continue
                sig = (tuple(sorted(repr(f) for _, f in left)),
                       tuple(sorted(repr(f) for _, f in right)))
                if sig in seen:
                    continue
                seen.add(sig)
                yield left, right

    def _tensor(self, gamma, delta, goal, d):
        for left, right in self._splits(delta, goal.left):
            m = self.prove(gamma, left, goal.left, d)
            if m is None:
                continue
            n = self.prove(gamma, right, goal.right, d)
            if n is not None:
                return TensorTm(m, n)
        return None

    def _dynex(self, gamma, delta, goal, d):
        for i, (n, f) in enumerate(delta):
            if not isinstance(f, RefTo) or f.sort != goal.sort:
                continue
            y = f.var
            if gamma.get(y) != Atom(goal.sort) or not freshness(goal.body, goal.var, y):
                continue
            rest = delta[:i] + delta[i + 1:]
            body = self.prove(gamma, rest, subst_formula(goal.body, y, goal.var), d)
            if body is not None:
                return EpsTm(n, y, body)
        return None

    def _focus(self, gamma, delta, goal, d):
        heads = [(u, f, delta[:i] + delta[i + 1:]) for i, (u, f) in enumerate(delta)]
        heads += [(p, f, delta) for p, f in sorted(gamma.items()) if not isinstance(f, Atom)]
        for u, f, rest in heads:
            if isinstance(f, (Forall, Lolli, Arrow)):
                found = self._chain(gamma, rest, Var(u), f, goal, d)
                if found is not None:
                    return found
        return None

    def _chain(self, gamma, delta, head, f, goal, d):
        """Keep focus on ``head : f`` until a positive formula is reached, then
        release it into the linear context."""
        if isinstance(f, Forall):
            for y in sorted(x for x, a in gamma.items() if a == Atom(f.sort)):
                found = self._chain(gamma, delta, AppNL(head, Var(y)),
                                    subst_formula(f.body, y, f.var), goal, d)
                if found is not None:
                    return found
            return None
        if isinstance(f, Lolli):
            for left, right in self._splits(delta, f.left):
                m = self.prove(gamma, left, f.left, d)
                if m is not None:
                    found = self._chain(gamma, right, AppLin(head, m), f.right, goal, d)
                    if found is not None:
                        return found
            return None
        if isinstance(f, Arrow):
            m = self.prove(gamma, [], f.left, d)
            return None if m is None else self._chain(gamma, delta, AppNL(head, m), f.right, goal, d)
        v = self.fresh("u")
        body = self.prove(gamma, delta + [(v, f)], goal, d)
        return None if body is None else linear_let(v, f, head, body)


def _demand(f):
    """Linear atoms a graph-shaped formula consumes, or None if it is not graph-shaped."""
    if isinstance(f, One):
        return Counter()
    if isinstance(f, Pred):
        return Counter({("pred", f.label): 1})
    if isinstance(f, RefTo):
        return Counter({("ref", f.sort): 1})
    if isinstance(f, Tensor):
        a, b = _demand(f.left), _demand(f.right)
        return None if a is None or b is None else a + b
    if isinstance(f, DynEx):
        inner = _demand(f.body)
        return None if inner is None else inner + Counter({("ref", f.sort): 1})
    return None


def _surplus(gamma, delta, goal):
    """True when ``delta`` certainly holds more of some atom than a graph-shaped
    ``goal`` can absorb and no implication around could consume the excess."""
    want = _demand(goal)
    if want is None:
        return False
    have = Counter()
    for _, f in delta:
        d = _demand(f)
        if d is not None:
            have += d
    if not any(have[k] > want[k] for k in have):
        return False
    eaten = set()
    for f in [goal, *gamma.values(), *(f for _, f in delta)]:
        _antecedents(f, eaten)
    return any(have[k] > want[k] and k not in eaten for k in have)


def _antecedents(f, out, negative=False):
    """Collect the atoms occurring in the antecedent of some implication."""
    if isinstance(f, Pred):
        if negative:
            out.add(("pred", f.label))
    elif isinstance(f, RefTo):
        if negative:
            out.add(("ref", f.sort))
    elif isinstance(f, DynEx):
        if negative:
            out.add(("ref", f.sort))
        _antecedents(f.body, out, negative)
    elif isinstance(f, (Lolli, Arrow)):
        _antecedents(f.left, out, True)
        _antecedents(f.right, out, negative)
    elif isinstance(f, Tensor):
        _antecedents(f.left, out, negative)
        _antecedents(f.right, out, negative)
    elif isinstance(f, (Forall, Bang)):
        _antecedents(f.body, out, negative)


def _supply(entries):
    out = Counter()
    for _, f in entries:
        if isinstance(f, Pred):
            out[("pred", f.label)] += 1
        elif isinstance(f, RefTo):
            out[("ref", f.sort)] += 1
        else:
            out[("other", repr(f))] += 1
    return out
