"""Quantified intuitionistic linear logic: formulas, proof terms, checking, search."""
from .checker import (
    AdditiveMismatch, Checked, CheckError, Context, DuplicateUse, FreshnessViolation,
    LinearityError, NonlinearArgument, NotSynthesizable, ScopeError, Sequent, TypeMismatch,
    UnboundVariable, UniquenessViolation, UnusedResource, check, is_valid, synthesize,
    validate_context,
)
from .formulas import *  # noqa: F401,F403
from .formulas import alpha_eq, format_formula, free_vars, freshness, subst_formula
from .search import DEFAULT_DEPTH, SearchError, bounded_search, in_fragment
from .terms import *  # noqa: F401,F403
from .terms import format_term
