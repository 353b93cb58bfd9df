"""Type inference for recursion with bimorphic types."""

from .brni import (
    SProd,
    SUPInstance,
    SVar,
    build_brni_derivation,
    build_component_derivations,
    doteq,
    encode_sup,
    expr_subst,
    extract_semiunifier,
    parse_sup_instance,
    tilde,
)
from .derivation import (
    Derivation,
    check_derivation,
    derive,
    is_valid,
    relabel_recni,
    subst_derivation,
)
from .errors import (
    BimorphicError,
    BudgetExceeded,
    InferFailure,
    NoSemiunifier,
    ParseError,
    RuleViolation,
    UnificationError,
)
from .inference import (
    TypingProblem,
    algo_E,
    emit_sup,
    infer,
    principal_type,
    solve_typing_problem,
    typable,
)
from .parser import parse_expr, parse_type, print_expr, print_type
from .semiunification import (
    SemiUnifProblem,
    check_semiunifier,
    match_types,
    oracle_search,
    semi_unify,
)
from .substitution import IDENTITY, Subst, apply, compose
from .types import TypeEnv, canonical_rename
from .unification import unify

__version__ = "0.1.0"

__all__ = [
    "SProd",
    "SUPInstance",
    "SVar",
    "build_brni_derivation",
    "build_component_derivations",
    "doteq",
    "encode_sup",
    "expr_subst",
    "extract_semiunifier",
    "parse_sup_instance",
    "tilde",
    "Derivation",
    "check_derivation",
    "derive",
    "is_valid",
    "relabel_recni",
    "subst_derivation",
    "BimorphicError",
    "BudgetExceeded",
    "InferFailure",
    "NoSemiunifier",
    "ParseError",
    "RuleViolation",
    "UnificationError",
    "TypingProblem",
    "algo_E",
    "emit_sup",
    "infer",
    "principal_type",
    "solve_typing_problem",
    "typable",
    "SemiUnifProblem",
    "check_semiunifier",
    "match_types",
    "oracle_search",
    "semi_unify",
    "parse_expr",
    "parse_type",
    "print_expr",
    "print_type",
    "IDENTITY",
    "Subst",
    "apply",
    "compose",
    "TypeEnv",
    "canonical_rename",
    "unify",
]
