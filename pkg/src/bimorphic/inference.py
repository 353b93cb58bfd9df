"""Type inference for bimorphic recursion.

``algo_E`` reduces a typing problem ``U |- e : u`` to a residual set of
equations ``E0`` and a partial solution ``s0``: for every unifier ``s`` of
``E0`` the judgment ``s s0(U) |- e : s s0(u)`` is derivable.  Each ``rec``
node is solved locally by single-inequation semi-unification, so the
residual never carries inequations.  The call tree is kept so that
derivations can be rebuilt afterwards (see ``derivation.derive``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .errors import (
    BudgetExceeded,
    InferFailure,
    ModeError,
    NoSemiunifier,
    UnificationError,
)
from .fresh import FreshSupply
from .semiunification import DEFAULT_BUDGET, EmittedSUP, SemiUnifProblem, semi_unify
from .substitution import IDENTITY, Subst, _apply_mono, apply_fresh, compose, renaming, restrict
from .terms import App, Const, Expr, Lam, Let, Rec, Var, contains_let, free_occurrence, free_vars
from .types import (
    Bool,
    ConstTable,
    Int,
    MonoType,
    Prod,
    TVar,
    TypeEnv,
    TypeScheme,
    canonical_rename,
    const_type,
    default_constants,
    free_type_vars,
    scheme,
    type_vars,
)
from .unification import unify

Equation = tuple[MonoType, MonoType]

MODES = ("br", "br-let", "mono")

_MODE_ALIASES = {
    "br": "br",
    "br-let": "br-let",
    "br+let": "br-let",
    "br_let": "br-let",
    "brlet": "br-let",
    "mono": "mono",
}

SENTINEL: Equation = (Bool, Int)


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode.lower()]
    except (KeyError, AttributeError):
        raise ModeError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}") from None


@dataclass(frozen=True)
class TypingProblem:
    env: TypeEnv
    expr: Expr
    goal: MonoType

    def __post_init__(self):
        if not isinstance(self.env, TypeEnv):
            object.__setattr__(self, "env", TypeEnv(self.env))

    def type_vars(self) -> list[str]:
        return type_vars([self.env, self.goal])


@dataclass(frozen=True)
class RecSolve:
    """One local semi-unification performed at a rec node."""

    binder: str
    path: tuple[int, ...]
    body_type: MonoType
    call_type: MonoType
    problem: SemiUnifProblem
    solution: Subst


@dataclass(frozen=True)
class Node:
    """A recorded call ``E(env |- expr : goal) = (equations, partial)``."""

    kind: str
    path: tuple[int, ...]
    env: TypeEnv
    expr: Expr
    goal: MonoType
    equations: tuple[Equation, ...]
    partial: Subst
    kids: tuple["Node", ...] = ()
    info: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class InferResult:
    residual: tuple[Equation, ...]
    partial: Subst
    trace: tuple[RecSolve, ...]
    tree: Node
    origins: tuple[tuple[int, ...], ...] = ()
    failures: tuple[InferFailure, ...] = ()

    @property
    def failed(self) -> bool:
        return bool(self.failures)


class _Session:
    def __init__(self, mode, fresh, constants, budget, sentinel):
        self.mode = mode
        self.fresh = fresh
        self.constants = constants
        self.budget = budget
        self.sentinel = sentinel
        self.trace: list[RecSolve] = []
        self.failures: list[InferFailure] = []

    def fail(self, reason, path, expr, detail, env, goal) -> Node:
        failure = InferFailure(reason, path, expr, detail)
        if not self.sentinel:
            raise failure
        self.failures.append(failure)
        return Node("fail", path, env, expr, goal, (SENTINEL,), IDENTITY, info={"failure": failure})

    def run(self, env: TypeEnv, e: Expr, u: MonoType, path: tuple[int, ...]) -> Node:
        if isinstance(e, Var):
            if e.name not in env:
                return self.fail("unbound-variable", path, e, f"{e.name} is not bound", env, u)
            bound = env[e.name]
            if isinstance(bound, TypeScheme):
                fresh = [self.fresh.name() for _ in bound.quantified]
                inst = _apply_mono(renaming(bound.quantified, fresh), bound.body)
                return Node("var-P", path, env, e, u, ((inst, u),), IDENTITY, info={"fresh": fresh})
            return Node("var", path, env, e, u, ((bound, u),), IDENTITY)

        if isinstance(e, Const):
            generic = const_type(e.name, self.constants)
            names = type_vars(generic)
            rho = renaming(names, [self.fresh.name() for _ in names])
            return Node("con", path, env, e, u, ((u, rho(generic)),), IDENTITY, info={"rho": rho})

        if isinstance(e, Lam):
            alpha, beta = self.fresh.var(), self.fresh.var()
            child = self.run(env.extend(e.binder, alpha), e.body, beta, path + (0,))
            s1 = child.partial
            eqs = child.equations + ((s1(_arrow(alpha, beta)), s1(u)),)
            return Node("lam", path, env, e, u, eqs, s1, (child,), {"alpha": alpha, "beta": beta})

        if isinstance(e, App):
            alpha = self.fresh.var()
            left = self.run(env, e.fun, _arrow(alpha, u), path + (0,))
            s1 = left.partial
            right = self.run(apply_fresh(s1, env, self.fresh), e.arg, s1(alpha), path + (1,))
            s2 = right.partial
            eqs = tuple(s2(eq) for eq in left.equations) + right.equations
            return Node("app", path, env, e, u, eqs, compose(s2, s1), (left, right), {"alpha": alpha})

        if isinstance(e, Rec):
            if self.mode == "mono":
                alpha = self.fresh.var()
                child = self.run(env.extend(e.binder, alpha), e.body, alpha, path + (0,))
                s1 = child.partial
                eqs = child.equations + ((s1(u), s1(alpha)),)
                return Node("rec-mono", path, env, e, u, eqs, s1, (child,), {"alpha": alpha})
            alpha, beta = self.fresh.var(), self.fresh.var()
            child = self.run(env.extend(e.binder, beta), e.body, alpha, path + (0,))
            s1 = child.partial
            # The product is built from the types of U itself and s1 is then
            # applied to the whole inequation, so reading the components from
            # s1(U) instead would give the same problem.
            vec = env_product(env)
            lhs = Prod(alpha, vec) if vec is not None else alpha
            rhs = Prod(beta, vec) if vec is not None else beta
            problem = SemiUnifProblem(child.equations, (s1(lhs), s1(rhs)))
            try:
                s2 = semi_unify(problem, self.fresh, self.budget)
            except NoSemiunifier as exc:
                return self.fail("semiunification-failed", path, e, str(exc), env, u)
            except BudgetExceeded as exc:
                raise InferFailure("budget-exceeded", path, e, str(exc)) from None
            s21 = compose(s2, s1)
            self.trace.append(RecSolve(e.binder, path, s21(alpha), s21(beta), problem, s2))
            info = {"alpha": alpha, "beta": beta, "s2": s2, "problem": problem}
            return Node("rec", path, env, e, u, ((s21(u), s21(alpha)),), s21, (child,), info)

        if isinstance(e, Let):
            if self.mode == "br":
                raise ModeError("let is not part of BR; use mode br-let")
            alpha = self.fresh.var()
            first = self.run(env, e.bound, alpha, path + (0,))
            s1 = first.partial
            try:
                s2 = unify(first.equations)
            except UnificationError as exc:
                reason = "occurs" if exc.kind == "occurs" else "unification-clash"
                return self.fail(reason, path + (0,), e.bound, str(exc), env, u)
            s21 = compose(s2, s1)
            bound_type = s21(alpha)
            env1 = apply_fresh(s21, env, self.fresh)
            env_vars = free_type_vars(env1)
            quantified = [b for b in type_vars(bound_type) if b not in env_vars]
            body_env = env1.extend(e.binder, scheme(quantified, bound_type))
            second = self.run(body_env, e.body, s21(u), path + (1,))
            s3 = second.partial
            info = {"alpha": alpha, "s2": s2, "quantified": quantified}
            return Node(
                "let", path, env, e, u, second.equations, compose(s3, s21), (first, second), info
            )

        raise TypeError(f"not a term: {e!r}")


def _arrow(a: MonoType, b: MonoType) -> MonoType:
    from .types import Arrow

    return Arrow(a, b)


def env_product(env: TypeEnv) -> MonoType | None:
    """``u1 * (u2 * ... * un)`` over the environment, or None when it is empty.

    A scheme contributes the product of its free type variables and is left
    out when it has none: only the free variables matter for keeping the
    witness fixed on FTV(U).
    """
    parts: list[MonoType] = []
    for t in env.values():
        if isinstance(t, TypeScheme):
            names = type_vars(t)
            if not names:
                continue
            t = _right_product([TVar(n) for n in names])
        parts.append(t)
    return _right_product(parts) if parts else None


def _right_product(parts: list[MonoType]) -> MonoType:
    out = parts[-1]
    for t in reversed(parts[:-1]):
        out = Prod(t, out)
    return out


def _check_mode(p: TypingProblem, mode: str) -> str:
    mode = normalize_mode(mode)
    if mode == "br":
        if contains_let(p.expr):
            raise ModeError("let is not part of BR; use mode br-let")
        if any(isinstance(t, TypeScheme) for t in p.env.values()):
            raise ModeError("BR environments hold mono types only")
    return mode


def new_supply(p: TypingProblem, prefix: str = "t") -> FreshSupply:
    return FreshSupply(prefix, avoid=p.type_vars())


def algo_E(
    p: TypingProblem,
    fresh: FreshSupply | None = None,
    mode: str = "br-let",
    constants: ConstTable | None = None,
    budget: int = DEFAULT_BUDGET,
    sentinel: bool = False,
) -> InferResult:
    """Run the inference algorithm on a typing problem.

    Failures raise InferFailure unless ``sentinel`` is set, in which case the
    failing node contributes the unsolvable equation ``bool = int`` and the
    failure is recorded in the result.
    """
    mode = _check_mode(p, mode)
    fresh = fresh if fresh is not None else new_supply(p)
    fresh.reserve(p.type_vars())
    session = _Session(mode, fresh, constants or default_constants(), budget, sentinel)
    root = session.run(p.env, p.expr, p.goal, ())
    origins = _origins(root)
    return InferResult(
        root.equations, root.partial, tuple(session.trace), root, origins, tuple(session.failures)
    )


def _origins(root: Node) -> tuple[tuple[int, ...], ...]:
    """Path of the node that introduced each residual equation."""

    def walk(node: Node) -> list[tuple[int, ...]]:
        if node.kind == "lam":
            return walk(node.kids[0]) + [node.path]
        if node.kind == "app":
            return walk(node.kids[0]) + walk(node.kids[1])
        if node.kind == "let":
            return walk(node.kids[1])
        if node.kind == "rec-mono":
            return walk(node.kids[0]) + [node.path]
        return [node.path] * len(node.equations)

    return tuple(walk(root))


def unify_residual(result: InferResult, expr: Expr | None = None) -> Subst:
    """Most general unifier of the residual; failures name the offending node."""
    try:
        return unify(result.residual)
    except UnificationError:
        pass
    # replay incrementally to find the first equation that breaks solvability
    s = IDENTITY
    for eq, path in zip(result.residual, result.origins):
        try:
            s = compose(unify([s(eq)]), s)
        except UnificationError as exc:
            reason = "occurs" if exc.kind == "occurs" else "unification-clash"
            sub = None
            if expr is not None:
                from .terms import subterm_at

                sub = subterm_at(expr, path)
            raise InferFailure(reason, path, sub, str(exc)) from None
    raise AssertionError("residual unification failed but every prefix is solvable")


@dataclass(frozen=True)
class Inference:
    """Everything the driver computed for one term."""

    problem: TypingProblem
    result: InferResult
    mgu: Subst
    solution: Subst
    type: MonoType

    @property
    def principal(self) -> MonoType:
        return canonical_rename(self.type)


def infer(
    e: Expr,
    mode: str = "br-let",
    constants: ConstTable | None = None,
    fresh: FreshSupply | None = None,
    budget: int = DEFAULT_BUDGET,
    env: TypeEnv | None = None,
) -> Inference:
    env = env if env is not None else TypeEnv()
    mode = normalize_mode(mode)
    if fresh is None:
        fresh = FreshSupply("t", avoid=type_vars(env))
    goal = fresh.var()
    p = TypingProblem(env, e, goal)
    table = constants or default_constants()
    unbound = sorted(free_vars(e) - set(env))
    if unbound:
        path = free_occurrence(e, unbound[0]) or ()
        raise InferFailure("unbound-variable", path, Var(unbound[0]), f"{unbound[0]} is not bound")
    result = algo_E(p, fresh, mode, table, budget)
    s = unify_residual(result, e)
    full = compose(s, result.partial)
    return Inference(p, result, s, restrict(full, p.type_vars()), full(goal))


def principal_type(
    e: Expr,
    mode: str = "br-let",
    constants: ConstTable | None = None,
    budget: int = DEFAULT_BUDGET,
) -> MonoType:
    """Principal type of a closed term, with canonical variable names."""
    return infer(e, mode, constants, budget=budget).principal


def solve_typing_problem(
    p: TypingProblem,
    mode: str = "br-let",
    constants: ConstTable | None = None,
    fresh: FreshSupply | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Subst:
    """Most general solution of ``p`` restricted to its type variables."""
    result = algo_E(p, fresh, mode, constants, budget)
    s = unify_residual(result, p.expr)
    return restrict(compose(s, result.partial), p.type_vars())


def typable(e: Expr, mode: str = "br-let", constants: ConstTable | None = None) -> bool:
    try:
        infer(e, mode, constants)
    except InferFailure:
        return False
    return True


# ---------------------------------------------------------------------------
# Diagnostic emitter


def emit_sup(
    p: TypingProblem,
    fresh: FreshSupply | None = None,
    constants: ConstTable | None = None,
) -> EmittedSUP:
    """The semi-unification problem read off a BR typing problem in one pass.

    Every rec node contributes two inequations, so the result is generally
    not solvable by the single-inequation solver; it is diagnostic output.
    """
    if contains_let(p.expr):
        raise ModeError("the emitter handles BR terms only")
    fresh = fresh if fresh is not None else new_supply(p)
    fresh.reserve(p.type_vars())
    table = constants or default_constants()
    eqs: list[Equation] = []
    ineqs: list[Equation] = []

    def go(env: TypeEnv, e: Expr, u: MonoType):
        if isinstance(e, Var):
            if e.name in env:
                eqs.append((env[e.name], u))
            else:
                eqs.append(SENTINEL)
        elif isinstance(e, Const):
            generic = const_type(e.name, table)
            names = type_vars(generic)
            eqs.append((u, renaming(names, [fresh.name() for _ in names])(generic)))
        elif isinstance(e, Lam):
            alpha, beta = fresh.var(), fresh.var()
            go(env.extend(e.binder, alpha), e.body, beta)
            eqs.append((_arrow(alpha, beta), u))
        elif isinstance(e, App):
            alpha = fresh.var()
            go(env, e.fun, _arrow(alpha, u))
            go(env, e.arg, alpha)
        elif isinstance(e, Rec):
            alpha, beta = fresh.var(), fresh.var()
            go(env.extend(e.binder, beta), e.body, alpha)
            vec = env_product(env)

            def wrap(t):
                return Prod(t, vec) if vec is not None else t

            ineqs.append((wrap(alpha), wrap(beta)))
            ineqs.append((wrap(alpha), wrap(u)))
        else:
            raise TypeError(f"not a term: {e!r}")

    go(p.env, p.expr, p.goal)
    return EmittedSUP(tuple(eqs), tuple(ineqs))


def describe(node: Node) -> dict[str, Any]:
    """Small summary of a call-tree node, for debugging output."""
    return {"kind": node.kind, "path": list(node.path), "equations": len(node.equations)}
