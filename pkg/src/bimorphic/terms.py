"""Abstract syntax of terms: lambda terms with constants, ``rec`` and ``let``."""

from __future__ import annotations

from dataclasses import dataclass


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        from .parser import print_expr

        return print_expr(self)


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Lam(Expr):
    binder: str
    body: Expr


@dataclass(frozen=True)
class App(Expr):
    fun: Expr
    arg: Expr


@dataclass(frozen=True)
class Rec(Expr):
    binder: str
    body: Expr


@dataclass(frozen=True)
class Let(Expr):
    binder: str
    bound: Expr
    body: Expr


def subterms(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Lam, Rec)):
        return (e.body,)
    if isinstance(e, App):
        return (e.fun, e.arg)
    if isinstance(e, Let):
        return (e.bound, e.body)
    return ()


def subterm_at(e: Expr, path) -> Expr:
    for i in path:
        e = subterms(e)[i]
    return e


def free_occurrence(e: Expr, name: str, path: tuple[int, ...] = ()) -> tuple[int, ...] | None:
    """Path of the leftmost free occurrence of ``name``, or None."""
    if isinstance(e, Var):
        return path if e.name == name else None
    for i, sub in enumerate(subterms(e)):
        binds = isinstance(e, (Lam, Rec)) or (isinstance(e, Let) and i == 1)
        if binds and e.binder == name:
            continue
        hit = free_occurrence(sub, name, path + (i,))
        if hit is not None:
            return hit
    return None


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Lam, Rec)):
        return free_vars(e.body) - {e.binder}
    if isinstance(e, App):
        return free_vars(e.fun) | free_vars(e.arg)
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.binder})
    raise TypeError(f"not a term: {e!r}")


def all_names(e: Expr) -> set[str]:
    """Every term-variable name occurring in ``e``, bound or free."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    out = set().union(*(all_names(k) for k in subterms(e)))
    if isinstance(e, (Lam, Rec, Let)):
        out.add(e.binder)
    return out


def contains_let(e: Expr) -> bool:
    return isinstance(e, Let) or any(contains_let(k) for k in subterms(e))


def count_rec(e: Expr) -> int:
    return int(isinstance(e, Rec)) + sum(count_rec(k) for k in subterms(e))


def alpha_equal(a: Expr, b: Expr) -> bool:
    """Alpha-equivalence, comparing bound variables by binding depth."""
    return _alpha(a, b, {}, {}, 0)


def _alpha(a: Expr, b: Expr, env_a: dict, env_b: dict, level: int) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        la, lb = env_a.get(a.name), env_b.get(b.name)
        if la is None and lb is None:
            return a.name == b.name
        return la == lb
    if isinstance(a, Const):
        return a.name == b.name
    if isinstance(a, (Lam, Rec)):
        return _alpha(
            a.body, b.body, {**env_a, a.binder: level}, {**env_b, b.binder: level}, level + 1
        )
    if isinstance(a, App):
        return _alpha(a.fun, b.fun, env_a, env_b, level) and _alpha(
            a.arg, b.arg, env_a, env_b, level
        )
    if isinstance(a, Let):
        return _alpha(a.bound, b.bound, env_a, env_b, level) and _alpha(
            a.body, b.body, {**env_a, a.binder: level}, {**env_b, b.binder: level}, level + 1
        )
    raise TypeError(f"not a term: {a!r}")
