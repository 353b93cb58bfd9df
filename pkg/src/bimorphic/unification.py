"""First-order syntactic unification with occurs check."""

from __future__ import annotations

from typing import Iterable

from .errors import UnificationError
from .substitution import Subst, _apply_mono
from .types import MonoType, TVar, children, head, occurs

Equation = tuple[MonoType, MonoType]


def unify(equations: Iterable[Equation]) -> Subst:
    """Most general unifier of a set of equations.

    Robinson-style: equations are processed in order from a work list and
    every solved variable is substituted eagerly, so the result is
    idempotent and its domain lies within the variables of the problem.
    Raises UnificationError on a constructor clash or occurs-check failure.
    """
    work = list(equations)
    work.reverse()
    solved: dict[str, MonoType] = {}
    while work:
        left, right = work.pop()
        left = _apply_mono(solved, left)
        right = _apply_mono(solved, right)
        if left == right:
            continue
        if isinstance(right, TVar) and not isinstance(left, TVar):
            left, right = right, left
        if isinstance(left, TVar):
            if occurs(left.name, right):
                raise UnificationError("occurs", left, right)
            binding = {left.name: right}
            for k in solved:
                solved[k] = _apply_mono(binding, solved[k])
            solved[left.name] = right
            continue
        if head(left) != head(right):
            raise UnificationError("clash", left, right)
        # keep left-to-right processing order of the components
        work.extend(reversed(list(zip(children(left), children(right)))))
    return Subst(solved)


def is_unifier(s: Subst, equations: Iterable[Equation]) -> bool:
    return all(s(l) == s(r) for l, r in equations)
