"""Substitutions from type variables to mono types."""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

from .errors import CaptureViolation
from .types import (
    MonoType,
    TVar,
    TypeEnv,
    TypeScheme,
    children,
    free_type_vars,
    head,
    rebuild,
)


class Subst(Mapping[str, MonoType]):
    """A finite substitution.  Identity bindings are never stored, so the
    stored keys are exactly ``Dom(s)``."""

    __slots__ = ("_map",)

    def __init__(self, mapping: Mapping[str, MonoType] | Iterable[tuple[str, MonoType]] = ()):
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        self._map = {k: v for k, v in items if v != TVar(k)}

    def __getitem__(self, name: str) -> MonoType:
        return self._map[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __eq__(self, other) -> bool:
        if isinstance(other, Subst):
            return self._map == other._map
        if isinstance(other, Mapping):
            return self == Subst(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        return f"Subst({self._map!r})"

    def __str__(self) -> str:
        return print_subst(self)

    def __call__(self, t):
        return apply(self, t)

    @property
    def domain(self) -> set[str]:
        return set(self._map)

    def image(self, name: str) -> MonoType:
        return self._map.get(name, TVar(name))

    def range_vars(self) -> set[str]:
        return free_type_vars(list(self._map.values()))


IDENTITY = Subst()


def apply(s: Mapping[str, MonoType], t):
    """Apply ``s`` homomorphically to a type, scheme, environment or equation list.

    Quantified variables of a scheme are left alone; if a free variable of the
    scheme would be mapped onto a term mentioning one of them, the caller must
    rename first and CaptureViolation is raised.
    """
    if not s:
        return t
    if isinstance(t, MonoType):
        return _apply_mono(s, t)
    if isinstance(t, TypeScheme):
        bound = set(t.quantified)
        inner = {k: v for k, v in s.items() if k not in bound}
        for name in free_type_vars(t):
            if name in inner and free_type_vars(inner[name]) & bound:
                raise CaptureViolation(
                    f"applying substitution to {t} would capture {sorted(bound)}"
                )
        return TypeScheme(t.quantified, _apply_mono(inner, t.body))
    if isinstance(t, TypeEnv):
        return TypeEnv((x, apply(s, v)) for x, v in t.items())
    if isinstance(t, tuple) and len(t) == 2 and isinstance(t[0], MonoType):
        return (_apply_mono(s, t[0]), _apply_mono(s, t[1]))
    if isinstance(t, list):
        return [apply(s, x) for x in t]
    raise TypeError(f"cannot apply a substitution to {t!r}")


def _apply_mono(s: Mapping[str, MonoType], t: MonoType) -> MonoType:
    if isinstance(t, TVar):
        return s.get(t.name, t)
    kids = children(t)
    if not kids:
        return t
    return rebuild(head(t), (_apply_mono(s, k) for k in kids))


def compose(s1: Mapping[str, MonoType], s2: Mapping[str, MonoType]) -> Subst:
    """``s1 s2``: first ``s2``, then ``s1``."""
    out = {k: _apply_mono(s1, v) for k, v in s2.items()}
    for k, v in s1.items():
        if k not in s2:
            out[k] = v
    return Subst(out)


def restrict(s: Mapping[str, MonoType], names: Iterable[str]) -> Subst:
    keep = set(names)
    return Subst((k, v) for k, v in s.items() if k in keep)


def update(s: Mapping[str, MonoType], name: str, t: MonoType) -> Subst:
    out = dict(s)
    out[name] = t
    return Subst(out)


def eq_on(s1: Mapping[str, MonoType], s2: Mapping[str, MonoType], names: Iterable[str]) -> bool:
    return all(s1.get(n, TVar(n)) == s2.get(n, TVar(n)) for n in names)


def print_subst(s: Mapping[str, MonoType]) -> str:
    from .parser import print_type

    if not s:
        return "{ }"
    body = ", ".join(f"'{k} := {print_type(s[k])}" for k in sorted(s))
    return "{ " + body + " }"


def parse_subst(text: str) -> Subst:
    from .parser import parse_subst_text

    return Subst(parse_subst_text(text))


def renaming(old: Iterable[str], new: Iterable[str]) -> Subst:
    return Subst({o: TVar(n) for o, n in zip(old, new)})


def apply_fresh(s: Mapping[str, MonoType], t, fresh):
    """Like apply, but renames quantified variables of schemes that would capture.

    ``fresh`` supplies the new bound names.
    """
    if isinstance(t, TypeScheme):
        bound = set(t.quantified)
        free = free_type_vars(t)
        hit = any(
            n in s and free_type_vars(s[n]) & bound for n in free if n not in bound
        )
        if hit:
            new = [fresh.name() for _ in t.quantified]
            body = _apply_mono(renaming(t.quantified, new), t.body)
            t = TypeScheme(tuple(new), body)
        return apply(s, t)
    if isinstance(t, TypeEnv):
        return TypeEnv((x, apply_fresh(s, v, fresh)) for x, v in t.items())
    return apply(s, t)
