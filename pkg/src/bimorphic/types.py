"""Mono types, type schemes, type environments and the constants table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .errors import UnknownConstant


class MonoType:
    """Base class of the finite type trees."""

    __slots__ = ()

    def __str__(self) -> str:
        from .parser import print_type

        return print_type(self)


@dataclass(frozen=True, repr=False)
class TVar(MonoType):
    name: str

    def __repr__(self) -> str:
        return f"TVar({self.name!r})"


@dataclass(frozen=True, repr=False)
class TBase(MonoType):
    name: str  # "bool" or "int"

    def __repr__(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True, repr=False)
class Arrow(MonoType):
    arg: MonoType
    res: MonoType

    def __repr__(self) -> str:
        return f"Arrow({self.arg!r}, {self.res!r})"


@dataclass(frozen=True, repr=False)
class Prod(MonoType):
    left: MonoType
    right: MonoType

    def __repr__(self) -> str:
        return f"Prod({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class List(MonoType):
    elem: MonoType

    def __repr__(self) -> str:
        return f"List({self.elem!r})"


Bool = TBase("bool")
Int = TBase("int")


@dataclass(frozen=True)
class TypeScheme:
    """``forall quantified. body``; quantified names are pairwise distinct."""

    quantified: tuple[str, ...]
    body: MonoType

    def __post_init__(self):
        if len(set(self.quantified)) != len(self.quantified):
            raise ValueError(f"repeated quantified variable in {self.quantified}")

    def __str__(self) -> str:
        from .parser import print_type

        return print_type(self)


AnyType = Union[MonoType, TypeScheme]


def scheme(quantified: Iterable[str], body: MonoType) -> AnyType:
    """Build a scheme, collapsing the empty quantifier list to the mono type."""
    quantified = tuple(quantified)
    return TypeScheme(quantified, body) if quantified else body


def children(t: MonoType) -> tuple[MonoType, ...]:
    if isinstance(t, Arrow):
        return (t.arg, t.res)
    if isinstance(t, Prod):
        return (t.left, t.right)
    if isinstance(t, List):
        return (t.elem,)
    return ()


def head(t: MonoType) -> str:
    """Constructor symbol of a non-variable type: bool, int, ->, *, list."""
    if isinstance(t, TBase):
        return t.name
    if isinstance(t, Arrow):
        return "->"
    if isinstance(t, Prod):
        return "*"
    if isinstance(t, List):
        return "list"
    raise TypeError(f"type variable {t!r} has no head")


def rebuild(symbol: str, args: Iterable[MonoType]) -> MonoType:
    args = tuple(args)
    if symbol == "->":
        return Arrow(*args)
    if symbol == "*":
        return Prod(*args)
    if symbol == "list":
        return List(*args)
    if symbol in ("bool", "int"):
        return TBase(symbol)
    raise ValueError(f"unknown type constructor {symbol!r}")


ARITY = {"bool": 0, "int": 0, "->": 2, "*": 2, "list": 1}


def depth(t: MonoType) -> int:
    """Nesting depth of constructors; atoms have depth 0."""
    kids = children(t)
    return 1 + max(depth(k) for k in kids) if kids else 0


def size(t: MonoType) -> int:
    return 1 + sum(size(k) for k in children(t))


# ---------------------------------------------------------------------------
# Type environments


class TypeEnv(Mapping[str, AnyType]):
    """Immutable ordered map from term variables to types or schemes.

    Extending with a name already bound replaces the old binding, which
    moves to the end of the order.  Equality ignores order.
    """

    __slots__ = ("_items",)

    def __init__(self, bindings: Mapping[str, AnyType] | Iterable[tuple[str, AnyType]] = ()):
        items = dict(bindings.items() if isinstance(bindings, Mapping) else bindings)
        self._items = {k: _normalize(v) for k, v in items.items()}

    def __getitem__(self, name: str) -> AnyType:
        return self._items[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other) -> bool:
        if isinstance(other, TypeEnv):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == dict(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._items.items()))

    def __repr__(self) -> str:
        return f"TypeEnv({self._items!r})"

    def __str__(self) -> str:
        from .parser import print_env

        return print_env(self)

    def extend(self, name: str, t: AnyType) -> TypeEnv:
        items = {k: v for k, v in self._items.items() if k != name}
        items[name] = t
        return TypeEnv(items)

    def types(self) -> list[AnyType]:
        return list(self._items.values())


def _normalize(t: AnyType) -> AnyType:
    if isinstance(t, TypeScheme) and not t.quantified:
        return t.body
    if not isinstance(t, (MonoType, TypeScheme)):
        raise TypeError(f"not a type: {t!r}")
    return t


# ---------------------------------------------------------------------------
# Free type variables


def type_vars(t) -> list[str]:
    """Free type variables in first-occurrence, left-to-right order."""
    out: dict[str, None] = {}
    _collect(t, out, frozenset())
    return list(out)


def _collect(t, out: dict, bound: frozenset) -> None:
    if isinstance(t, TVar):
        if t.name not in bound:
            out.setdefault(t.name)
    elif isinstance(t, MonoType):
        for k in children(t):
            _collect(k, out, bound)
    elif isinstance(t, TypeScheme):
        _collect(t.body, out, bound | set(t.quantified))
    elif isinstance(t, TypeEnv):
        for v in t.values():
            _collect(v, out, bound)
    elif isinstance(t, tuple) and len(t) == 2 and all(isinstance(x, MonoType) for x in t):
        _collect(t[0], out, bound)
        _collect(t[1], out, bound)
    elif isinstance(t, (list, tuple)):
        for x in t:
            _collect(x, out, bound)
    else:
        raise TypeError(f"cannot take free type variables of {t!r}")


def free_type_vars(*ts) -> set[str]:
    """FTV of any mix of types, schemes, environments and equation lists."""
    out: dict[str, None] = {}
    for t in ts:
        _collect(t, out, frozenset())
    return set(out)


def occurs(name: str, t: MonoType) -> bool:
    if isinstance(t, TVar):
        return t.name == name
    return any(occurs(name, k) for k in children(t))


def canonical_names() -> Iterator[str]:
    """a, b, ..., z, a1, b1, ..., z1, a2, ..."""
    letters = "abcdefghijklmnopqrstuvwxyz"
    yield from letters
    n = 1
    while True:
        for c in letters:
            yield f"{c}{n}"
        n += 1


def canonical_rename(t: MonoType) -> MonoType:
    """Rename type variables to a, b, c, ... in order of first occurrence."""
    names = canonical_names()
    mapping = {v: TVar(next(names)) for v in type_vars(t)}
    return _rename(t, mapping)


def _rename(t: MonoType, mapping: dict[str, MonoType]) -> MonoType:
    if isinstance(t, TVar):
        return mapping.get(t.name, t)
    kids = children(t)
    if not kids:
        return t
    return rebuild(head(t), (_rename(k, mapping) for k in kids))


# ---------------------------------------------------------------------------
# Constants


def _builtin_constants() -> dict[str, MonoType]:
    from .parser import parse_type

    src = {
        "pair": "'a1 -> 'a2 -> 'a1 * 'a2",
        "fst": "'a1 * 'a2 -> 'a1",
        "snd": "'a1 * 'a2 -> 'a2",
        "nil": "'a list",
        "cons": "'a -> 'a list -> 'a list",
        "hd": "'a list -> 'a",
        "tl": "'a list -> 'a list",
        "null": "'a list -> bool",
        "ifc": "bool -> 'a -> 'a -> 'a",
    }
    return {name: parse_type(text) for name, text in src.items()}


class ConstTable(Mapping[str, MonoType]):
    """Generic types of constants; quantification over their variables is implicit.

    Nonnegative decimal literals are constants of type int.  Built-ins can be
    extended but never overridden.
    """

    def __init__(self, extra: Mapping[str, MonoType] | None = None):
        self._table = _builtin_constants()
        for name, t in (extra or {}).items():
            if name in self._table or name.isdigit():
                raise ValueError(f"built-in constant {name!r} cannot be redefined")
            self._table[name] = t

    def __getitem__(self, name: str) -> MonoType:
        if name.isdigit():
            return Int
        return self._table[name]

    def __contains__(self, name) -> bool:
        return isinstance(name, str) and (name.isdigit() or name in self._table)

    def __iter__(self):
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def extended(self, extra: Mapping[str, MonoType]) -> ConstTable:
        user = {k: v for k, v in self._table.items() if k not in BUILTIN_NAMES}
        user.update(extra)
        return ConstTable(user)


BUILTIN_NAMES = frozenset(
    ["pair", "fst", "snd", "nil", "cons", "hd", "tl", "null", "ifc"]
)

_DEFAULT: ConstTable | None = None


def default_constants() -> ConstTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = ConstTable()
    return _DEFAULT


def const_type(name: str, table: ConstTable | None = None) -> MonoType:
    table = table if table is not None else default_constants()
    if name not in table:
        raise UnknownConstant(name)
    return table[name]
