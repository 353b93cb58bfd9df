from __future__ import annotations

from typing import Iterable

from .types import TVar


class FreshSupply:
    """Per-session source of fresh type-variable names ``<prefix><n>``.

    The counter only grows, and names listed in ``avoid`` (typically every
    variable free in the session's inputs) are skipped.
    """

    def __init__(self, prefix: str = "t", avoid: Iterable[str] = (), start: int = 1):
        if not prefix or not (prefix[0].isalpha() or prefix[0] == "_"):
            raise ValueError(f"fresh prefix must start with a letter: {prefix!r}")
        self.prefix = prefix
        self.counter = start
        self.avoid = set(avoid)

    def name(self) -> str:
        while True:
            candidate = f"{self.prefix}{self.counter}"
            self.counter += 1
            if candidate not in self.avoid:
                self.avoid.add(candidate)
                return candidate

    def var(self) -> TVar:
        return TVar(self.name())

    def reserve(self, names: Iterable[str]) -> None:
        self.avoid.update(names)
