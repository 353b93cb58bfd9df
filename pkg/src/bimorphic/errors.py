"""Exception hierarchy shared across the package."""


class BimorphicError(Exception):
    pass


class ParseError(BimorphicError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


class UnknownConstant(BimorphicError, KeyError):
    def __init__(self, name: str):
        self.name = name
        BimorphicError.__init__(self, f"unknown constant {name!r}")

    def __str__(self) -> str:
        return self.args[0]


class CaptureViolation(BimorphicError):
    pass


class UnificationError(BimorphicError):
    """No unifier.  ``kind`` is ``"clash"`` or ``"occurs"``."""

    def __init__(self, kind: str, left, right):
        self.kind = kind
        self.left = left
        self.right = right
        what = "occurs check" if kind == "occurs" else "constructor clash"
        super().__init__(f"{what}: {left} = {right}")


class NoMatch(BimorphicError):
    pass


class NoSemiunifier(BimorphicError):
    """``kind`` is one of clash, occurs, cycle."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


class BudgetExceeded(BimorphicError):
    pass


class ModeError(BimorphicError, ValueError):
    pass


class InferFailure(BimorphicError):
    """Typing failure with a structured reason and the offending subterm.

    ``reason`` is one of unbound-variable, unification-clash, occurs,
    semiunification-failed, budget-exceeded.  ``path`` lists child indices
    from the root term down to the subterm.
    """

    def __init__(self, reason: str, path=(), term=None, detail: str = ""):
        self.reason = reason
        self.path = tuple(path)
        self.term = term
        self.detail = detail
        where = "/".join(map(str, self.path)) or "root"
        msg = f"{reason} at {where}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class RuleViolation(BimorphicError):
    def __init__(self, path, reason: str):
        self.path = tuple(path)
        self.reason = reason
        where = "/".join(map(str, self.path)) or "root"
        super().__init__(f"rule violation at {where}: {reason}")


class NotASolution(BimorphicError):
    pass


class PreconditionViolated(BimorphicError):
    pass


class ShapeMismatch(BimorphicError):
    pass
