"""Concrete syntax: tokenizer, recursive-descent parsers and printers.

Terms::

    e ::= \\x y ... . e | let x = e in e | if e then e else e
        | e e | x | c | n | (e) | (e, e) | rec{x = e}
        | [] | [e, ..., e] | [e . e]

Types::

    u ::= 'a | bool | int | u -> u | u * u | u list | (u)
    A ::= u | forall 'a 'b ... . u

``->`` and ``*`` associate to the right; postfix ``list`` binds tightest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import ParseError
from .terms import App, Const, Expr, Lam, Let, Rec, Var
from .types import (
    Arrow,
    Bool,
    Int,
    List,
    MonoType,
    Prod,
    TBase,
    TVar,
    TypeEnv,
    TypeScheme,
)

KEYWORDS = {"rec", "let", "in", "if", "then", "else", "forall"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\n)
  | (?P<comment>--[^\n]*)
  | (?P<tyvar>'[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>->|<=|:=|[\\.(){}\[\],=*:;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, tyvar, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            if m.group() == "\n":
                line += 1
                line_start = m.end()
        elif kind != "comment":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Stream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def at(self, text: str) -> bool:
        tok = self.peek
        return tok.text == text and tok.kind in ("sym", "ident")

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.peek.kind != kind or (kind == "ident" and self.peek.text in KEYWORDS):
            self.fail(f"expected {what}")
        return self.advance()

    def fail(self, message: str):
        tok = self.peek
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.col)

    def done(self):
        if self.peek.kind != "eof":
            self.fail("expected end of input")


# ---------------------------------------------------------------------------
# Types


def parse_type(text: str, bare_vars: bool = False) -> MonoType:
    """Parse a mono type.  With ``bare_vars``, unquoted identifiers are variables."""
    s = _Stream(text)
    t = _type(s, bare_vars)
    s.done()
    return t


def parse_scheme(text: str):
    s = _Stream(text)
    t = _scheme(s)
    s.done()
    return t


def _scheme(s: _Stream):
    if s.at("forall"):
        s.advance()
        names = []
        while s.peek.kind == "tyvar":
            names.append(s.advance().text[1:])
        if not names:
            s.fail("expected a type variable")
        s.expect(".")
        return TypeScheme(tuple(names), _type(s, False))
    return _type(s, False)


def _type(s: _Stream, bare: bool) -> MonoType:
    left = _prod(s, bare)
    if s.at("->"):
        s.advance()
        return Arrow(left, _type(s, bare))
    return left


def _prod(s: _Stream, bare: bool) -> MonoType:
    left = _postfix(s, bare)
    if s.at("*"):
        s.advance()
        return Prod(left, _prod(s, bare))
    return left


def _postfix(s: _Stream, bare: bool) -> MonoType:
    t = _type_atom(s, bare)
    while s.at("list"):
        s.advance()
        t = List(t)
    return t


def _type_atom(s: _Stream, bare: bool) -> MonoType:
    tok = s.peek
    if tok.kind == "tyvar":
        s.advance()
        return TVar(tok.text[1:])
    if tok.kind == "ident" and tok.text == "bool":
        s.advance()
        return Bool
    if tok.kind == "ident" and tok.text == "int":
        s.advance()
        return Int
    if bare and tok.kind == "ident" and tok.text not in KEYWORDS | {"list"}:
        s.advance()
        return TVar(tok.text)
    if s.at("("):
        s.advance()
        t = _type(s, bare)
        s.expect(")")
        return t
    s.fail("expected a type")


def _wrap(text: str, cond: bool) -> str:
    return f"({text})" if cond else text


def print_type(t, bare_vars: bool = False) -> str:
    if isinstance(t, TypeScheme):
        names = " ".join("'" + n for n in t.quantified)
        return f"forall {names}. {print_type(t.body)}"
    if isinstance(t, TVar):
        return t.name if bare_vars else "'" + t.name
    if isinstance(t, TBase):
        return t.name
    if isinstance(t, Arrow):
        left = print_type(t.arg, bare_vars)
        return f"{_wrap(left, isinstance(t.arg, Arrow))} -> {print_type(t.res, bare_vars)}"
    if isinstance(t, Prod):
        left = _wrap(print_type(t.left, bare_vars), isinstance(t.left, (Arrow, Prod)))
        right = _wrap(print_type(t.right, bare_vars), isinstance(t.right, Arrow))
        return f"{left} * {right}"
    if isinstance(t, List):
        inner = print_type(t.elem, bare_vars)
        return f"{_wrap(inner, isinstance(t.elem, (Arrow, Prod)))} list"
    raise TypeError(f"not a type: {t!r}")


def print_env(env: TypeEnv) -> str:
    return ", ".join(f"{x} : {print_type(t)}" for x, t in env.items())


def parse_env(text: str) -> TypeEnv:
    s = _Stream(text)
    items = []
    while s.peek.kind != "eof":
        name = s.expect_kind("ident", "a variable").text
        s.expect(":")
        items.append((name, _scheme(s)))
        if not s.at(","):
            break
        s.advance()
    s.done()
    return TypeEnv(items)


def parse_subst_text(text: str) -> dict[str, MonoType]:
    """Parse ``{ 'a := int, 'b := 'c list }`` into a plain mapping."""
    s = _Stream(text)
    s.expect("{")
    out: dict[str, MonoType] = {}
    while not s.at("}"):
        name = s.expect_kind("tyvar", "a type variable").text[1:]
        s.expect(":=")
        out[name] = _type(s, False)
        if not s.at(","):
            break
        s.advance()
    s.expect("}")
    s.done()
    return out


def parse_prelude(text: str) -> dict[str, MonoType]:
    """Lines ``name : type``; blank lines and ``--`` comments are skipped."""
    out: dict[str, MonoType] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        name = name.strip()
        if not sep or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name in KEYWORDS:
            raise ParseError("expected 'name : type'", lineno, 1)
        try:
            out[name] = parse_type(rest)
        except ParseError as exc:
            raise ParseError(exc.message, lineno, exc.column) from None
    return out


# ---------------------------------------------------------------------------
# Terms


def parse_expr(text: str, constants=None, bound=()) -> Expr:
    """Parse a term.

    Free identifiers that name constants become ``Const``; bound occurrences
    stay ``Var`` even when they shadow a constant name.  Names in ``bound``
    count as bound by an enclosing context.
    """
    from .types import default_constants

    consts = constants if constants is not None else default_constants()
    s = _Stream(text)
    e = _Parser(s, consts).expr(frozenset(bound))
    s.done()
    return e


class _Parser:
    def __init__(self, s: _Stream, consts: Mapping):
        self.s = s
        self.consts = consts

    def const(self, name: str) -> Const:
        return Const(name)

    def expr(self, bound: frozenset) -> Expr:
        s = self.s
        if s.at("\\"):
            s.advance()
            binders = [s.expect_kind("ident", "a binder").text]
            while s.peek.kind == "ident" and s.peek.text not in KEYWORDS:
                binders.append(s.advance().text)
            s.expect(".")
            body = self.expr(bound | set(binders))
            for b in reversed(binders):
                body = Lam(b, body)
            return body
        if s.at("let"):
            s.advance()
            name = s.expect_kind("ident", "a binder").text
            s.expect("=")
            bound_e = self.expr(bound)
            s.expect("in")
            return Let(name, bound_e, self.expr(bound | {name}))
        if s.at("if"):
            s.advance()
            cond = self.expr(bound)
            s.expect("then")
            then = self.expr(bound)
            s.expect("else")
            other = self.expr(bound)
            return App(App(App(self.const("ifc"), cond), then), other)
        return self.app(bound)

    def app(self, bound: frozenset) -> Expr:
        e = self.atom(bound)
        while True:
            if self.starts_atom():
                e = App(e, self.atom(bound))
            elif self.s.at("\\") or self.s.at("let") or self.s.at("if"):
                return App(e, self.expr(bound))
            else:
                return e

    def starts_atom(self) -> bool:
        tok = self.s.peek
        if tok.kind == "int":
            return True
        if tok.kind == "ident":
            return tok.text not in KEYWORDS or tok.text == "rec"
        return tok.kind == "sym" and tok.text in ("(", "[")

    def atom(self, bound: frozenset) -> Expr:
        s = self.s
        tok = s.peek
        if tok.kind == "int":
            s.advance()
            return self.const(str(int(tok.text)))
        if tok.kind == "ident" and tok.text == "rec":
            s.advance()
            s.expect("{")
            name = s.expect_kind("ident", "a binder").text
            s.expect("=")
            body = self.expr(bound | {name})
            s.expect("}")
            return Rec(name, body)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            s.advance()
            if tok.text not in bound and tok.text in self.consts:
                return self.const(tok.text)
            return Var(tok.text)
        if s.at("("):
            s.advance()
            e = self.expr(bound)
            if s.at(","):
                s.advance()
                second = self.expr(bound)
                s.expect(")")
                return App(App(self.const("pair"), e), second)
            s.expect(")")
            return e
        if s.at("["):
            s.advance()
            if s.at("]"):
                s.advance()
                return self.const("nil")
            first = self.expr(bound)
            if s.at("."):
                s.advance()
                rest = self.expr(bound)
                s.expect("]")
                return App(App(self.const("cons"), first), rest)
            items = [first]
            while s.at(","):
                s.advance()
                items.append(self.expr(bound))
            s.expect("]")
            out: Expr = self.const("nil")
            for item in reversed(items):
                out = App(App(self.const("cons"), item), out)
            return out
        s.fail("expected a term")


def print_expr(e: Expr) -> str:
    return _pe(e, 0)


def _pe(e: Expr, prec: int) -> str:
    # prec 0: anywhere, 1: function position, 2: argument position
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Rec):
        return f"rec{{{e.binder} = {_pe(e.body, 0)}}}"
    if isinstance(e, Lam):
        binders = []
        body: Expr = e
        while isinstance(body, Lam):
            binders.append(body.binder)
            body = body.body
        return _wrap(f"\\{' '.join(binders)}. {_pe(body, 0)}", prec > 0)
    if isinstance(e, Let):
        text = f"let {e.binder} = {_pe(e.bound, 0)} in {_pe(e.body, 0)}"
        return _wrap(text, prec > 0)
    if isinstance(e, App):
        return _wrap(f"{_pe(e.fun, 1)} {_pe(e.arg, 2)}", prec > 1)
    raise TypeError(f"not a term: {e!r}")
