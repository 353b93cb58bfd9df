"""Encoding two-inequation semi-unification into BRNI typability.

Semi-unification terms are built from variables ``a1, a2, ...`` and ``*``.
A term ``M`` becomes an expression ``~M`` over reserved variables ``z1,
z2, ...`` (products become ``pair``), and an instance ``{M1 <= N1, M2 <= N2}``
becomes ``e1 =. e2`` where each ``ei`` is a ``rec`` whose single recursive
call forces the type of ``~Ni`` to be an instance of the type of ``~Mi``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .derivation import Derivation, derive
from .errors import ParseError, PreconditionViolated, ShapeMismatch
from .inference import TypingProblem
from .parser import parse_type, print_type
from .semiunification import NoMatch, match_types, matches
from .substitution import IDENTITY, Subst, restrict
from .terms import App, Const, Expr, Lam, Let, Rec, Var, all_names, free_vars
from .types import Arrow, MonoType, Prod, TVar, TypeEnv, free_type_vars

_VAR = re.compile(r"a([1-9][0-9]*)$")


@dataclass(frozen=True)
class SVar:
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("semi-unification variables are numbered from 1")


@dataclass(frozen=True)
class SProd:
    left: "SUTerm"
    right: "SUTerm"


SUTerm = SVar | SProd


def embed(m: SUTerm) -> MonoType:
    if isinstance(m, SVar):
        return TVar(f"a{m.index}")
    return Prod(embed(m.left), embed(m.right))


def from_type(t: MonoType) -> SUTerm:
    if isinstance(t, TVar):
        hit = _VAR.match(t.name)
        if not hit:
            raise ValueError(f"{t.name} is not a semi-unification variable (a1, a2, ...)")
        return SVar(int(hit.group(1)))
    if isinstance(t, Prod):
        return SProd(from_type(t.left), from_type(t.right))
    raise ValueError(f"{print_type(t)} is not a semi-unification term")


def su_vars(*terms: SUTerm) -> list[int]:
    """Indices of variables, ascending."""
    out: set[int] = set()

    def walk(m):
        if isinstance(m, SVar):
            out.add(m.index)
        else:
            walk(m.left)
            walk(m.right)

    for m in terms:
        walk(m)
    return sorted(out)


def print_su(m: SUTerm) -> str:
    return print_type(embed(m), bare_vars=True)


@dataclass(frozen=True)
class SUPInstance:
    ineq1: tuple[SUTerm, SUTerm]
    ineq2: tuple[SUTerm, SUTerm]

    def terms(self) -> tuple[SUTerm, SUTerm, SUTerm, SUTerm]:
        return (*self.ineq1, *self.ineq2)

    def variables(self) -> list[int]:
        return su_vars(*self.terms())

    def __str__(self) -> str:
        return "\n".join(f"{print_su(m)} <= {print_su(n)}" for m, n in (self.ineq1, self.ineq2))


def parse_sup_instance(text: str) -> SUPInstance:
    """Two lines ``M <= N`` over ``a1, a2, ...`` and ``*``; ``--`` starts a comment."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        if "<=" not in line:
            raise ParseError("expected 'M <= N'", lineno, 1)
        left, right = line.split("<=", 1)
        try:
            pair = (from_type(parse_type(left, bare_vars=True)),
                    from_type(parse_type(right, bare_vars=True)))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 1) from None
        except ParseError as exc:
            raise ParseError(exc.message, lineno, exc.column) from None
        rows.append(pair)
    if len(rows) != 2:
        raise ParseError(f"expected exactly two inequations, found {len(rows)}")
    return SUPInstance(rows[0], rows[1])


def check_two(inst: SUPInstance, s: Subst) -> bool:
    """Is ``s`` a semiunifier of both inequations (each with its own witness)?"""
    return all(matches(s(embed(m)), s(embed(n))) for m, n in (inst.ineq1, inst.ineq2))


def witnesses(inst: SUPInstance, s: Subst) -> tuple[Subst, Subst]:
    (m1, n1), (m2, n2) = inst.ineq1, inst.ineq2
    return (
        match_types(s(embed(m1)), s(embed(n1))),
        match_types(s(embed(m2)), s(embed(n2))),
    )


# ---------------------------------------------------------------------------
# Term helpers


def _fresh_name(base: str, avoid: set[str]) -> str:
    name = base
    while name in avoid:
        name += "_"
    return name


def expr_subst(e: Expr, x: str, e1: Expr) -> Expr:
    """Capture-avoiding ``e[x := e1]``."""
    fv = free_vars(e1)

    def go(e: Expr) -> Expr:
        if isinstance(e, Var):
            return e1 if e.name == x else e
        if isinstance(e, Const):
            return e
        if isinstance(e, App):
            return App(go(e.fun), go(e.arg))
        if isinstance(e, Let):
            bound = go(e.bound)
            binder, body = _rebind(e.binder, e.body)
            return Let(binder, bound, body if binder == x else go(body))
        binder, body = _rebind(e.binder, e.body)
        if binder == x:
            return type(e)(binder, body)
        return type(e)(binder, go(body))

    def _rebind(binder: str, body: Expr) -> tuple[str, Expr]:
        if binder == x or binder not in fv or x not in free_vars(body):
            return binder, body
        new = _fresh_name(binder, fv | all_names(body) | {x})
        return new, expr_subst(body, binder, Var(new))

    return go(e)


def pair(a: Expr, b: Expr) -> Expr:
    return App(App(Const("pair"), a), b)


def fst(e: Expr) -> Expr:
    return App(Const("fst"), e)


def snd(e: Expr) -> Expr:
    return App(Const("snd"), e)


K = Lam("x", Lam("y", Var("x")))


def doteq(e1: Expr, e2: Expr) -> Expr:
    """``\\y. pair (y e1) (y e2)`` with ``y`` not free in either argument."""
    y = _fresh_name("y", free_vars(e1) | free_vars(e2))
    return Lam(y, pair(App(Var(y), e1), App(Var(y), e2)))


def z_name(i: int) -> str:
    return f"z{i}"


def y_name(i: int) -> str:
    return f"y{i}"


def tilde(m: SUTerm) -> Expr:
    if isinstance(m, SVar):
        return Var(z_name(m.index))
    return pair(tilde(m.left), tilde(m.right))


def _lams(names: Iterable[str], body: Expr) -> Expr:
    for n in reversed(list(names)):
        body = Lam(n, body)
    return body


def _apps(f: Expr, args: Iterable[Expr]) -> Expr:
    for a in args:
        f = App(f, a)
    return f


def _component(inst: SUPInstance, which: int) -> Expr:
    idx = inst.variables()
    m1, n1 = inst.ineq1
    m2, n2 = inst.ineq2
    proj, target = (fst, n1) if which == 1 else (snd, n2)
    call = proj(_apps(Var("f"), [Var(y_name(i)) for i in idx]))
    inner = _lams([y_name(i) for i in idx], doteq(call, tilde(target)))
    body = App(App(K, pair(tilde(m1), tilde(m2))), inner)
    return Rec("f", _lams([z_name(i) for i in idx], body))


def encode_sup(inst: SUPInstance) -> Expr:
    return doteq(_component(inst, 1), _component(inst, 2))


# ---------------------------------------------------------------------------
# Derivations


def _curried(args: list[MonoType], result: MonoType) -> MonoType:
    for a in reversed(args):
        result = Arrow(a, result)
    return result


def _rec_derivation(inst, which, env, s, r, u_args, m_type) -> Derivation:
    """``env |- e_which : u`` by recni with s1 = r restricted to FTV(u)."""
    rec = _component(inst, which)
    u = _curried(u_args, m_type)
    s1 = restrict(r, free_type_vars(u))
    f_env = env.extend("f", s1(u))
    body = derive(TypingProblem(f_env, rec.body, u), IDENTITY, mode="br")
    return Derivation("recni", env, rec, u, (body,), s1=s1)


def _check_pre(inst: SUPInstance, s: Subst, r1: Subst, r2: Subst):
    (m1, n1), (m2, n2) = inst.ineq1, inst.ineq2
    if r1(s(embed(m1))) != s(embed(n1)):
        raise PreconditionViolated("r1 does not map s(M1) to s(N1)")
    if r2(s(embed(m2))) != s(embed(n2)):
        raise PreconditionViolated("r2 does not map s(M2) to s(N2)")


def build_component_derivations(
    inst: SUPInstance, s: Subst, r1: Subst, r2: Subst
) -> tuple[Derivation, Derivation]:
    """Closed derivations ``|- e1 : u`` and ``|- e2 : u`` in the empty environment."""
    _check_pre(inst, s, r1, r2)
    u_args = [s(TVar(f"a{i}")) for i in inst.variables()]
    m_type = s(Prod(embed(inst.ineq1[0]), embed(inst.ineq2[0])))
    env = TypeEnv()
    return (
        _rec_derivation(inst, 1, env, s, r1, u_args, m_type),
        _rec_derivation(inst, 2, env, s, r2, u_args, m_type),
    )


def build_brni_derivation(inst: SUPInstance, s: Subst, r1: Subst, r2: Subst) -> Derivation:
    """Derivation of ``|- encode_sup(inst) : (u -> u) -> u * u`` from a semiunifier.

    ``u`` is ``s(a1) -> ... -> s(ak) -> s(M1 * M2)``; the two rec nodes are
    recni with ``s1`` taken from the witnesses ``r1`` and ``r2``.  Both rec
    nodes sit under the binder of the outer ``=.``, whose type mentions
    ``u``; the result is whatever the construction yields, and
    check_derivation decides whether it is valid.
    """
    _check_pre(inst, s, r1, r2)
    term = encode_sup(inst)
    assert isinstance(term, Lam)
    y = term.binder
    u_args = [s(TVar(f"a{i}")) for i in inst.variables()]
    m_type = s(Prod(embed(inst.ineq1[0]), embed(inst.ineq2[0])))
    u = _curried(u_args, m_type)
    yt = Arrow(u, u)
    env = TypeEnv({y: yt})
    d1 = _rec_derivation(inst, 1, env, s, r1, u_args, m_type)
    d2 = _rec_derivation(inst, 2, env, s, r2, u_args, m_type)
    pair_body = term.body
    assert isinstance(pair_body, App) and isinstance(pair_body.fun, App)
    y_e1, y_e2 = pair_body.fun.arg, pair_body.arg
    app1 = Derivation("arrow-E", env, y_e1, u, (Derivation("var", env, Var(y), yt), d1))
    app2 = Derivation("arrow-E", env, y_e2, u, (Derivation("var", env, Var(y), yt), d2))
    pair_inst = Subst({"a1": u, "a2": u})
    pair_con = Derivation("con", env, Const("pair"), Arrow(u, Arrow(u, Prod(u, u))), inst=pair_inst)
    half = Derivation("arrow-E", env, pair_body.fun, Arrow(u, Prod(u, u)), (pair_con, app1))
    full = Derivation("arrow-E", env, pair_body, Prod(u, u), (half, app2))
    return Derivation("arrow-I", TypeEnv(), term, Arrow(yt, Prod(u, u)), (full,))


def extract_semiunifier(d: Derivation) -> Subst:
    """Read ``s(ai)`` off the type given to ``zi`` under the first rec node."""
    rec = next((n for n in d.nodes() if n.rule in ("rec", "recni")), None)
    if rec is None:
        raise ShapeMismatch("derivation has no rec node")
    node = rec.premises[0]
    seen: dict[str, MonoType] = {}
    while node.rule == "arrow-I" and isinstance(node.expr, Lam) and node.expr.binder.startswith("z"):
        hit = re.fullmatch(r"z([1-9][0-9]*)", node.expr.binder)
        if not hit:
            break
        seen[f"a{hit.group(1)}"] = node.type.arg
        node = node.premises[0]
    if not seen:
        raise ShapeMismatch("rec body does not abstract over z1, z2, ...")
    return Subst(seen)


# ---------------------------------------------------------------------------
# Brute-force search for small instances


def su_terms(indices: list[int], depth: int) -> list[SUTerm]:
    """All semi-unification terms of depth <= ``depth`` over the given variables."""
    level: list[SUTerm] = [SVar(i) for i in indices]
    out = list(level)
    for _ in range(depth):
        level = [SProd(a, b) for a in out for b in out]
        out = list(dict.fromkeys([SVar(i) for i in indices] + level))
    return out


def oracle_sup(inst: SUPInstance, depth: int = 1) -> tuple[Subst, Subst, Subst] | None:
    """First ``(s, r1, r2)`` with images of depth <= ``depth``, or None."""
    idx = inst.variables()
    pool = [embed(m) for m in su_terms(idx, depth)]
    for images in itertools.product(pool, repeat=len(idx)):
        s = Subst({f"a{i}": t for i, t in zip(idx, images)})
        try:
            r1, r2 = witnesses(inst, s)
        except NoMatch:
            continue
        return s, r1, r2
    return None


def random_su_term(rng, indices: list[int], depth: int) -> SUTerm:
    if depth == 0 or rng.random() < 0.4:
        return SVar(rng.choice(indices))
    return SProd(random_su_term(rng, indices, depth - 1), random_su_term(rng, indices, depth - 1))


def random_instances(rng, count: int, nvars: int = 3, depth: int = 2) -> Iterator[SUPInstance]:
    indices = list(range(1, nvars + 1))
    for _ in range(count):
        yield SUPInstance(
            (random_su_term(rng, indices, depth), random_su_term(rng, indices, depth)),
            (random_su_term(rng, indices, depth), random_su_term(rng, indices, depth)),
        )
