"""Explicit typing derivations: checking, instantiation and reconstruction.

Rules carry the substitutions that the inference rules only quantify over
(``s1``/``s2`` at rec, ``s1`` at recni, the instantiation at con and var-P),
so checking is a purely local comparison at every node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

from .errors import BimorphicError, ModeError, NoMatch, NotASolution, PreconditionViolated, RuleViolation
from .fresh import FreshSupply
from .inference import Node, TypingProblem, algo_E, unify_residual
from .parser import parse_env, parse_expr, parse_subst_text, parse_type, print_env, print_expr, print_type
from .semiunification import DEFAULT_BUDGET, match_all, match_types
from .substitution import IDENTITY, Subst, apply_fresh, compose, print_subst, restrict
from .terms import App, Const, Expr, Lam, Let, Rec, Var
from .types import (
    Arrow,
    ConstTable,
    MonoType,
    TVar,
    TypeEnv,
    TypeScheme,
    const_type,
    default_constants,
    free_type_vars,
    scheme,
    type_vars,
)

RULES = ("var", "con", "arrow-I", "arrow-E", "rec", "recni", "var-P", "let")
ARITY = {"var": 0, "con": 0, "var-P": 0, "arrow-I": 1, "rec": 1, "recni": 1, "arrow-E": 2, "let": 2}
SYSTEMS = ("br", "br-let", "brni")

_SYSTEM_ALIASES = {"br": "br", "br-let": "br-let", "br+let": "br-let", "brni": "brni", "mono": "br"}


def normalize_system(system: str) -> str:
    try:
        return _SYSTEM_ALIASES[system.lower()]
    except (KeyError, AttributeError):
        raise ModeError(f"unknown system {system!r}; expected one of {', '.join(SYSTEMS)}") from None


@dataclass(frozen=True)
class Derivation:
    rule: str
    env: TypeEnv
    expr: Expr
    type: MonoType
    premises: tuple["Derivation", ...] = ()
    s1: Subst | None = None
    s2: Subst | None = None
    inst: Subst | None = None
    quantified: tuple[str, ...] = field(default=())

    @property
    def judgment(self) -> TypingProblem:
        return TypingProblem(self.env, self.expr, self.type)

    def nodes(self) -> Iterable["Derivation"]:
        yield self
        for p in self.premises:
            yield from p.nodes()

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def __str__(self) -> str:
        return render(self)


# ---------------------------------------------------------------------------
# Checking


def check_derivation(
    d: Derivation, system: str = "br", constants: ConstTable | None = None
) -> bool:
    """Validate every node; returns True or raises RuleViolation with the node path."""
    system = normalize_system(system)
    table = constants or default_constants()
    _check(d, system, table, ())
    return True


def is_valid(d: Derivation, system: str = "br", constants: ConstTable | None = None) -> bool:
    try:
        return check_derivation(d, system, constants)
    except RuleViolation:
        return False


def _check(d: Derivation, system: str, table: ConstTable, path: tuple[int, ...]):
    def bad(reason: str):
        raise RuleViolation(path, f"{d.rule}: {reason}")

    if d.rule not in RULES:
        bad("unknown rule")
    if len(d.premises) != ARITY[d.rule]:
        bad(f"expects {ARITY[d.rule]} premises, found {len(d.premises)}")
    if system != "br-let":
        if d.rule in ("let", "var-P"):
            bad(f"rule not available in {system.upper()}")
        if any(isinstance(t, TypeScheme) for t in d.env.values()):
            bad("environment holds a type scheme")
    if d.rule == "rec" and system == "brni":
        bad("BRNI replaces rec by recni")
    if d.rule == "recni" and system != "brni":
        bad("recni belongs to BRNI only")

    e, u, env = d.expr, d.type, d.env

    if d.rule == "var":
        if not isinstance(e, Var):
            bad("term is not a variable")
        if e.name not in env:
            bad(f"{e.name} is not in the environment")
        if isinstance(env[e.name], TypeScheme):
            bad(f"{e.name} has a scheme; use var-P")
        if env[e.name] != u:
            bad(f"environment gives {print_type(env[e.name])}, judgment says {print_type(u)}")
    elif d.rule == "var-P":
        if not isinstance(e, Var):
            bad("term is not a variable")
        if e.name not in env:
            bad(f"{e.name} is not in the environment")
        sch = env[e.name]
        quantified, body = (sch.quantified, sch.body) if isinstance(sch, TypeScheme) else ((), sch)
        inst = d.inst or IDENTITY
        if not inst.domain <= set(quantified):
            bad(f"instantiation moves {sorted(inst.domain - set(quantified))}, not quantified")
        if inst(body) != u:
            bad(f"instance {print_type(inst(body))} differs from {print_type(u)}")
    elif d.rule == "con":
        if not isinstance(e, Const):
            bad("term is not a constant")
        if e.name not in table:
            bad(f"unknown constant {e.name}")
        generic = const_type(e.name, table)
        inst = d.inst or IDENTITY
        if inst(generic) != u:
            bad(f"instance {print_type(inst(generic))} of {print_type(generic)} differs from {print_type(u)}")
    elif d.rule == "arrow-I":
        if not isinstance(e, Lam):
            bad("term is not an abstraction")
        if not isinstance(u, Arrow):
            bad("type is not an arrow")
        (p,) = d.premises
        _same(bad, p, env.extend(e.binder, u.arg), e.body, u.res)
    elif d.rule == "arrow-E":
        if not isinstance(e, App):
            bad("term is not an application")
        p1, p2 = d.premises
        if not isinstance(p1.type, Arrow):
            bad("function premise does not have an arrow type")
        _same(bad, p1, env, e.fun, Arrow(p1.type.arg, u))
        _same(bad, p2, env, e.arg, p1.type.arg)
    elif d.rule in ("rec", "recni"):
        if not isinstance(e, Rec):
            bad("term is not a rec")
        (p,) = d.premises
        body_type = p.type
        s1 = d.s1 or IDENTITY
        s2 = d.s2 or IDENTITY
        local = free_type_vars(body_type) - free_type_vars(env)
        if not s1.domain <= local:
            bad(f"Dom(s1) = {sorted(s1.domain)} is not within the local variables {sorted(local)}")
        if d.rule == "rec":
            if not s2.domain <= local:
                bad(f"Dom(s2) = {sorted(s2.domain)} is not within the local variables {sorted(local)}")
            expected = s2(body_type)
        else:
            if d.s2 is not None and d.s2:
                bad("recni carries no s2")
            expected = body_type
        if expected != u:
            bad(f"conclusion {print_type(u)} differs from {print_type(expected)}")
        _same(bad, p, env.extend(e.binder, s1(body_type)), e.body, body_type)
    elif d.rule == "let":
        if not isinstance(e, Let):
            bad("term is not a let")
        p1, p2 = d.premises
        q = tuple(d.quantified)
        if len(set(q)) != len(q):
            bad("repeated quantified variable")
        allowed = free_type_vars(p1.type) - free_type_vars(env)
        if not set(q) <= allowed:
            bad(f"cannot generalize {sorted(set(q) - allowed)}")
        _same(bad, p1, env, e.bound, p1.type)
        _same(bad, p2, env.extend(e.binder, scheme(q, p1.type)), e.body, u)

    for i, p in enumerate(d.premises):
        _check(p, system, table, path + (i,))


def _same(bad, p: Derivation, env: TypeEnv, e: Expr, u: MonoType):
    if p.expr != e:
        bad(f"premise is about {print_expr(p.expr)}, expected {print_expr(e)}")
    if p.env != env:
        bad(f"premise environment {print_env(p.env)} should be {print_env(env)}")
    if p.type != u:
        bad(f"premise type {print_type(p.type)} should be {print_type(u)}")


def relabel_recni(d: Derivation) -> Derivation:
    """Turn every rec node into recni, keeping judgments and dropping s2."""
    premises = tuple(relabel_recni(p) for p in d.premises)
    if d.rule == "rec":
        return replace(d, rule="recni", s2=None, premises=premises)
    return replace(d, premises=premises)


# ---------------------------------------------------------------------------
# Instantiation


def _supply_for(d: Derivation, s: Subst, prefix: str = "r") -> FreshSupply:
    names: set[str] = set()
    for n in d.nodes():
        names |= free_type_vars(n.env, n.type)
        for sub in (n.s1, n.s2, n.inst):
            if sub:
                names |= sub.domain | sub.range_vars()
        names |= set(n.quantified)
        for t in n.env.values():
            if isinstance(t, TypeScheme):
                names |= set(t.quantified)
    names |= s.domain | s.range_vars()
    return FreshSupply(prefix, avoid=names)


def subst_derivation(
    d: Derivation,
    s: Subst,
    constants: ConstTable | None = None,
    fresh: FreshSupply | None = None,
) -> Derivation:
    """A derivation of ``s(U) |- e : s(u)`` from one of ``U |- e : u``.

    Local variables of every rec and let node are renamed apart first, then
    the node substitutions are rebuilt so that the side conditions hold
    again.  Only BR and BR+let derivations qualify.
    """
    if any(n.rule == "recni" for n in d.nodes()):
        raise PreconditionViolated("BRNI derivations are not closed under instantiation")
    s = Subst(s)
    fresh = fresh or _supply_for(d, s)
    table = constants or default_constants()
    return _sub(d, s, apply_fresh(s, d.env, fresh), fresh, table)


def _apart(names: list[str], t: Subst, env: TypeEnv, fresh: FreshSupply) -> list[str]:
    """New names for local variables: kept unless ``t`` moves them or ``env`` mentions them."""
    taken = free_type_vars(env) | t.domain
    return [fresh.name() if n in taken else n for n in names]


def _override(t: Subst, old: list[str], new: list[str]) -> Subst:
    out = dict(t)
    for o, n in zip(old, new):
        out[o] = TVar(n)
    return Subst(out)


def _sub(d: Derivation, t: Subst, env: TypeEnv, fresh: FreshSupply, table) -> Derivation:
    e = d.expr
    if d.rule == "var":
        return Derivation("var", env, e, t(d.type))
    if d.rule == "var-P":
        u = t(d.type)
        sch = env[e.name]
        body = sch.body if isinstance(sch, TypeScheme) else sch
        return Derivation("var-P", env, e, u, inst=match_types(body, u))
    if d.rule == "con":
        u = t(d.type)
        return Derivation("con", env, e, u, inst=match_types(const_type(e.name, table), u))
    if d.rule == "arrow-I":
        (p,) = d.premises
        u = t(d.type)
        premise = _sub(p, t, env.extend(e.binder, u.arg), fresh, table)
        return Derivation("arrow-I", env, e, u, (premise,))
    if d.rule == "arrow-E":
        p1, p2 = d.premises
        return Derivation(
            "arrow-E", env, e, t(d.type),
            (_sub(p1, t, env, fresh, table), _sub(p2, t, env, fresh, table)),
        )
    if d.rule == "rec":
        (p,) = d.premises
        body_type = p.type
        env_vars = free_type_vars(d.env)
        local = [a for a in type_vars(body_type) if a not in env_vars]
        renamed = _apart(local, t, env, fresh)
        t_in = _override(t, local, renamed)
        s1 = d.s1 or IDENTITY
        s2 = d.s2 or IDENTITY
        new_s1 = Subst({n: t_in(s1.image(a)) for a, n in zip(local, renamed)})
        new_s2 = Subst({n: t(s2.image(a)) for a, n in zip(local, renamed)})
        new_body = t_in(body_type)
        premise = _sub(p, t_in, env.extend(e.binder, new_s1(new_body)), fresh, table)
        out = Derivation("rec", env, e, new_s2(new_body), (premise,), s1=new_s1, s2=new_s2)
        assert out.type == t(d.type), "instantiated rec conclusion drifted"
        return out
    if d.rule == "let":
        p1, p2 = d.premises
        q = list(d.quantified)
        renamed = _apart(q, t, env, fresh)
        t_in = _override(t, q, renamed)
        first = _sub(p1, t_in, env, fresh, table)
        body_env = env.extend(e.binder, scheme(renamed, first.type))
        second = _sub(p2, t, body_env, fresh, table)
        return Derivation("let", env, e, second.type, (first, second), quantified=tuple(renamed))
    raise PreconditionViolated(f"cannot instantiate a {d.rule} node")


# ---------------------------------------------------------------------------
# Reconstruction from inference


def derive(
    p: TypingProblem,
    solution: Subst | None = None,
    mode: str = "br-let",
    constants: ConstTable | None = None,
    fresh: FreshSupply | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Derivation:
    """Build a derivation of ``solution(U) |- e : solution(u)``.

    Without ``solution`` the most general one found by inference is used.
    A substitution that is not a solution raises NotASolution.
    """
    table = constants or default_constants()
    fresh = fresh or FreshSupply("t", avoid=p.type_vars())
    result = algo_E(p, fresh, mode, table, budget)
    mgu = unify_residual(result, p.expr)
    general = compose(mgu, result.partial)
    builder = _Builder(fresh, table)
    d = builder.build(result.tree, mgu, apply_fresh(general, p.env, fresh))
    if solution is None:
        return d
    names = p.type_vars()
    try:
        r = match_all([(general.image(n), Subst(solution).image(n)) for n in names])
    except NoMatch:
        raise NotASolution(f"{solution} does not solve the typing problem") from None
    return _sub(d, r, apply_fresh(Subst(solution), p.env, fresh), fresh, table)


class _Builder:
    def __init__(self, fresh: FreshSupply, table: ConstTable):
        self.fresh = fresh
        self.table = table

    def build(self, node: Node, s: Subst, env: TypeEnv) -> Derivation:
        """Derivation of ``s s0(U) |- e : s s0(u)`` for a unifier ``s`` of the node's equations.

        ``env`` is ``s s0(U)`` as seen by the caller.
        """
        e = node.expr
        kind = node.kind
        if kind == "var":
            return Derivation("var", env, e, s(node.goal))
        if kind == "var-P":
            u = s(node.goal)
            sch = env[e.name]
            body = sch.body if isinstance(sch, TypeScheme) else sch
            return Derivation("var-P", env, e, u, inst=match_types(body, u))
        if kind == "con":
            u = s(node.goal)
            return Derivation("con", env, e, u, inst=match_types(const_type(e.name, self.table), u))
        if kind == "lam":
            (child,) = node.kids
            t = compose(s, child.partial)
            alpha = node.info["alpha"]
            premise = self.build(child, s, env.extend(e.binder, t(alpha)))
            return Derivation("arrow-I", env, e, t(node.goal), (premise,))
        if kind == "app":
            left, right = node.kids
            first = self.build(left, compose(s, right.partial), env)
            second = self.build(right, s, env)
            return Derivation("arrow-E", env, e, second_type(first), (first, second))
        if kind == "rec-mono":
            (child,) = node.kids
            t = compose(s, child.partial)
            alpha = node.info["alpha"]
            premise = self.build(child, s, env.extend(e.binder, t(alpha)))
            return Derivation("rec", env, e, premise.type, (premise,), s1=IDENTITY, s2=IDENTITY)
        if kind == "rec":
            (child,) = node.kids
            s2 = node.info["s2"]
            s21 = compose(s2, child.partial)
            alpha, beta = node.info["alpha"], node.info["beta"]
            inner_env = apply_fresh(s21, node.env, self.fresh)
            premise = self.build(child, s2, inner_env.extend(e.binder, s21(beta)))
            lhs, rhs = node.info["problem"].inequation
            witness = match_types(s2(lhs), s2(rhs))
            body_type = s21(alpha)
            local = free_type_vars(body_type) - free_type_vars(inner_env)
            rec = Derivation(
                "rec", inner_env, e, body_type, (premise,), s1=restrict(witness, local), s2=IDENTITY
            )
            return _sub(rec, s, env, self.fresh, self.table)
        if kind == "let":
            first_node, second_node = node.kids
            s2 = node.info["s2"]
            quantified = node.info["quantified"]
            s21 = compose(s2, first_node.partial)
            first = self.build(first_node, s2, apply_fresh(s21, node.env, self.fresh))
            outer = compose(s, second_node.partial)
            renamed = _apart(quantified, outer, env, self.fresh)
            first = _sub(first, _override(outer, quantified, renamed), env, self.fresh, self.table)
            body_env = env.extend(e.binder, scheme(renamed, first.type))
            second = self.build(second_node, s, body_env)
            return Derivation(
                "let", env, e, second.type, (first, second), quantified=tuple(renamed)
            )
        raise NotASolution(f"no derivation through a failed {e!s} node")


def second_type(fun: Derivation) -> MonoType:
    assert isinstance(fun.type, Arrow)
    return fun.type.res


def canonicalize_derivation(d: Derivation) -> Derivation:
    """Rename all type variables injectively to a, b, c, ... in first-occurrence order."""
    from .types import canonical_names

    order: dict[str, None] = {}
    for n in d.nodes():
        for name in type_vars([n.env, n.type]):
            order.setdefault(name)
        for t in n.env.values():
            if isinstance(t, TypeScheme):
                for q in t.quantified:
                    order.setdefault(q)
        for q in n.quantified:
            order.setdefault(q)
        for sub in (n.s1, n.s2, n.inst):
            if sub:
                for k in sub if sub is not n.inst or n.rule != "con" else ():
                    order.setdefault(k)
                for name in type_vars(list(sub.values())):
                    order.setdefault(name)
    gen = canonical_names()
    names = {old: next(gen) for old in order}
    return _rename_derivation(d, names)


def _rename_derivation(d: Derivation, names: dict[str, str]) -> Derivation:
    ren = Subst({k: TVar(v) for k, v in names.items()})

    def rt(t):
        if isinstance(t, TypeScheme):
            return TypeScheme(tuple(names.get(q, q) for q in t.quantified), ren(t.body))
        return ren(t)

    def rs(s: Subst | None, keep_keys: bool = False):
        if s is None:
            return None
        return Subst({(k if keep_keys else names.get(k, k)): ren(v) for k, v in s.items()})

    return Derivation(
        d.rule,
        TypeEnv((x, rt(t)) for x, t in d.env.items()),
        d.expr,
        ren(d.type),
        tuple(_rename_derivation(p, names) for p in d.premises),
        rs(d.s1),
        rs(d.s2),
        # a constant's instantiation is keyed by the constant table's own names
        rs(d.inst, keep_keys=d.rule == "con"),
        tuple(names.get(q, q) for q in d.quantified),
    )


# ---------------------------------------------------------------------------
# Serialization


def to_data(d: Derivation) -> dict[str, Any]:
    out: dict[str, Any] = {
        "rule": d.rule,
        "env": print_env(d.env),
        "term": print_expr(d.expr),
        "type": print_type(d.type),
    }
    if d.rule == "rec":
        out["s1"] = print_subst(d.s1 or IDENTITY)
        out["s2"] = print_subst(d.s2 or IDENTITY)
    elif d.rule == "recni":
        out["s1"] = print_subst(d.s1 or IDENTITY)
    elif d.rule in ("con", "var-P"):
        out["inst"] = print_subst(d.inst or IDENTITY)
    elif d.rule == "let":
        out["quantified"] = list(d.quantified)
    out["premises"] = [to_data(p) for p in d.premises]
    return out


def to_json(d: Derivation, indent: int | None = 2) -> str:
    return json.dumps(to_data(d), indent=indent)


def from_data(obj: dict[str, Any], constants: ConstTable | None = None) -> Derivation:
    try:
        rule = obj["rule"]
        env = parse_env(obj.get("env", ""))
        expr = parse_expr(obj["term"], constants, bound=tuple(env))
        u = parse_type(obj["type"])
        premises = tuple(from_data(p, constants) for p in obj.get("premises", []))

        def sub(key):
            return Subst(parse_subst_text(obj[key])) if key in obj else None

        return Derivation(
            rule, env, expr, u, premises, sub("s1"), sub("s2"), sub("inst"),
            tuple(obj.get("quantified", ())),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise BimorphicError(f"malformed derivation record: {exc}") from None


def from_json(text: str, constants: ConstTable | None = None) -> Derivation:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BimorphicError(f"derivation file is not JSON: {exc}") from None
    return from_data(obj, constants)


def render(d: Derivation, indent: int = 0) -> str:
    """Indented text rendering, conclusion first."""
    pad = "  " * indent
    extra = ""
    if d.rule in ("rec", "recni"):
        extra = f" s1={print_subst(d.s1 or IDENTITY)}"
        if d.rule == "rec":
            extra += f" s2={print_subst(d.s2 or IDENTITY)}"
    elif d.rule in ("con", "var-P"):
        extra = f" inst={print_subst(d.inst or IDENTITY)}"
    elif d.rule == "let":
        extra = f" forall {' '.join(chr(39) + q for q in d.quantified)}"
    line = f"{pad}{print_env(d.env)} |- {print_expr(d.expr)} : {print_type(d.type)}   ({d.rule}{extra})"
    return "\n".join([line] + [render(p, indent + 1) for p in d.premises])
