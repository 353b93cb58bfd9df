"""Command-line front end.

Exit codes: 0 success, 1 a negative answer (untypable, no semiunifier,
invalid derivation), 2 malformed input or configuration, 3 step budget
exhausted while semi-unifying.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass

import click

from .derivation import check_derivation, from_json
from .errors import (
    BimorphicError,
    BudgetExceeded,
    InferFailure,
    ModeError,
    NoMatch,
    NoSemiunifier,
    ParseError,
    RuleViolation,
    UnknownConstant,
)
from .fresh import FreshSupply
from .inference import (
    MODES,
    TypingProblem,
    algo_E,
    emit_sup,
    infer,
    normalize_mode,
    unify_residual,
)
from .parser import parse_expr, parse_prelude, parse_type, print_expr, print_type
from .semiunification import DEFAULT_BUDGET, match_types, parse_sup_text, print_sup, semi_unify
from .substitution import compose, print_subst, restrict
from .types import ConstTable, TypeEnv, canonical_rename, default_constants

OK, NEGATIVE, BAD_INPUT, BUDGET = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    mode: str = "br-let"
    machine: bool = False
    prelude: str | None = None
    fresh_seed: str = "t"
    faithful_sentinel: bool = False
    step_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.step_budget <= 0:
            raise ValueError("step budget must be positive")
        object.__setattr__(self, "mode", normalize_mode(self.mode))

    def constants(self) -> ConstTable:
        if self.prelude is None:
            return default_constants()
        with open(self.prelude, encoding="utf-8") as fh:
            return ConstTable(parse_prelude(fh.read()))

    def supply(self, avoid=()) -> FreshSupply:
        return FreshSupply(self.fresh_seed, avoid=avoid)


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


def _emit(cfg: RunConfig, doc: dict, pretty: str) -> None:
    if cfg.machine:
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        click.echo(pretty)


def _bad_input(cfg: RunConfig, exc: Exception) -> None:
    if cfg.machine:
        click.echo(json.dumps({"status": "error", "error": str(exc)}, indent=2, sort_keys=True))
    else:
        click.echo(f"error: {exc}", err=True)
    raise _Exit(BAD_INPUT)


def _eqs(pairs) -> list[list[str]]:
    return [[print_type(l), print_type(r)] for l, r in pairs]


def _options(fn):
    """Flags shared by every subcommand."""

    @click.option("--mode", type=click.Choice(MODES), default="br-let", show_default=True)
    @click.option("--machine", is_flag=True, help="Print one JSON document.")
    @click.option("--prelude", type=click.Path(exists=True, dir_okay=False), default=None,
                  help="Extra constants, one 'name : type' per line.")
    @click.option("--fresh-seed", default="t", show_default=True,
                  help="Prefix for invented type variables.")
    @click.option("--faithful-sentinel", is_flag=True,
                  help="Report failures as the unsolvable equation bool = int.")
    @click.option("--step-budget", type=click.IntRange(min=1), default=DEFAULT_BUDGET,
                  show_default=True)
    @functools.wraps(fn)
    def wrapper(mode, machine, prelude, fresh_seed, faithful_sentinel, step_budget, **kw):
        cfg = RunConfig(mode, machine, prelude, fresh_seed, faithful_sentinel, step_budget)
        try:
            code = fn(cfg, **kw)
        except _Exit as stop:
            code = stop.code
        except (ParseError, UnknownConstant, ModeError, ValueError, OSError) as exc:
            code = BAD_INPUT
            try:
                _bad_input(cfg, exc)
            except _Exit:
                pass
        sys.exit(code)

    return wrapper


def _read_term(cfg: RunConfig, fh):
    try:
        table = cfg.constants()
        return parse_expr(fh.read(), table), table
    except (ParseError, UnknownConstant, ValueError, OSError) as exc:
        _bad_input(cfg, exc)


def _failure_doc(exc: InferFailure) -> dict:
    return {
        "status": "untypable",
        "reason": exc.reason,
        "path": list(exc.path),
        "term": print_expr(exc.term) if exc.term is not None else None,
        "detail": exc.detail,
    }


def _run_inference(cfg: RunConfig, e, table):
    """Returns (raw type, canonical type, document) or raises InferFailure."""
    supply = cfg.supply()
    if not cfg.faithful_sentinel:
        inf = infer(e, cfg.mode, table, supply, cfg.step_budget)
        result, mgu, raw = inf.result, inf.mgu, inf.type
    else:
        goal = supply.var()
        p = TypingProblem(TypeEnv(), e, goal)
        result = algo_E(p, supply, cfg.mode, table, cfg.step_budget, sentinel=True)
        mgu = unify_residual(result, e)
        raw = compose(mgu, result.partial)(goal)
    principal = canonical_rename(raw)
    doc = {
        "status": "typable",
        "mode": cfg.mode,
        "type": print_type(principal),
        "raw_type": print_type(raw),
        "residual": _eqs(result.residual),
        "partial": print_subst(result.partial),
        "mgu": print_subst(mgu),
        "trace": [
            {
                "binder": r.binder,
                "path": list(r.path),
                "body_type": print_type(r.body_type),
                "call_type": print_type(r.call_type),
                "problem": print_sup(r.problem),
                "solution": print_subst(r.solution),
            }
            for r in result.trace
        ],
    }
    return raw, principal, doc


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Type inference with bimorphic recursion."""


@main.command("infer")
@click.argument("file", type=click.File("r"))
@_options
def cmd_infer(cfg: RunConfig, file) -> int:
    """Print the principal type of the term in FILE."""
    e, table = _read_term(cfg, file)
    try:
        _, principal, doc = _run_inference(cfg, e, table)
    except InferFailure as exc:
        _emit(cfg, _failure_doc(exc), f"untypable: {exc}")
        return NEGATIVE
    _emit(cfg, doc, print_type(principal))
    return OK


@main.command("check")
@click.argument("file", type=click.File("r"))
@click.option("--type", "type_text", required=True, help="Type to check the term against.")
@_options
def cmd_check(cfg: RunConfig, file, type_text: str) -> int:
    """Does the term in FILE have the type given by --type?"""
    e, table = _read_term(cfg, file)
    try:
        wanted = parse_type(type_text)
    except ParseError as exc:
        _bad_input(cfg, exc)
    try:
        raw, principal, _ = _run_inference(cfg, e, table)
    except InferFailure as exc:
        _emit(cfg, {**_failure_doc(exc), "ok": False}, f"no: {exc}")
        return NEGATIVE
    try:
        witness = match_types(raw, wanted)
    except NoMatch:
        doc = {"status": "typable", "ok": False, "type": print_type(principal),
               "wanted": print_type(wanted)}
        _emit(cfg, doc, f"no: principal type {print_type(principal)} "
                        f"has no instance {print_type(wanted)}")
        return NEGATIVE
    doc = {"status": "typable", "ok": True, "type": print_type(principal),
           "wanted": print_type(wanted), "instance": print_subst(witness)}
    _emit(cfg, doc, f"ok: instance of {print_type(principal)}")
    return OK


@main.command("solve-sup")
@click.argument("file", type=click.File("r"))
@_options
def cmd_solve_sup(cfg: RunConfig, file) -> int:
    """Most general semiunifier of a problem with at most one inequation."""
    try:
        emitted = parse_sup_text(file.read())
    except ParseError as exc:
        _bad_input(cfg, exc)
    if len(emitted.inequations) > 1:
        _bad_input(cfg, ValueError(
            f"{len(emitted.inequations)} inequations: only single-inequation problems "
            "are solvable; use emit-sup for multi-inequation diagnostics"))
    p = emitted.as_uniform()
    try:
        s = semi_unify(p, cfg.supply(p.variables()), cfg.step_budget)
    except NoSemiunifier as exc:
        _emit(cfg, {"status": "no-semiunifier", "kind": exc.kind, "detail": str(exc)},
              "no-semiunifier")
        return NEGATIVE
    except BudgetExceeded as exc:
        _emit(cfg, {"status": "budget-exceeded", "detail": str(exc)}, "budget-exceeded")
        return BUDGET
    s = restrict(s, p.variables())
    _emit(cfg, {"status": "solved", "semiunifier": print_subst(s)}, print_subst(s))
    return OK


@main.command("emit-sup")
@click.argument("file", type=click.File("r"))
@_options
def cmd_emit_sup(cfg: RunConfig, file) -> int:
    """Print the semi-unification problem read off the BR term in FILE."""
    e, table = _read_term(cfg, file)
    supply = cfg.supply()
    goal = supply.var()
    emitted = emit_sup(TypingProblem(TypeEnv(), e, goal), supply, table)
    n = len(emitted.inequations)
    doc = {
        "diagnostic": True,
        "goal": print_type(goal),
        "equations": _eqs(emitted.equations),
        "inequations": _eqs(emitted.inequations),
        "inequation_count": n,
    }
    pretty = f"-- {len(emitted.equations)} equations, {n} inequations\n{print_sup(emitted)}"
    _emit(cfg, doc, pretty)
    return OK


@main.command("encode-sup")
@click.argument("file", type=click.File("r"))
@_options
def cmd_encode_sup(cfg: RunConfig, file) -> int:
    """Print the BRNI term encoding the two-inequation instance in FILE."""
    from .brni import encode_sup, parse_sup_instance

    try:
        inst = parse_sup_instance(file.read())
    except ParseError as exc:
        _bad_input(cfg, exc)
    term = print_expr(encode_sup(inst))
    _emit(cfg, {"instance": str(inst).splitlines(), "term": term}, term)
    return OK


@main.command("check-derivation")
@click.argument("file", type=click.File("r"))
@click.option("--system", type=click.Choice(["br", "br-let", "brni"]), default="br",
              show_default=True)
@_options
def cmd_check_derivation(cfg: RunConfig, file, system: str) -> int:
    """Check a serialized derivation against the rules of --system."""
    try:
        table = cfg.constants()
        d = from_json(file.read(), table)
    except (BimorphicError, ValueError, KeyError, TypeError) as exc:
        _bad_input(cfg, exc)
    try:
        check_derivation(d, system, table)
    except RuleViolation as exc:
        doc = {"ok": False, "system": system, "path": list(exc.path), "reason": exc.reason}
        _emit(cfg, doc, str(exc))
        return NEGATIVE
    _emit(cfg, {"ok": True, "system": system, "conclusion": print_type(d.type)}, "ok")
    return OK


if __name__ == "__main__":  # pragma: no cover
    main()
