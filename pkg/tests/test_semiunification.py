import random

import pytest
from hypothesis import given

from bimorphic.errors import BudgetExceeded, NoMatch, NoSemiunifier, ParseError
from bimorphic.fresh import FreshSupply
from bimorphic.parser import parse_type
from bimorphic.semiunification import (
    EmittedSUP,
    SemiUnifProblem,
    check_semiunifier,
    factors_through,
    match_all,
    match_types,
    oracle_search,
    parse_sup_text,
    print_sup,
    semi_unify,
)
from bimorphic.substitution import Subst
from bimorphic.types import Bool, Int, TVar, depth, type_vars

from gen import random_subst, random_type, types

T = parse_type


def sup(leq=None, eqs=()):
    ineq = tuple(map(T, leq.split("<="))) if leq else None
    return SemiUnifProblem(tuple((T(l), T(r)) for l, r in (e.split("=") for e in eqs)), ineq)


class TestMatching:
    def test_examples(self):
        assert match_types(T("'a -> 'a"), T("int -> int")) == Subst({"a": Int})
        with pytest.raises(NoMatch):
            match_types(T("'a -> 'a"), T("int -> bool"))
        with pytest.raises(NoMatch):
            match_types(Int, T("'a"))

    def test_right_variables_are_constants(self):
        assert match_types(T("'a"), T("'a list")) == Subst({"a": T("'a list")})
        with pytest.raises(NoMatch):
            match_types(T("'a * 'a"), T("'a * 'b"))

    def test_match_all_is_simultaneous(self):
        with pytest.raises(NoMatch):
            match_all([(T("'a"), Int), (T("'a"), Bool)])

    @given(types(), types())
    def test_instance_always_matches(self, u, img):
        s = Subst({n: img for n in type_vars([u])[:1]})
        r = match_types(u, s(u))
        assert r(u) == s(u)
        assert r.domain <= set(type_vars([u]))


class TestSolver:
    def test_identity_when_witness_exists(self):
        assert semi_unify(sup("'a <= 'b -> 'b")) == Subst({})

    def test_cyclic(self):
        with pytest.raises(NoSemiunifier) as info:
            semi_unify(sup("'a * 'a <= 'a"))
        assert info.value.kind in ("cycle", "occurs")

    def test_swap_with_equation(self):
        assert semi_unify(sup("'a * 'b <= 'b * 'a", ["'b = int"])) == Subst({"a": Int, "b": Int})

    def test_clash(self):
        with pytest.raises(NoSemiunifier) as info:
            semi_unify(sup("int <= bool"))
        assert info.value.kind == "clash"

    def test_equations_only(self):
        assert semi_unify(sup(None, ["'a = int list"])) == Subst({"a": T("int list")})
        with pytest.raises(NoSemiunifier):
            semi_unify(sup(None, ["'a = 'a list"]))

    def test_expansion_creates_fresh_variables(self):
        s = semi_unify(sup("'a * 'a <= 'b"), FreshSupply("n"))
        image = s(TVar("b"))
        assert image.left == image.right and isinstance(image.left, TVar)
        assert image.left.name.startswith("n")

    def test_witness_consistency_forces_equality(self):
        # r(a) must be both int and bool unless s changes a
        with pytest.raises(NoSemiunifier):
            semi_unify(sup("'a * 'a <= int * bool"))

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            semi_unify(sup("('a -> 'b) * 'a <= ('b -> 'c) * 'c list"), budget=3)

    def test_deterministic(self):
        p = sup("'a * 'b <= ('b -> 'c) * 'a")
        assert semi_unify(p) == semi_unify(p)

    def test_random_outputs_pass_checker(self):
        rng = random.Random(5)
        solved = 0
        for _ in range(1000):
            p = SemiUnifProblem(
                tuple((random_type(rng, 2), random_type(rng, 2)) for _ in range(rng.randrange(3))),
                (random_type(rng, 2), random_type(rng, 2)),
            )
            try:
                s = semi_unify(p)
            except NoSemiunifier:
                continue
            solved += 1
            assert check_semiunifier(p, s)
        assert solved > 100

    def test_planted_solutions_are_found(self):
        """If s0 solves p by construction then p is solvable and s0 factors."""
        rng = random.Random(6)
        for _ in range(300):
            left = random_type(rng, 2)
            s0 = random_subst(rng, ["a", "b", "c"])
            r0 = random_subst(rng, ["a", "b", "c"])
            # the right side is a variable the planted solution sends to r0(s0(left))
            p = SemiUnifProblem((), (left, TVar("w")))
            s = semi_unify(p)
            planted = Subst({**s0, "w": r0(s0(left))})
            assert check_semiunifier(p, planted)
            assert factors_through(s, planted, p.variables()) is not None


class TestChecker:
    def test_examples(self):
        p = sup("'a <= int")
        assert not check_semiunifier(p, Subst({"a": Bool}))
        assert check_semiunifier(p, Subst({"a": Int}))

    def test_equations_must_hold(self):
        p = sup("'a <= 'a", ["'a = int"])
        assert not check_semiunifier(p, Subst({}))


class TestOracle:
    def test_identity_at_depth_zero(self):
        assert oracle_search(sup("'a <= 'b -> 'b"), ["a", "b"], 0) == Subst({})

    def test_swap(self):
        p = sup("'a * 'b <= 'b * 'a", ["'b = int"])
        w = oracle_search(p, p.variables(), 2)
        assert w is not None and check_semiunifier(p, w)
        assert factors_through(semi_unify(p), w, p.variables()) is not None

    @pytest.mark.parametrize("d", [0, 1, 2, 3])
    def test_cyclic_none_found(self, d):
        assert oracle_search(sup("'a * 'a <= 'a"), ["a"], d) is None

    def test_oracle_results_pass_checker(self):
        rng = random.Random(8)
        for _ in range(200):
            p = SemiUnifProblem((), (random_type(rng, 2), random_type(rng, 2)))
            w = oracle_search(p, p.variables(), 2)
            if w is not None:
                assert check_semiunifier(p, w)
                assert all(depth(w(TVar(n))) <= 2 for n in p.variables())


class TestFileFormat:
    def test_sections(self):
        p = parse_sup_text("eq:\n  'b = int\nleq: 'a * 'b <= 'b * 'a\n")
        assert p == EmittedSUP(((T("'b"), Int),), ((T("'a * 'b"), T("'b * 'a")),))
        assert parse_sup_text(print_sup(p)) == p

    def test_empty(self):
        assert parse_sup_text("") == EmittedSUP((), ())

    def test_multiple_inequations_parse_but_are_not_uniform(self):
        p = parse_sup_text("leq:\n 'a <= 'b\n 'b <= 'a\n")
        assert len(p.inequations) == 2
        with pytest.raises(ValueError):
            p.as_uniform()

    @pytest.mark.parametrize("text", ["'a = int", "eq: 'a <= 'b", "leq: 'a = 'b", "eq: 'a = "])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_sup_text(text)
