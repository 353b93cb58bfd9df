import random

import pytest

from bimorphic.brni import (
    K,
    SProd,
    SUPInstance,
    SVar,
    build_brni_derivation,
    build_component_derivations,
    check_two,
    doteq,
    embed,
    encode_sup,
    expr_subst,
    extract_semiunifier,
    oracle_sup,
    parse_sup_instance,
    random_instances,
    tilde,
    witnesses,
)
from bimorphic.derivation import check_derivation, derive
from bimorphic.errors import ParseError, PreconditionViolated, RuleViolation, ShapeMismatch
from bimorphic.inference import TypingProblem, solve_typing_problem, typable
from bimorphic.parser import parse_expr, print_expr
from bimorphic.substitution import Subst
from bimorphic.terms import Const, Lam, Var, alpha_equal, count_rec
from bimorphic.types import TVar, TypeEnv

from conftest import CORPUS, read_term
from gen import random_type

a1, a2 = SVar(1), SVar(2)
EXAMPLE = SUPInstance((a1, SProd(a1, a1)), (a1, a1))


class TestExprSubst:
    def test_variable(self):
        assert expr_subst(Var("x"), "x", Const("0")) == Const("0")

    def test_capture_avoided(self):
        out = expr_subst(Lam("x", Var("y")), "y", Var("x"))
        assert isinstance(out, Lam) and out.binder != "x" and out.body == Var("x")

    def test_shadowed(self):
        e = Lam("x", Var("x"))
        assert expr_subst(e, "x", Const("0")) == e

    def test_builds_db3_from_shared_body(self):
        e3 = parse_expr((CORPUS / "e3.br").read_text(), bound={"f3", "f4"})
        db4 = read_term("db4.br")
        from bimorphic.terms import Rec

        built = Rec("f3", expr_subst(e3, "f4", db4))
        assert alpha_equal(built, read_term("db3.br"))


class TestHelpers:
    def test_doteq(self):
        assert print_expr(doteq(Const("0"), Const("1"))) == r"\y. pair (y 0) (y 1)"

    def test_doteq_avoids_free_names(self):
        e = doteq(Var("y"), Const("0"))
        assert isinstance(e, Lam) and e.binder != "y"

    def test_doteq_typing(self):
        assert typable(doteq(Const("0"), Const("1")), "br")
        assert not typable(doteq(Const("0"), Const("nil")), "br")

    def test_k(self):
        assert print_expr(K) == r"\x y. x"

    def test_tilde(self):
        assert tilde(a1) == Var("z1")
        assert print_expr(tilde(SProd(a1, a2))) == "pair z1 z2"
        assert print_expr(tilde(SProd(SProd(a1, a1), a2))) == "pair (pair z1 z1) z2"

    def test_tilde_typing(self):
        rng = random.Random(3)
        for inst in random_instances(rng, 50):
            for m in inst.terms():
                from bimorphic.brni import su_vars

                idx = su_vars(m)
                s = Subst({f"a{i}": random_type(rng, 2, ground=True) for i in idx})
                env = TypeEnv({f"z{i}": s(TVar(f"a{i}")) for i in idx})
                p = TypingProblem(env, tilde(m), TVar("g"))
                assert solve_typing_problem(p, "br")(TVar("g")) == s(embed(m))


class TestEncoding:
    def test_template(self):
        text = print_expr(encode_sup(EXAMPLE))
        assert text == (
            r"\y. pair (y rec{f = \z1. (\x y. x) (pair z1 z1) "
            r"(\y1 y. pair (y (fst (f y1))) (y (pair z1 z1)))}) "
            r"(y rec{f = \z1. (\x y. x) (pair z1 z1) (\y1 y. pair (y (snd (f y1))) (y z1))})"
        )

    def test_z_count_and_rec_count(self):
        rng = random.Random(4)
        for inst in random_instances(rng, 50):
            e = encode_sup(inst)
            assert count_rec(e) == 2
            rec = e.body.fun.arg.arg  # y e1
            lams, body = 0, rec.body
            while isinstance(body, Lam) and body.binder.startswith("z"):
                lams, body = lams + 1, body.body
            assert lams == len(inst.variables())

    def test_injective_up_to_alpha(self):
        rng = random.Random(5)
        insts = list(dict.fromkeys(random_instances(rng, 60, nvars=2)))
        by_vars = {}
        for inst in insts:
            by_vars.setdefault(tuple(inst.variables()), []).append(inst)
        for group in by_vars.values():
            for i, x in enumerate(group):
                for y in group[i + 1:]:
                    assert not alpha_equal(encode_sup(x), encode_sup(y))

    def test_parse_instance(self):
        assert parse_sup_instance("a1 <= a1 * a1\na1 <= a1 -- trivial\n") == EXAMPLE

    @pytest.mark.parametrize(
        "text", ["a1 <= a1", "a1 <= 'b\na1 <= a1", "a1 <= int\na1 <= a1", "a0 <= a1\na1 <= a1"]
    )
    def test_parse_rejects(self, text):
        with pytest.raises(ParseError):
            parse_sup_instance(text)


class TestDerivations:
    def test_precondition(self):
        with pytest.raises(PreconditionViolated):
            build_brni_derivation(EXAMPLE, Subst({}), Subst({}), Subst({}))

    def test_components_are_valid(self):
        r1 = Subst({"a1": embed(SProd(a1, a1))})
        d1, d2 = build_component_derivations(EXAMPLE, Subst({}), r1, Subst({}))
        assert check_derivation(d1, "brni") and check_derivation(d2, "brni")
        assert d1.type == d2.type

    def test_identity_witnesses_give_valid_derivation(self):
        inst = SUPInstance((a1, a1), (SProd(a1, a2), SProd(a1, a2)))
        d = build_brni_derivation(inst, Subst({}), Subst({}), Subst({}))
        assert check_derivation(d, "brni")
        assert d.expr == encode_sup(inst)

    def test_non_identity_witness_under_outer_binder(self):
        """The recni side condition sees the outer binder's type.

        Inside ``\\y. pair (y e1) (y e2)`` the environment gives ``y`` a type
        mentioning every variable of ``u``, so a recni node with a
        non-identity ``s1`` is rejected there, although the same rec typed
        in the empty environment is accepted.
        """
        r1 = Subst({"a1": embed(SProd(a1, a1))})
        d = build_brni_derivation(EXAMPLE, Subst({}), r1, Subst({}))
        with pytest.raises(RuleViolation) as info:
            check_derivation(d, "brni")
        assert "recni" in info.value.reason

    def test_extraction_round_trip(self):
        rng = random.Random(6)
        seen = 0
        for inst in random_instances(rng, 150):
            found = oracle_sup(inst, 1)
            if found is None:
                continue
            s, r1, r2 = found
            d = build_brni_derivation(inst, s, r1, r2)
            extracted = extract_semiunifier(d)
            assert check_two(inst, extracted)
            assert all(extracted(TVar(f"a{i}")) == s(TVar(f"a{i}")) for i in inst.variables())
            seen += 1
        assert seen > 20

    def test_extraction_rejects_other_shapes(self):
        d = derive(TypingProblem(TypeEnv(), parse_expr(r"\x. x"), TVar("g")))
        with pytest.raises(ShapeMismatch):
            extract_semiunifier(d)
        d = derive(TypingProblem(TypeEnv(), read_term("db2.br"), TVar("g")), mode="br")
        with pytest.raises(ShapeMismatch):
            extract_semiunifier(d)


class TestSearch:
    @pytest.mark.parametrize("d", [0, 1, 2])
    def test_cyclic_has_no_solution(self, d):
        inst = SUPInstance((SProd(a1, a1), a1), (a1, a1))
        assert oracle_sup(inst, d) is None

    def test_witnesses(self):
        s = Subst({})
        r1, r2 = witnesses(EXAMPLE, s)
        assert r1 == Subst({"a1": embed(SProd(a1, a1))}) and r2 == Subst({})
