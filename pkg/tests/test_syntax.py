import pytest
from hypothesis import given, settings

from bimorphic.errors import ParseError, UnknownConstant
from bimorphic.parser import (
    parse_env,
    parse_expr,
    parse_prelude,
    parse_scheme,
    parse_type,
    print_env,
    print_expr,
    print_type,
)
from bimorphic.terms import App, Const, Lam, Let, Rec, Var, alpha_equal, free_occurrence, free_vars
from bimorphic.types import (
    Arrow,
    Bool,
    ConstTable,
    Int,
    List,
    Prod,
    TVar,
    TypeEnv,
    TypeScheme,
    canonical_rename,
    const_type,
    free_type_vars,
    type_vars,
)
from gen import exprs, types

a, b = TVar("a"), TVar("b")


class TestParseType:
    def test_arrow_is_right_associative(self):
        assert parse_type("'a -> 'a") == Arrow(a, a)
        assert parse_type("'a -> 'b -> 'a") == Arrow(a, Arrow(b, a))

    def test_continuation_type(self):
        want = Arrow(List(b), Arrow(Arrow(List(b), List(b)), a))
        assert parse_type("'b list -> ('b list -> 'b list) -> 'a") == want

    def test_precedence(self):
        assert parse_type("int * bool list") == Prod(Int, List(Bool))
        assert parse_type("'a * 'b -> 'a") == Arrow(Prod(a, b), a)

    def test_bare_variables(self):
        assert parse_type("a1 * a2", bare_vars=True) == Prod(TVar("a1"), TVar("a2"))

    @pytest.mark.parametrize("text", ["'a ->", "int int", "('a", "list", "'a * * 'b"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_type(text)

    def test_error_position(self):
        with pytest.raises(ParseError) as info:
            parse_type("'a -> ")
        assert info.value.line == 1


class TestPrint:
    def test_examples(self):
        assert print_expr(Lam("x", Var("x"))) == "\\x. x"
        assert print_type(Arrow(List(b), List(b))) == "'b list -> 'b list"
        assert print_type(Prod(a, b)) == "'a * 'b"

    def test_scheme(self):
        s = parse_scheme("forall 'a. 'a -> 'b")
        assert isinstance(s, TypeScheme)
        assert parse_scheme(print_type(s)) == s

    @given(types())
    def test_type_round_trip(self, t):
        assert parse_type(print_type(t)) == t

    @given(exprs())
    @settings(max_examples=200)
    def test_expr_round_trip(self, e):
        assert parse_expr(print_expr(e), bound=free_vars(e)) == e

    def test_env_round_trip(self):
        env = TypeEnv({"x": a, "f": parse_scheme("forall 'a. 'a -> 'b list")})
        assert parse_env(print_env(env)) == env


class TestParseExpr:
    def test_rec(self):
        assert parse_expr(r"rec{f = \x. f x}") == Rec("f", Lam("x", App(Var("f"), Var("x"))))

    def test_if_abbreviation(self):
        e = parse_expr("if (null w) then z [] else z w")
        null_w = App(Const("null"), Var("w"))
        want = App(App(App(Const("ifc"), null_w), App(Var("z"), Const("nil"))),
                   App(Var("z"), Var("w")))
        assert e == want

    def test_list_sugar(self):
        cons = lambda h, t: App(App(Const("cons"), h), t)  # noqa: E731
        assert parse_expr("[0, 1]") == cons(Const("0"), cons(Const("1"), Const("nil")))
        assert parse_expr("[x . y]") == cons(Var("x"), Var("y"))

    def test_multi_binder_lambda(self):
        assert parse_expr(r"\x y. x") == Lam("x", Lam("y", Var("x")))

    def test_let(self):
        assert parse_expr(r"let f = \x. x in f 0") == Let(
            "f", Lam("x", Var("x")), App(Var("f"), Const("0"))
        )

    def test_bound_name_shadows_constant(self):
        assert parse_expr(r"\pair. pair") == Lam("pair", Var("pair"))

    def test_comments_are_skipped(self):
        assert parse_expr("-- nothing here\n0 -- trailing") == Const("0")

    @pytest.mark.parametrize("text", [r"\x x", "rec{f}", "let x = 0 in", "(0", "if 0 then 1", "$"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_expr(text)


class TestNames:
    def test_free_vars(self):
        assert free_vars(Lam("x", Var("x"))) == set()
        assert free_vars(Rec("f", App(Var("f"), Var("y")))) == {"y"}
        assert free_vars(App(Var("x"), Lam("x", Var("x")))) == {"x"}

    def test_free_occurrence(self):
        e = parse_expr(r"\x. pair x y", bound={"y"})
        assert free_occurrence(e, "y") == (0, 1)
        assert free_occurrence(e, "x") is None

    def test_alpha_equal(self):
        assert alpha_equal(parse_expr(r"\x. x"), parse_expr(r"\y. y"))
        assert not alpha_equal(parse_expr(r"\x y. x"), parse_expr(r"\x y. y"))

    def test_free_type_vars(self):
        assert free_type_vars(Arrow(a, a)) == {"a"}
        assert free_type_vars(parse_scheme("forall 'a. 'a -> 'b")) == {"b"}
        assert free_type_vars(TypeEnv({"x": a, "y": List(b)})) == {"a", "b"}

    def test_type_vars_first_occurrence_order(self):
        assert type_vars(parse_type("'c -> 'a -> 'c * 'b")) == ["c", "a", "b"]


class TestConstants:
    def test_builtin_types(self):
        assert const_type("cons") == parse_type("'a -> 'a list -> 'a list")
        assert const_type("0") == Int
        assert const_type("17") == Int
        assert const_type("ifc") == parse_type("bool -> 'a -> 'a -> 'a")

    def test_unknown(self):
        with pytest.raises(UnknownConstant):
            const_type("plus")

    def test_prelude_extends(self):
        table = ConstTable(parse_prelude("plus : int -> int -> int\n-- comment\n"))
        assert const_type("plus", table) == parse_type("int -> int -> int")
        assert parse_expr("plus 1 2", table) == App(App(Const("plus"), Const("1")), Const("2"))

    def test_builtins_cannot_be_overridden(self):
        with pytest.raises(ValueError):
            ConstTable({"cons": Int})

    def test_bad_prelude_line(self):
        with pytest.raises(ParseError):
            parse_prelude("plus int\n")


class TestCanonical:
    def test_examples(self):
        assert canonical_rename(parse_type("'z -> 'z")) == parse_type("'a -> 'a")
        assert canonical_rename(parse_type("'q list -> 'p")) == parse_type("'a list -> 'b")

    @given(types())
    def test_idempotent(self, t):
        assert canonical_rename(canonical_rename(t)) == canonical_rename(t)
