import pytest

from quasikernel.functors import (
    Const,
    ExpConst,
    ExtPolyNF,
    Id,
    PolyNF,
    ProdF,
    SumF,
    ext_value,
    to_extpoly_nf,
)
from quasikernel.kernel import (
    FALSE,
    TRUE,
    UNDEF,
    UNIT,
    Bool,
    Fuel,
    Named,
    Nat,
    Sum,
    Unit,
    apply_pval,
    eval_term,
    is_true,
    eq_strong,
    nat,
    pfun,
)
from quasikernel.surface import (
    Alt,
    Decl,
    LetDef,
    NegativeOccurrence,
    ParseError,
    SelGroup,
    TArrow,
    TName,
    UnsupportedTypeFormer,
    check_positivity,
    elaborate,
    extract_functor,
    parse,
    parse_expr,
    pretty_decl,
    resolve_ty,
)

LIST_SRC = "free type List a ::= nil | cons(a; List a)"
NAT_SRC = "free type Nat ::= 0 | suc Nat"
PROC_SRC = "cotype Proc ::= (out:? Bool; next:? Proc) | (spawnl, spawnr: Proc)"
TREE_SRC = "free type Tree a b ::= leaf a | branch(b -> List (Tree a b))"
MONO_LIST_SRC = "free type List ::= nil | cons(Nat; List)"

GOLDEN = [
    LIST_SRC,
    NAT_SRC,
    PROC_SRC,
    MONO_LIST_SRC,
    "free type M ::= e | one(Bool; M) | two(M; M)",
    "cotype Stream a ::= (head: a; tail: Stream a)",
]


class TestParse:
    def test_list_declaration(self):
        (d,) = parse(LIST_SRC)
        assert d == Decl(
            "free",
            "List",
            ("a",),
            alts=(
                Alt("nil"),
                Alt("cons", (TName("a"), TName("List", (TName("a"),)))),
            ),
        )

    def test_proc_cotype(self):
        (d,) = parse(PROC_SRC)
        assert d.kind == "cotype"
        assert len(d.coalts) == 2
        assert d.coalts[0] == (
            SelGroup(("out",), True, TName("Bool")),
            SelGroup(("next",), True, TName("Proc")),
        )
        assert d.coalts[1] == (SelGroup(("spawnl", "spawnr"), False, TName("Proc")),)

    def test_empty_source(self):
        assert parse("") == []
        assert parse("\n\n") == []

    def test_numeric_constructor_and_display_form(self):
        (d,) = parse(NAT_SRC)
        assert d.alts == (Alt("0"), Alt("suc", (TName("Nat"),)))

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as exc:
            parse("free type ::= nil")
        assert exc.value.line == 1
        assert exc.value.col > 1

    def test_comments_and_blank_lines(self):
        decls = parse("# a comment\n\n" + MONO_LIST_SRC + "\n")
        assert len(decls) == 1

    def test_letdef(self):
        (d,) = parse("let three = suc (suc (suc 0))")
        assert isinstance(d, LetDef)
        assert d.name == "three"

    @pytest.mark.parametrize("src", GOLDEN)
    def test_parse_pretty_round_trip(self, src):
        (d,) = parse(src)
        assert parse(pretty_decl(d)) == [d]


class TestPositivity:
    def test_direct_negative_occurrence(self):
        (d,) = parse("free type L ::= abs(L -> L)")
        with pytest.raises(NegativeOccurrence):
            check_positivity(d)

    def test_nested_negative_occurrence(self):
        (d,) = parse("free type L a ::= abs((L a -> a) -> a)")
        with pytest.raises(NegativeOccurrence):
            check_positivity(d)

    def test_list_accepted(self):
        (d,) = parse(LIST_SRC)
        check_positivity(d)

    def test_cotype_negative_exponent(self):
        (d,) = parse("cotype C ::= (next: C -> C)")
        with pytest.raises(NegativeOccurrence):
            check_positivity(d)


class TestExtraction:
    def test_list_functor(self):
        (d,) = parse(LIST_SRC)
        f = extract_functor(d)
        assert f == SumF(Const(Unit()), ProdF(Const(Named("a")), Id()))

    def test_proc_functor(self):
        (d,) = parse(PROC_SRC)
        f = extract_functor(d)
        assert f == SumF(ProdF(Const(Bool()), Id()), ProdF(Id(), Id()))

    def test_tree_rejected_as_unsupported(self):
        (d,) = parse(TREE_SRC)
        check_positivity(d)  # strictly positive, but not polynomial
        with pytest.raises(UnsupportedTypeFormer):
            extract_functor(d)

    def test_freetype_exponential_rejected(self):
        (d,) = parse("free type T a ::= branch(a -> T a)")
        check_positivity(d)
        with pytest.raises(UnsupportedTypeFormer):
            extract_functor(d)

    def test_polymorphic_recursion_rejected(self):
        (d,) = parse("free type L a ::= mk(L Nat)")
        with pytest.raises(UnsupportedTypeFormer):
            extract_functor(d)


class TestResolution:
    def test_builtins(self):
        assert resolve_ty(TName("Bool")) == Bool()
        assert resolve_ty(TName("Nat")) == Nat()

    def test_unknown_names_stay_named(self):
        assert resolve_ty(TName("mystery")) == Named("mystery")

    def test_arrow_resolves_total(self):
        from quasikernel.kernel import Total

        assert resolve_ty(TArrow(TName("Bool"), TName("Unit"))) == Total(
            Bool(), Unit()
        )


class TestElaborateFreeTypes:
    def test_empty_file(self):
        env = elaborate([])
        assert env.freetypes == {} and env.cotypes == {}

    def test_nat_is_the_nno(self):
        env = elaborate(parse(NAT_SRC))
        info = env.freetypes["Nat"]
        assert info.nf == PolyNF(((Unit(), 0), (Unit(), 1)))
        three = info.make("suc", [info.make("suc", [info.make("suc", [info.make("0", [])])])])
        from quasikernel.initial import tree_depth

        assert tree_depth(three) == 4

    def test_template_instantiation(self):
        env = elaborate(parse(LIST_SRC))
        assert "List" in env.templates
        info = env.instantiate("List", [TName("Nat")])
        assert info.nf == PolyNF(((Unit(), 0), (Nat(), 1)))
        assert env.instantiate("List", [TName("Nat")]) is info

    def test_fold_specializes_to_the_list_equations(self):
        # fold c f nil = c  and  fold c f (cons x l) = f x (fold c f l)
        env = elaborate(parse(LIST_SRC))
        info = env.instantiate("List", [TName("Nat")])
        c = nat(100)
        f = lambda x, r: nat(x.n + r.n)
        nil = info.make("nil", [])
        l1 = info.make("cons", [nat(7), nil])
        l2 = info.make("cons", [nat(5), l1])
        assert info.fold([c, f], nil) == c
        assert info.fold([c, f], l2) == f(nat(5), info.fold([c, f], l1))

    def test_fold_matches_direct_recursion_oracle(self):
        env = elaborate(parse(LIST_SRC))
        info = env.instantiate("List", [TName("Bool")])

        def direct(vals):
            out = nat(0)
            for v in reversed(vals):
                out = nat((2 if v == TRUE else 1) + out.n)
            return out

        for vals in ([], [TRUE], [TRUE, FALSE, TRUE]):
            t = info.make("nil", [])
            for v in reversed(vals):
                t = info.make("cons", [v, t])
            got = info.fold([nat(0), lambda x, r: nat((2 if x == TRUE else 1) + r.n)], t)
            assert got == direct(vals)

    def test_installed_fold_satisfies_the_fold_equation(self):
        # per-constructor fold over every tree buildable within depth 4
        # over a 2-element parameter type
        env = elaborate(parse(LIST_SRC))
        info = env.instantiate("List", [TName("Bool")])
        branches = [nat(7), lambda x, r: nat((1 if x == TRUE else 2) + 3 * r.n)]
        for t in info.handle.enumerate_trees(4):
            i, w, children = info.handle.destruct(t)
            lhs = info.fold(branches, t)
            if i == 0:
                assert lhs == branches[0]
            else:
                ctor = info.ctor_of_payload(i, w)
                args = info.split_args(ctor, w, children)
                rhs = branches[1](args[0], info.fold(branches, args[1]))
                assert is_true(eq_strong(lhs, rhs))

    def test_case_and_primrec_builtins(self):
        env = elaborate(parse(MONO_LIST_SRC))
        info = env.freetypes["List"]
        l = info.make("cons", [nat(3), info.make("nil", [])])
        assert info.case([nat(0), lambda x, _l: x], l) == nat(3)
        # primrec gets subtree and recursive result for the tail
        tail_len = info.primrec(
            [nat(0), lambda x, sub, rec: nat(rec.n + 1)], l
        )
        assert tail_len == nat(1)

    def test_mixed_constants_summand(self):
        env = elaborate(parse("free type Sh ::= circle | square | pair(Sh; Sh)"))
        info = env.freetypes["Sh"]
        assert info.n_consts == 2
        c, s = info.make("circle", []), info.make("square", [])
        assert c != s
        both = info.make("pair", [c, s])
        assert info.fold([nat(1), nat(2), lambda a, b: nat(a.n * 10 + b.n)], both) == nat(12)

    def test_constant_argument_constructor(self):
        # a constructor with only closed arguments lands in the constants summand
        env = elaborate(parse("free type Box ::= box(Nat)"))
        info = env.freetypes["Box"]
        assert info.nf == PolyNF(((Nat(), 0),))
        b = info.make("box", [nat(9)])
        assert info.case([lambda x: x], b) == nat(9)


class TestElaborateCotypes:
    def setup_proc(self):
        env = elaborate(parse(PROC_SRC))
        info = env.cotypes["Proc"]

        def d(n):
            if n % 2 == 0:
                return 0, nat_to_bool(n), lambda _y: n + 1
            return 1, UNIT, lambda y: 2 * n if is_left(y) else 2 * n + 2

        return env, info, info.handle.unfold(d, 0)

    def test_nf_matches_generic_normalization(self):
        env = elaborate(parse(PROC_SRC))
        info = env.cotypes["Proc"]
        assert info.nf == to_extpoly_nf(info.functor)
        assert info.nf == ExtPolyNF(((Bool(), Unit()), (Unit(), Sum(Unit(), Unit()))))

    def test_selectors_follow_the_tags(self):
        env, info, t = self.setup_proc()
        assert info.select("out", t) == TRUE  # seed 0: even, 0 % 4 == 0
        assert info.select("spawnl", t) == UNDEF
        nxt = info.select("next", t)
        assert nxt.defined()
        # seed 1 is odd: out is undefined there, spawn selectors are defined
        assert info.select("out", nxt) == UNDEF
        left = info.select("spawnl", nxt)
        right = info.select("spawnr", nxt)
        assert info.select("out", left) == nat_to_bool(2)
        assert info.select("out", right) == nat_to_bool(4)

    def test_unfold_builtin_roundtrip(self):
        env = elaborate(parse(PROC_SRC))
        info = env.cotypes["Proc"]
        coalg = pfun(
            lambda z: ext_value(info.nf, 0, TRUE, pfun(lambda _y: z))
        )
        tree = apply_pval(apply_pval(env.terms["unfold"], coalg), nat(0))
        assert info.select("out", tree) == TRUE
        assert info.select("out", info.select("next", tree)) == TRUE

    def test_function_valued_selector(self):
        env = elaborate(parse("cotype T2 ::= (label: Nat; kids: Bool -> T2)"))
        info = env.cotypes["T2"]
        assert info.nf == ExtPolyNF(((Nat(), Bool()),))

        def d(n):  # label counts depth; both children advance differently
            return 0, nat(n), lambda y: 2 * n + (1 if y == TRUE else 2)

        t = info.handle.unfold(d, 0)
        assert info.select("label", t) == nat(0)
        kids = info.select("kids", t)
        left = apply_pval(kids, TRUE)
        right = apply_pval(kids, FALSE)
        assert info.select("label", left) == nat(1)
        assert info.select("label", right) == nat(2)

    def test_cotype_template_instantiation(self):
        env = elaborate(parse("cotype Stream a ::= (head: a; tail: Stream a)"))
        info = env.instantiate("Stream", [TName("Nat")])
        assert info.nf == ExtPolyNF(((Nat(), Unit()),))
        t = info.handle.unfold(lambda n: (0, nat(n), lambda _y: n + 1), 5)
        assert info.select("head", t) == nat(5)
        assert info.select("head", info.select("tail", t)) == nat(6)


def nat_to_bool(n):
    return TRUE if n % 4 == 0 else FALSE


def is_left(y):
    from quasikernel.functors import project

    return project(y, 2)[0] == 0


class TestEvalIntegration:
    def test_fold_sum_expression(self):
        env = elaborate(parse(MONO_LIST_SRC))
        term = parse_expr("fold 0 plus [1,2,3]")
        assert eval_term(term, env.terms, Fuel(100000)) == nat(6)

    def test_letdef_binding(self):
        env = elaborate(parse(MONO_LIST_SRC + "\nlet total = fold 0 plus [4,5]"))
        assert env.terms["total"] == nat(9)

    def test_lambda_expression(self):
        env = elaborate(parse(MONO_LIST_SRC))
        term = parse_expr(r"fold 0 (\x. \r. suc r) [9,9,9]")
        assert eval_term(term, env.terms, Fuel(100000)) == nat(3)

    def test_case_builtin_via_expr(self):
        env = elaborate(parse(MONO_LIST_SRC))
        term = parse_expr("case 42 (\\x. \\l. x) [7,8]")
        assert eval_term(term, env.terms, Fuel(100000)) == nat(7)
