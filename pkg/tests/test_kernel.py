import pytest
from hypothesis import given, strategies as st

from quasikernel.kernel import (
    FALSE,
    TRUE,
    UNDEF,
    UNIT,
    App,
    Bool,
    CaseE,
    FinMapV,
    Fst,
    Fuel,
    FuelExhausted,
    IncomparableTypes,
    InlV,
    InrV,
    Lam,
    Lit,
    Nat,
    PairV,
    Prod,
    RestrictE,
    Snd,
    Sum,
    Undef,
    Unit,
    UnitV,
    NatV,
    UnboundName,
    Var,
    Zero,
    apply_pval,
    enumerate_ty,
    eq_existential,
    eq_strong,
    eval_term,
    finmap,
    from_bool,
    holds,
    inl,
    inr,
    is_true,
    logical,
    nat,
    normalize_ty,
    pair,
    pfun,
    restrict,
    ty_card,
)


# independent oracle for existential equality on first-order values:
# structural recursion with the both-defined-and-equal clause at every node
def ref_existential(a, b):
    if isinstance(a, Undef) or isinstance(b, Undef):
        return False
    if isinstance(a, UnitV) and isinstance(b, UnitV):
        return True
    if isinstance(a, NatV) and isinstance(b, NatV):
        return a.n == b.n
    if isinstance(a, PairV) and isinstance(b, PairV):
        return ref_existential(a.fst, b.fst) and ref_existential(a.snd, b.snd)
    if isinstance(a, InlV) and isinstance(b, InlV):
        return ref_existential(a.value, b.value)
    if isinstance(a, InrV) and isinstance(b, InrV):
        return ref_existential(a.value, b.value)
    if type(a) is not type(b):
        return False
    raise NotImplementedError


SAMPLE_TYPES = [
    Unit(),
    Bool(),
    Nat(),
    Sum(Unit(), Nat()),
    Prod(Bool(), Nat()),
    Sum(Prod(Unit(), Bool()), Bool()),
]


# strict constructors only, so no improper values (pairs or injections
# containing an undefined component) can arise
pval_strategy = st.recursive(
    st.sampled_from([UNDEF, UNIT, nat(0), nat(1), nat(2), TRUE, FALSE]),
    lambda kids: st.one_of(
        st.tuples(kids, kids).map(lambda ab: pair(*ab)),
        kids.map(inl),
        kids.map(inr),
    ),
    max_leaves=6,
)


def typed_value_strategy():
    return st.sampled_from(SAMPLE_TYPES).flatmap(
        lambda ty: st.tuples(
            st.sampled_from(enumerate_ty(ty, nat_bound=3)),
            st.sampled_from(enumerate_ty(ty, nat_bound=3)),
        )
    )


class TestRestrict:
    def test_true_keeps_value(self):
        assert restrict(nat(7), TRUE) == nat(7)

    def test_false_undefines(self):
        assert restrict(nat(7), FALSE) == UNDEF

    def test_undefined_stays_undefined(self):
        assert restrict(UNDEF, TRUE) == UNDEF

    def test_undefined_condition(self):
        assert restrict(nat(1), UNDEF) == UNDEF

    @given(pval_strategy)
    def test_restrict_laws(self, v):
        assert is_true(eq_strong(restrict(v, TRUE), v))
        assert restrict(v, FALSE) == UNDEF


class TestEquality:
    def test_existential_rejects_two_undefined(self):
        assert eq_existential(UNDEF, UNDEF) == FALSE

    def test_existential_on_equal_naturals(self):
        assert eq_existential(nat(3), nat(3)) == TRUE

    def test_pair_with_undefined_component(self):
        w = PairV(nat(1), UNDEF)
        assert eq_existential(w, w) == FALSE

    def test_strong_accepts_two_undefined(self):
        assert eq_strong(UNDEF, UNDEF) == TRUE

    def test_strong_defined_vs_undefined(self):
        assert eq_strong(nat(3), UNDEF) == FALSE

    def test_distinct_tags(self):
        assert eq_strong(inl(UNIT), inr(UNIT)) == FALSE

    def test_matches_reference_oracle(self):
        for ty in SAMPLE_TYPES:
            vals = enumerate_ty(ty, nat_bound=3) + [UNDEF]
            for a in vals:
                for b in vals:
                    assert is_true(eq_existential(a, b)) == ref_existential(a, b)

    @given(typed_value_strategy())
    def test_strong_equals_existential_when_both_defined(self, ab):
        a, b = ab
        for depth in (1, 2, 4):
            assert eq_strong(a, b, depth) == eq_existential(a, b, depth)

    def test_incomparable_shapes(self):
        with pytest.raises(IncomparableTypes):
            eq_existential(nat(1), PairV(UNIT, UNIT))

    def test_pfun_bounded_extensional(self):
        f = pfun(lambda x: nat(x.n + 1), dom=Nat())
        g = pfun(lambda x: nat(x.n + 1), dom=Nat())
        h = pfun(lambda x: nat(x.n + 2), dom=Nat())
        assert eq_existential(f, g, depth=4) == TRUE
        assert eq_existential(f, h, depth=4) == FALSE

    def test_finmap_equality_is_exact(self):
        a = finmap({nat(0): nat(5), nat(1): nat(6)})
        b = finmap([(nat(1), nat(6)), (nat(0), nat(5))])
        c = finmap({nat(0): nat(5)})
        assert eq_strong(a, b) == TRUE
        assert eq_strong(a, c) == FALSE

    def test_finmap_vs_pfun(self):
        table = finmap({nat(0): nat(1), nat(1): nat(2), nat(2): nat(3)})
        proc = pfun(lambda x: nat(x.n + 1) if x.n < 3 else UNDEF, dom=Nat())
        assert eq_existential(table, proc, depth=3) == TRUE

    def test_pfun_without_domain_uses_canonical_samples(self):
        # no declared domain: compared on unit and small naturals
        f = pfun(lambda x: x)
        g = pfun(lambda x: x)
        h = pfun(lambda x: UNDEF if x == nat(2) else x)
        assert eq_existential(f, g, depth=3) == TRUE
        assert eq_existential(f, h, depth=3) == FALSE


class TestEval:
    def run(self, term, env=None, steps=1000):
        return eval_term(term, env or {}, Fuel(steps))

    def test_beta_needs_defined_argument(self):
        undef_term = RestrictE(Lit(nat(0)), Lit(FALSE))
        term = App(Lam("x", Var("x")), undef_term)
        assert self.run(term) == UNDEF

    def test_constant_function(self):
        term = App(Lam("x", Lit(UNIT)), Lit(nat(3)))
        assert self.run(term) == UNIT

    def test_restrict_false(self):
        assert self.run(RestrictE(Lit(nat(5)), Lit(FALSE))) == UNDEF

    def test_unbound_name(self):
        with pytest.raises(UnboundName):
            self.run(Var("nope"))

    def test_fuel_exhaustion_is_not_undefined(self):
        # self-application loops forever; the budget must turn that into an error
        omega = Lam("x", App(Var("x"), Var("x")))
        with pytest.raises(FuelExhausted):
            self.run(App(omega, omega), steps=500)

    def test_deterministic(self):
        prog = CaseE(Lit(inl(nat(2))), "a", Var("a"), "b", Lit(nat(0)))
        assert self.run(prog, steps=100) == self.run(prog, steps=100)

    def test_projections_and_case_strictness(self):
        assert self.run(Fst(Lit(UNDEF))) == UNDEF
        assert self.run(Snd(Lit(UNDEF))) == UNDEF
        assert self.run(CaseE(Lit(UNDEF), "a", Lit(nat(1)), "b", Lit(nat(2)))) == UNDEF

    def test_all_unary_formers_are_strict(self):
        from quasikernel.kernel import InlE, InrE, PairE

        undef = Lit(UNDEF)
        for term in (
            InlE(undef),
            InrE(undef),
            PairE(undef, Lit(nat(1))),
            PairE(Lit(nat(1)), undef),
            App(Lit(pfun(lambda v: v)), undef),
        ):
            assert self.run(term) == UNDEF

    def test_closure_arithmetic(self):
        succ = pfun(lambda v: nat(v.n + 1))
        term = App(App(Lam("f", Lam("x", App(Var("f"), App(Var("f"), Var("x"))))), Lit(succ)), Lit(nat(3)))
        assert self.run(term) == nat(5)

    def test_type_mismatches_are_hard_errors(self):
        from quasikernel.kernel import TypeMismatch

        with pytest.raises(TypeMismatch):
            self.run(Fst(Lit(nat(1))))
        with pytest.raises(TypeMismatch):
            self.run(CaseE(Lit(nat(1)), "a", Lit(UNIT), "b", Lit(UNIT)))
        with pytest.raises(TypeMismatch):
            apply_pval(nat(1), nat(2))


class TestTypes:
    def test_bool_is_sum_unit_unit(self):
        assert normalize_ty(Bool()) == Sum(Unit(), Unit())

    def test_logical_normalizes_to_partial(self):
        from quasikernel.kernel import Logical, Partial

        assert normalize_ty(Logical()) == Partial(Unit(), Unit())

    def test_named_resolution(self):
        assert normalize_ty(
            __import__("quasikernel.kernel", fromlist=["Named"]).Named("t"),
            {"t": Bool()},
        ) == Sum(Unit(), Unit())

    def test_unresolved_name(self):
        from quasikernel.kernel import Named

        with pytest.raises(UnboundName):
            normalize_ty(Named("mystery"))

    @pytest.mark.parametrize(
        "ty, n",
        [
            (Unit(), 1),
            (Zero(), 0),
            (Bool(), 2),
            (Sum(Bool(), Unit()), 3),
            (Prod(Bool(), Bool()), 4),
        ],
    )
    def test_enumeration_matches_cardinality(self, ty, n):
        vals = enumerate_ty(ty)
        assert len(vals) == n == ty_card(ty)
        assert len({repr(v) for v in vals}) == n

    def test_function_type_enumeration(self):
        from quasikernel.kernel import Total, Partial

        assert len(enumerate_ty(Total(Bool(), Bool()))) == 4
        assert len(enumerate_ty(Partial(Bool(), Unit()))) == 4


class TestLogical:
    def test_holds(self):
        assert holds(logical(True))
        assert not holds(logical(False))

    def test_formula_is_partial_unit_map(self):
        assert apply_pval(logical(True), UNIT) == UNIT
        assert apply_pval(logical(False), UNIT) == UNDEF
