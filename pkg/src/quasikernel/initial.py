"""Constructed initial algebras: list objects and finite-tree datatypes.

Lists are encoded as ``1 + (l : Nat -/-> A, n : Nat)`` with the length
index enabling recursion inherited from the naturals.  General
polynomial datatypes are carved out of a universal tree type whose
elements are a labelling partial map on paths, a depth partial map on
paths, and a dummy anchor value from the constants summand.  Both
partial maps are kept as finite tables, which constructors only ever
populate at finitely many paths, so value equality is exact.

Everything constructed here is a plain kernel value; trees are
``(label-table, (depth-table, anchor))`` pairs.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

from .functors import (
    PolyNF,
    TagOutOfRange,
    inject,
    poly_unvalue,
    poly_value,
    project,
)
from .kernel import (
    UNDEF,
    UNIT,
    FinMapV,
    InlV,
    InrV,
    NatV,
    PairV,
    PVal,
    QuasiError,
    TypeMismatch,
    Unit,
    apply_pval,
    enumerate_ty,
    finmap,
    holds,
    logical,
    nat,
    ty_card,
)


class NotInCarrier(QuasiError):
    """A fold ran into an exceptional branch: the input was outside the carrier."""


class InvariantViolation(QuasiError):
    pass


class SubtypeEscape(QuasiError):
    """A supposedly subtype-closed algebra produced a value outside the subtype."""


Path = tuple[int, ...]


# ---------------------------------------------------------------------------
# Encoded lists (the list object construction)


def enc_nil() -> PVal:
    return InlV(UNIT)


def enc_cons(x: PVal, l: PVal) -> PVal:
    """Cons by table shift; the singleton case needs only the new element."""
    match l:
        case InlV(_):
            return InrV(PairV(finmap({nat(0): x}), nat(0)))
        case InrV(PairV(table, NatV(n))):
            shifted = {nat(0): x}
            for k, v in table.entries:
                shifted[nat(k.n + 1)] = v
            return InrV(PairV(finmap(shifted), nat(n + 1)))
    raise TypeMismatch("not an encoded list")


def enc_invariant_ok(l: PVal) -> bool:
    """def (l m) iff m <= n, checked over the whole finite table."""
    match l:
        case InlV(_):
            return True
        case InrV(PairV(FinMapV(entries), NatV(n))):
            keys = sorted(k.n for k, _ in entries)
            return keys == list(range(n + 1))
    return False


def enc_fold(c: PVal, f: Callable[[PVal, PVal], PVal], l: PVal) -> PVal:
    """Fold for the ``1 + A x __`` signature via recursion on the length index."""
    if not enc_invariant_ok(l):
        raise InvariantViolation("list definedness pattern broken")
    match l:
        case InlV(_):
            return c
        case InrV(PairV(table, NatV(n))):
            return _enc_h(table, n, c, f)
    raise TypeMismatch("not an encoded list")


def _enc_h(table: FinMapV, n: int, c, f) -> PVal:
    head = table.lookup(nat(0))
    if n == 0:
        return f(head, c)
    shifted = finmap(
        {nat(k.n - 1): v for k, v in table.entries if k.n >= 1}
    )
    return f(head, _enc_h(shifted, n - 1, c, f))


def enc_from_list(values: Sequence[PVal]) -> PVal:
    out = enc_nil()
    for v in reversed(values):
        out = enc_cons(v, out)
    return out


def enc_to_list(l: PVal) -> list[PVal]:
    match l:
        case InlV(_):
            return []
        case InrV(PairV(table, NatV(n))):
            return [table.lookup(nat(i)) for i in range(n + 1)]
    raise TypeMismatch("not an encoded list")


# ---------------------------------------------------------------------------
# Trees as kernel values


def path_to_pval(p: Path) -> PVal:
    out: PVal = InlV(UNIT)
    for j in reversed(p):
        out = InrV(PairV(nat(j), out))
    return out


def pval_to_path(v: PVal) -> Path:
    out: list[int] = []
    while isinstance(v, InrV):
        step = v.value
        out.append(step.fst.n)
        v = step.snd
    return tuple(out)


def make_tree(label: dict[Path, PVal], depth_map: dict[Path, int], anchor: PVal) -> PVal:
    l = finmap({path_to_pval(p): v for p, v in label.items()})
    d = finmap({path_to_pval(p): nat(k) for p, k in depth_map.items()})
    return PairV(l, PairV(d, anchor))


def tree_parts(t: PVal) -> tuple[FinMapV, FinMapV, PVal]:
    if not (isinstance(t, PairV) and isinstance(t.snd, PairV)):
        raise TypeMismatch("not a tree value")
    l, rest = t.fst, t.snd
    if not (isinstance(l, FinMapV) and isinstance(rest.fst, FinMapV)):
        raise TypeMismatch("not a tree value")
    return l, rest.fst, rest.snd


def tree_label_at(t: PVal, p: Path) -> PVal:
    l, _, _ = tree_parts(t)
    return l.lookup(path_to_pval(p))


def tree_depth(t: PVal) -> Optional[int]:
    _, d, _ = tree_parts(t)
    v = d.lookup(path_to_pval(()))
    return v.n if isinstance(v, NatV) else None


def tree_anchor(t: PVal) -> PVal:
    return tree_parts(t)[2]


def tree_tables(t: PVal) -> tuple[dict[Path, PVal], dict[Path, int]]:
    l, d, _ = tree_parts(t)
    return (
        {pval_to_path(k): v for k, v in l.entries},
        {pval_to_path(k): v.n for k, v in d.entries},
    )


def same_shape(t1: PVal, t2: PVal) -> bool:
    """Equality of the two path maps, ignoring the anchor."""
    l1, d1, _ = tree_parts(t1)
    l2, d2, _ = tree_parts(t2)
    return l1 == l2 and d1 == d2


# ---------------------------------------------------------------------------
# The initial algebra handle


class InitialAlgebra:
    """Datatype constructed for a polynomial signature in normal form.

    ``param_shape`` optionally records which factors of each constructor's
    parameter tuple carry the datatype's type parameter (grouped per
    summand); it is only consumed by ``param_map``.
    """

    def __init__(self, nf: PolyNF, param_shape: Optional[list[list[bool]]] = None):
        self.nf = nf
        self.n = len(nf.summands)
        self.param_shape = param_shape
        self._destruct_cache: dict[PVal, tuple[int, PVal, list[PVal]]] = {}
        try:
            self.empty_constants = ty_card(nf.summands[0][0]) == 0
        except QuasiError:
            self.empty_constants = False

    # A = sum over summands of (A_i + 1)
    def node_label(self, i: int) -> PVal:
        return inject(i, self.n, InrV(UNIT))

    def leaf_label(self, i: int, y: PVal) -> PVal:
        return inject(i, self.n, InlV(y))

    def construct(self, i: int, param: PVal, children: Sequence[PVal]) -> PVal:
        a_i, k = self.nf.summands[i]
        if len(children) != k:
            raise TagOutOfRange(f"constructor {i} expects {k} subtrees")
        label: dict[Path, PVal] = {(): self.node_label(i), (0,): self.leaf_label(i, param)}
        depth_map: dict[Path, int] = {(0,): 0}
        child_depths = []
        for j, t in enumerate(children, start=1):
            lt, dt = tree_tables(t)
            dj = dt.get(())
            if dj is None:
                raise InvariantViolation("subtree lacks a root depth")
            child_depths.append(dj)
            for p, v in lt.items():
                label[(j,) + p] = v
            for p, v in dt.items():
                depth_map[(j,) + p] = v
        depth_map[()] = 1 + max(child_depths, default=0)
        anchor = param if k == 0 else tree_anchor(children[0])
        return make_tree(label, depth_map, anchor)

    def sel(self, j: int, t: PVal) -> PVal:
        """Generic selector: both path maps composed with cons j; anchor kept."""
        if j < 1:
            raise TagOutOfRange("selectors are indexed from 1")
        lt, dt = tree_tables(t)
        label = {p[1:]: v for p, v in lt.items() if p[:1] == (j,)}
        depth_map = {p[1:]: v for p, v in dt.items() if p[:1] == (j,)}
        return make_tree(label, depth_map, tree_anchor(t))

    def destruct(self, t: PVal) -> tuple[int, PVal, list[PVal]]:
        """Read off constructor index, parameter, and immediate subtrees."""
        cached = self._destruct_cache.get(t)
        if cached is not None:
            return cached
        out = self._destruct(t)
        self._destruct_cache[t] = out
        return out

    def _destruct(self, t: PVal) -> tuple[int, PVal, list[PVal]]:
        root = tree_label_at(t, ())
        if not root.defined():
            raise NotInCarrier("no label at the root")
        try:
            i, z = project(root, self.n)
        except TagOutOfRange as e:
            raise NotInCarrier(str(e))
        if z != InrV(UNIT):
            raise NotInCarrier("root is not a constructor node")
        slot = tree_label_at(t, (0,))
        if not slot.defined():
            raise NotInCarrier("no parameter in the leaf slot")
        try:
            i2, y = project(slot, self.n)
        except TagOutOfRange as e:
            raise NotInCarrier(str(e))
        if i2 != i or not isinstance(y, InlV):
            raise NotInCarrier("leaf slot disagrees with the root constructor")
        k = self.nf.summands[i][1]
        return i, y.value, [self.sel(j, t) for j in range(1, k + 1)]

    # ---- fold -------------------------------------------------------------

    def fold(self, algebra: Sequence[Callable[[PVal, list], object]], t: PVal):
        """Unique algebra morphism, total on the carrier.

        ``algebra[i]`` receives the parameter and the list of recursive
        results for summand i.  Reaching an exceptional branch means the
        input was not constructor-generated and raises ``NotInCarrier``.
        """
        dep = tree_depth(t)
        if dep is None:
            raise NotInCarrier("tree has no depth at the root")
        return self._f(dep, t, algebra)

    def _f(self, n: int, t: PVal, algebra):
        if n <= 0:
            raise NotInCarrier("depth budget exhausted below the structure")
        i, w, children = self.destruct(t)
        results = [self._f(n - 1, c, algebra) for c in children]
        return algebra[i](w, results)

    def primrec(self, body: Sequence[Callable[[PVal, list], object]]):
        """Primitive recursion derived from fold by pairing with the identity."""
        g = self.primrec_pairing(body)

        def run(t: PVal):
            return g(t)[1]

        return run

    def primrec_pairing(self, body):
        """The simultaneous definition g : T -> T x B; its first component is id."""

        def alg_for(i):
            def alg(w, pairs):
                rebuilt = self.construct(i, w, [p[0] for p in pairs])
                return (rebuilt, body[i](w, pairs))

            return alg

        palg = [alg_for(i) for i in range(self.n)]
        return lambda t: self.fold(palg, t)

    # ---- Lambek's lemma and case ------------------------------------------

    def structure_map(self, fv: PVal) -> PVal:
        """alpha : F T -> T on encoded functor values whose X slots hold trees."""
        i, w, children = poly_unvalue(self.nf, fv)
        return self.construct(i, w, children)

    def lambek_inverse(self) -> Callable[[PVal], PVal]:
        """The two-sided inverse of the structure map, obtained as a fold."""

        def alg_for(i):
            def alg(w, results):
                return poly_value(
                    self.nf, i, w, [self.structure_map(r) for r in results]
                )

            return alg

        alg = [alg_for(i) for i in range(self.n)]
        return lambda t: self.fold(alg, t)

    def case_op(self, branches: Sequence[Callable[[PVal, list], PVal]], t: PVal) -> PVal:
        """Decompose once, then dispatch on the constructor; strict in t."""
        if not t.defined():
            return UNDEF
        inv = self.lambek_inverse()
        i, w, children = poly_unvalue(self.nf, inv(t))
        return branches[i](w, children)

    # ---- membership and enumeration ----------------------------------------

    def is_in_T(self, t: PVal, max_depth: Optional[int] = None) -> bool:
        """Bounded membership in the smallest subtype closed under the constructors.

        Selectors keep the parent's anchor, so subtrees are validated up to
        their path maps; the anchor is tied to the leftmost constant once,
        at the top.
        """
        dep = tree_depth(t)
        if dep is None:
            return False
        budget = dep if max_depth is None else min(dep, max_depth)
        try:
            if not self._member_shape(t, budget):
                return False
            return tree_anchor(t) == self._leftmost_param(t, budget)
        except QuasiError:
            return False

    def _member_shape(self, t: PVal, budget: int) -> bool:
        if budget <= 0:
            return False
        try:
            i, w, children = self.destruct(t)
        except NotInCarrier:
            return False
        if any(not self._member_shape(c, budget - 1) for c in children):
            return False
        return same_shape(self.construct(i, w, children), t)

    def _leftmost_param(self, t: PVal, budget: int) -> PVal:
        i, w, children = self.destruct(t)
        if not children:
            return w
        if budget <= 0:
            raise NotInCarrier("no constant below the leftmost spine")
        return self._leftmost_param(children[0], budget - 1)

    def enumerate_trees(self, max_depth: int, nat_bound: int = 2) -> list[PVal]:
        """All carrier elements of depth at most ``max_depth``."""
        params = [
            enumerate_ty(a, nat_bound=nat_bound) for a, _ in self.nf.summands
        ]
        layers: list[PVal] = [self.construct(0, y, []) for y in params[0]]
        seen = {t for t in layers}
        for _ in range(max_depth - 1):
            new = []
            for i in range(1, self.n):
                _, k = self.nf.summands[i]
                for y in params[i]:
                    for combo in _tuples(layers, k):
                        t = self.construct(i, y, list(combo))
                        if t not in seen:
                            seen.add(t)
                            new.append(t)
            if not new:
                break
            layers.extend(new)
        return [t for t in layers if (tree_depth(t) or 0) <= max_depth]


def _tuples(options, k):
    if k == 0:
        yield ()
        return
    for rest in _tuples(options, k - 1):
        for o in options:
            yield (o,) + rest


def build_initial(nf: PolyNF, param_shape=None) -> InitialAlgebra:
    return InitialAlgebra(nf, param_shape)


# ---------------------------------------------------------------------------
# The natural numbers as the initial algebra for X |-> 1 + X


NAT_NF = PolyNF(((Unit(), 0), (Unit(), 1)))


def nat_algebra() -> InitialAlgebra:
    return build_initial(NAT_NF)


def church(handle: InitialAlgebra, n: int) -> PVal:
    t = handle.construct(0, UNIT, [])
    for _ in range(n):
        t = handle.construct(1, UNIT, [t])
    return t


def unchurch(t: PVal) -> int:
    dep = tree_depth(t)
    if dep is None:
        raise NotInCarrier("not an encoded natural")
    return dep - 1


# ---------------------------------------------------------------------------
# Derived principles


def induction_via_fold(predicate: Callable[[int], bool], bound: int) -> bool:
    """Bounded induction evidence: the recursively built conjunction-prefix
    Q satisfies Q(n) iff P(m) for all m <= n."""
    handle = nat_algebra()

    def zero_case(_w, _pairs):
        return logical(predicate(0))

    def suc_case(_w, pairs):
        prev_tree, q = pairs[0]
        m = unchurch(prev_tree)
        return logical(holds(q) and predicate(m + 1))

    q_of = handle.primrec([zero_case, suc_case])
    for n in range(bound + 1):
        expected = all(predicate(m) for m in range(n + 1))
        if holds(q_of(church(handle, n))) != expected:
            return False
    return True


def subtype_fold(
    handle: InitialAlgebra,
    algebra: Sequence[Callable[[PVal, list[PVal]], PVal]],
    phi: Callable[[PVal], bool],
    t: PVal,
) -> PVal:
    """Fold into a subtype, lifted through ``1 -/-> a``.

    Carrier values are one-point tables; the lifted algebra unwraps them,
    applies the underlying map, and rewraps.  The result is certified to
    be defined and to satisfy phi; failure means the algebra was not
    closed under the subtype and raises ``SubtypeEscape``.
    """

    def lifted_for(i):
        def alg(w, wrapped):
            vals = [apply_pval(r, UNIT) for r in wrapped]
            if any(not v.defined() or not phi(v) for v in vals):
                return finmap({})
            return finmap({UNIT: algebra[i](w, vals)})

        return alg

    lifted = [lifted_for(i) for i in range(handle.n)]
    out = apply_pval(handle.fold(lifted, t), UNIT)
    if not out.defined() or not phi(out):
        raise SubtypeEscape("algebra left the subtype")
    return out


def param_map(
    src: InitialAlgebra,
    dst: InitialAlgebra,
    f: Callable[[PVal], PVal],
    t: PVal,
) -> PVal:
    """Relabel parameter positions by ``f``: fold with the target structure
    map composed with the parametrized map action.

    ``param_shape[i]`` lists, per constructor collected into summand i
    (several for the constants summand, one otherwise), which factors of
    its parameter tuple carry the type parameter.
    """
    if src.param_shape is None:
        raise InvariantViolation("source handle lacks parameter-position data")

    def map_param(i: int, w: PVal) -> PVal:
        groups = src.param_shape[i]
        j, inner = project(w, len(groups)) if len(groups) > 1 else (0, w)
        factors = groups[j]
        parts = _split_tuple(inner, len(factors))
        mapped = [f(p) if is_param else p for p, is_param in zip(parts, factors)]
        return inject(j, len(groups), _join_tuple(mapped))

    def alg_for(i):
        return lambda w, results: dst.construct(i, map_param(i, w), results)

    return src.fold([alg_for(i) for i in range(src.n)], t)


def _split_tuple(v: PVal, k: int) -> list[PVal]:
    if k == 0:
        return []
    out = []
    for _ in range(k - 1):
        out.append(v.fst)
        v = v.snd
    out.append(v)
    return out


def _join_tuple(parts: list[PVal]) -> PVal:
    if not parts:
        return UNIT
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = PairV(p, out)
    return out
