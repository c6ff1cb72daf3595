"""Domain layer: orders via partial chains, fixed points, datatypes as cpos.

A carrier's order is packaged with a sampling set; completeness is never
assumed, only checked on generated chains up to a bound.  Suprema of
partial chains follow the defining lemma: defined exactly when some
element is defined.  A chain still strictly increasing at its bound is
an honest failure (``NotStabilized``), since genuine suprema would need
the model's completeness.  The ambient assumptions are fixed globally:
the naturals are a flat cpo, hence booleans are flat and sums of cpos
are again cpos.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .final import FinalCoalgebra
from .functors import project
from .initial import InitialAlgebra, make_tree, tree_anchor, tree_tables
from .kernel import (
    FALSE,
    TRUE,
    UNDEF,
    Bool,
    InlV,
    InrV,
    Nat,
    PairV,
    PVal,
    QuasiError,
    Ty,
    Unit,
    UnitV,
    apply_pval,
    enumerate_ty,
    eq_strong,
    finmap,
    is_true,
    nat,
)


class NotStabilized(QuasiError):
    """The chain was still moving at the sampling bound."""


class MonotonicityViolation(QuasiError):
    pass


class NotPointed(QuasiError):
    pass


@dataclass
class CpoDescriptor:
    """A partial order with sampling data; ``bottom`` witnesses pointedness."""

    name: str
    le: Callable[[PVal, PVal], bool]
    sample: tuple[PVal, ...] = ()
    bottom: Optional[PVal] = None

    def equal(self, a: PVal, b: PVal) -> bool:
        return self.le(a, b) and self.le(b, a)


def lifted_le(cpo: CpoDescriptor, x: PVal, y: PVal) -> bool:
    """Order on partial elements: if x is defined then y is, and below it."""
    if not x.defined():
        return True
    return y.defined() and cpo.le(x, y)


PartialChain = Callable[[int], PVal]


def check_chain(cpo: CpoDescriptor, ch: PartialChain, bound: int) -> list[PVal]:
    xs = [ch(i) for i in range(bound)]
    for a, b in zip(xs, xs[1:]):
        if not lifted_le(cpo, a, b):
            raise MonotonicityViolation(f"{a!r} not below {b!r}")
    return xs


def chain_sup_info(cpo: CpoDescriptor, ch: PartialChain, bound: int) -> tuple[PVal, int]:
    """Supremum of a partial chain plus the stabilization index."""
    xs = check_chain(cpo, ch, bound)
    defined = [(i, x) for i, x in enumerate(xs) if x.defined()]
    if not defined:
        return UNDEF, bound
    last = xs[-1]
    if len(xs) < 2 or not (xs[-2].defined() and cpo.equal(xs[-2], last)):
        raise NotStabilized(f"chain still moving at bound {bound}")
    idx = len(xs) - 1
    while idx > 0 and xs[idx - 1].defined() and cpo.equal(xs[idx - 1], last):
        idx -= 1
    return last, idx


def chain_sup(cpo: CpoDescriptor, ch: PartialChain, bound: int) -> PVal:
    return chain_sup_info(cpo, ch, bound)[0]


# ---------------------------------------------------------------------------
# Descriptor constructors


def flat_cpo(carrier: Ty, name: str = "", nat_bound: int = 4) -> CpoDescriptor:
    try:
        sample = tuple(enumerate_ty(carrier, nat_bound))
    except QuasiError:
        sample = ()
    return CpoDescriptor(
        name or f"flat({carrier!r})",
        le=lambda a, b: is_true(eq_strong(a, b, 4)),
        sample=sample,
    )


NAT_FLAT = flat_cpo(Nat(), "Nat")
BOOL_FLAT = flat_cpo(Bool(), "Bool")
UNIT_CPO = flat_cpo(Unit(), "Unit")


def product_cpo(a: CpoDescriptor, b: CpoDescriptor) -> CpoDescriptor:
    def le(x: PVal, y: PVal) -> bool:
        return (
            isinstance(x, PairV)
            and isinstance(y, PairV)
            and a.le(x.fst, y.fst)
            and b.le(x.snd, y.snd)
        )

    bottom = None
    if a.bottom is not None and b.bottom is not None:
        bottom = PairV(a.bottom, b.bottom)
    sample = tuple(
        PairV(x, y) for x in a.sample[:3] for y in b.sample[:3]
    )
    return CpoDescriptor(f"({a.name} x {b.name})", le, sample, bottom)


def pfun_cpo(domain: Ty, b: CpoDescriptor, nat_bound: int = 6) -> CpoDescriptor:
    """Partial maps out of a sampled domain, pointwise; pointed by the
    everywhere-undefined map."""
    dom = tuple(enumerate_ty(domain, nat_bound))

    def le(f: PVal, g: PVal) -> bool:
        return all(lifted_le(b, apply_pval(f, x), apply_pval(g, x)) for x in dom)

    sample = [finmap({})]
    for v in b.sample[:2]:
        sample.append(finmap({dom[0]: v}))
        sample.append(finmap({x: v for x in dom}))
    return CpoDescriptor(
        f"({domain!r} -/-> {b.name})", le, tuple(sample), bottom=finmap({})
    )


def cfun_cpo(a_dom: Ty, b: CpoDescriptor, nat_bound: int = 4) -> CpoDescriptor:
    """Total (continuous) maps, pointwise order on the sampled domain."""
    dom = tuple(enumerate_ty(a_dom, nat_bound))

    def le(f: PVal, g: PVal) -> bool:
        return all(
            (fx := apply_pval(f, x)).defined()
            and (gx := apply_pval(g, x)).defined()
            and b.le(fx, gx)
            for x in dom
        )

    sample = tuple(finmap({x: v for x in dom}) for v in b.sample[:3])
    return CpoDescriptor(f"({a_dom!r} ->c {b.name})", le, sample)


def sum_cpo(a: CpoDescriptor, b: CpoDescriptor) -> CpoDescriptor:
    """Sum order: components within a tag, distinct tags incomparable.

    Sound under the ambient flatness of Bool: a monotone chain settles
    its tag before its payload moves.
    """

    def le(x: PVal, y: PVal) -> bool:
        match (x, y):
            case (InlV(u), InlV(v)):
                return a.le(u, v)
            case (InrV(u), InrV(v)):
                return b.le(u, v)
        return False

    sample = tuple(
        [InlV(v) for v in a.sample[:3]] + [InrV(v) for v in b.sample[:3]]
    )
    return CpoDescriptor(f"({a.name} + {b.name})", le, sample)


# ---------------------------------------------------------------------------
# Least fixed points


def kleene_chain(cpo: CpoDescriptor, f: Callable[[PVal], PVal], bound: int) -> list[PVal]:
    if cpo.bottom is None:
        raise NotPointed(f"{cpo.name} has no bottom element")
    xs = [cpo.bottom]
    for _ in range(bound):
        nxt = f(xs[-1])
        if not cpo.le(xs[-1], nxt):
            raise MonotonicityViolation("function is not monotone on its own chain")
        xs.append(nxt)
        if cpo.equal(xs[-2], nxt):
            break
    return xs


def lfp(cpo: CpoDescriptor, f: Callable[[PVal], PVal], bound: int = 32) -> PVal:
    """Least fixed point as the supremum of the iteration chain from bottom."""
    xs = kleene_chain(cpo, f, bound)
    if not cpo.equal(xs[-1], xs[-2] if len(xs) >= 2 else xs[-1]):
        raise NotStabilized(f"no fixed point within {bound} iterations")
    out = xs[-1]
    if not cpo.equal(f(out), out):
        raise NotStabilized("iteration settled on a non-fixed point")
    return out


def order_axiom_failures(cpo: CpoDescriptor) -> list[str]:
    """Reflexivity, transitivity, antisymmetry over the descriptor's samples."""
    out = []
    s = cpo.sample
    for x in s:
        if not cpo.le(x, x):
            out.append(f"not reflexive at {x!r}")
    for x in s:
        for y in s:
            if cpo.le(x, y) and cpo.le(y, x) and repr(x) != repr(y):
                if not is_true(eq_strong(x, y, 3)):
                    out.append(f"antisymmetry fails at {x!r}, {y!r}")
            for z in s:
                if cpo.le(x, y) and cpo.le(y, z) and not cpo.le(x, z):
                    out.append(f"transitivity fails at {x!r}, {y!r}, {z!r}")
    return out


def minimality_failures(
    cpo: CpoDescriptor,
    f: Callable[[PVal], PVal],
    fixed: PVal,
    candidates: Sequence[PVal],
) -> list[str]:
    """The fixed point must sit below every sampled pre-fixed point."""
    out = []
    for p in candidates:
        if cpo.le(f(p), p) and not cpo.le(fixed, p):
            out.append(f"not minimal against {p!r}")
    return out


# ---------------------------------------------------------------------------
# Initial datatypes as cpos


@dataclass
class DomainInitial:
    """Tree datatype with the order inherited from the universal tree type."""

    handle: InitialAlgebra
    param_cpos: list[CpoDescriptor]  # per summand, ordering A_i

    def label_le(self, a: PVal, b: PVal) -> bool:
        i, za = project(a, self.handle.n)
        j, zb = project(b, self.handle.n)
        if i != j:
            return False
        match (za, zb):
            case (InrV(UnitV()), InrV(UnitV())):
                return True
            case (InlV(x), InlV(y)):
                return self.param_cpos[i].le(x, y)
        return False

    def tree_le(self, t1: PVal, t2: PVal) -> bool:
        l1, d1 = tree_tables(t1)
        l2, d2 = tree_tables(t2)
        for p, v in l1.items():
            if p not in l2 or not self.label_le(v, l2[p]):
                return False
        for p, v in d1.items():
            if p not in d2 or d2[p] != v:  # depths ordered flatly
                return False
        return self.param_cpos[0].le(tree_anchor(t1), tree_anchor(t2))

    def as_cpo(self, sample: Sequence[PVal] = ()) -> CpoDescriptor:
        return CpoDescriptor("treetype", self.tree_le, tuple(sample))

    def chain_sup(self, trees: Sequence[PVal]) -> PVal:
        """Pointwise supremum of a finite monotone chain of trees."""
        for a, b in zip(trees, trees[1:]):
            if not self.tree_le(a, b):
                raise MonotonicityViolation("tree chain is not increasing")
        label: dict = {}
        depth: dict = {}
        for t in trees:
            lt, dt = tree_tables(t)
            label.update(lt)
            depth.update(dt)
        return make_tree(label, depth, tree_anchor(trees[-1]))

    def constructor_monotone_failures(
        self, i: int, arg_pairs: Sequence[tuple]
    ) -> list[str]:
        """Comparable argument tuples must construct comparable trees."""
        out = []
        for (y1, ts1), (y2, ts2) in arg_pairs:
            t1 = self.handle.construct(i, y1, ts1)
            t2 = self.handle.construct(i, y2, ts2)
            if not self.tree_le(t1, t2):
                out.append(f"constructor {i} broke order on {y1!r}")
        return out

    def fold_continuity_failures(
        self,
        algebra,
        b_cpo: CpoDescriptor,
        chains: Sequence[Sequence[PVal]],
    ) -> list[str]:
        """Fold must preserve order along chains and send the chain's
        supremum to the supremum of the folded chain."""
        out = []
        for chain in chains:
            results = [self.handle.fold(algebra, t) for t in chain]
            for a, b in zip(results, results[1:]):
                if not b_cpo.le(a, b):
                    out.append("fold is not monotone along the chain")
            sup_t = self.chain_sup(chain)
            lhs = self.handle.fold(algebra, sup_t)
            if not b_cpo.equal(lhs, results[-1]):
                out.append("fold does not commute with the chain supremum")
        return out


def domain_initial(handle: InitialAlgebra, param_cpos: Sequence[CpoDescriptor]) -> DomainInitial:
    return DomainInitial(handle, list(param_cpos))


# ---------------------------------------------------------------------------
# Final process types as cpos


@dataclass
class DomainFinal:
    """Process type over continuous path maps, ordered by observation."""

    handle: FinalCoalgebra
    param_cpos: list[CpoDescriptor]  # per summand, ordering A_i

    def label_le(self, a: PVal, b: PVal) -> bool:
        i, xa = project(a, self.handle.n)
        j, xb = project(b, self.handle.n)
        return i == j and self.param_cpos[i].le(xa, xb)

    def tree_le(self, t1: PVal, t2: PVal, depth: int = 4) -> bool:
        for p in self.handle.paths_up_to(depth):
            o1 = self.handle.observe(t1, p)
            o2 = self.handle.observe(t2, p)
            if o1.defined() and not (o2.defined() and self.label_le(o1, o2)):
                return False
        return True

    def chain_sup(self, trees: Sequence[PVal], depth: int = 4) -> PVal:
        """Pointwise supremum on observed paths: the last defined label."""
        for a, b in zip(trees, trees[1:]):
            if not self.tree_le(a, b, depth):
                raise MonotonicityViolation("tree chain is not increasing")
        from .final import _as_ptree

        def value_at(path):
            out = UNDEF
            for t in trees:
                v = self.handle.observe(t, path)
                if v.defined():
                    out = v
            return out

        return _as_ptree(value_at)

    def unfold_monotone_failures(
        self, d, seed_pairs: Sequence[tuple], depth: int = 3
    ) -> list[str]:
        out = []
        for z1, z2 in seed_pairs:
            t1 = self.handle.unfold(d, z1)
            t2 = self.handle.unfold(d, z2)
            if not self.tree_le(t1, t2, depth):
                out.append(f"unfold not monotone between seeds {z1!r}, {z2!r}")
        return out

    def closure_failures(self, chains: Sequence[Sequence[PVal]], depth: int = 3) -> list[str]:
        """The carrier must be closed under sampled chain suprema."""
        out = []
        for chain in chains:
            sup = self.chain_sup(chain, depth)
            out.extend(self.handle.membership_failures(sup, depth))
        return out


def domain_final(handle: FinalCoalgebra, param_cpos: Sequence[CpoDescriptor]) -> DomainFinal:
    return DomainFinal(handle, list(param_cpos))


# ---------------------------------------------------------------------------
# A tiny non-flat order for exercising the domain layer

VERT = CpoDescriptor(
    "vert",
    le=lambda a, b: a == b or (a == FALSE and b == TRUE),
    sample=(FALSE, TRUE),
    bottom=FALSE,
)
