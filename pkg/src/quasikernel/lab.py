"""Finite-carrier laboratory: reflexive relations and subset-space categories.

Two concrete quasitopos-style categories at desk scale, with enough
(co)limit machinery to certify structural facts by exhaustive search:
regular monomorphisms are found (or refuted) by searching equalizers of
small cospans, and choice-map existence is decided by probing with all
set-functions out of a small object pool.  Morphism equality is graph
equality; objects are compared up to listed-atom identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .kernel import QuasiError

RERE = "rere"
SPAP = "spap"


class LabError(QuasiError):
    pass


@dataclass(frozen=True)
class FinObj:
    kind: str
    carrier: tuple[int, ...]
    # rere: frozenset of ordered pairs (reflexive); spap: frozenset of frozensets
    structure: frozenset

    def __post_init__(self):
        if self.kind == RERE:
            for x in self.carrier:
                if (x, x) not in self.structure:
                    raise LabError("relation must be reflexive")
            for x, y in self.structure:
                if x not in self.carrier or y not in self.carrier:
                    raise LabError("relation off the carrier")
        elif self.kind == SPAP:
            for a in self.structure:
                if not a <= set(self.carrier):
                    raise LabError("family member off the carrier")
        else:
            raise LabError(f"unknown category {self.kind!r}")


@dataclass(frozen=True)
class FinMor:
    src: FinObj
    dst: FinObj
    graph: tuple[tuple[int, int], ...]

    def __call__(self, x: int) -> int:
        for a, b in self.graph:
            if a == x:
                return b
        raise LabError(f"{x} outside the source carrier")

    def image(self, subset: Iterable[int]) -> frozenset:
        return frozenset(self(x) for x in subset)


def rere_obj(carrier: Iterable[int], edges: Iterable[tuple[int, int]] = ()) -> FinObj:
    atoms = tuple(sorted(set(carrier)))
    rel = set(edges) | {(x, x) for x in atoms}
    return FinObj(RERE, atoms, frozenset(rel))


def discrete(carrier: Iterable[int]) -> FinObj:
    return rere_obj(carrier)


def indiscrete(carrier: Iterable[int]) -> FinObj:
    atoms = list(carrier)
    return rere_obj(atoms, [(x, y) for x in atoms for y in atoms])


def spap_obj(carrier: Iterable[int], family: Iterable[Iterable[int]] = ()) -> FinObj:
    atoms = tuple(sorted(set(carrier)))
    return FinObj(SPAP, atoms, frozenset(frozenset(a) for a in family))


def preserves_structure(src: FinObj, dst: FinObj, mapping: dict[int, int]) -> bool:
    if src.kind == RERE:
        return all((mapping[x], mapping[y]) in dst.structure for x, y in src.structure)
    return all(
        frozenset(mapping[x] for x in a) in dst.structure for a in src.structure
    )


def mor(src: FinObj, dst: FinObj, mapping: dict[int, int]) -> FinMor:
    if src.kind != dst.kind:
        raise LabError("morphism across categories")
    if set(mapping) != set(src.carrier):
        raise LabError("graph is not total")
    if not all(v in dst.carrier for v in mapping.values()):
        raise LabError("graph lands off the carrier")
    if not preserves_structure(src, dst, mapping):
        raise LabError("not structure-preserving")
    return FinMor(src, dst, tuple(sorted(mapping.items())))


def identity(a: FinObj) -> FinMor:
    return mor(a, a, {x: x for x in a.carrier})


def compose(f: FinMor, g: FinMor) -> FinMor:
    if g.dst != f.src:
        raise LabError("non-composable")
    return mor(g.src, f.dst, {x: f(g(x)) for x in g.src.carrier})


def hom_set(a: FinObj, b: FinObj) -> list[FinMor]:
    """All morphisms a -> b, by filtering every total function."""
    atoms = a.carrier
    out = []
    for values in itertools.product(b.carrier, repeat=len(atoms)):
        mapping = dict(zip(atoms, values))
        if preserves_structure(a, b, mapping):
            out.append(FinMor(a, b, tuple(sorted(mapping.items()))))
    return out


# ---------------------------------------------------------------------------
# Limits and colimits


def initial(kind: str) -> FinObj:
    return rere_obj(()) if kind == RERE else spap_obj(())


def terminal(kind: str) -> FinObj:
    if kind == RERE:
        return rere_obj((0,))
    return spap_obj((0,), [(), (0,)])


@dataclass(frozen=True)
class ProductData:
    obj: FinObj
    proj1: FinMor
    proj2: FinMor
    atom_of: tuple[tuple[tuple[int, int], int], ...]

    def atom(self, x: int, y: int) -> int:
        return dict(self.atom_of)[(x, y)]


def product(a: FinObj, b: FinObj) -> ProductData:
    pairs = [(x, y) for x in a.carrier for y in b.carrier]
    atom_of = {p: i for i, p in enumerate(pairs)}
    carrier = tuple(range(len(pairs)))
    if a.kind == RERE:
        structure = frozenset(
            (atom_of[(x, y)], atom_of[(x2, y2)])
            for (x, y) in pairs
            for (x2, y2) in pairs
            if (x, x2) in a.structure and (y, y2) in b.structure
        )
    else:
        structure = frozenset(
            frozenset(atom_of[p] for p in subset)
            for subset in _subsets(pairs)
            if frozenset(x for x, _ in subset) in a.structure
            and frozenset(y for _, y in subset) in b.structure
        )
    obj = FinObj(a.kind, carrier, structure)
    p1 = mor(obj, a, {atom_of[(x, y)]: x for (x, y) in pairs})
    p2 = mor(obj, b, {atom_of[(x, y)]: y for (x, y) in pairs})
    return ProductData(obj, p1, p2, tuple(sorted((p, i) for p, i in atom_of.items())))


def _subsets(items: Sequence):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def full_subobject(obj: FinObj, subset: Iterable[int]) -> FinObj:
    """The regular-subobject structure induced on a subset of the carrier."""
    atoms = frozenset(subset)
    if obj.kind == RERE:
        structure = frozenset(
            (x, y) for (x, y) in obj.structure if x in atoms and y in atoms
        )
    else:
        structure = frozenset(a for a in obj.structure if a <= atoms)
    return FinObj(obj.kind, tuple(sorted(atoms)), structure)


@dataclass(frozen=True)
class EqualizerData:
    obj: FinObj
    include: FinMor


def equalizer(f: FinMor, g: FinMor) -> EqualizerData:
    if f.src != g.src or f.dst != g.dst:
        raise LabError("not a parallel pair")
    atoms = [x for x in f.src.carrier if f(x) == g(x)]
    obj = full_subobject(f.src, atoms)
    return EqualizerData(obj, mor(obj, f.src, {x: x for x in atoms}))


@dataclass(frozen=True)
class CoproductData:
    obj: FinObj
    inj1: FinMor
    inj2: FinMor


def coproduct(a: FinObj, b: FinObj) -> CoproductData:
    la = len(a.carrier)
    left = {x: i for i, x in enumerate(a.carrier)}
    right = {y: la + i for i, y in enumerate(b.carrier)}
    carrier = tuple(range(la + len(b.carrier)))
    if a.kind == RERE:
        structure = frozenset(
            {(left[x], left[y]) for (x, y) in a.structure}
            | {(right[x], right[y]) for (x, y) in b.structure}
        )
    else:
        structure = frozenset(
            {frozenset(left[x] for x in s) for s in a.structure}
            | {frozenset(right[x] for x in s) for s in b.structure}
        )
    obj = FinObj(a.kind, carrier, structure)
    i1 = mor(a, obj, left)
    i2 = mor(b, obj, right)
    return CoproductData(obj, i1, i2)


def pullback(f: FinMor, g: FinMor) -> FinObj:
    """Pullback as an equalizer of a product span; used to test disjointness."""
    if f.dst != g.dst:
        raise LabError("not a cospan")
    prod = product(f.src, g.src)
    left = compose(f, prod.proj1)
    right = compose(g, prod.proj2)
    return equalizer(left, right).obj


# ---------------------------------------------------------------------------
# Isomorphism testing


def is_iso(m: FinMor) -> bool:
    values = [m(x) for x in m.src.carrier]
    if len(set(values)) != len(values) or set(values) != set(m.dst.carrier):
        return False
    inverse = {m(x): x for x in m.src.carrier}
    return preserves_structure(m.dst, m.src, inverse)


def subobject_iso(m1: FinMor, m2: FinMor) -> bool:
    """Do two monos into the same object present the same subobject?"""
    if m1.dst != m2.dst:
        return False
    if len(m1.src.carrier) != len(m2.src.carrier):
        return False
    for values in itertools.permutations(m2.src.carrier):
        mapping = dict(zip(m1.src.carrier, values))
        if any(m2(mapping[x]) != m1(x) for x in m1.src.carrier):
            continue
        if preserves_structure(m1.src, m2.src, mapping) and preserves_structure(
            m2.src, m1.src, {v: k for k, v in mapping.items()}
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# Object pools for exhaustive searches


def all_objects(kind: str, max_size: int = 2) -> list[FinObj]:
    out = []
    for size in range(max_size + 1):
        atoms = tuple(range(size))
        if kind == RERE:
            off_diag = [(x, y) for x in atoms for y in atoms if x != y]
            for edges in _subsets(off_diag):
                out.append(rere_obj(atoms, edges))
        else:
            for family in _subsets(list(_subsets(atoms))):
                out.append(spap_obj(atoms, [frozenset(s) for s in family]))
    return out


def is_regular_mono(m: FinMor, pool: Optional[list[FinObj]] = None) -> bool:
    """Is the mono an equalizer of some parallel pair?  Exhaustive over a
    pool of small codomains."""
    if len({m(x) for x in m.src.carrier}) != len(m.src.carrier):
        raise LabError("not a monomorphism")
    if pool is None:
        pool = all_objects(m.src.kind, 2)
    for w in pool:
        homs = hom_set(m.dst, w)
        for h in homs:
            for k in homs:
                eq = equalizer(h, k)
                if subobject_iso(m, eq.include):
                    return True
    return False


def regular_hull(m: FinMor) -> FinObj:
    """The smallest regular subobject containing the image: the full
    substructure on it."""
    return full_subobject(m.dst, m.image(m.src.carrier))


# ---------------------------------------------------------------------------
# Coarseness and the naturals fragment


def is_coarse(a: FinObj, pool: Optional[list[FinObj]] = None) -> bool:
    """Does every singleton-valued family admit a choice morphism?

    Families over a probe object P are graphs of set-functions P -> a,
    carried as full (hence regular) subobjects of P x a; a choice
    morphism exists exactly if the underlying set-function preserves
    structure.  The probe pool is exhaustive at small size.
    """
    if a.kind != RERE:
        raise LabError("coarseness probing is defined for the relation category")
    if pool is None:
        pool = all_objects(RERE, 2) + [indiscrete(range(3))]
    for p in pool:
        for values in itertools.product(a.carrier, repeat=len(p.carrier)):
            mapping = dict(zip(p.carrier, values))
            if not preserves_structure(p, a, mapping):
                return False
    return True


@dataclass
class NnoFragmentReport:
    discrete_not_coarse: bool
    discrete_unique_counts: list[int]
    indiscrete_unique_counts: list[int]

    @property
    def discrete_initiality_ok(self) -> bool:
        return all(c == 1 for c in self.discrete_unique_counts)

    @property
    def indiscrete_fails(self) -> bool:
        return any(c != 1 for c in self.indiscrete_unique_counts)


def _algebra_morphism_count(n_obj: FinObj, b: FinObj, zero: int, suc: dict[int, int]) -> int:
    """Morphisms out of the truncated naturals determined by the 0/suc clauses."""
    count = 0
    for h in hom_set(n_obj, b):
        ok = h(0) == zero
        for x in n_obj.carrier[:-1]:
            ok = ok and h(x + 1) == suc[h(x)]
        if ok:
            count += 1
    return count


def nno_fragment_check(size: int = 6) -> NnoFragmentReport:
    """Bounded initiality evidence for the discrete naturals truncation."""
    n_disc = discrete(range(size))
    n_ind = indiscrete(range(size))
    algebras = [
        (discrete(range(2)), 0, {0: 1, 1: 0}),
        (indiscrete(range(2)), 0, {0: 1, 1: 1}),
        (discrete(range(3)), 0, {0: 1, 1: 2, 2: 2}),
        (terminal(RERE), 0, {0: 0}),
    ]
    return NnoFragmentReport(
        discrete_not_coarse=not is_coarse(n_disc),
        discrete_unique_counts=[
            _algebra_morphism_count(n_disc, b, z, s) for b, z, s in algebras
        ],
        indiscrete_unique_counts=[
            _algebra_morphism_count(n_ind, b, z, s) for b, z, s in algebras
        ],
    )
