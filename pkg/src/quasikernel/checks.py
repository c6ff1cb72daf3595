"""Reusable bounded verification helpers behind the check suites.

These quantify universal properties over finite enumerations: algebras
over small carriers, trees up to a depth bound, paths up to a length
bound.  The CLI assembles their outcomes into reports; the test suite
calls them directly.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

from .functors import PolyNF
from .initial import InitialAlgebra, tree_depth, tree_parts
from .kernel import PVal, enumerate_ty, eq_strong, is_true


@dataclass
class CheckResult:
    name: str
    status: str  # pass | fail | skip
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def check(name: str, ok: bool, detail: str = "") -> CheckResult:
    return CheckResult(name, "pass" if ok else "fail", detail)


# ---------------------------------------------------------------------------
# Algebra enumeration over finite carriers


def _table_fn(table: dict):
    def call(w, results):
        return table[(w, tuple(results))]

    return call


def _summand_functions(a_ty, k: int, carrier: Sequence[PVal], nat_bound: int):
    params = enumerate_ty(a_ty, nat_bound)
    domain = [
        (w, combo) for w in params for combo in itertools.product(carrier, repeat=k)
    ]
    for values in itertools.product(carrier, repeat=len(domain)):
        yield _table_fn(dict(zip(domain, values)))


def enumerate_algebras(
    nf: PolyNF, carrier: Sequence[PVal], nat_bound: int = 2
) -> Iterator[list]:
    """Every algebra structure on the carrier, as per-summand table functions."""
    per_summand = [
        list(_summand_functions(a, k, carrier, nat_bound)) for a, k in nf.summands
    ]
    for combo in itertools.product(*per_summand):
        yield list(combo)


def sample_algebras(
    nf: PolyNF,
    carrier: Sequence[PVal],
    count: int,
    rng: random.Random,
    nat_bound: int = 2,
) -> Iterator[list]:
    """Seeded random algebras, for signatures whose full space is too large."""
    for _ in range(count):
        algebra = []
        for a, k in nf.summands:
            params = enumerate_ty(a, nat_bound)
            domain = [
                (w, combo)
                for w in params
                for combo in itertools.product(carrier, repeat=k)
            ]
            table = {key: rng.choice(carrier) for key in domain}
            algebra.append(_table_fn(table))
        yield algebra


# ---------------------------------------------------------------------------
# Fold equation and uniqueness


def fold_equation_failures(
    handle: InitialAlgebra, algebra, trees: Sequence[PVal], depth: int = 4
) -> list[str]:
    """Instances of the fold equation that fail under strong equality.

    Trees are processed shallowest first so each side of the equation is
    computed by the real fold exactly once per tree.
    """
    failures = []
    results: dict = {}
    for t in sorted(trees, key=lambda t: tree_depth(t) or 0):
        i, w, children = handle.destruct(t)
        lhs = handle.fold(algebra, t)
        results[_shape_key(t)] = lhs
        rhs = algebra[i](w, [results[_shape_key(c)] for c in children])
        if not is_true(eq_strong(lhs, rhs, depth)):
            failures.append(f"summand {i}: {lhs!r} != {rhs!r}")
    return failures


def _shape_key(t: PVal):
    l, d, _ = tree_parts(t)
    return (l, d)


def fold_uniqueness_solutions(
    handle: InitialAlgebra,
    algebra,
    trees: Sequence[PVal],
    carrier: Sequence[PVal],
    must_match_fold: bool = True,
) -> int:
    """Count all functions on the tree set satisfying the fold equation.

    Trees are identified by their path maps (anchors are derived data on
    carrier members), processed in depth order so each equation instance
    only mentions already-assigned subtrees.  Exactly one solution means
    the fold is unique on the bounded set; by default the search also
    insists that any solution found agrees with the implemented fold.
    """
    order = sorted(trees, key=lambda t: tree_depth(t) or 0)
    meta = []
    for t in order:
        i, w, children = handle.destruct(t)
        fold_value = handle.fold(algebra, t) if must_match_fold else None
        meta.append((_shape_key(t), i, w, [_shape_key(c) for c in children], fold_value))

    assignment: dict = {}

    def count(pos: int) -> int:
        if pos == len(meta):
            return 1
        skey, i, w, child_keys, fold_value = meta[pos]
        required = algebra[i](w, [assignment[ck] for ck in child_keys])
        total = 0
        for b in carrier:
            if b == required:
                if must_match_fold and b != fold_value:
                    raise AssertionError(
                        "a fold-equation solution disagrees with fold itself"
                    )
                assignment[skey] = b
                total += count(pos + 1)
                del assignment[skey]
        return total

    return count(0)


# ---------------------------------------------------------------------------
# Suites behind the command-line checker


@dataclass
class CheckConfig:
    fuel: int = 10000
    obs_depth: int = 4
    chain_bound: int = 32
    seed: int = 0


def suite_initial(info, cfg: CheckConfig) -> list[CheckResult]:
    """Bounded certification of one installed free type."""
    from .kernel import QuasiError, nat

    prefix = f"initial.{info.display}"
    handle = info.handle
    try:
        trees = handle.enumerate_trees(cfg.obs_depth)
    except QuasiError as e:
        return [CheckResult(f"{prefix}.enumerable", "skip", str(e))]
    out = []
    carrier = [nat(i) for i in range(3)]
    rng = random.Random(cfg.seed)
    failures: list[str] = []
    for algebra in sample_algebras(handle.nf, carrier, 20, rng):
        failures.extend(fold_equation_failures(handle, algebra, trees))
    out.append(check(f"{prefix}.fold-equation", not failures, "; ".join(failures[:1])))

    solutions_ok = True
    for algebra in sample_algebras(handle.nf, carrier, 3, rng):
        if fold_uniqueness_solutions(handle, algebra, trees, carrier) != 1:
            solutions_ok = False
    out.append(check(f"{prefix}.fold-uniqueness", solutions_ok))

    inv = handle.lambek_inverse()
    lambek_ok = all(handle.structure_map(inv(t)) == t for t in trees)
    out.append(check(f"{prefix}.lambek", lambek_ok))

    depth_ok = True
    for t in trees:
        from .initial import tree_depth

        _i, _w, children = handle.destruct(t)
        want = 1 + max((tree_depth(c) or 0 for c in children), default=0)
        depth_ok = depth_ok and tree_depth(t) == want
    out.append(check(f"{prefix}.depth-law", depth_ok))

    member_ok = all(handle.is_in_T(t) for t in trees)
    out.append(check(f"{prefix}.membership", member_ok))
    return out


def _canonical_coalgebra(info, cfg: CheckConfig):
    """A deterministic total coalgebra on small integer seeds."""
    from .kernel import enumerate_ty

    handle = info.handle
    params = [enumerate_ty(a, 2) for a, _ in handle.nf.summands]

    def d(z: int):
        i = (z + cfg.seed) % handle.n
        while not params[i]:
            i = (i + 1) % handle.n
        x = params[i][z % len(params[i])]
        values = handle.exponent_values[i]

        def g(y):
            return (z * 3 + values.index(y) + 1) % 7

        return i, x, g

    return d


def suite_final(info, cfg: CheckConfig) -> list[CheckResult]:
    from .functors import ext_unvalue, inject, project
    from .kernel import QuasiError, apply_pval, eq_strong, is_true

    prefix = f"final.{info.display}"
    handle = info.handle
    try:
        d = _canonical_coalgebra(info, cfg)
        d(0)
    except QuasiError as e:
        return [CheckResult(f"{prefix}.enumerable", "skip", str(e))]
    out = []
    seeds = list(range(4))
    failures = []
    for z in seeds:
        failures.extend(handle.membership_failures(handle.unfold(d, z), cfg.obs_depth))
    out.append(check(f"{prefix}.membership", not failures, "; ".join(failures[:1])))

    eq_ok = True
    for z in seeds:
        i, x, g = d(z)
        li, lx, lfn = ext_unvalue(handle.nf, handle.structure_map(handle.unfold(d, z)))
        if li != i or not is_true(eq_strong(lx, x, 3)):
            eq_ok = False
            continue
        for y in handle.exponent_values[i]:
            if not handle.tree_eq(apply_pval(lfn, y), handle.unfold(d, g(y)), 2):
                eq_ok = False
    out.append(check(f"{prefix}.unfold-equation", eq_ok))

    # iterative reference: cons-based recursion and snoc-based observation agree
    def reference(z, path):
        from .kernel import UNDEF

        seed = z
        for label in path:
            i, _x, g = d(seed)
            j, y = project(label, handle.n)
            if j != i:
                return UNDEF
            seed = g(y)
        i, x, _g = d(seed)
        return inject(i, handle.n, x)

    uniq_ok = True
    for z in seeds[:2]:
        u = handle.unfold(d, z)
        for p in handle.paths_up_to(cfg.obs_depth):
            if not is_true(eq_strong(handle.observe(u, p), reference(z, p), 2)):
                uniq_ok = False
    out.append(check(f"{prefix}.bounded-uniqueness", uniq_ok))
    return out


def suite_cpo(cfg: CheckConfig) -> list[CheckResult]:
    from . import cpo as cpo_mod
    from .kernel import Bool, Nat, UNDEF, apply_pval, finmap, nat

    out = []
    bound = max(4, min(cfg.chain_bound, 16))
    lemma_ok = True
    for a in range(bound - 1):
        for v in (nat(0), nat(3)):
            ch = lambda i, _a=a, _v=v: UNDEF if i < _a else _v
            if cpo_mod.chain_sup(cpo_mod.NAT_FLAT, ch, bound) != v:
                lemma_ok = False
    if cpo_mod.chain_sup(cpo_mod.NAT_FLAT, lambda i: UNDEF, bound) != UNDEF:
        lemma_ok = False
    out.append(check("cpo.partial-chain-lemma", lemma_ok))

    for desc in (
        cpo_mod.NAT_FLAT,
        cpo_mod.BOOL_FLAT,
        cpo_mod.pfun_cpo(Bool(), cpo_mod.NAT_FLAT),
        cpo_mod.sum_cpo(cpo_mod.VERT, cpo_mod.NAT_FLAT),
    ):
        out.append(
            check(f"cpo.order-axioms.{desc.name}", not cpo_mod.order_axiom_failures(desc))
        )

    carrier = cpo_mod.pfun_cpo(Nat(), cpo_mod.NAT_FLAT, nat_bound=9)

    def step(f):
        table = {nat(0): nat(1)}
        for n in range(1, 9):
            prev = apply_pval(f, nat(n - 1))
            if prev.defined():
                table[nat(n)] = nat(n * prev.n)
        return finmap(table)

    try:
        fact = cpo_mod.lfp(carrier, step, cfg.chain_bound)
        ok = apply_pval(fact, nat(5)) == nat(120)
        candidates = [fact, carrier.bottom] + [
            finmap({nat(k): nat(k) for k in range(j)}) for j in range(1, 9)
        ]
        minimal = not cpo_mod.minimality_failures(carrier, step, fact, candidates)
        out.append(check("cpo.lfp-factorial", ok, "fact(5) != 120" if not ok else ""))
        out.append(check("cpo.lfp-minimality", minimal))
    except cpo_mod.NotStabilized as e:
        out.append(CheckResult("cpo.lfp-factorial", "fail", str(e)))

    s = cpo_mod.sum_cpo(cpo_mod.VERT, cpo_mod.NAT_FLAT)
    from quasikernel.kernel import FALSE, InlV, TRUE

    try:
        sup = cpo_mod.chain_sup(
            s, lambda i: InlV(FALSE) if i < 2 else InlV(TRUE), 6
        )
        out.append(check("cpo.sum-stability", sup == InlV(TRUE)))
    except cpo_mod.QuasiError as e:  # pragma: no cover
        out.append(CheckResult("cpo.sum-stability", "fail", str(e)))
    return out


def suite_lab(which: str, cfg: CheckConfig) -> list[CheckResult]:
    from . import lab
    from .final import mtype_vs_extpoly_compare

    out = []
    if which in ("rere", "all"):
        zero, one = lab.initial(lab.RERE), lab.terminal(lab.RERE)
        m = lab.hom_set(zero, one)[0]
        out.append(check("lab.rere.zero-to-one-regular", lab.is_regular_mono(m)))
        sweep_ok = True
        detail = ""
        for size in range(5):
            atoms = tuple(range(size))
            off = [(x, y) for x in atoms for y in atoms if x != y]
            for edges in _edge_subsets(off):
                o = lab.rere_obj(atoms, edges)
                if lab.is_coarse(o) != (len(o.structure) == size * size):
                    sweep_ok = False
                    detail = f"counterexample: {o!r}"
        out.append(check("lab.rere.coarse-iff-indiscrete", sweep_ok, detail))
        report = lab.nno_fragment_check()
        out.append(check("lab.rere.nno-discrete-not-coarse", report.discrete_not_coarse))
        out.append(check("lab.rere.nno-bounded-initiality", report.discrete_initiality_ok))
        out.append(check("lab.rere.nno-indiscrete-fails", report.indiscrete_fails))
    if which in ("spap", "all"):
        zero, one = lab.initial(lab.SPAP), lab.terminal(lab.SPAP)
        m = lab.hom_set(zero, one)[0]
        regular = lab.is_regular_mono(m)
        hull = lab.regular_hull(m)
        witness_ok = hull == lab.spap_obj((), [()])
        out.append(
            check(
                "lab.spap.zero-to-one-not-regular",
                not regular and witness_ok,
                f"regular subobject witness: carrier={hull.carrier} family={sorted(map(sorted, hull.structure))}",
            )
        )
        c = lab.coproduct(one, one)
        pb = lab.pullback(c.inj1, c.inj2)
        disjoint = any(lab.is_iso(f) for f in lab.hom_set(pb, zero))
        out.append(check("lab.spap.coproduct-not-disjoint", not disjoint))
    if which in ("mtypes", "all"):
        one = lab.terminal(lab.SPAP)
        one_empty = lab.spap_obj((0,), [])
        report = mtype_vs_extpoly_compare(one, one_empty, one_empty)
        out.append(
            check(
                "lab.mtypes.counterexample",
                report.ext_card >= 1 and report.general_card == 0,
                f"|F(1_0)|={report.ext_card}, |P_q(1_0)|={report.general_card}",
            )
        )
        agree = mtype_vs_extpoly_compare(one, one, one_empty)
        out.append(check("lab.mtypes.disjoint-fibers-agree", agree.isomorphic))
    return out


def _edge_subsets(pairs):
    for r in range(len(pairs) + 1):
        yield from itertools.combinations(pairs, r)
