"""Signature functors, their two normal forms, and coproduct machinery.

A polynomial functor normalizes to a sum of monomials ``A_i x X^k_i``
with all constant summands collected into the first slot; an extended
polynomial functor normalizes to a sum of ``A_i x (B_i -> X)``.  Values
of ``F X`` are encoded as tagged injections flattened from binary sums,
with a canonical left-to-right summand order fixed by normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .kernel import (
    FALSE,
    TRUE,
    UNDEF,
    UNIT,
    InlV,
    InrV,
    PairV,
    PVal,
    Prod,
    QuasiError,
    Sum,
    Ty,
    TypeMismatch,
    Unit,
    Zero,
    apply_pval,
    enumerate_ty,
    finmap,
    is_true,
    pair,
    pfun,
    ty_card,
)


class NotPolynomial(QuasiError):
    pass


class NotExtendedPolynomial(QuasiError):
    pass


class TagOutOfRange(QuasiError):
    pass


# ---------------------------------------------------------------------------
# Functor syntax


class SigFunctor:
    __slots__ = ()


@dataclass(frozen=True)
class Id(SigFunctor):
    pass


@dataclass(frozen=True)
class Const(SigFunctor):
    ty: Ty


@dataclass(frozen=True)
class SumF(SigFunctor):
    left: SigFunctor
    right: SigFunctor


@dataclass(frozen=True)
class ProdF(SigFunctor):
    left: SigFunctor
    right: SigFunctor


@dataclass(frozen=True)
class ExpConst(SigFunctor):
    """Exponential with constant exponent; the body may only be the identity."""

    exponent: Ty
    body: SigFunctor


def is_polynomial(f: SigFunctor) -> bool:
    match f:
        case Id() | Const(_):
            return True
        case SumF(l, r) | ProdF(l, r):
            return is_polynomial(l) and is_polynomial(r)
        case ExpConst(_, _):
            return False
    return False


def is_extended_polynomial(f: SigFunctor) -> bool:
    match f:
        case Id() | Const(_):
            return True
        case SumF(l, r) | ProdF(l, r):
            return is_extended_polynomial(l) and is_extended_polynomial(r)
        case ExpConst(_, body):
            return body == Id()
    return False


# ---------------------------------------------------------------------------
# Normal forms


@dataclass(frozen=True)
class PolyNF:
    """Sum of ``A_i x X^k_i``; the single k=0 summand comes first."""

    summands: tuple[tuple[Ty, int], ...]

    def __post_init__(self):
        ks = [k for _, k in self.summands]
        if ks.count(0) != 1 or ks[0] != 0:
            raise NotPolynomial("collected-constants convention violated")


@dataclass(frozen=True)
class ExtPolyNF:
    """Sum of ``A_i x (B_i -> X)``."""

    summands: tuple[tuple[Ty, Ty], ...]


def _prod_ty(a: Ty, b: Ty) -> Ty:
    if a == Unit():
        return b
    if b == Unit():
        return a
    return Prod(a, b)


def _sum_exp(a: Ty, b: Ty) -> Ty:
    if a == Zero():
        return b
    if b == Zero():
        return a
    return Sum(a, b)


def _fold_prod(tys: list[Ty]) -> Ty:
    if not tys:
        return Unit()
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = _prod_ty(t, out)
    return out


def _fold_sum(tys: list[Ty]) -> Ty:
    if not tys:
        return Zero()
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = Sum(t, out)
    return out


def _monomials(f: SigFunctor) -> list[tuple[list[Ty], int]]:
    match f:
        case Id():
            return [([], 1)]
        case Const(ty):
            return [([ty], 0)]
        case SumF(l, r):
            return _monomials(l) + _monomials(r)
        case ProdF(l, r):
            return [
                (cl + cr, kl + kr)
                for cl, kl in _monomials(l)
                for cr, kr in _monomials(r)
            ]
    raise NotPolynomial(f"non-polynomial node {f!r}")


def to_poly_nf(f: SigFunctor) -> PolyNF:
    """Normalize a polynomial functor, collecting all constants into one summand."""
    if not is_polynomial(f):
        raise NotPolynomial(f"{f!r} contains an exponential")
    monos = [(_fold_prod(cs), k) for cs, k in _monomials(f)]
    constants = [a for a, k in monos if k == 0]
    rest = [(a, k) for a, k in monos if k > 0]
    return PolyNF(tuple([(_fold_sum(constants), 0)] + rest))


def _ext_summands(f: SigFunctor) -> list[tuple[Ty, Ty]]:
    match f:
        case Id():
            return [(Unit(), Unit())]
        case Const(ty):
            return [(ty, Zero())]
        case ExpConst(exp, body):
            if body != Id():
                raise NotExtendedPolynomial("exponential body must be the identity")
            return [(Unit(), exp)]
        case SumF(l, r):
            return _ext_summands(l) + _ext_summands(r)
        case ProdF(l, r):
            return [
                (_prod_ty(al, ar), _sum_exp(bl, br))
                for al, bl in _ext_summands(l)
                for ar, br in _ext_summands(r)
            ]
    raise NotExtendedPolynomial(f"unsupported node {f!r}")


def to_extpoly_nf(f: SigFunctor) -> ExtPolyNF:
    """Normalize an extended polynomial functor to summed exponents."""
    if not is_extended_polynomial(f):
        raise NotExtendedPolynomial(f"{f!r}")
    return ExtPolyNF(tuple(_ext_summands(f)))


# ---------------------------------------------------------------------------
# Encoded F-values: tagged injections over the summand list


def inject(i: int, n: int, payload: PVal) -> PVal:
    if not 0 <= i < n:
        raise TagOutOfRange(f"tag {i} of {n}")
    if not payload.defined():
        return UNDEF
    if n == 1:
        return payload
    if i == 0:
        return InlV(payload)
    return InrV(inject(i - 1, n - 1, payload))


def project(v: PVal, n: int) -> tuple[int, PVal]:
    if n < 1:
        raise TagOutOfRange("empty sum has no values")
    i = 0
    while n > 1:
        match v:
            case InlV(x):
                return i, x
            case InrV(x):
                v, i, n = x, i + 1, n - 1
            case _:
                raise TagOutOfRange(f"not a {n}-ary injection: {v!r}")
    return i, v


def _tuple_of(values: list[PVal]) -> PVal:
    if not values:
        return UNIT
    out = values[-1]
    for v in reversed(values[:-1]):
        out = pair(v, out)
    return out


def _untuple(v: PVal, k: int) -> list[PVal]:
    if k == 0:
        return []
    out = []
    for _ in range(k - 1):
        if not isinstance(v, PairV):
            raise TypeMismatch("malformed component tuple")
        out.append(v.fst)
        v = v.snd
    out.append(v)
    return out


def poly_value(nf: PolyNF, i: int, param: PVal, children: list[PVal]) -> PVal:
    a, k = nf.summands[i]
    if len(children) != k:
        raise TagOutOfRange(f"summand {i} expects {k} children")
    return inject(i, len(nf.summands), pair(param, _tuple_of(children)))


def poly_unvalue(nf: PolyNF, v: PVal) -> tuple[int, PVal, list[PVal]]:
    i, payload = project(v, len(nf.summands))
    if not isinstance(payload, PairV):
        raise TypeMismatch("malformed summand payload")
    _, k = nf.summands[i]
    return i, payload.fst, _untuple(payload.snd, k)


def ext_value(nf: ExtPolyNF, i: int, param: PVal, fn: PVal) -> PVal:
    return inject(i, len(nf.summands), pair(param, fn))


def ext_unvalue(nf: ExtPolyNF, v: PVal) -> tuple[int, PVal, PVal]:
    i, payload = project(v, len(nf.summands))
    if not isinstance(payload, PairV):
        raise TypeMismatch("malformed summand payload")
    return i, payload.fst, payload.snd


def poly_card(nf: PolyNF, x_card: int) -> int:
    return sum(ty_card(a) * x_card**k for a, k in nf.summands)


def poly_enumerate(nf: PolyNF, xs: list[PVal], nat_bound: int = 4) -> list[PVal]:
    """All encoded ``F X`` values with X-components drawn from ``xs``."""
    out = []
    for i, (a, k) in enumerate(nf.summands):
        for p in enumerate_ty(a, nat_bound):
            for children in _choices(xs, k):
                out.append(poly_value(nf, i, p, list(children)))
    return out


def ext_enumerate(nf: ExtPolyNF, xs: list[PVal], nat_bound: int = 4) -> list[PVal]:
    out = []
    for i, (a, b) in enumerate(nf.summands):
        dom = enumerate_ty(b, nat_bound)
        for p in enumerate_ty(a, nat_bound):
            for choice in _choices(xs, len(dom)):
                out.append(ext_value(nf, i, p, finmap(zip(dom, choice))))
    return out


def _choices(options, n):
    if n == 0:
        yield ()
        return
    for rest in _choices(options, n - 1):
        for o in options:
            yield (o,) + rest


# ---------------------------------------------------------------------------
# Map action


def fmap(nf: PolyNF | ExtPolyNF, g: Callable[[PVal], PVal], v: PVal) -> PVal:
    """Apply ``g`` in each X position of an encoded functor value."""
    if not v.defined():
        return UNDEF
    if isinstance(nf, PolyNF):
        i, param, children = poly_unvalue(nf, v)
        return poly_value(nf, i, param, [g(c) for c in children])
    i, param, fn = ext_unvalue(nf, v)
    b = nf.summands[i][1]
    mapped = pfun(lambda y, _f=fn: g(apply_pval(_f, y)), dom=b)
    return ext_value(nf, i, param, mapped)


def sumcase(f: Callable[[PVal], PVal], g: Callable[[PVal], PVal], v: PVal) -> PVal:
    """Copairing: ``f`` on left injections, ``g`` on right; strict in ``v``."""
    match v:
        case InlV(x):
            return f(x)
        case InrV(x):
            return g(x)
        case _ if not v.defined():
            return UNDEF
    raise TypeMismatch("sumcase on non-sum value")


# ---------------------------------------------------------------------------
# Coproducts via the triple encoding, and the partial constant bot


def bot(target: Ty | None = None) -> PVal:
    """Partial constant ``1 -/-> a``: undefined at ()."""
    return finmap({})


def zero_map(target: Ty | None = None) -> PVal:
    """The unique map out of the empty type; never applicable."""
    return finmap({})


def encode_sum_as_triple(v: PVal) -> PVal:
    """Encode ``inl a``/``inr b`` as ``(x: 1 -/-> a, y: 1 -/-> b, z: Bool)``."""
    match v:
        case InlV(x):
            return PairV(finmap({UNIT: x}), PairV(bot(), TRUE))
        case InrV(y):
            return PairV(bot(), PairV(finmap({UNIT: y}), FALSE))
    raise TypeMismatch("triple encoding wants a sum value")


def decode_sum_triple(t: PVal) -> PVal:
    if not isinstance(t, PairV) or not isinstance(t.snd, PairV):
        raise TypeMismatch("malformed triple")
    x, y, z = t.fst, t.snd.fst, t.snd.snd
    if is_true(z):
        return InlV(apply_pval(x, UNIT))
    return InrV(apply_pval(y, UNIT))


def triple_pattern_ok(t: PVal) -> bool:
    """The definedness pattern of the encoding: def(x()) iff z, def(y()) iff not z."""
    if not isinstance(t, PairV) or not isinstance(t.snd, PairV):
        return False
    x, y, z = t.fst, t.snd.fst, t.snd.snd
    if z not in (TRUE, FALSE):
        return False
    return (apply_pval(x, UNIT).defined() == (z == TRUE)) and (
        apply_pval(y, UNIT).defined() == (z == FALSE)
    )


def triple_copair(f: Callable[[PVal], PVal], g: Callable[[PVal], PVal], t: PVal) -> PVal:
    """Copairing through the triple: if z then f (x ()) else g (y ())."""
    if not isinstance(t, PairV) or not isinstance(t.snd, PairV):
        raise TypeMismatch("malformed triple")
    x, y, z = t.fst, t.snd.fst, t.snd.snd
    if is_true(z):
        return f(apply_pval(x, UNIT))
    return g(apply_pval(y, UNIT))


def outl(v: PVal) -> PVal:
    """Partial left extraction, undefined on right injections."""
    return sumcase(lambda x: x, lambda _: apply_pval(bot(), UNIT), v)


def outr(v: PVal) -> PVal:
    return sumcase(lambda _: apply_pval(bot(), UNIT), lambda y: y, v)
