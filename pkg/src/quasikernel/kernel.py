"""Core semantics: partial values and a call-by-value evaluator.

Values are immutable and undefinedness is a first-class result (the
``UNDEF`` singleton), never nontermination; running out of evaluation
budget raises ``FuelExhausted`` instead, so the two can never be
confused.  Function values come in two flavours: procedural partial
maps (``PFunV``) and finite tables (``FinMapV``).  Equality on finite
tables is exact; equality on procedural maps is bounded-extensional
over a canonical sample set and is therefore an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional


class QuasiError(Exception):
    """Base class for all library errors."""


class FuelExhausted(QuasiError):
    """Evaluation budget ran out; distinct from a genuinely undefined result."""


class UnboundName(QuasiError):
    pass


class TypeMismatch(QuasiError):
    pass


class IncomparableTypes(QuasiError):
    pass


class NonEnumerableType(QuasiError):
    pass


# ---------------------------------------------------------------------------
# Types


class Ty:
    """Semantic types: a closed grammar, normalized before use."""

    __slots__ = ()


@dataclass(frozen=True)
class Unit(Ty):
    pass


@dataclass(frozen=True)
class Nat(Ty):
    pass


@dataclass(frozen=True)
class Bool(Ty):
    pass


@dataclass(frozen=True)
class Logical(Ty):
    pass


@dataclass(frozen=True)
class Zero(Ty):
    pass


@dataclass(frozen=True)
class Sum(Ty):
    left: Ty
    right: Ty


@dataclass(frozen=True)
class Prod(Ty):
    left: Ty
    right: Ty


@dataclass(frozen=True)
class Total(Ty):
    dom: Ty
    cod: Ty


@dataclass(frozen=True)
class Partial(Ty):
    dom: Ty
    cod: Ty


@dataclass(frozen=True)
class Named(Ty):
    name: str


def normalize_ty(ty: Ty, env: Optional[Mapping[str, Ty]] = None) -> Ty:
    """Resolve names and expand the definitional aliases.

    ``Bool`` is definitionally ``Sum(Unit, Unit)`` and ``Logical`` is
    ``Partial(Unit, Unit)``; unresolved names are an error.
    """
    match ty:
        case Bool():
            return Sum(Unit(), Unit())
        case Logical():
            return Partial(Unit(), Unit())
        case Named(name):
            if env is None or name not in env:
                raise UnboundName(f"unresolved type name {name!r}")
            return normalize_ty(env[name], env)
        case Sum(l, r):
            return Sum(normalize_ty(l, env), normalize_ty(r, env))
        case Prod(l, r):
            return Prod(normalize_ty(l, env), normalize_ty(r, env))
        case Total(d, c):
            return Total(normalize_ty(d, env), normalize_ty(c, env))
        case Partial(d, c):
            return Partial(normalize_ty(d, env), normalize_ty(c, env))
        case _:
            return ty


def ty_card(ty: Ty, env: Optional[Mapping[str, Ty]] = None) -> int:
    """Number of values of a finite type; raises on Nat."""
    t = normalize_ty(ty, env)
    match t:
        case Unit():
            return 1
        case Zero():
            return 0
        case Nat():
            raise NonEnumerableType("Nat is infinite")
        case Sum(l, r):
            return ty_card(l) + ty_card(r)
        case Prod(l, r):
            return ty_card(l) * ty_card(r)
        case Total(d, c):
            return ty_card(c) ** ty_card(d)
        case Partial(d, c):
            return (ty_card(c) + 1) ** ty_card(d)
    raise NonEnumerableType(f"no cardinality for {t!r}")


# ---------------------------------------------------------------------------
# Partial values


class PVal:
    """A partial value; ``UNDEF`` is the only undefined one."""

    __slots__ = ()

    def defined(self) -> bool:
        return not isinstance(self, Undef)


@dataclass(frozen=True)
class Undef(PVal):
    pass


@dataclass(frozen=True)
class UnitV(PVal):
    pass


@dataclass(frozen=True)
class NatV(PVal):
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise TypeMismatch("naturals are nonnegative")


@dataclass(frozen=True)
class PairV(PVal):
    fst: PVal
    snd: PVal

    def __hash__(self):  # cached: values can be large and are hashed repeatedly
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash((PairV, self.fst, self.snd))
            object.__setattr__(self, "_hash", h)
        return h


@dataclass(frozen=True)
class InlV(PVal):
    value: PVal


@dataclass(frozen=True)
class InrV(PVal):
    value: PVal


@dataclass(frozen=True, eq=False)
class PFunV(PVal):
    """Procedural partial map.  Must be pure: equal arguments, equal results."""

    fn: Callable[[PVal], PVal]
    dom: Optional[Ty] = None

    # identity-based equality/hash; extensional comparison goes through eq_*
    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self.fn)


def _sort_key(v: PVal):
    # deterministic total order on values, used to canonicalize tables
    match v:
        case Undef():
            return (0,)
        case UnitV():
            return (1,)
        case NatV(n):
            return (2, n)
        case InlV(x):
            return (3, _sort_key(x))
        case InrV(x):
            return (4, _sort_key(x))
        case PairV(a, b):
            return (5, _sort_key(a), _sort_key(b))
        case FinMapV(entries):
            return (6, tuple((_sort_key(k), _sort_key(x)) for k, x in entries))
        case PFunV():
            return (7, id(v))
    raise TypeMismatch(f"unknown value {v!r}")


@dataclass(frozen=True)
class FinMapV(PVal):
    """Finite-table partial map; keys sorted canonically so equality is exact."""

    entries: tuple[tuple[PVal, PVal], ...]

    def __hash__(self):  # cached: tables are hashed on every dict lookup
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash((FinMapV, self.entries))
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def of(table: Mapping[PVal, PVal] | Iterable[tuple[PVal, PVal]]) -> "FinMapV":
        items = table.items() if isinstance(table, Mapping) else table
        kept = [(k, v) for k, v in items if v.defined()]
        kept.sort(key=lambda kv: _sort_key(kv[0]))
        for (k1, _), (k2, _) in zip(kept, kept[1:]):
            if k1 == k2:
                raise TypeMismatch("duplicate key in finite map")
        return FinMapV(tuple(kept))

    def lookup(self, key: PVal) -> PVal:
        for k, v in self.entries:
            if k == key:
                return v
        return UNDEF

    def keys(self) -> list[PVal]:
        return [k for k, _ in self.entries]

    def as_dict(self) -> dict[PVal, PVal]:
        return dict(self.entries)


UNDEF = Undef()
UNIT = UnitV()
TRUE = InlV(UNIT)
FALSE = InrV(UNIT)


def nat(n: int) -> NatV:
    return NatV(n)


def pair(a: PVal, b: PVal) -> PVal:
    # tupling is strict
    if not a.defined() or not b.defined():
        return UNDEF
    return PairV(a, b)


def inl(v: PVal) -> PVal:
    return InlV(v) if v.defined() else UNDEF


def inr(v: PVal) -> PVal:
    return InrV(v) if v.defined() else UNDEF


def finmap(table) -> FinMapV:
    return FinMapV.of(table)


def pfun(fn: Callable[[PVal], PVal], dom: Optional[Ty] = None) -> PFunV:
    return PFunV(fn, dom)


def from_bool(b: bool) -> PVal:
    return TRUE if b else FALSE


def is_true(v: PVal) -> bool:
    return v == TRUE


def apply_pval(f: PVal, x: PVal) -> PVal:
    """Strict application of a function-like value."""
    if not f.defined() or not x.defined():
        return UNDEF
    match f:
        case FinMapV():
            return f.lookup(x)
        case PFunV(fn, _):
            return fn(x)
    raise TypeMismatch(f"cannot apply non-function {f!r}")


def enumerate_ty(ty: Ty, nat_bound: int = 4, env=None) -> list[PVal]:
    """All values of a finite type (naturals truncated below ``nat_bound``).

    Function types enumerate as finite tables, which is exact because the
    domain itself is finite.
    """
    t = normalize_ty(ty, env)
    match t:
        case Unit():
            return [UNIT]
        case Zero():
            return []
        case Nat():
            return [nat(i) for i in range(nat_bound)]
        case Sum(l, r):
            return [InlV(v) for v in enumerate_ty(l, nat_bound)] + [
                InrV(v) for v in enumerate_ty(r, nat_bound)
            ]
        case Prod(l, r):
            return [
                PairV(a, b)
                for a in enumerate_ty(l, nat_bound)
                for b in enumerate_ty(r, nat_bound)
            ]
        case Total(d, c):
            dom = enumerate_ty(d, nat_bound)
            cods = enumerate_ty(c, nat_bound)
            return [
                finmap(zip(dom, choice))
                for choice in _product_choices(cods, len(dom))
            ]
        case Partial(d, c):
            dom = enumerate_ty(d, nat_bound)
            cods = enumerate_ty(c, nat_bound) + [UNDEF]
            return [
                finmap((k, v) for k, v in zip(dom, choice) if v.defined())
                for choice in _product_choices(cods, len(dom))
            ]
    raise NonEnumerableType(f"cannot enumerate {t!r}")


def _product_choices(options, n):
    if n == 0:
        yield ()
        return
    for rest in _product_choices(options, n - 1):
        for o in options:
            yield (o,) + rest


# ---------------------------------------------------------------------------
# Restriction and equality


def restrict(v: PVal, cond: PVal) -> PVal:
    """Restriction: defined and equal to ``v`` iff ``v`` defined and ``cond`` true."""
    if cond == TRUE:
        return v
    return UNDEF


def _canonical_args(dom: Optional[Ty], depth: int) -> list[PVal]:
    if dom is not None:
        try:
            return enumerate_ty(dom, nat_bound=depth)
        except NonEnumerableType:
            pass
    return [UNIT] + [nat(i) for i in range(depth)]


def _is_funlike(v: PVal) -> bool:
    return isinstance(v, (PFunV, FinMapV))


def eq_existential(a: PVal, b: PVal, depth: int = 4) -> PVal:
    """Existential equality: both sides defined and (observably) equal."""
    if not a.defined() or not b.defined():
        return FALSE
    match (a, b):
        case (UnitV(), UnitV()):
            return TRUE
        case (NatV(n), NatV(m)):
            return from_bool(n == m)
        case (PairV(x, y), PairV(u, v)):
            return from_bool(
                is_true(eq_existential(x, u, depth))
                and is_true(eq_existential(y, v, depth))
            )
        case (InlV(x), InlV(y)):
            return eq_existential(x, y, depth)
        case (InrV(x), InrV(y)):
            return eq_existential(x, y, depth)
        case (InlV(_), InrV(_)) | (InrV(_), InlV(_)):
            return FALSE
    if _is_funlike(a) and _is_funlike(b):
        return _eq_funlike(a, b, depth)
    raise IncomparableTypes(f"cannot compare {type(a).__name__} with {type(b).__name__}")


def _eq_funlike(a: PVal, b: PVal, depth: int) -> PVal:
    if isinstance(a, FinMapV) and isinstance(b, FinMapV):
        # finite tables compare exactly: same keys, strongly equal values
        if [_sort_key(k) for k in a.keys()] != [_sort_key(k) for k in b.keys()]:
            return FALSE
        return from_bool(
            all(
                is_true(eq_strong(v, b.lookup(k), depth))
                for k, v in a.entries
            )
        )
    if depth <= 0:
        return TRUE  # no observations left; indistinguishable
    samples: list[PVal] = []
    for f in (a, b):
        if isinstance(f, FinMapV):
            samples.extend(f.keys())
        else:
            samples.extend(_canonical_args(f.dom, depth))
    seen, args = set(), []
    for s in samples:
        k = _sort_key(s)
        if k not in seen:
            seen.add(k)
            args.append(s)
    return from_bool(
        all(
            is_true(eq_strong(apply_pval(a, x), apply_pval(b, x), depth - 1))
            for x in args
        )
    )


def eq_strong(a: PVal, b: PVal, depth: int = 4) -> PVal:
    """Strong equality: one side defined iff the other, and then equal."""
    if not a.defined() and not b.defined():
        return TRUE
    if a.defined() != b.defined():
        return FALSE
    return eq_existential(a, b, depth)


# ---------------------------------------------------------------------------
# Kernel expressions


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Lit(Term):
    value: PVal


@dataclass(frozen=True)
class Lam(Term):
    param: str
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class PairE(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Fst(Term):
    arg: Term


@dataclass(frozen=True)
class Snd(Term):
    arg: Term


@dataclass(frozen=True)
class InlE(Term):
    arg: Term


@dataclass(frozen=True)
class InrE(Term):
    arg: Term


@dataclass(frozen=True)
class CaseE(Term):
    scrutinee: Term
    left_var: str
    left: Term
    right_var: str
    right: Term


@dataclass(frozen=True)
class RestrictE(Term):
    arg: Term
    cond: Term


@dataclass(frozen=True)
class EqE(Term):
    lhs: Term
    rhs: Term
    strong: bool = False
    depth: int = 4


@dataclass
class Fuel:
    """Evaluation budget; strictly decreasing, exhaustion is a hard error."""

    steps: int

    def tick(self):
        if self.steps <= 0:
            raise FuelExhausted("out of evaluation steps")
        self.steps -= 1


def eval_term(term: Term, env: Mapping[str, PVal], fuel: Fuel) -> PVal:
    """Call-by-value evaluation; application to an undefined argument is undefined."""
    fuel.tick()
    match term:
        case Var(name):
            if name not in env:
                raise UnboundName(name)
            return env[name]
        case Lit(v):
            return v
        case Lam(param, body):
            captured = dict(env)

            def closure(x: PVal, _p=param, _b=body, _e=captured) -> PVal:
                inner = dict(_e)
                inner[_p] = x
                return eval_term(_b, inner, fuel)

            return PFunV(closure)
        case App(f, a):
            fv = eval_term(f, env, fuel)
            av = eval_term(a, env, fuel)
            if not fv.defined() or not av.defined():
                return UNDEF
            return apply_pval(fv, av)
        case PairE(x, y):
            return pair(eval_term(x, env, fuel), eval_term(y, env, fuel))
        case Fst(e):
            v = eval_term(e, env, fuel)
            if not v.defined():
                return UNDEF
            if not isinstance(v, PairV):
                raise TypeMismatch("fst of non-pair")
            return v.fst
        case Snd(e):
            v = eval_term(e, env, fuel)
            if not v.defined():
                return UNDEF
            if not isinstance(v, PairV):
                raise TypeMismatch("snd of non-pair")
            return v.snd
        case InlE(e):
            return inl(eval_term(e, env, fuel))
        case InrE(e):
            return inr(eval_term(e, env, fuel))
        case CaseE(scrut, lv, lb, rv, rb):
            v = eval_term(scrut, env, fuel)
            if not v.defined():
                return UNDEF
            inner = dict(env)
            match v:
                case InlV(x):
                    inner[lv] = x
                    return eval_term(lb, inner, fuel)
                case InrV(x):
                    inner[rv] = x
                    return eval_term(rb, inner, fuel)
            raise TypeMismatch("case on non-sum value")
        case RestrictE(e, c):
            cv = eval_term(c, env, fuel)
            vv = eval_term(e, env, fuel)
            return restrict(vv, cv)
        case EqE(l, r, strong, depth):
            lv = eval_term(l, env, fuel)
            rv = eval_term(r, env, fuel)
            return eq_strong(lv, rv, depth) if strong else eq_existential(lv, rv, depth)
    raise TypeMismatch(f"unknown term {term!r}")


def show_pval(v: PVal) -> str:
    """Readable rendering; booleans print by their sum encoding names."""
    match v:
        case Undef():
            return "undefined"
        case UnitV():
            return "()"
        case NatV(n):
            return str(n)
        case InlV(UnitV()):
            return "true"
        case InrV(UnitV()):
            return "false"
        case InlV(x):
            return f"inl {show_pval(x)}"
        case InrV(x):
            return f"inr {show_pval(x)}"
        case PairV(a, b):
            return f"({show_pval(a)}, {show_pval(b)})"
        case FinMapV(entries):
            inner = ", ".join(f"{show_pval(k)} -> {show_pval(x)}" for k, x in entries)
            return "{" + inner + "}"
        case PFunV():
            return "<fun>"
    return repr(v)


# Logical values: a formula is a partial constant on Unit; it holds iff
# application at () is defined.
TOP = finmap({UNIT: UNIT})
BOT = finmap({})


def holds(formula: PVal) -> bool:
    return apply_pval(formula, UNIT).defined()


def logical(b: bool) -> PVal:
    return TOP if b else BOT
