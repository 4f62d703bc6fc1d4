"""AST shared by exact programs, their float approximations, and error bounds.

A single expression type serves all three worlds: binders, application,
fix, conditionals and reductions are common, and the worlds differ only
in which literals and builtin operators they use.  Everything here is
immutable and safe to share across threads.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class RealT:
    def __str__(self) -> str:
        return "Real"


@dataclass(frozen=True)
class Float64T:
    def __str__(self) -> str:
        return "Float64"


@dataclass(frozen=True)
class NatT:
    def __str__(self) -> str:
        return "Nat"


@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class UnitT:
    def __str__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class ErrRealT:
    """Nonnegative reals extended with infinity; the error carrier."""

    def __str__(self) -> str:
        return "ErrReal"


@dataclass(frozen=True)
class Arrow:
    dom: "Ty"
    cod: "Ty"

    def __str__(self) -> str:
        return f"(-> {self.dom} {self.cod})"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Ty"

    def __str__(self) -> str:
        return f"(forall {self.var} {self.body})"


@dataclass(frozen=True)
class TyVar:
    name: str

    def __str__(self) -> str:
        return self.name


Ty = Union[RealT, Float64T, NatT, BoolT, UnitT, ErrRealT, Arrow, Forall, TyVar]

REAL = RealT()
FLOAT64 = Float64T()
NAT = NatT()
BOOL = BoolT()
UNIT = UnitT()
ERRREAL = ErrRealT()


def arrows(*tys: Ty) -> Ty:
    """Right-associated arrow chain: arrows(a, b, c) = a -> (b -> c)."""
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = Arrow(t, out)
    return out


def free_tyvars(t: Ty, bound: frozenset = frozenset()) -> set:
    if isinstance(t, TyVar):
        return set() if t.name in bound else {t.name}
    if isinstance(t, Arrow):
        return free_tyvars(t.dom, bound) | free_tyvars(t.cod, bound)
    if isinstance(t, Forall):
        return free_tyvars(t.body, bound | {t.var})
    return set()


def subst_ty(t: Ty, name: str, repl: Ty) -> Ty:
    """Capture-avoiding substitution of a type for a type variable."""
    if isinstance(t, TyVar):
        return repl if t.name == name else t
    if isinstance(t, Arrow):
        return Arrow(subst_ty(t.dom, name, repl), subst_ty(t.cod, name, repl))
    if isinstance(t, Forall):
        if t.var == name:
            return t
        if t.var in free_tyvars(repl):
            fresh = t.var
            avoid = free_tyvars(repl) | free_tyvars(t.body)
            while fresh in avoid:
                fresh = fresh + "'"
            renamed = subst_ty(t.body, t.var, TyVar(fresh))
            return Forall(fresh, subst_ty(renamed, name, repl))
        return Forall(t.var, subst_ty(t.body, name, repl))
    return t


# ---------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    binder: str
    annot: Ty
    body: "Expr"


@dataclass(frozen=True)
class App:
    fn: "Expr"
    arg: "Expr"


@dataclass(frozen=True)
class TyLam:
    tyvar: str
    body: "Expr"


@dataclass(frozen=True)
class TyApp:
    expr: "Expr"
    ty: Ty


@dataclass(frozen=True)
class Fix:
    expr: "Expr"


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then_e: "Expr"
    else_e: "Expr"


@dataclass(frozen=True)
class RealLit:
    """Exact rational real literal; never a binary64."""

    value: Fraction


@dataclass(frozen=True)
class NatLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class FloatLit:
    """Binary64 literal, stored as the exact bit pattern."""

    bits: int

    @staticmethod
    def of(x: float) -> "FloatLit":
        return FloatLit(struct.unpack(">Q", struct.pack(">d", x))[0])

    @property
    def value(self) -> float:
        return struct.unpack(">d", struct.pack(">Q", self.bits))[0]


@dataclass(frozen=True)
class ErrLit:
    """Nonnegative rational error literal; None means infinity."""

    value: Optional[Fraction]

    def __post_init__(self):
        if self.value is not None and self.value < 0:
            raise ValueError("error literals are nonnegative")


@dataclass(frozen=True)
class Builtin:
    """Builtin operator application; fewer args than the arity is a
    partial application and is a first-class value."""

    op: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class RedSeq:
    """redseq f n g folds g(0) .. g(n-1) with f, starting from the
    zero of the element carrier (0, 0.0, or the empty error)."""

    combiner: "Expr"
    count: "Expr"
    generator: "Expr"


@dataclass(frozen=True)
class Bottom:
    """Divergence marker.  Internal only; no surface form."""

    annot: Ty


Expr = Union[
    Var, Lam, App, TyLam, TyApp, Fix, If,
    RealLit, NatLit, BoolLit, FloatLit, ErrLit,
    Builtin, RedSeq, Bottom,
]


# ---------------------------------------------------------------------------
# Builtin registry

def _sig(*tys: Ty) -> Tuple[Tuple[Ty, ...], Ty]:
    return tuple(tys[:-1]), tys[-1]


#: op name -> (argument types, result type)
BUILTINS = {
    # exact reals
    "+r": _sig(REAL, REAL, REAL),
    "-r": _sig(REAL, REAL, REAL),
    "*r": _sig(REAL, REAL, REAL),
    "/r": _sig(REAL, REAL, REAL),
    "sinr": _sig(REAL, REAL),
    "absr": _sig(REAL, REAL),
    "leqr": _sig(REAL, REAL, BOOL),
    "dr": _sig(REAL, REAL, ERRREAL),
    "nat2real": _sig(NAT, REAL),
    # binary64
    "+f": _sig(FLOAT64, FLOAT64, FLOAT64),
    "-f": _sig(FLOAT64, FLOAT64, FLOAT64),
    "*f": _sig(FLOAT64, FLOAT64, FLOAT64),
    "/f": _sig(FLOAT64, FLOAT64, FLOAT64),
    "sinf": _sig(FLOAT64, FLOAT64),
    "leqf": _sig(FLOAT64, FLOAT64, BOOL),
    "nat2float": _sig(NAT, FLOAT64),
    # naturals
    "+n": _sig(NAT, NAT, NAT),
    "-n": _sig(NAT, NAT, NAT),          # truncated subtraction
    "*n": _sig(NAT, NAT, NAT),
    "dn": _sig(NAT, NAT, NAT),          # absolute difference
    "leqn": _sig(NAT, NAT, BOOL),
    "floorK": _sig(NAT, NAT, NAT),      # (floorK x k) = k * (x div k)
    "ceilK": _sig(NAT, NAT, NAT),
    "nat2err": _sig(NAT, ERRREAL),
    # error-level arithmetic
    "+q": _sig(ERRREAL, ERRREAL, ERRREAL),
    "*q": _sig(ERRREAL, ERRREAL, ERRREAL),
    # interval rounding-error bounds for the lowered float ops
    "+err": _sig(REAL, ERRREAL, REAL, ERRREAL, ERRREAL),
    "-err": _sig(REAL, ERRREAL, REAL, ERRREAL, ERRREAL),
    "*err": _sig(REAL, ERRREAL, REAL, ERRREAL, ERRREAL),
    "/err": _sig(REAL, ERRREAL, REAL, ERRREAL, ERRREAL),
    "sinerr": _sig(REAL, ERRREAL, ERRREAL),
    "n2rerr": _sig(NAT, NAT, ERRREAL),
}


def builtin_arity(op: str) -> int:
    return len(BUILTINS[op][0])


# ---------------------------------------------------------------------------
# Free variables and substitution

def free_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Lam):
        return free_vars(e.body) - {e.binder}
    if isinstance(e, App):
        return free_vars(e.fn) | free_vars(e.arg)
    if isinstance(e, (TyLam,)):
        return free_vars(e.body)
    if isinstance(e, TyApp):
        return free_vars(e.expr)
    if isinstance(e, Fix):
        return free_vars(e.expr)
    if isinstance(e, If):
        return free_vars(e.cond) | free_vars(e.then_e) | free_vars(e.else_e)
    if isinstance(e, Builtin):
        out = set()
        for a in e.args:
            out |= free_vars(a)
        return out
    if isinstance(e, RedSeq):
        return free_vars(e.combiner) | free_vars(e.count) | free_vars(e.generator)
    return set()


_FRESH_SEP = "%"


def fresh_name(base: str, avoid: set) -> str:
    if base not in avoid:
        return base
    i = 1
    while f"{base}{_FRESH_SEP}{i}" in avoid:
        i += 1
    return f"{base}{_FRESH_SEP}{i}"


def subst(e: Expr, name: str, repl: Expr) -> Expr:
    """Capture-avoiding substitution of an expression for a variable."""
    if isinstance(e, Var):
        return repl if e.name == name else e
    if isinstance(e, Lam):
        if e.binder == name:
            return e
        if e.binder in free_vars(repl):
            nb = fresh_name(e.binder, free_vars(repl) | free_vars(e.body) | {name})
            body = subst(e.body, e.binder, Var(nb))
            return Lam(nb, e.annot, subst(body, name, repl))
        return Lam(e.binder, e.annot, subst(e.body, name, repl))
    if isinstance(e, App):
        return App(subst(e.fn, name, repl), subst(e.arg, name, repl))
    if isinstance(e, TyLam):
        return TyLam(e.tyvar, subst(e.body, name, repl))
    if isinstance(e, TyApp):
        return TyApp(subst(e.expr, name, repl), e.ty)
    if isinstance(e, Fix):
        return Fix(subst(e.expr, name, repl))
    if isinstance(e, If):
        return If(subst(e.cond, name, repl), subst(e.then_e, name, repl),
                  subst(e.else_e, name, repl))
    if isinstance(e, Builtin):
        return Builtin(e.op, tuple(subst(a, name, repl) for a in e.args))
    if isinstance(e, RedSeq):
        return RedSeq(subst(e.combiner, name, repl), subst(e.count, name, repl),
                      subst(e.generator, name, repl))
    return e


def subst_tyvar(e: Expr, name: str, repl: Ty) -> Expr:
    """Substitute a type for a type variable throughout annotations."""
    if isinstance(e, Var):
        return e
    if isinstance(e, Lam):
        return Lam(e.binder, subst_ty(e.annot, name, repl), subst_tyvar(e.body, name, repl))
    if isinstance(e, App):
        return App(subst_tyvar(e.fn, name, repl), subst_tyvar(e.arg, name, repl))
    if isinstance(e, TyLam):
        if e.tyvar == name:
            return e
        return TyLam(e.tyvar, subst_tyvar(e.body, name, repl))
    if isinstance(e, TyApp):
        return TyApp(subst_tyvar(e.expr, name, repl), subst_ty(e.ty, name, repl))
    if isinstance(e, Fix):
        return Fix(subst_tyvar(e.expr, name, repl))
    if isinstance(e, If):
        return If(subst_tyvar(e.cond, name, repl), subst_tyvar(e.then_e, name, repl),
                  subst_tyvar(e.else_e, name, repl))
    if isinstance(e, Builtin):
        return Builtin(e.op, tuple(subst_tyvar(a, name, repl) for a in e.args))
    if isinstance(e, RedSeq):
        return RedSeq(subst_tyvar(e.combiner, name, repl),
                      subst_tyvar(e.count, name, repl),
                      subst_tyvar(e.generator, name, repl))
    return e


# ---------------------------------------------------------------------------
# Printing back to surface syntax

def ty_to_source(t: Ty) -> str:
    return str(t)


def _frac_to_source(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def to_source(e: Expr) -> str:
    """Render an expression in the s-expression surface grammar.

    Rational literals print as p/q so they re-parse exactly.  Float
    literals print as the shortest round-trip decimal; errors print as
    (err p/q) or inf.
    """
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Lam):
        return f"(lam ({e.binder} {ty_to_source(e.annot)}) {to_source(e.body)})"
    if isinstance(e, App):
        return f"(app {to_source(e.fn)} {to_source(e.arg)})"
    if isinstance(e, TyLam):
        return f"(tlam {e.tyvar} {to_source(e.body)})"
    if isinstance(e, TyApp):
        return f"(tyapp {to_source(e.expr)} {ty_to_source(e.ty)})"
    if isinstance(e, Fix):
        return f"(fix {to_source(e.expr)})"
    if isinstance(e, If):
        return f"(if {to_source(e.cond)} {to_source(e.then_e)} {to_source(e.else_e)})"
    if isinstance(e, RealLit):
        return _frac_to_source(e.value)
    if isinstance(e, NatLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, FloatLit):
        return repr(e.value)
    if isinstance(e, ErrLit):
        if e.value is None:
            return "inf"
        return f"(err {_frac_to_source(e.value)})"
    if isinstance(e, Builtin):
        if not e.args:
            return e.op
        return "(" + " ".join([e.op] + [to_source(a) for a in e.args]) + ")"
    if isinstance(e, RedSeq):
        return (f"(redseq {to_source(e.combiner)} {to_source(e.count)} "
                f"{to_source(e.generator)})")
    if isinstance(e, Bottom):
        raise ValueError("bottom has no surface form")
    raise TypeError(f"not an expression: {e!r}")
