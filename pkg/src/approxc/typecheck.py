"""Kinding and typing for the explicitly-annotated calculus.

Binder annotations keep the judgment syntax-directed, so no unification
is needed; the result type of a well-typed term is unique.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .syntax import (
    BOOL, BUILTINS, ERRREAL, FLOAT64, NAT, REAL,
    App, Arrow, BoolLit, Bottom, Builtin, ErrLit, Expr, Fix, FloatLit,
    Forall, If, Lam, NatLit, RealLit, RedSeq, Ty, TyApp, TyLam, TyVar,
    Var, subst_ty,
)


class TypeError_(Exception):
    pass


class UnboundVariable(TypeError_):
    def __init__(self, name: str):
        super().__init__(f"unbound variable: {name}")
        self.name = name


class UnboundTypeVariable(TypeError_):
    def __init__(self, name: str):
        super().__init__(f"unbound type variable: {name}")
        self.name = name


class KindError(TypeError_):
    pass


class TypeMismatch(TypeError_):
    def __init__(self, expected, found, location: str = ""):
        where = f" in {location}" if location else ""
        super().__init__(f"expected {expected}, found {found}{where}")
        self.expected = expected
        self.found = found
        self.location = location


@dataclass(frozen=True)
class TyCtx:
    """Ordered bindings; lookup respects shadowing by the latest binding."""

    vars: Tuple[Tuple[str, Ty], ...] = ()
    tyvars: Tuple[str, ...] = ()

    def bind(self, name: str, ty: Ty) -> "TyCtx":
        return TyCtx(self.vars + ((name, ty),), self.tyvars)

    def bind_tyvar(self, name: str) -> "TyCtx":
        return TyCtx(self.vars, self.tyvars + (name,))

    def lookup(self, name: str) -> Optional[Ty]:
        for n, t in reversed(self.vars):
            if n == name:
                return t
        return None

    def has_tyvar(self, name: str) -> bool:
        return name in self.tyvars


def kind_check(ctx: TyCtx, t: Ty) -> None:
    """Well-formedness: every type variable must be in scope."""
    if isinstance(t, TyVar):
        if not ctx.has_tyvar(t.name):
            raise UnboundTypeVariable(t.name)
        return
    if isinstance(t, Arrow):
        kind_check(ctx, t.dom)
        kind_check(ctx, t.cod)
        return
    if isinstance(t, Forall):
        kind_check(ctx.bind_tyvar(t.var), t.body)
        return
    # base types are always well-kinded


def kind_ok(ctx: TyCtx, t: Ty) -> bool:
    try:
        kind_check(ctx, t)
        return True
    except UnboundTypeVariable:
        return False


def infer_type(ctx: TyCtx, e: Expr) -> Ty:
    if isinstance(e, Var):
        t = ctx.lookup(e.name)
        if t is None:
            raise UnboundVariable(e.name)
        return t
    if isinstance(e, Lam):
        kind_check(ctx, e.annot)
        body_t = infer_type(ctx.bind(e.binder, e.annot), e.body)
        return Arrow(e.annot, body_t)
    if isinstance(e, App):
        fn_t = infer_type(ctx, e.fn)
        arg_t = infer_type(ctx, e.arg)
        if not isinstance(fn_t, Arrow):
            raise TypeMismatch("a function type", fn_t, "application head")
        if fn_t.dom != arg_t:
            raise TypeMismatch(fn_t.dom, arg_t, "application argument")
        return fn_t.cod
    if isinstance(e, TyLam):
        body_t = infer_type(ctx.bind_tyvar(e.tyvar), e.body)
        return Forall(e.tyvar, body_t)
    if isinstance(e, TyApp):
        fn_t = infer_type(ctx, e.expr)
        if not isinstance(fn_t, Forall):
            raise KindError(f"type application of non-universal type {fn_t}")
        kind_check(ctx, e.ty)
        return subst_ty(fn_t.body, fn_t.var, e.ty)
    if isinstance(e, Fix):
        t = infer_type(ctx, e.expr)
        if not isinstance(t, Arrow) or t.dom != t.cod:
            raise TypeMismatch("a type of shape (-> t t)", t, "fix")
        return t.dom
    if isinstance(e, If):
        ct = infer_type(ctx, e.cond)
        if ct != BOOL:
            raise TypeMismatch(BOOL, ct, "if condition")
        tt = infer_type(ctx, e.then_e)
        ft = infer_type(ctx, e.else_e)
        if tt != ft:
            raise TypeMismatch(tt, ft, "if branches")
        return tt
    if isinstance(e, RealLit):
        return REAL
    if isinstance(e, NatLit):
        return NAT
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, FloatLit):
        return FLOAT64
    if isinstance(e, ErrLit):
        return ERRREAL
    if isinstance(e, Builtin):
        if e.op not in BUILTINS:
            raise TypeError_(f"unregistered builtin: {e.op}")
        arg_tys, res = BUILTINS[e.op]
        if len(e.args) > len(arg_tys):
            raise TypeMismatch(f"at most {len(arg_tys)} arguments", len(e.args), e.op)
        for i, a in enumerate(e.args):
            at = infer_type(ctx, a)
            if at != arg_tys[i]:
                raise TypeMismatch(arg_tys[i], at, f"argument {i + 1} of {e.op}")
        t: Ty = res
        for rest in reversed(arg_tys[len(e.args):]):
            t = Arrow(rest, t)
        return t
    if isinstance(e, RedSeq):
        nt = infer_type(ctx, e.count)
        if nt != NAT:
            raise TypeMismatch(NAT, nt, "redseq count")
        gt = infer_type(ctx, e.generator)
        if not isinstance(gt, Arrow) or gt.dom != NAT:
            raise TypeMismatch("(-> Nat t)", gt, "redseq generator")
        elem = gt.cod
        ft = infer_type(ctx, e.combiner)
        if ft != Arrow(elem, Arrow(elem, elem)):
            raise TypeMismatch(Arrow(elem, Arrow(elem, elem)), ft, "redseq combiner")
        return elem
    if isinstance(e, Bottom):
        kind_check(ctx, e.annot)
        return e.annot
    raise TypeError_(f"not an expression: {e!r}")
