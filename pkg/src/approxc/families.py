"""Approximation descriptors and sampling-based membership checking.

A descriptor ties together an exact type, an approximate type, an error
carrier with its zero and addition, and the membership relation "e is
approximated by a within q".  Base descriptors cover reals-by-floats,
naturals, and booleans; function descriptors quantify over member
inputs; polymorphic descriptors abstract a whole base family.

Membership at function descriptors is checked by sampling input triples
that are members by construction, so a passing verdict there means
pass-on-samples, never proof.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

from . import enclosure as enc
from .enclosure import RealEnclosure, from_rational
from .floats import nearest_float, to_fraction
from .interp import (
    DIVERGED, EvalConfig, OracleInconclusive, VErr, VFloat,
    bound_of, eval_approx, eval_error, eval_exact,
)
from .parser import parse
from .quant import AxiomReport, AxiomResult
from .sampling import (
    sample_err_fraction, sample_finite_err_fraction, sample_nat,
    sample_real_fraction, trial_rng,
)
from .syntax import (
    BOOL, ERRREAL, FLOAT64, NAT, REAL,
    App, Arrow, BoolLit, Builtin, ErrLit, Expr, FloatLit, Forall, Lam,
    NatLit, RealLit, Ty, TyApp, TyLam, TyVar, Var, free_vars, to_source,
)

# ---------------------------------------------------------------------------
# descriptors

@dataclass(frozen=True)
class FlBase:
    """Reals approximated by binary64, error = real distance."""


@dataclass(frozen=True)
class NatBase:
    """Naturals approximated by naturals, error = absolute difference."""


@dataclass(frozen=True)
class BoolBase:
    """Booleans approximated by booleans; the error counts possible
    disagreement (0 = always equal, >= 1 = may differ)."""


@dataclass(frozen=True)
class VarBase:
    """A family variable bound by an enclosing polymorphic descriptor."""

    xe: str
    xa: str
    xq: str
    z0: str
    zp: str


@dataclass(frozen=True)
class Pi:
    """Function approximation: inputs range over members of `fam`, and
    the error maps an exact input and its input error to an output
    error."""

    xe: str
    xa: str
    xq: str
    fam: "ApproxTy"
    body: "ApproxTy"


@dataclass(frozen=True)
class PiTy:
    """Polymorphic approximation: abstracts the exact/approximate/error
    types of a base family together with its error zero and addition."""

    xe: str
    xa: str
    xq: str
    z0: str
    zp: str
    body: "ApproxTy"


ApproxTy = Union[FlBase, NatBase, BoolBase, VarBase, Pi, PiTy]

FL = FlBase()
NAT_A = NatBase()
BOOL_A = BoolBase()


def fn_family(*fams: ApproxTy) -> ApproxTy:
    """Non-dependent function descriptor chain, right associated."""
    out = fams[-1]
    for i, f in reversed(list(enumerate(fams[:-1]))):
        out = Pi(f"x{i}", f"x{i}_a", f"x{i}_q", f, out)
    return out


def exact_ty(a: ApproxTy) -> Ty:
    if isinstance(a, FlBase):
        return REAL
    if isinstance(a, NatBase):
        return NAT
    if isinstance(a, BoolBase):
        return BOOL
    if isinstance(a, VarBase):
        return TyVar(a.xe)
    if isinstance(a, Pi):
        return Arrow(exact_ty(a.fam), exact_ty(a.body))
    if isinstance(a, PiTy):
        return Forall(a.xe, exact_ty(a.body))
    raise TypeError(a)


def approx_ty(a: ApproxTy) -> Ty:
    if isinstance(a, FlBase):
        return FLOAT64
    if isinstance(a, NatBase):
        return NAT
    if isinstance(a, BoolBase):
        return BOOL
    if isinstance(a, VarBase):
        return TyVar(a.xa)
    if isinstance(a, Pi):
        return Arrow(approx_ty(a.fam), approx_ty(a.body))
    if isinstance(a, PiTy):
        return Forall(a.xa, approx_ty(a.body))
    raise TypeError(a)


def err_ty(a: ApproxTy) -> Ty:
    if isinstance(a, FlBase):
        return ERRREAL
    if isinstance(a, (NatBase, BoolBase)):
        return NAT
    if isinstance(a, VarBase):
        return TyVar(a.xq)
    if isinstance(a, Pi):
        return Arrow(exact_ty(a.fam), Arrow(err_ty(a.fam), err_ty(a.body)))
    if isinstance(a, PiTy):
        q = TyVar(a.xq)
        return Forall(a.xe, Forall(a.xq, Arrow(q, Arrow(
            Arrow(q, Arrow(q, q)), err_ty(a.body)))))
    raise TypeError(a)


def zero_expr(a: ApproxTy) -> Expr:
    if isinstance(a, FlBase):
        return ErrLit(Fraction(0))
    if isinstance(a, (NatBase, BoolBase)):
        return NatLit(0)
    if isinstance(a, VarBase):
        return Var(a.z0)
    if isinstance(a, Pi):
        return Lam(a.xe, exact_ty(a.fam), Lam(a.xq, err_ty(a.fam),
                                              zero_expr(a.body)))
    if isinstance(a, PiTy):
        q = TyVar(a.xq)
        return TyLam(a.xe, TyLam(a.xq, Lam(
            a.z0, q, Lam(a.zp, Arrow(q, Arrow(q, q)), zero_expr(a.body)))))
    raise TypeError(a)


def plus_apply(a: ApproxTy, q1: Expr, q2: Expr) -> Expr:
    """The family's error addition applied to two error expressions."""
    if isinstance(a, FlBase):
        return Builtin("+q", (q1, q2))
    if isinstance(a, (NatBase, BoolBase)):
        return Builtin("+n", (q1, q2))
    if isinstance(a, VarBase):
        return App(App(Var(a.zp), q1), q2)
    if isinstance(a, Pi):
        xe, xq = a.xe, a.xq
        avoid = free_vars(q1) | free_vars(q2)
        while xe in avoid or xq in avoid or xe == xq:
            xe += "'"
            xq += "'"
        return Lam(xe, exact_ty(a.fam), Lam(xq, err_ty(a.fam), plus_apply(
            a.body,
            App(App(q1, Var(xe)), Var(xq)),
            App(App(q2, Var(xe)), Var(xq)))))
    raise TypeError(f"no expressible addition for {a!r}")


def plus_lambda(a: ApproxTy) -> Expr:
    t = err_ty(a)
    return Lam("%qa", t, Lam("%qb", t, plus_apply(a, Var("%qa"), Var("%qb"))))


def _canon(a: ApproxTy, ren: Dict[str, str], counter: List[int]):
    """Structure of a descriptor with binders renamed canonically."""
    if isinstance(a, (FlBase, NatBase, BoolBase)):
        return type(a).__name__
    if isinstance(a, VarBase):
        return ("var", ren.get(a.xe, a.xe))
    if isinstance(a, Pi):
        return ("pi", _canon(a.fam, ren, counter), _canon(a.body, ren, counter))
    if isinstance(a, PiTy):
        counter[0] += 1
        nm = f"X{counter[0]}"
        ren2 = dict(ren)
        ren2[a.xe] = nm
        return ("pity", nm, _canon(a.body, ren2, counter))
    raise TypeError(a)


def same_family(a: ApproxTy, b: ApproxTy) -> bool:
    return _canon(a, {}, [0]) == _canon(b, {}, [0])


def family_source(a: ApproxTy) -> str:
    if isinstance(a, FlBase):
        return "Fl"
    if isinstance(a, NatBase):
        return "Nat"
    if isinstance(a, BoolBase):
        return "Bool"
    if isinstance(a, VarBase):
        return a.xe
    if isinstance(a, Pi):
        left = family_source(a.fam)
        if isinstance(a.fam, (Pi, PiTy)):
            left = f"({left})"
        return f"{left} => {family_source(a.body)}"
    if isinstance(a, PiTy):
        return f"forall {a.xe}. {family_source(a.body)}"
    raise TypeError(a)


def family_from_type(t: Ty, tymap: Optional[Dict[str, VarBase]] = None) -> ApproxTy:
    """The canonical descriptor for an exact type."""
    tymap = tymap or {}
    if t == REAL:
        return FL
    if t == NAT:
        return NAT_A
    if t == BOOL:
        return BOOL_A
    if isinstance(t, TyVar) and t.name in tymap:
        return tymap[t.name]
    if isinstance(t, Arrow):
        return fn_family(family_from_type(t.dom, tymap),
                         family_from_type(t.cod, tymap))
    raise TypeError(f"no known approximation family for type {t}")


def instantiate_poly(pt: PiTy, fam: ApproxTy) -> ApproxTy:
    """Substitute a concrete family for the abstracted one."""

    def go(a: ApproxTy) -> ApproxTy:
        if isinstance(a, VarBase):
            return fam if a.xe == pt.xe else a
        if isinstance(a, Pi):
            return Pi(a.xe, a.xa, a.xq, go(a.fam), go(a.body))
        if isinstance(a, PiTy):
            if a.xe == pt.xe:  # shadowed
                return a
            return PiTy(a.xe, a.xa, a.xq, a.z0, a.zp, go(a.body))
        return a

    return go(pt.body)


def monomorphize(pt: PiTy, fam: ApproxTy, e: Expr, a: Expr, q: Expr
                 ) -> Tuple[Expr, Expr, Expr, ApproxTy]:
    """Apply a polymorphic triple at a concrete base family."""
    me = TyApp(e, exact_ty(fam))
    ma = TyApp(a, approx_ty(fam))
    mq = App(App(TyApp(TyApp(q, exact_ty(fam)), err_ty(fam)),
                 zero_expr(fam)), plus_lambda(fam))
    return me, ma, mq, instantiate_poly(pt, fam)


# ---------------------------------------------------------------------------
# approximation contexts

@dataclass(frozen=True)
class ValTriple:
    xe: str
    xa: str
    xq: str
    family: ApproxTy
    pinned: Optional[Tuple[Expr, Expr, Expr]] = None


@dataclass(frozen=True)
class TyTriple:
    xe: str
    xa: str
    xq: str
    z0: str
    zp: str


@dataclass(frozen=True)
class Constraint:
    description: str


CtxEntry = Union[ValTriple, TyTriple, Constraint]


@dataclass(frozen=True)
class ApproxCtx:
    entries: Tuple[CtxEntry, ...] = ()

    def extend(self, entry: CtxEntry) -> "ApproxCtx":
        names = self.names()
        if isinstance(entry, ValTriple):
            fresh = {entry.xe, entry.xa, entry.xq}
        elif isinstance(entry, TyTriple):
            fresh = {entry.xe, entry.xa, entry.xq, entry.z0, entry.zp}
        else:
            fresh = set()
        if names & fresh:
            raise ValueError(f"context names collide: {names & fresh}")
        return ApproxCtx(self.entries + (entry,))

    def names(self) -> set:
        out = set()
        for en in self.entries:
            if isinstance(en, ValTriple):
                out |= {en.xe, en.xa, en.xq}
            elif isinstance(en, TyTriple):
                out |= {en.xe, en.xa, en.xq, en.z0, en.zp}
        return out

    def lookup(self, xe: str) -> Optional[ValTriple]:
        for en in reversed(self.entries):
            if isinstance(en, ValTriple) and en.xe == xe:
                return en
        return None


def ctx_exact(ctx: ApproxCtx):
    """|ctx| projected to the exact world as a typing context."""
    from .typecheck import TyCtx
    t = TyCtx()
    for en in ctx.entries:
        if isinstance(en, ValTriple):
            t = t.bind(en.xe, exact_ty(en.family))
        elif isinstance(en, TyTriple):
            t = t.bind_tyvar(en.xe)
    return t


def ctx_approx(ctx: ApproxCtx):
    from .typecheck import TyCtx
    t = TyCtx()
    for en in ctx.entries:
        if isinstance(en, ValTriple):
            t = t.bind(en.xa, approx_ty(en.family))
        elif isinstance(en, TyTriple):
            t = t.bind_tyvar(en.xa)
    return t


def ctx_err(ctx: ApproxCtx):
    """Exact plus error bindings: the context error expressions live in."""
    from .typecheck import TyCtx
    t = TyCtx()
    for en in ctx.entries:
        if isinstance(en, ValTriple):
            t = t.bind(en.xe, exact_ty(en.family))
            t = t.bind(en.xq, err_ty(en.family))
        elif isinstance(en, TyTriple):
            t = t.bind_tyvar(en.xe)
            t = t.bind_tyvar(en.xq)
            q = TyVar(en.xq)
            t = t.bind(en.z0, q)
            t = t.bind(en.zp, Arrow(q, Arrow(q, q)))
    return t


# ---------------------------------------------------------------------------
# verdicts

@dataclass
class Verdict:
    status: str  # "pass" | "fail" | "inconclusive"
    reason: str = ""
    counterexample: Optional[dict] = None
    trials: int = 0
    passes: int = 0
    inconclusive: int = 0
    on_samples: bool = False  # true when the verdict rests on sampling

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> str:
        doc = {"schema": "verdict/v1", "status": self.status,
               "trials": self.trials, "passes": self.passes,
               "inconclusive": self.inconclusive,
               "on_samples": self.on_samples}
        if self.reason:
            doc["reason"] = self.reason
        if self.counterexample is not None:
            doc["counterexample"] = self.counterexample
        return json.dumps(doc, sort_keys=True)


@dataclass
class TrialOutcome:
    index: int
    status: str  # "pass" | "fail" | "inconclusive"
    record: dict


def _precisions(cfg: EvalConfig):
    p = cfg.precision_bits
    while True:
        yield min(p, cfg.max_precision_bits)
        if p >= cfg.max_precision_bits:
            return
        p *= 2


def _err_interval_strings(q: VErr) -> List[str]:
    return ["inf" if q.lo is None else str(q.lo),
            "inf" if q.hi is None else str(q.hi)]


# ---------------------------------------------------------------------------
# membership

_TIGHT_CUTOFF_BITS = 48


def _check_distance_leq(d_of_p: Callable[[int], Tuple[RealEnclosure, VErr]],
                        cfg: EvalConfig) -> Tuple[str, dict]:
    """Decide distance <= bound with precision escalation.

    An undecided comparison means the distance cannot provably exceed
    the bound, so it passes with the combined enclosure width reported
    as slack; escalation stops once the enclosures agree to 48 bits
    beyond the starting precision (a tight bound met exactly) or at the
    precision cap.
    """
    p0 = cfg.precision_bits
    last = None
    for p in _precisions(cfg):
        d, qv = d_of_p(p)
        if qv.lo is None:
            return ("pass", {"bound": ["inf", "inf"], "slack": "0"})
        qlo = qv.lo
        qhi = qv.hi
        last = (d, qv)
        if qhi is not None and d.hi <= qlo:
            return ("pass", {
                "measured": [str(d.lo), str(d.hi)],
                "bound": _err_interval_strings(qv),
                "slack": "0",
                "tight": bool(d.hi + d.width >= qlo)})
        if qhi is None:
            # bound might be infinite; cannot be refuted
            return ("pass", {
                "measured": [str(d.lo), str(d.hi)],
                "bound": _err_interval_strings(qv),
                "slack": str(d.width)})
        if d.lo > qhi:
            return ("fail", {
                "measured": [str(d.lo), str(d.hi)],
                "bound": _err_interval_strings(qv),
                "excess": str(d.lo - qhi)})
        w = d.width + (qhi - qlo)
        if w <= Fraction(1, 1 << (p0 + _TIGHT_CUTOFF_BITS)) * max(Fraction(1), qhi):
            break
    d, qv = last
    # undecided: the distance does not provably exceed the bound, so
    # this passes, with the oracle width reported as slack
    w = d.width + ((qv.hi - qv.lo) if qv.hi is not None else Fraction(0))
    return ("pass", {
        "measured": [str(d.lo), str(d.hi)],
        "bound": _err_interval_strings(qv),
        "slack": str(w),
        "tight": True})


def _member_base_once(fam: ApproxTy, q: Expr, a: Expr, e: Expr,
                      cfg: EvalConfig) -> Tuple[str, dict]:
    if isinstance(fam, FlBase):
        av = eval_approx(a, cfg=cfg)
        try:
            qv0 = bound_of(eval_error(q, cfg=cfg))
            ev0 = eval_exact(e, cfg=cfg)
        except OracleInconclusive as ex:
            return ("inconclusive", {"note": str(ex)})
        if qv0.lo is None:
            return ("pass", {"bound": ["inf", "inf"]})
        if ev0 is DIVERGED and av is DIVERGED:
            return ("pass", {"note": "both sides diverge"})
        if ev0 is DIVERGED:
            return ("fail", {"note": "exact diverges, approximation does not"})
        if av is DIVERGED:
            return ("fail", {"note": "approximation diverges under a finite bound"})
        if not isinstance(av, VFloat) or not math.isfinite(av.value):
            return ("fail", {"note": f"approximate value {av!r} has no finite "
                                     "real reading under a finite bound"})
        ra = to_fraction(av.value)

        def dist(p: int):
            cfgp = cfg.at_precision(p)
            qv = bound_of(eval_error(q, cfg=cfgp))
            ev = eval_exact(e, cfg=cfgp)
            d = enc.enclose_op("dr", [ev.enc, from_rational(ra, p)], p,
                               cfg.max_precision_bits)
            return d, qv

        try:
            status, rec = _check_distance_leq(dist, cfg)
        except OracleInconclusive as ex:
            return ("inconclusive", {"note": str(ex)})
        rec["approx"] = repr(av.value)
        return (status, rec)

    if isinstance(fam, (NatBase, BoolBase)):
        ev = eval_exact(e, cfg=cfg)
        av = eval_approx(a, cfg=cfg)
        qv = bound_of(eval_error(q, cfg=cfg))
        if qv.lo is None:
            return ("pass", {"bound": ["inf", "inf"]})
        if ev is DIVERGED or av is DIVERGED:
            if ev is DIVERGED and av is DIVERGED:
                return ("pass", {"note": "both sides diverge"})
            return ("fail", {"note": "one side diverges under a finite bound"})
        if isinstance(fam, NatBase):
            d = Fraction(abs(ev.value - av.value))
        else:
            d = Fraction(0 if ev.value == av.value else 1)
        hi = qv.hi if qv.hi is not None else d
        if d <= hi:
            return ("pass", {"measured": [str(d), str(d)],
                             "bound": _err_interval_strings(qv)})
        return ("fail", {"measured": [str(d), str(d)],
                         "bound": _err_interval_strings(qv)})
    raise TypeError(fam)


def _member_once(fam: ApproxTy, q: Expr, a: Expr, e: Expr,
                 rng: random.Random, cfg: EvalConfig,
                 inputs: List[str]) -> Tuple[str, dict]:
    if isinstance(fam, (FlBase, NatBase, BoolBase)):
        return _member_base_once(fam, q, a, e, cfg)
    if isinstance(fam, Pi):
        trip = sample_member_triple(fam.fam, rng)
        if trip is None:
            return ("inconclusive",
                    {"note": f"no input sampler for family "
                             f"{family_source(fam.fam)}"})
        e1, a1, q1 = trip
        inputs.append(to_source(e1))
        return _member_once(fam.body,
                            App(App(q, e1), q1), App(a, a1), App(e, e1),
                            rng, cfg, inputs)
    if isinstance(fam, PiTy):
        base: ApproxTy = FL if rng.randrange(2) == 0 else NAT_A
        me, ma, mq, mfam = monomorphize(fam, base, e, a, q)
        inputs.append(f"@{family_source(base)}")
        return _member_once(mfam, mq, ma, me, rng, cfg, inputs)
    if isinstance(fam, VarBase):
        return ("inconclusive", {"note": "free family variable"})
    raise TypeError(fam)


def member_trials(fam: ApproxTy, q: Expr, a: Expr, e: Expr,
                  trials: int, seed: int, cfg: EvalConfig) -> List[TrialOutcome]:
    """Per-trial membership outcomes.

    Base families take no samples, so a single deterministic evaluation
    stands for every requested trial."""
    n = max(1, trials)
    if isinstance(fam, (FlBase, NatBase, BoolBase)):
        status, rec = _member_once(fam, q, a, e, trial_rng(seed, 0), cfg, [])
        out = []
        for t in range(n):
            record = {"seed": seed, "trial": t, "inputs": []}
            record.update(rec)
            out.append(TrialOutcome(t, status, record))
        return out
    out = []
    for t in range(n):
        rng = trial_rng(seed, t)
        inputs: List[str] = []
        status, rec = _member_once(fam, q, a, e, rng, cfg, inputs)
        record = {"seed": seed, "trial": t, "inputs": inputs}
        record.update(rec)
        out.append(TrialOutcome(t, status, record))
    return out


def appr_member(fam: ApproxTy, q: Expr, a: Expr, e: Expr,
                trials: int = 100, seed: int = 42,
                cfg: EvalConfig = EvalConfig()) -> Verdict:
    """Does e belong to the members approximated by a within q?

    Base families decide by oracle comparison with precision escalation;
    function families sample member inputs, so a pass is on-samples.
    """
    outcomes = member_trials(fam, q, a, e, trials, seed, cfg)
    passes = sum(1 for o in outcomes if o.status == "pass")
    inconc = sum(1 for o in outcomes if o.status == "inconclusive")
    first_fail = next((o for o in outcomes if o.status == "fail"), None)
    v = Verdict(status="pass", trials=len(outcomes), passes=passes,
                inconclusive=inconc,
                on_samples=not isinstance(fam, (FlBase, NatBase, BoolBase)))
    if first_fail is not None:
        v.status = "fail"
        v.counterexample = first_fail.record
    elif inconc == len(outcomes) and outcomes:
        v.status = "inconclusive"
        v.reason = outcomes[0].record.get("note", "")
    return v


# ---------------------------------------------------------------------------
# member construction (sampling)

_FN_TRIPLES: Dict[str, List[Tuple[str, str, str]]] = {
    "Fl => Fl": [
        ("(lam (x Real) x)",
         "(lam (x Float64) x)",
         "(lam (x Real) (lam (k ErrReal) k))"),
        ("(lam (x Real) 1/3)",
         "(lam (x Float64) 0.3333333333333333)",
         "(lam (x Real) (lam (k ErrReal) (err 1/54043195528445952)))"),
        ("(lam (x Real) 1/1)",
         "(lam (x Float64) 1.0)",
         "(lam (x Real) (lam (k ErrReal) (err 0/1)))"),
        ("(lam (x Real) (+r x x))",
         "(lam (x Float64) (+f x x))",
         "(lam (x Real) (lam (k ErrReal) (+err x k x k)))"),
        ("(lam (x Real) (sinr x))",
         "(lam (x Float64) (sinf x))",
         "(lam (x Real) (lam (k ErrReal) (sinerr x k)))"),
        ("(lam (x Real) (*r 3/2 x))",
         "(lam (x Float64) (*f 1.5 x))",
         "(lam (x Real) (lam (k ErrReal) (*err 3/2 (err 0/1) x k)))"),
    ],
    "Nat => Fl": [
        ("(lam (n Nat) (nat2real n))",
         "(lam (n Nat) (nat2float n))",
         "(lam (n Nat) (lam (k Nat) (n2rerr n k)))"),
        ("(lam (n Nat) 1/2)",
         "(lam (n Nat) 0.5)",
         "(lam (n Nat) (lam (k Nat) (err 0/1)))"),
    ],
    "Nat => Nat": [
        ("(lam (n Nat) n)", "(lam (n Nat) n)",
         "(lam (n Nat) (lam (k Nat) k))"),
        ("(lam (n Nat) (+n n 1))", "(lam (n Nat) (+n n 1))",
         "(lam (n Nat) (lam (k Nat) k))"),
    ],
}

_fn_triple_cache: Dict[str, List[Tuple[Expr, Expr, Expr]]] = {}


def as_float_literals(e: Expr) -> Expr:
    """Reread numeric literals as binary64 (surface decimals parse as
    rationals; approximate programs carry float literals)."""
    if isinstance(e, RealLit):
        return FloatLit.of(nearest_float(e.value))
    if isinstance(e, Lam):
        return Lam(e.binder, e.annot, as_float_literals(e.body))
    if isinstance(e, App):
        return App(as_float_literals(e.fn), as_float_literals(e.arg))
    if isinstance(e, TyLam):
        return TyLam(e.tyvar, as_float_literals(e.body))
    if isinstance(e, TyApp):
        return TyApp(as_float_literals(e.expr), e.ty)
    if isinstance(e, Builtin):
        return Builtin(e.op, tuple(as_float_literals(x) for x in e.args))
    from .syntax import Fix as _Fix, If as _If, RedSeq as _RedSeq
    if isinstance(e, _Fix):
        return _Fix(as_float_literals(e.expr))
    if isinstance(e, _If):
        return _If(as_float_literals(e.cond), as_float_literals(e.then_e),
                   as_float_literals(e.else_e))
    if isinstance(e, _RedSeq):
        return _RedSeq(as_float_literals(e.combiner),
                       as_float_literals(e.count),
                       as_float_literals(e.generator))
    return e


def _fn_triples(key: str) -> List[Tuple[Expr, Expr, Expr]]:
    if key not in _fn_triple_cache:
        _fn_triple_cache[key] = [
            (parse(e), as_float_literals(parse(a)), parse(q))
            for e, a, q in _FN_TRIPLES[key]]
    return _fn_triple_cache[key]


def sample_member_triple(fam: ApproxTy, rng: random.Random
                         ) -> Optional[Tuple[Expr, Expr, Expr]]:
    """A (exact, approximate, error) member triple, by construction."""
    if isinstance(fam, FlBase):
        for _ in range(16):
            x = sample_real_fraction(rng)
            k = rng.randrange(4)
            if k == 0:
                a = nearest_float(x)
            elif k == 1:
                a = math.nextafter(nearest_float(x),
                                   math.inf if rng.randrange(2) else -math.inf)
            else:
                off = sample_finite_err_fraction(rng)
                a = nearest_float(x + (off if rng.randrange(2) else -off))
            if not math.isfinite(a):
                continue
            d = abs(x - Fraction(a))
            extra = Fraction(0) if rng.randrange(2) else sample_finite_err_fraction(rng)
            return (RealLit(x), FloatLit.of(a), ErrLit(d + extra))
        return (RealLit(Fraction(0)), FloatLit.of(0.0), ErrLit(Fraction(0)))
    if isinstance(fam, NatBase):
        n = sample_nat(rng)
        return (NatLit(n), NatLit(n), NatLit(0))
    if isinstance(fam, BoolBase):
        b = bool(rng.randrange(2))
        return (BoolLit(b), BoolLit(b), NatLit(0))
    if isinstance(fam, Pi):
        key = family_source(fam)
        if key not in _FN_TRIPLES:
            return None
        pool = _fn_triples(key)
        return pool[rng.randrange(len(pool))]
    return None


# ---------------------------------------------------------------------------
# approximate equality

def _aeq_base_once(fam: ApproxTy, q: Expr, e1: Expr, e2: Expr,
                   cfg: EvalConfig) -> Tuple[str, dict]:
    if isinstance(fam, FlBase):
        def dist(p: int):
            cfgp = cfg.at_precision(p)
            qv = bound_of(eval_error(q, cfg=cfgp))
            v1 = eval_exact(e1, cfg=cfgp)
            v2 = eval_exact(e2, cfg=cfgp)
            if v1 is DIVERGED or v2 is DIVERGED:
                raise OracleInconclusive("divergence in equality operands")
            d = enc.enclose_op("dr", [v1.enc, v2.enc], p, cfg.max_precision_bits)
            return d, qv

        qv0 = bound_of(eval_error(q, cfg=cfg))
        if qv0.lo is None:
            return ("pass", {"bound": ["inf", "inf"]})
        if e1 == e2:
            return ("pass", {"note": "identical expressions"})
        try:
            return _check_distance_leq(dist, cfg)
        except OracleInconclusive as ex:
            return ("inconclusive", {"note": str(ex)})
    if isinstance(fam, (NatBase, BoolBase)):
        v1 = eval_exact(e1, cfg=cfg)
        v2 = eval_exact(e2, cfg=cfg)
        qv = bound_of(eval_error(q, cfg=cfg))
        if qv.lo is None:
            return ("pass", {"bound": ["inf", "inf"]})
        if v1 is DIVERGED or v2 is DIVERGED:
            return ("inconclusive", {"note": "divergence in equality operands"})
        if isinstance(fam, NatBase):
            d = Fraction(abs(v1.value - v2.value))
        else:
            d = Fraction(0 if v1.value == v2.value else 1)
        hi = qv.hi if qv.hi is not None else d
        ok = d <= hi
        return ("pass" if ok else "fail",
                {"measured": [str(d), str(d)],
                 "bound": _err_interval_strings(qv)})
    raise TypeError(fam)


def _aeq_once(fam: ApproxTy, q: Expr, e1: Expr, e2: Expr,
              rng: random.Random, cfg: EvalConfig,
              inputs: List[str]) -> Tuple[str, dict]:
    if isinstance(fam, (FlBase, NatBase, BoolBase)):
        return _aeq_base_once(fam, q, e1, e2, cfg)
    if isinstance(fam, Pi):
        # sample an exact input and an arbitrary input error
        trip = sample_member_triple(fam.fam, rng)
        if trip is None:
            return ("inconclusive",
                    {"note": f"no input sampler for {family_source(fam.fam)}"})
        r, _, _ = trip
        if isinstance(fam.fam, FlBase):
            rq: Expr = ErrLit(sample_err_fraction(rng))
        else:
            rq = trip[2]
        inputs.append(to_source(r))
        return _aeq_once(fam.body, App(App(q, r), rq),
                         App(e1, r), App(e2, r), rng, cfg, inputs)
    if isinstance(fam, PiTy):
        base: ApproxTy = FL if rng.randrange(2) == 0 else NAT_A
        q2 = App(App(TyApp(TyApp(q, exact_ty(base)), err_ty(base)),
                     zero_expr(base)), plus_lambda(base))
        inputs.append(f"@{family_source(base)}")
        return _aeq_once(instantiate_poly(fam, base), q2,
                         TyApp(e1, exact_ty(base)), TyApp(e2, exact_ty(base)),
                         rng, cfg, inputs)
    raise TypeError(fam)


def aeq_check(fam: ApproxTy, q: Expr, e1: Expr, e2: Expr,
              trials: int = 100, seed: int = 42,
              cfg: EvalConfig = EvalConfig()) -> Verdict:
    """Are e1 and e2 within q of each other in this family?"""
    if isinstance(fam, (FlBase, NatBase, BoolBase)):
        trials = 1
    passes = inconc = 0
    fail_rec = None
    n = max(1, trials)
    for t in range(n):
        rng = trial_rng(seed, t)
        inputs: List[str] = []
        status, rec = _aeq_once(fam, q, e1, e2, rng, cfg, inputs)
        if status == "pass":
            passes += 1
        elif status == "inconclusive":
            inconc += 1
        elif fail_rec is None:
            rec.update({"seed": seed, "trial": t, "inputs": inputs})
            fail_rec = rec
    v = Verdict(status="pass", trials=n, passes=passes, inconclusive=inconc,
                on_samples=not isinstance(fam, (FlBase, NatBase, BoolBase)))
    if fail_rec is not None:
        v.status = "fail"
        v.counterexample = fail_rec
    elif inconc == n:
        v.status = "inconclusive"
    return v


# ---------------------------------------------------------------------------
# axiom suite for approximation descriptors

APPROX_CLAUSES = (
    "Error Weakening",
    "Error Addition",
    "Equivalence",
    "Approximate Equality",
    "Upward Closedness",
    "Reflexivity",
    "Symmetry",
    "Triangle Inequality",
    "Completeness",
)


def _shift_exact(fam: ApproxTy, e: Expr, c: Fraction) -> Optional[Expr]:
    """An expression at exact distance |c| from e (reals only)."""
    if isinstance(fam, FlBase):
        return Builtin("+r", (e, RealLit(c)))
    if isinstance(fam, Pi) and isinstance(fam.body, FlBase):
        b = "t"
        while b in free_vars(e):
            b += "'"
        return Lam(b, exact_ty(fam.fam),
                   Builtin("+r", (App(e, Var(b)), RealLit(c))))
    return None


def _const_err(fam: ApproxTy, c: Optional[Fraction]) -> Expr:
    """The constant error |c| lifted pointwise through the family."""
    if isinstance(fam, FlBase):
        return ErrLit(c)
    if isinstance(fam, (NatBase, BoolBase)):
        return NatLit(0 if c is None else math.ceil(c))
    if isinstance(fam, Pi):
        return Lam(fam.xe, exact_ty(fam.fam), Lam(fam.xq, err_ty(fam.fam),
                                                  _const_err(fam.body, c)))
    raise TypeError(fam)


def check_approx_axioms(fam: ApproxTy, trials: int = 200, seed: int = 42,
                        cfg: EvalConfig = EvalConfig()) -> AxiomReport:
    """Exercise the membership and equality laws on constructed members.

    Members are built by the samplers (never searched for), so every
    clause is tested on witnesses known to satisfy its premises.
    """
    report = AxiomReport(instance=f"approx({family_source(fam)})",
                         trials=trials, seed=seed)
    failures: Dict[str, str] = {}

    def fail(clause: str, note: str):
        failures.setdefault(clause, note)

    inner_trials = 2 if isinstance(fam, (Pi, PiTy)) else 1

    def member_ok(q, a, e, t):
        return appr_member(fam, q, a, e, trials=inner_trials,
                           seed=seed * 7 + t, cfg=cfg).status != "fail"

    def aeq_ok(q, e1, e2, t):
        return aeq_check(fam, q, e1, e2, trials=inner_trials,
                         seed=seed * 11 + t, cfg=cfg).status != "fail"

    for t in range(trials):
        rng = trial_rng(seed, t)
        trip = sample_member_triple(fam, rng)
        if trip is None:
            continue
        e, a, q = trip

        # Error Weakening: a member stays a member at any larger error
        delta = _const_err(fam, sample_finite_err_fraction(rng))
        q_bigger = plus_apply(fam, q, delta)
        if not member_ok(q_bigger, a, e, t):
            fail("Error Weakening", to_source(e))

        # Upward Closedness / Reflexivity / Symmetry / Triangle /
        # Completeness for the equality relation
        c1 = sample_finite_err_fraction(rng)
        c2 = sample_finite_err_fraction(rng)
        e2 = _shift_exact(fam, e, c1)
        if e2 is not None:
            if not aeq_ok(_const_err(fam, c1), e, e2, t):
                fail("Upward Closedness", to_source(e))  # premise: exact distance
            if not aeq_ok(plus_apply(fam, _const_err(fam, c1),
                                     _const_err(fam, c2)), e, e2, t):
                fail("Upward Closedness", to_source(e))
            if not aeq_ok(_const_err(fam, c1), e2, e, t):
                fail("Symmetry", to_source(e))
            e3 = _shift_exact(fam, e2, c2)
            if e3 is not None:
                if not aeq_ok(plus_apply(fam, _const_err(fam, c1),
                                         _const_err(fam, c2)), e, e3, t):
                    fail("Triangle Inequality", to_source(e))
            # Error Addition: shift a member and widen the bound
            if not member_ok(plus_apply(fam, q, _const_err(fam, c1)), a, e2, t):
                fail("Error Addition", to_source(e))
        if not aeq_ok(_const_err(fam, Fraction(0)), e, e, t):
            fail("Reflexivity", to_source(e))
        if e2 is not None and not aeq_ok(_const_err(fam, None), e2, e, t):
            fail("Completeness", to_source(e))

        # Equivalence: beta-equivalent wrappers preserve membership
        te = exact_ty(fam)
        ta = approx_ty(fam)
        e_w = App(Lam("%t", te, Var("%t")), e)
        a_w = App(Lam("%t", ta, Var("%t")), a)
        if not member_ok(q, a_w, e_w, t):
            fail("Equivalence", to_source(e))

        # Approximate Equality: two members of the same (q, a) are
        # within q + q of each other
        if e2 is not None:
            qq = plus_apply(fam, q, _const_err(fam, c1))
            if not aeq_ok(plus_apply(fam, qq, qq), e, e2, t):
                fail("Approximate Equality", to_source(e))
        else:
            if not aeq_ok(plus_apply(fam, q, q), e, e, t):
                fail("Approximate Equality", to_source(e))

    for name in APPROX_CLAUSES:
        if name in failures:
            report.results.append(AxiomResult(name, "fail", failures[name]))
        else:
            report.results.append(AxiomResult(name, "pass"))
    return report


# ---------------------------------------------------------------------------
# harness-level weakening

def weaken_err_expr(fam: ApproxTy, q: Expr, c: Fraction) -> Expr:
    """q plus a positive constant, lifted pointwise through the family."""
    return plus_apply(fam, q, _const_err(fam, c))
