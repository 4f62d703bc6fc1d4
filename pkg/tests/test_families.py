from fractions import Fraction

import pytest

from approxc.families import (
    BOOL_A, FL, NAT_A, ApproxCtx, Pi, PiTy, TyTriple, ValTriple, VarBase,
    aeq_check, appr_member, approx_ty, check_approx_axioms, ctx_err,
    ctx_exact, err_ty, exact_ty, family_from_type, family_source, fn_family,
    instantiate_poly, member_trials, plus_apply, plus_lambda,
    sample_member_triple, same_family, weaken_err_expr, zero_expr,
)
from approxc.floats import nearest_float, to_fraction
from approxc.interp import EvalConfig, eval_error, eval_exact, bound_of
from approxc.parser import parse
from approxc.sampling import trial_rng
from approxc.syntax import (
    ERRREAL, NAT, REAL, Arrow, ErrLit, FloatLit, Forall, NatLit, RealLit,
    TyVar, to_source,
)
from approxc.typecheck import TyCtx, infer_type

CFG = EvalConfig(fuel=200_000, precision_bits=128)
PI40 = Fraction("3.1415926535897932384626433832795028841972")


def test_pi_membership_bounds():
    # pass at the loose bound, pass one ulp-of-decimals tighter, fail
    # below the true distance 0.14159265358979...
    assert appr_member(FL, ErrLit(Fraction("0.1415927")), FloatLit.of(3.0),
                       RealLit(PI40), trials=1, seed=42, cfg=CFG).ok
    assert appr_member(FL, ErrLit(Fraction("0.14159266")), FloatLit.of(3.0),
                       RealLit(PI40), trials=1, seed=42, cfg=CFG).ok
    v = appr_member(FL, ErrLit(Fraction("0.1415926")), FloatLit.of(3.0),
                    RealLit(PI40), trials=1, seed=42, cfg=CFG)
    assert v.status == "fail"
    assert v.counterexample is not None


def test_exactly_representable_membership_at_zero():
    assert appr_member(FL, ErrLit(Fraction(0)), FloatLit.of(1.0),
                       RealLit(Fraction(1)), trials=1, seed=42, cfg=CFG).ok


def test_membership_failure_distance_oracle():
    # |1/3 - 1/2| = 1/6 > 1/10
    v = appr_member(FL, ErrLit(Fraction(1, 10)), FloatLit.of(0.5),
                    RealLit(Fraction(1, 3)), trials=1, seed=42, cfg=CFG)
    assert v.status == "fail"
    assert Fraction(v.counterexample["excess"]) > 0


def test_infinite_bound_always_passes():
    v = appr_member(FL, ErrLit(None), FloatLit.of(0.5),
                    RealLit(Fraction(10**6)), trials=1, seed=42, cfg=CFG)
    assert v.ok


def test_aeq_examples():
    assert aeq_check(FL, ErrLit(Fraction(0)), parse("(+r 1/1 2/1)"),
                     parse("(+r 1/1 2/1)"), cfg=CFG).ok
    assert aeq_check(FL, ErrLit(Fraction(1, 2)), RealLit(Fraction(1)),
                     RealLit(Fraction(5, 4)), cfg=CFG).ok
    assert aeq_check(FL, ErrLit(None), RealLit(Fraction(1)),
                     RealLit(Fraction(999)), cfg=CFG).ok
    v = aeq_check(FL, ErrLit(Fraction(1, 8)), RealLit(Fraction(1)),
                  RealLit(Fraction(5, 4)), cfg=CFG)
    assert v.status == "fail"


def test_nat_membership_exact():
    assert appr_member(NAT_A, NatLit(0), NatLit(7), NatLit(7),
                       trials=1, seed=42, cfg=CFG).ok
    v = appr_member(NAT_A, NatLit(1), NatLit(9), NatLit(7),
                    trials=1, seed=42, cfg=CFG)
    assert v.status == "fail"


def test_function_membership_identity_and_sin():
    flfl = fn_family(FL, FL)
    v = appr_member(flfl, parse("(lam (x Real) (lam (k ErrReal) k))"),
                    parse("(lam (x Float64) x)"), parse("(lam (x Real) x)"),
                    trials=40, seed=42, cfg=CFG)
    assert v.ok and v.on_samples
    v = appr_member(flfl, parse("(lam (x Real) (lam (k ErrReal) (sinerr x k)))"),
                    parse("(lam (x Float64) (sinf x))"),
                    parse("(lam (x Real) (sinr x))"),
                    trials=25, seed=42, cfg=CFG)
    assert v.ok, v.to_json()


def test_function_membership_refutes_bad_bound():
    flfl = fn_family(FL, FL)
    # claiming zero error for the sine lowering is wrong
    v = appr_member(flfl, parse("(lam (x Real) (lam (k ErrReal) (err 0/1)))"),
                    parse("(lam (x Float64) (sinf x))"),
                    parse("(lam (x Real) (sinr x))"),
                    trials=60, seed=42, cfg=CFG)
    assert v.status == "fail"
    assert v.counterexample["inputs"]


def test_membership_weakening_at_verdict_level():
    """A pass at q stays a pass at q + c on the same seed."""
    flfl = fn_family(FL, FL)
    q = parse("(lam (x Real) (lam (k ErrReal) (sinerr x k)))")
    a = parse("(lam (x Float64) (sinf x))")
    e = parse("(lam (x Real) (sinr x))")
    base = member_trials(flfl, q, a, e, 25, 42, CFG)
    weak = member_trials(flfl, weaken_err_expr(flfl, q, Fraction(1, 1000)),
                         a, e, 25, 42, CFG)
    for b, w in zip(base, weak):
        if b.status == "pass":
            assert w.status == "pass"


def test_sampled_triples_are_members():
    rng = trial_rng(13, 0)
    for fam in (FL, NAT_A, BOOL_A, fn_family(FL, FL),
                fn_family(NAT_A, FL), fn_family(NAT_A, NAT_A)):
        for _ in range(12):
            trip = sample_member_triple(fam, rng)
            assert trip is not None
            e, a, q = trip
            v = appr_member(fam, q, a, e, trials=4, seed=99, cfg=CFG)
            assert v.status != "fail", (family_source(fam), to_source(e),
                                        v.to_json())


def test_family_types_and_zero_plus():
    flfl = fn_family(FL, FL)
    assert exact_ty(flfl) == Arrow(REAL, REAL)
    assert approx_ty(flfl) == parse_ty_helper("(-> Float64 Float64)")
    assert err_ty(flfl) == Arrow(REAL, Arrow(ERRREAL, ERRREAL))
    z = zero_expr(flfl)
    assert infer_type(TyCtx(), z) == err_ty(flfl)
    pl = plus_lambda(flfl)
    assert infer_type(TyCtx(), pl) == Arrow(err_ty(flfl),
                                            Arrow(err_ty(flfl), err_ty(flfl)))


def parse_ty_helper(s):
    from approxc.parser import parse_ty
    return parse_ty(s)


def test_family_from_type():
    assert family_from_type(REAL) == FL
    assert same_family(family_from_type(Arrow(REAL, REAL)), fn_family(FL, FL))
    with pytest.raises(TypeError):
        family_from_type(ERRREAL)


def test_instantiate_poly_both_bases():
    vb = VarBase("X", "X_a", "X_q", "z0", "zp")
    pt = PiTy("X", "X_a", "X_q", "z0", "zp", fn_family(vb, vb))
    assert family_source(instantiate_poly(pt, FL)) == "Fl => Fl"
    assert family_source(instantiate_poly(pt, NAT_A)) == "Nat => Nat"
    # nested instantiation leaves no residual variables
    inst = instantiate_poly(pt, FL)
    assert "X" not in family_source(inst)


def test_polymorphic_membership_monomorphizes():
    pt = PiTy("X", "X_a", "X_q", "z0", "zp",
              fn_family(VarBase("X", "X_a", "X_q", "z0", "zp"),
                        VarBase("X", "X_a", "X_q", "z0", "zp")))
    e = parse("(tlam X (lam (x X) x))")
    a = parse("(tlam X_a (lam (x X_a) x))")
    q = parse("(tlam X (tlam X_q (lam (z0 X_q) (lam (zp (-> X_q (-> X_q X_q)))"
              " (lam (x X) (lam (xq X_q) xq))))))")
    v = appr_member(pt, q, a, e, trials=20, seed=42, cfg=CFG)
    assert v.ok, v.to_json()


def test_approx_axioms_base_and_function():
    cfg = EvalConfig(fuel=200_000, precision_bits=96, max_precision_bits=768)
    rep = check_approx_axioms(FL, trials=80, seed=42, cfg=cfg)
    assert rep.ok, rep.to_json()
    rep = check_approx_axioms(fn_family(FL, FL), trials=40, seed=42, cfg=cfg)
    assert rep.ok, rep.to_json()


def test_membership_stable_under_precision_raise():
    """A pass never flips to fail at higher oracle precision."""
    cases = [
        (ErrLit(Fraction("0.1415927")), FloatLit.of(3.0), RealLit(PI40)),
        (ErrLit(Fraction(0)), FloatLit.of(1.0), RealLit(Fraction(1))),
        (ErrLit(Fraction(1, 3 * 2**54)),
         FloatLit.of(nearest_float(Fraction(1, 3))), RealLit(Fraction(1, 3))),
    ]
    for q, a, e in cases:
        lo = appr_member(FL, q, a, e, trials=1, seed=42,
                         cfg=EvalConfig(fuel=10**5, precision_bits=64))
        hi = appr_member(FL, q, a, e, trials=1, seed=42,
                         cfg=EvalConfig(fuel=10**5, precision_bits=512))
        assert lo.ok and hi.ok


def test_projected_contexts_are_disjoint():
    ctx = ApproxCtx()
    ctx = ctx.extend(ValTriple("x", "x_a", "x_q", FL))
    ctx = ctx.extend(TyTriple("X", "X_a", "X_q", "z0", "zp"))
    with pytest.raises(ValueError):
        ctx.extend(ValTriple("x", "u", "v", FL))
    te = ctx_exact(ctx)
    tq = ctx_err(ctx)
    assert te.lookup("x") == REAL
    assert tq.lookup("x_q") == ERRREAL
    assert tq.lookup("z0") == TyVar("X_q")
