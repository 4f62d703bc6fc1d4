import json
import math
from fractions import Fraction
from pathlib import Path

import pytest

from approxc.compiler import (
    CompileOpts, NoRuleApplies, SideConditionFailed, Unsupported, Compiler,
    compile_expr, compile_program, float_op_err, fold_err, label_sites, weaken,
)
from approxc.enclosure import RealEnclosure, from_rational
from approxc.families import (
    FL, ApproxCtx, approx_ty, err_ty, family_source,
)
from approxc.floats import (
    MAXFLOAT_FRAC, float_bits, nearest_float, round_down_float,
    round_up_float, to_fraction,
)
from approxc.interp import (
    DIVERGED, EvalConfig, VErr, bound_of, eval_approx, eval_error, eval_exact,
)
from approxc.checker import load_sidecar_opts
from approxc.parser import parse
from approxc.syntax import (
    App, ErrLit, FloatLit, NatLit, RealLit, to_source,
)
from approxc.typecheck import TyCtx, TypeMismatch, infer_type

CFG = EvalConfig(fuel=500_000, precision_bits=128)
OPTS = CompileOpts(cfg=CFG)


def _enc(q, p=128):
    return from_rational(Fraction(q), p)


def _perr(q):
    return VErr.point(Fraction(q))


def test_real_literal_rule_exact_distance():
    r = compile_program(parse("1/3"), OPTS)
    assert isinstance(r.approx, FloatLit)
    assert r.approx.bits == 0x3FD5555555555555
    # the bound is the exact rational distance, frozen by hand:
    # 1/3 - 6004799503160661/2^54 = 1/(3*2^54)
    assert r.err == ErrLit(Fraction(1, 3 * 2**54))
    assert r.derivation.rule == "R-Lit"


def test_identity_compiles_to_identity():
    r = compile_program(parse("(lam (x Real) x)"), OPTS)
    assert to_source(r.approx) == "(lam (x_a Float64) x_a)"
    assert to_source(r.err) == "(lam (x Real) (lam (x_q ErrReal) x_q))"
    assert family_source(r.family) == "Fl => Fl"


def test_sin_substitution_shape():
    r = compile_program(parse("sinr"), CompileOpts(enable_sin_subst=True, cfg=CFG))
    assert r.derivation.rule == "R-SinSubst"
    assert to_source(r.approx) == "(lam (x Float64) x)"
    # error: input error plus the distance between x and sin x
    assert to_source(r.err) == \
        "(lam (xe Real) (lam (xq ErrReal) (+q xq (dr xe (sinr xe)))))"


def test_sin_without_substitution_lowers_to_sinf():
    r = compile_program(parse("sinr"), OPTS)
    assert r.derivation.rule == "R-Op"
    assert to_source(r.approx) == "sinf"


# -- float_op_err -----------------------------------------------------------------

def test_float_op_err_point_no_width():
    out = float_op_err("+", _enc(1), _perr(0), _enc(2), _perr(0))
    assert out.lo == out.hi == 0  # 3.0 exactly representable


def test_float_op_err_interval_width():
    out = float_op_err("+", _enc(1), _perr(Fraction(1, 2)),
                       _enc(2), _perr(Fraction(1, 2)))
    assert out.lo == out.hi == 1  # interval [2, 4], exact result 3


def test_float_op_err_overflow_is_infinite():
    big = RealEnclosure(MAXFLOAT_FRAC, MAXFLOAT_FRAC, 128)
    out = float_op_err("*", big, _perr(0), big, _perr(0))
    assert out.is_infinite


def test_float_op_err_divisor_straddle():
    out = float_op_err("/", _enc(1), _perr(0), _enc(1), _perr(2))
    assert out.is_infinite


def test_float_op_err_infinite_input_propagates():
    out = float_op_err("+", _enc(1), VErr(None, None), _enc(1), _perr(0))
    assert out.is_infinite


def _floats_in(lo: Fraction, hi: Fraction, n: int = 8):
    """Representable points inside [lo, hi], endpoints included."""
    a = round_up_float(lo)
    b = round_down_float(hi)
    if a > b:
        return []
    out = {a, b}
    fa, fb = to_fraction(a), to_fraction(b)
    for i in range(1, n - 1):
        c = nearest_float(fa + (fb - fa) * Fraction(i, n - 1))
        if lo <= to_fraction(c) <= hi:
            out.add(c)
    out.add(math.nextafter(a, math.inf))
    out.add(math.nextafter(b, -math.inf))
    return sorted(x for x in out if lo <= to_fraction(x) <= hi)


def _apply_float(op, x, y):
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    return x / y


def test_float_op_brute_force_small_grid():
    """Enumerated float pairs never exceed the synthesized bound."""
    xs = [Fraction(1), Fraction(3, 2), Fraction(2)]
    qs = [Fraction(0), Fraction(1, 16), Fraction(1, 2)]
    exact = {"+": lambda a, b: a + b, "-": lambda a, b: a - b,
             "*": lambda a, b: a * b, "/": lambda a, b: a / b}
    for op in "+-*/":
        achieved_tight = False
        for xe in xs:
            for xq in qs:
                for ye in xs:
                    for yq in qs:
                        if op == "/" and ye - yq <= 0:
                            continue
                        bound = float_op_err(op, _enc(xe), _perr(xq),
                                             _enc(ye), _perr(yq))
                        if bound.is_infinite:
                            continue
                        r = exact[op](xe, ye)
                        worst = Fraction(0)
                        pairs = 0
                        for xa in _floats_in(xe - xq, xe + xq):
                            for ya in _floats_in(ye - yq, ye + yq):
                                fl = _apply_float(op, xa, ya)
                                d = abs(to_fraction(fl) - r)
                                assert d <= bound.hi, (op, xe, xq, ye, yq)
                                worst = max(worst, d)
                                pairs += 1
                        if pairs and worst == bound.lo == bound.hi:
                            achieved_tight = True
        assert achieved_tight, op


# -- perforation -------------------------------------------------------------------

def test_perforation_even_count_tight():
    opts = CompileOpts(perforation={"L0": 2}, cfg=CFG)
    src = "(redseq +r 8 (lam (i Nat) (nat2real i)))"
    r = compile_program(parse(src), opts)
    assert r.derivation.rule == "R-Perforate"
    assert r.derivation.site == "L0"
    # the perforated program keeps every second element, doubled
    assert eval_approx(r.approx, cfg=CFG).value == 24.0
    ev = eval_exact(parse(src), cfg=CFG)
    assert ev.enc.contains(Fraction(28))
    qv = bound_of(eval_error(r.err, cfg=CFG))
    assert qv.lo == qv.hi == 4  # tight: |28 - 24| = 4
    assert abs(Fraction(24) - Fraction(28)) == qv.lo


def test_perforation_identity_at_one():
    r = compile_program(parse("(redseq +r 8 (lam (i Nat) (nat2real i)))"), OPTS)
    assert eval_approx(r.approx, cfg=CFG).value == 28.0
    qv = bound_of(eval_error(r.err, cfg=CFG))
    assert qv.hi == 0


def test_perforation_odd_count_needs_remainder():
    opts = CompileOpts(perforation={"L0": 2}, cfg=CFG)
    src = "(redseq +r 7 (lam (i Nat) (nat2real i)))"
    r = compile_program(parse(src), opts)
    # q' = |21 - 28| = 7, computed by the oracle
    descs = [sc.description for sc in r.derivation.side_conditions]
    assert any("remainder" in d for d in descs)
    av = eval_approx(r.approx, cfg=CFG)
    qv = bound_of(eval_error(r.err, cfg=CFG))
    assert abs(Fraction(av.value) - 21) <= qv.lo
    assert qv.hi >= 7


def test_perforation_rejects_other_combiners():
    opts = CompileOpts(perforation={"L0": 2}, cfg=CFG)
    with pytest.raises(Unsupported):
        compile_program(parse("(redseq *r 8 (lam (i Nat) (nat2real i)))"), opts)


def test_perforation_subdivides_affine_generator():
    opts = CompileOpts(perforation={"L0": 4}, cfg=CFG)
    src = "(redseq +r 8 (lam (i Nat) (nat2real (*n 3 i))))"
    r = compile_program(parse(src), opts)
    av = eval_approx(r.approx, cfg=CFG)
    ev = eval_exact(parse(src), cfg=CFG)
    qv = bound_of(eval_error(r.err, cfg=CFG))
    exact = 3 * sum(range(8))
    assert ev.enc.contains(Fraction(exact))
    assert abs(Fraction(av.value) - exact) <= qv.lo


# -- weakening ---------------------------------------------------------------------

def test_weaken_records_side_condition():
    r = compile_program(parse("1/3"),
                        CompileOpts(weaken_to=parse("(err 1/2)"), cfg=CFG))
    assert r.derivation.rule == "A-Weak"
    assert r.err == ErrLit(Fraction(1, 2))
    sc = r.derivation.side_conditions[0]
    assert sc.verdict.status == "pass"


def test_weaken_rejects_smaller_bound():
    with pytest.raises(SideConditionFailed):
        compile_program(parse("1/3"),
                        CompileOpts(weaken_to=parse("(err 0/1)"), cfg=CFG))


def test_weaken_idempotence_at_verdict_level():
    """Weakening to q then to a larger q'' equals weakening directly."""
    r0 = compile_program(parse("1/3"), OPTS)
    r1 = weaken(r0, ErrLit(Fraction(1, 4)), OPTS)
    r2 = weaken(r1, ErrLit(Fraction(1, 2)), OPTS)
    direct = weaken(r0, ErrLit(Fraction(1, 2)), OPTS)
    assert r2.approx == direct.approx
    assert r2.err == direct.err


# -- global properties ----------------------------------------------------------------

def _corpus_results(corpus_dir):
    for path in sorted(Path(corpus_dir).glob("*.ax")):
        e = parse(path.read_text())
        opts = load_sidecar_opts(path, OPTS)
        yield path.name, e, compile_program(e, opts)


def test_type_preservation_across_corpus(corpus_dir):
    for name, e, r in _corpus_results(corpus_dir):
        assert infer_type(TyCtx(), r.approx) == approx_ty(r.family), name
        assert infer_type(TyCtx(), r.err) == err_ty(r.family), name


def test_compile_determinism(corpus_dir):
    for name, e, r1 in _corpus_results(corpus_dir):
        r2 = compile_program(e, load_sidecar_opts(
            Path(corpus_dir) / name, OPTS))
        assert r1.approx == r2.approx, name
        assert r1.err == r2.err, name
        assert r1.derivation_json() == r2.derivation_json(), name


def test_derivation_json_rule_names(corpus_dir):
    allowed = {"A-Weak", "A-Var", "A-Lam", "A-App", "A-TLam", "A-TApp",
               "A-Fix", "A-If", "R-Lit", "R-Op", "R-SinSubst", "R-Perforate"}
    def rules(doc):
        yield doc["rule"]
        for p in doc["premises"]:
            yield from rules(p)
    seen = set()
    for name, e, r in _corpus_results(corpus_dir):
        doc = json.loads(r.derivation_json())["derivation"]
        for rule in rules(doc):
            assert rule in allowed, (name, rule)
            seen.add(rule)
    assert seen == allowed  # the corpus exercises every rule


def test_no_rule_for_unregistered_transform():
    with pytest.raises(NoRuleApplies):
        compile_program(parse("(absr 1/2)"), OPTS)


def test_compile_rejects_ill_typed_program():
    with pytest.raises(TypeMismatch):
        compile_expr(ApproxCtx(), parse("(+r 1/2 7)"), FL, OPTS)


def test_compile_open_term_under_context():
    from approxc.families import ValTriple
    ctx = ApproxCtx().extend(ValTriple("y", "y_a", "y_q", FL))
    r = compile_expr(ctx, parse("(+r y y)"), FL, OPTS)
    assert to_source(r.approx) == "(+f y_a y_a)"
    assert "y_q" in to_source(r.err) and "y_a" not in to_source(r.err)


def test_module_level_perforate():
    from approxc.compiler import perforate
    from approxc.syntax import RedSeq
    e = parse("(redseq +r 8 (lam (i Nat) (nat2real i)))")
    assert isinstance(e, RedSeq)
    r = perforate(ApproxCtx(), e, 2, OPTS)
    assert eval_approx(r.approx, cfg=CFG).value == 24.0


def test_site_labels_preorder():
    src = ("(app (lam (x Real) (+r (redseq +r 4 (lam (i Nat) (nat2real i))) x)) "
           "(redseq +r 2 (lam (i Nat) (nat2real i))))")
    sites = label_sites(parse(src))
    assert [s[0] for s in sites] == ["L0", "L1"]
    # the function body site precedes the argument site in pre-order
    assert "4" in sites[0][1] and "2" in sites[1][1]
