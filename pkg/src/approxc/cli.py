"""Command-line front end: parse -> compile -> emit -> check.

Outputs are deterministic for fixed inputs, flags, and seed; all
machine-readable output under --json is newline-delimited JSON with a
schema field.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checker import check_soundness
from .compiler import (
    CompileError, CompileOpts, compile_program, label_sites,
)
from .families import FL, check_approx_axioms, fn_family
from .interp import EvalConfig
from .parser import ParseError, parse
from .quant import check_quant_axioms, fn_err_instance, q_nonneg_reals
from .syntax import to_source
from .typecheck import TypeError_


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="approxc",
        description="approximating compiler with validated error bounds")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--trials", type=int, default=1000)
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--precision-bits", type=int, default=128)
        sp.add_argument("--fuel", type=int, default=10**6)
        sp.add_argument("--out", type=str, default=None,
                        help="output directory (default: next to the input)")
        sp.add_argument("--json", action="store_true",
                        help="newline-delimited JSON on stdout")

    for name in ("compile", "check"):
        sp = sub.add_parser(name)
        sp.add_argument("inputs", nargs="+")
        sp.add_argument("--perforate", action="append", default=[],
                        metavar="SITE=K",
                        help="perforate a labeled reduction site (repeatable)")
        sp.add_argument("--subst-sin", action="store_true")
        sp.add_argument("--weaken-to", type=str, default=None,
                        help="surface-syntax error expression to weaken to")
        sp.add_argument("--emit", choices=["approx", "err", "derivation", "all"],
                        default="all")
        common(sp)

    sp = sub.add_parser("axioms")
    common(sp)
    return p


def _parse_perforation(items) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise ValueError(f"--perforate expects SITE=K, got {it!r}")
        site, k = it.split("=", 1)
        out[site.strip()] = int(k)
    return out


def _opts_from_args(args) -> CompileOpts:
    cfg = EvalConfig(fuel=args.fuel, precision_bits=args.precision_bits)
    weaken = parse(args.weaken_to) if getattr(args, "weaken_to", None) else None
    return CompileOpts(
        enable_sin_subst=getattr(args, "subst_sin", False),
        perforation=_parse_perforation(getattr(args, "perforate", [])),
        weaken_to=weaken,
        seed=args.seed,
        cfg=cfg,
    )


def _emit(args, path: Path, name: str, text: str):
    out_dir = Path(args.out) if args.out else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    target.write_text(text + ("\n" if not text.endswith("\n") else ""))
    return target


def _jsonl(args, doc: dict):
    if args.json:
        print(json.dumps(doc, sort_keys=True))


def _run_compile(args, do_check: bool) -> int:
    opts = _opts_from_args(args)
    cfg = opts.cfg
    status = 0
    for inp in args.inputs:
        path = Path(inp)
        try:
            src = path.read_text()
        except OSError as ex:
            print(f"approxc: cannot read {inp}: {ex}", file=sys.stderr)
            return 2
        try:
            e = parse(src)
            result = compile_program(e, opts)
        except (ParseError, CompileError, TypeError_) as ex:
            print(f"approxc: {inp}: {type(ex).__name__}: {ex}", file=sys.stderr)
            return 2
        stem = path.stem
        emitted = {}
        if args.emit in ("approx", "all"):
            t = _emit(args, path, f"{stem}.approx.ax", to_source(result.approx))
            emitted["approx"] = str(t)
        if args.emit in ("err", "all"):
            t = _emit(args, path, f"{stem}.err.ax", to_source(result.err))
            emitted["err"] = str(t)
        if args.emit in ("derivation", "all"):
            t = _emit(args, path, f"{stem}.derivation.json",
                      result.derivation_json())
            emitted["derivation"] = str(t)
        sites = label_sites(e)
        _jsonl(args, {"schema": "compile/v1", "input": str(path),
                      "emitted": emitted,
                      "sites": {lbl: src_ for lbl, src_ in sites}})
        if not args.json:
            print(f"compiled {inp}" +
                  (f" (sites: {', '.join(l for l, _ in sites)})" if sites else ""))
        if do_check:
            rep = check_soundness(e, result, trials=args.trials,
                                  seed=args.seed, cfg=cfg, program=path.name)
            t = _emit(args, path, f"{stem}.report.json", rep.to_json())
            _jsonl(args, rep.to_doc())
            if not args.json:
                print(f"checked {inp}: {rep.passes}/{rep.trials} passes, "
                      f"{len(rep.failures)} failures, "
                      f"{rep.inconclusive} inconclusive")
            if rep.failures:
                status = 1
    return status


def _run_axioms(args) -> int:
    cfg = EvalConfig(fuel=args.fuel, precision_bits=args.precision_bits)
    reports = [
        check_quant_axioms(q_nonneg_reals(), trials=args.trials,
                           seed=args.seed),
        check_quant_axioms(fn_err_instance(), trials=args.trials,
                           seed=args.seed),
        check_approx_axioms(FL, trials=min(args.trials, 300),
                            seed=args.seed, cfg=cfg),
        check_approx_axioms(fn_family(FL, FL), trials=min(args.trials, 200),
                            seed=args.seed, cfg=cfg),
    ]
    ok = True
    for rep in reports:
        if args.json:
            print(rep.to_json())
        else:
            mark = "ok" if rep.ok else "FAILED"
            print(f"{rep.instance}: {mark}")
            for r in rep.results:
                line = f"  {r.name}: {r.status}"
                if r.witness:
                    line += f" (witness {r.witness})"
                print(line)
        ok = ok and rep.ok
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        names = ["quant_scalar", "quant_fn", "approx_fl", "approx_flfl"]
        for name, rep in zip(names, reports):
            (out_dir / f"axioms.{name}.json").write_text(rep.to_json() + "\n")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compile":
            return _run_compile(args, do_check=False)
        if args.command == "check":
            return _run_compile(args, do_check=True)
        if args.command == "axioms":
            return _run_axioms(args)
    except ValueError as ex:
        print(f"approxc: {ex}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
