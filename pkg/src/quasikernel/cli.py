"""Command-line front end: elaborate, evaluate, check, and run the lab."""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import kernel, surface
from .checks import CheckConfig, CheckResult, check, suite_cpo, suite_final, suite_initial, suite_lab
from .functors import to_extpoly_nf, to_poly_nf
from .kernel import Fuel, QuasiError, show_pval
from .surface import elaborate, nf_to_sig, parse, parse_expr, pretty_functor


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--fuel", type=int, default=10000)
    p.add_argument("--obs-depth", type=int, default=4)
    p.add_argument("--chain-bound", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "text"], default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quasikernel")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elaborate", help="parse, check positivity, print normal forms")
    p.add_argument("file")
    _common_flags(p)

    p = sub.add_parser("eval", help="evaluate an expression against a file")
    p.add_argument("file")
    p.add_argument("-e", "--expr", required=True)
    _common_flags(p)

    p = sub.add_parser("check", help="run bounded invariant suites for declared types")
    p.add_argument("file")
    p.add_argument(
        "--suite", choices=["initial", "final", "cpo", "all"], default="all"
    )
    _common_flags(p)

    p = sub.add_parser("lab", help="finite-category laboratory certifications")
    p.add_argument("which", choices=["rere", "spap", "mtypes"])
    _common_flags(p)
    return ap


def _config(args) -> CheckConfig:
    return CheckConfig(
        fuel=args.fuel,
        obs_depth=args.obs_depth,
        chain_bound=args.chain_bound,
        seed=args.seed,
    )


def cmd_elaborate(args) -> list[CheckResult]:
    with open(args.file, encoding="utf-8") as fh:
        source = fh.read()
    out = []
    try:
        decls = parse(source)
    except QuasiError as e:
        return [CheckResult("elaborate.parse", "fail", str(e))]
    for d in decls:
        if isinstance(d, surface.LetDef):
            out.append(check(f"elaborate.let.{d.name}", True, "term binding"))
            continue
        try:
            surface.check_positivity(d)
            functor = surface.extract_functor(d)
            nf = to_poly_nf(functor) if d.kind == "free" else to_extpoly_nf(functor)
            out.append(
                check(
                    f"elaborate.{d.name}",
                    True,
                    pretty_functor(nf_to_sig(nf)),
                )
            )
        except QuasiError as e:
            out.append(CheckResult(f"elaborate.{d.name}", "fail", str(e)))
    try:
        elaborate(decls, fuel_steps=args.fuel)
    except QuasiError as e:
        out.append(CheckResult("elaborate.install", "fail", str(e)))
    return out


def cmd_eval(args) -> list[CheckResult]:
    with open(args.file, encoding="utf-8") as fh:
        source = fh.read()
    try:
        env = elaborate(parse(source), fuel_steps=args.fuel)
        term = parse_expr(args.expr)
        value = kernel.eval_term(term, env.terms, Fuel(args.fuel))
        return [check("eval", True, show_pval(value))]
    except QuasiError as e:
        return [CheckResult("eval", "fail", str(e))]


def cmd_check(args) -> list[CheckResult]:
    with open(args.file, encoding="utf-8") as fh:
        source = fh.read()
    cfg = _config(args)
    try:
        env = elaborate(parse(source), fuel_steps=args.fuel)
    except QuasiError as e:
        return [CheckResult("check.elaborate", "fail", str(e))]
    out = []
    if args.suite in ("initial", "all"):
        for info in env.freetypes.values():
            out.extend(suite_initial(info, cfg))
    if args.suite in ("final", "all"):
        for info in env.cotypes.values():
            out.extend(suite_final(info, cfg))
    if args.suite in ("cpo", "all"):
        out.extend(suite_cpo(cfg))
    return out


def cmd_lab(args) -> list[CheckResult]:
    return suite_lab(args.which, _config(args))


def run(argv=None) -> tuple[dict, int]:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    handler = {
        "elaborate": cmd_elaborate,
        "eval": cmd_eval,
        "check": cmd_check,
        "lab": cmd_lab,
    }[args.command]
    checks = sorted(handler(args), key=lambda c: c.name)
    elapsed = int((time.monotonic() - started) * 1000)
    report = {
        "command": args.command,
        "config": {
            "fuel": args.fuel,
            "obs_depth": args.obs_depth,
            "chain_bound": args.chain_bound,
            "seed": args.seed,
            "format": args.format,
        },
        "checks": [
            {"name": c.name, "status": c.status, "detail": c.detail} for c in checks
        ],
        "elapsed_ms": elapsed,
    }
    code = 0 if all(c.ok for c in checks) else 1
    return report, code


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2)
    lines = [f"{report['command']}  (elapsed {report['elapsed_ms']} ms)"]
    for c in report["checks"]:
        mark = {"pass": "PASS", "fail": "FAIL", "skip": "SKIP"}[c["status"]]
        detail = f"  {c['detail']}" if c["detail"] else ""
        lines.append(f"  {mark}  {c['name']}{detail}")
    return "\n".join(lines)


def main(argv=None) -> int:
    report, code = run(argv)
    print(render(report, report["config"]["format"]))
    return code


if __name__ == "__main__":
    sys.exit(main())
