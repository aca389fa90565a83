"""Command line front end: prove, check, simulate.

Exit codes: 0 for YES (or a completed simulation), 1 for MAYBE, 2 for
errors. The first stdout line of prove and check is always the verdict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .certtext import CertParseError
from .interpretations import CertificateInvalid
from .multidist import MultiDistribution
from .prover import ProverConfig, Verdict, check_only, format_verdict, prove, verdict_json
from .rewriting import FAMILY_NAMES, NodeBudgetExceeded, TermPars, make_family
from .simulator import RunConfig, estimate_edh, run
from .smt import DEFAULT_SHAPES, parse_shape
from .wst import WstError, load_system

DEFAULT_SOLVER = "z3 -in"


class CliError(Exception):
    pass


def load_config(path: str) -> dict[str, str]:
    """key = value lines; blank lines and # comments are skipped."""
    out: dict[str, str] = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip().replace("_", "-")] = value.strip()
    return out


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value defaults file")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress notes on stderr")
    parser.add_argument("--no-color", action="store_true", help="plain verdicts even on a tty")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptrs",
        description="Termination prover and exact semantics engine for "
        "probabilistic term rewrite systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    prove_p = sub.add_parser("prove", help="search for a ranking interpretation")
    prove_p.add_argument("file", help="rewrite system in .wst format")
    prove_p.add_argument("--solver", help=f"solver command (default: {DEFAULT_SOLVER})")
    prove_p.add_argument("--shapes", help="comma-separated shape list, e.g. poly-linear,matrix-2")
    prove_p.add_argument("--coeff-bound", type=int, help="coefficient box 0..B (default 16)")
    prove_p.add_argument("--smt-timeout", type=float, help="seconds per solver call (default 60)")
    prove_p.add_argument("--parallel", action="store_true", help="run the shapes concurrently")
    prove_p.add_argument("--emit-smt", metavar="DIR", help="write one .smt2 script per shape")
    _common_flags(prove_p)

    check_p = sub.add_parser("check", help="validate a certificate exactly")
    check_p.add_argument("file", help="rewrite system in .wst format")
    check_p.add_argument("--certificate", required=True, metavar="FILE")
    _common_flags(check_p)

    sim_p = sub.add_parser("simulate", help="unroll the multidistribution semantics")
    sim_p.add_argument("file", nargs="?", help="rewrite system in .wst format")
    sim_p.add_argument("--family", choices=FAMILY_NAMES, help="built-in system instead of a file")
    sim_p.add_argument("--p", metavar="FRAC", help="probability parameter for --family rw")
    sim_p.add_argument("--start", required=True, help="start object, e.g. a term or s(s(0))")
    sim_p.add_argument("--steps", type=int, default=10)
    sim_p.add_argument("--mode", choices=("outermost", "innermost", "exhaustive"), default="outermost")
    sim_p.add_argument("--cert", metavar="FILE", help="report the certificate's edl bound")
    sim_p.add_argument("--trace", action="store_true", help="print the states, not just masses")
    sim_p.add_argument("--collapse", action="store_true", help="merge equal objects after each step")
    sim_p.add_argument("--truncate", type=int, help="cutoff for the rw and payout families")
    sim_p.add_argument("--node-budget", type=int, default=10**6)
    _common_flags(sim_p)
    return parser


def _pick(flag, config: dict[str, str], key: str, default, convert=str):
    if flag is not None:
        return flag
    if key in config:
        return convert(config[key])
    return default


def _colorize(text: str, enabled: bool) -> str:
    if not enabled:
        return text
    colors = {"YES": "32", "MAYBE": "33", "ERROR": "31"}
    head, _, rest = text.partition("\n")
    code = colors.get(head)
    if code is None:
        return text
    return f"\x1b[{code}m{head}\x1b[0m\n{rest}"


def _exit_code(verdict: Verdict) -> int:
    return {"YES": 0, "MAYBE": 1}.get(verdict.kind, 2)


def _json_out(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _mu_json(mu: MultiDistribution) -> list[list[str]]:
    return [[str(p), str(obj)] for p, obj in mu.entries]


def _run_prove(args, config: dict[str, str], color: bool) -> int:
    system = load_system(args.file)
    solver = (
        args.solver
        or os.environ.get("PTRS_SOLVER")
        or config.get("solver")
        or DEFAULT_SOLVER
    )
    shapes_text = _pick(args.shapes, config, "shapes", None)
    shapes = (
        tuple(parse_shape(s.strip()) for s in shapes_text.split(",") if s.strip())
        if shapes_text
        else DEFAULT_SHAPES
    )
    prover_config = ProverConfig(
        shapes=shapes,
        solver=solver,
        timeout=_pick(args.smt_timeout, config, "smt-timeout", 60.0, float),
        coeff_bound=_pick(args.coeff_bound, config, "coeff-bound", 16, int),
        parallel=args.parallel,
        emit_smt=args.emit_smt,
    )
    if args.verbose:
        print(f"solver: {solver}", file=sys.stderr)
        print(f"shapes: {', '.join(str(s) for s in prover_config.shapes)}", file=sys.stderr)
    verdict = prove(system, prover_config)
    if args.json:
        payload = verdict_json(verdict, system)
        payload["command"] = "prove"
        payload["file"] = args.file
        _json_out(payload)
    else:
        print(_colorize(format_verdict(verdict, system), color), end="")
    return _exit_code(verdict)


def _run_check(args, config: dict[str, str], color: bool) -> int:
    system = load_system(args.file)
    with open(args.certificate) as handle:
        text = handle.read()
    verdict = check_only(system, text)
    if args.json:
        payload = verdict_json(verdict, system)
        payload["command"] = "check"
        payload["file"] = args.file
        _json_out(payload)
    else:
        print(_colorize(format_verdict(verdict, system), color), end="")
    return _exit_code(verdict)


def _simulate_pars(args):
    if (args.file is None) == (args.family is None):
        raise CliError("simulate needs exactly one of FILE or --family")
    if args.file is not None:
        if args.p is not None:
            raise CliError("--p only applies to --family rw")
        if args.truncate is not None:
            raise CliError("--truncate only applies to the rw and payout families")
        return TermPars(load_system(args.file))
    return make_family(args.family, Fraction(args.p) if args.p else None, args.truncate)


def _run_simulate(args, config: dict[str, str], color: bool) -> int:
    pars = _simulate_pars(args)
    start = pars.parse_object(args.start)
    cert = None
    if args.cert is not None:
        from .certtext import load_interpretation
        from .interpretations import check_certificate

        system = getattr(pars, "system", None)
        if system is None and args.family == "rw":
            from .rewriting import random_walk_ptrs

            system = random_walk_ptrs(Fraction(args.p))
        if system is None:
            raise CliError("--cert needs a term-rewriting view of the system")
        cert = check_certificate(load_interpretation(args.cert), system)
    report = run(
        RunConfig(
            pars=pars,
            start=start,
            steps=args.steps,
            mode=args.mode,
            collapse=args.collapse,
            node_budget=args.node_budget,
            keep_trace=args.trace,
        )
    )
    estimate = estimate_edh(pars, cert, start, report) if cert is not None else None
    if args.json:
        payload = {
            "command": "simulate",
            "start": str(start),
            "steps": args.steps,
            "mode": report.mode,
            "masses": [str(m) for m in report.masses] if report.masses is not None else None,
            "edl": [str(e) for e in report.edl] if report.edl is not None else None,
            "mass_min": [str(m) for m in report.mass_min],
            "mass_max": [str(m) for m in report.mass_max],
            "edl_min": [str(e) for e in report.edl_min],
            "edl_max": [str(e) for e in report.edl_max],
            "outcomes": [_mu_json(mu) for mu in report.outcomes],
            "trace": _trace_json(report),
            "truncation_hit": report.truncation_hit,
            "nodes": report.nodes,
            "certificate": None
            if estimate is None
            else {
                "epsilon": str(cert.epsilon),
                "bound": str(estimate.bound),
                "holds": estimate.holds,
                "final_edl": str(estimate.final_edl),
            },
        }
        _json_out(payload)
    else:
        _print_simulation(args, report, cert, estimate)
    return 0


def _trace_json(report):
    if report.trace is None:
        return None
    if report.mode == "exhaustive":
        return [[_mu_json(mu) for mu in level] for level in report.trace]
    return [[_mu_json(mu)] for mu in report.trace]


def _print_simulation(args, report, cert, estimate) -> None:
    print(f"start {args.start}, steps {args.steps}, mode {report.mode}")
    if report.masses is not None:
        for depth, (mass, edl) in enumerate(zip(report.masses, report.edl)):
            line = f"step {depth}: mass {mass}, edl {edl}"
            if args.trace:
                line += f", state {report.trace[depth]}"
            print(line)
        print(f"outcome: {report.outcomes[0]}")
    else:
        for depth in range(len(report.mass_min)):
            print(
                f"step {depth}: mass {report.mass_min[depth]} .. {report.mass_max[depth]}, "
                f"edl {report.edl_min[depth]} .. {report.edl_max[depth]}"
            )
            if args.trace:
                for mu in report.trace[depth]:
                    print(f"  state {mu}")
        print(f"outcomes ({len(report.outcomes)}):")
        for mu in report.outcomes:
            print(f"  {mu}")
    if report.truncation_hit:
        print("note: the cutoff truncated some branches; masses are lower bounds")
    if estimate is not None:
        print(f"certificate epsilon = {cert.epsilon}")
        print(f"edl bound from certificate: {estimate.bound}")
        print(f"bound respected: {'yes' if estimate.holds else 'NO'}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    color = sys.stdout.isatty() and not args.no_color
    try:
        config = load_config(args.config) if args.config else {}
        if args.command == "prove":
            return _run_prove(args, config, color)
        if args.command == "check":
            return _run_check(args, config, color)
        return _run_simulate(args, config, color)
    except (
        CliError,
        WstError,
        CertParseError,
        CertificateInvalid,
        NodeBudgetExceeded,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
