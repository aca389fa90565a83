"""Portfolio termination prover.

Tries a sequence of interpretation shapes against an external SMT solver.
The first shape whose model survives exact re-validation yields YES; if
every shape comes back unsat, unknown, or unusable the answer is MAYBE.
The prover never answers NO: failure to find a certificate proves nothing.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .certtext import CertParseError, parse_interpretation, render_certificate, render_interpretation
from .interpretations import Certificate, CertificateInvalid, DegreeOverflow, check_certificate
from .rewriting import PTRS
from .smt import (
    CancelToken,
    DEFAULT_SHAPES,
    EncodingError,
    ModelDecodeError,
    Shape,
    decode,
    emit_smtlib,
    encode,
    run_solver,
)


class ProverError(Exception):
    """Internal inconsistency, e.g. a decoded model that fails validation."""


@dataclass(frozen=True)
class ProverConfig:
    shapes: tuple[Shape, ...] = DEFAULT_SHAPES
    solver: str = "z3 -in"
    timeout: float = 60.0
    coeff_bound: int = 16
    parallel: bool = False
    emit_smt: str | None = None  # directory that receives one <shape>.smt2 per attempt


@dataclass(frozen=True)
class ShapeOutcome:
    shape: Shape
    status: str  # proved | unsat | unknown | degree-overflow | solver-error | cancelled
    detail: str = ""


@dataclass(frozen=True)
class Verdict:
    kind: str  # YES | MAYBE | ERROR
    certificate: Certificate | None = None
    shape: Shape | None = None
    outcomes: tuple[ShapeOutcome, ...] = ()
    problems: tuple[str, ...] = ()
    error: str = ""


def _attempt(
    system: PTRS, shape: Shape, config: ProverConfig, cancel: CancelToken
) -> tuple[ShapeOutcome, Certificate | None]:
    if cancel.cancelled:
        return ShapeOutcome(shape, "cancelled", "portfolio already finished"), None
    try:
        encoded = encode(system, shape, config.coeff_bound)
    except DegreeOverflow as exc:
        return ShapeOutcome(shape, "degree-overflow", str(exc)), None
    except EncodingError as exc:
        raise ProverError(f"cannot encode {shape}: {exc}") from exc
    script = emit_smtlib(encoded.constraint_set)
    if config.emit_smt is not None:
        os.makedirs(config.emit_smt, exist_ok=True)
        with open(os.path.join(config.emit_smt, f"{shape}.smt2"), "w") as handle:
            handle.write(script)
    result = run_solver(script, config.solver, timeout=config.timeout, cancel=cancel)
    if result.status == "sat":
        try:
            interp = decode(encoded, result.model or {})
        except ModelDecodeError as exc:
            return ShapeOutcome(shape, "solver-error", f"unusable model: {exc}"), None
        try:
            cert = check_certificate(interp, system)
        except CertificateInvalid as exc:
            # The solver said sat and the model decoded cleanly, yet exact
            # validation rejects it: the encoding and the checker disagree.
            raise ProverError(
                f"model for shape {shape} failed validation: " + "; ".join(exc.problems)
            ) from exc
        return ShapeOutcome(shape, "proved", f"epsilon = {cert.epsilon}"), cert
    if result.status == "unsat":
        return ShapeOutcome(shape, "unsat", f"no such interpretation with coefficients 0..{config.coeff_bound}"), None
    if result.status == "unknown":
        if cancel.cancelled:
            return ShapeOutcome(shape, "cancelled", "another shape finished first"), None
        return ShapeOutcome(shape, "unknown", result.detail), None
    return ShapeOutcome(shape, "solver-error", result.detail), None


def prove(system: PTRS, config: ProverConfig = ProverConfig()) -> Verdict:
    """Run the shape portfolio and return YES with a certificate or MAYBE."""
    cancel = CancelToken()
    try:
        if config.parallel and len(config.shapes) > 1:
            results = _run_parallel(system, config, cancel)
        else:
            results = _run_sequential(system, config, cancel)
    except ProverError as exc:
        cancel.cancel()
        return Verdict("ERROR", error=str(exc))
    outcomes = tuple(outcome for outcome, _ in results)
    for outcome, cert in results:
        if cert is not None:
            return Verdict("YES", certificate=cert, shape=outcome.shape, outcomes=outcomes)
    return Verdict("MAYBE", outcomes=outcomes)


def _run_sequential(system, config, cancel):
    results = []
    for shape in config.shapes:
        outcome, cert = _attempt(system, shape, config, cancel)
        results.append((outcome, cert))
        if cert is not None:
            break
    return results


def _run_parallel(system, config, cancel):
    def worker(shape: Shape):
        outcome, cert = _attempt(system, shape, config, cancel)
        if cert is not None:
            cancel.cancel()  # first success kills the remaining solvers
        return outcome, cert

    with ThreadPoolExecutor(max_workers=len(config.shapes)) as pool:
        futures = [pool.submit(worker, shape) for shape in config.shapes]
        return [f.result() for f in futures]


def check_only(system: PTRS, certificate_text: str) -> Verdict:
    """Validate a user-supplied certificate against the system."""
    try:
        interp = parse_interpretation(certificate_text)
    except CertParseError as exc:
        return Verdict("ERROR", error=f"certificate unreadable: {exc}")
    try:
        cert = check_certificate(interp, system)
    except CertificateInvalid as exc:
        return Verdict("MAYBE", problems=tuple(exc.problems))
    return Verdict("YES", certificate=cert)


def format_verdict(verdict: Verdict, system: PTRS) -> str:
    """Human-readable report; the first line is exactly the verdict kind."""
    lines = [verdict.kind]
    if verdict.kind == "YES":
        if verdict.shape is not None:
            lines.append(f"shape: {verdict.shape}")
        lines.append(render_certificate(verdict.certificate, system).rstrip("\n"))
    elif verdict.kind == "MAYBE":
        if verdict.problems:
            lines.append("certificate does not establish termination:")
            lines.extend(f"  {problem}" for problem in verdict.problems)
        else:
            lines.append("no certificate found:")
            for outcome in verdict.outcomes:
                tail = f" ({outcome.detail})" if outcome.detail else ""
                lines.append(f"  {outcome.shape}: {outcome.status}{tail}")
    else:
        lines.append(f"error: {verdict.error}")
    return "\n".join(lines) + "\n"


def verdict_json(verdict: Verdict, system: PTRS) -> dict:
    """JSON-ready summary; fractions are rendered as strings."""
    cert = verdict.certificate
    return {
        "verdict": verdict.kind,
        "shape": str(verdict.shape) if verdict.shape is not None else None,
        "epsilon": str(cert.epsilon) if cert is not None else None,
        "margins": [str(m) for m in cert.margins] if cert is not None else None,
        "certificate": render_interpretation(cert.interpretation) if cert is not None else None,
        "attempts": [
            {"shape": str(o.shape), "status": o.status, "detail": o.detail}
            for o in verdict.outcomes
        ],
        "problems": list(verdict.problems),
        "error": verdict.error or None,
    }
