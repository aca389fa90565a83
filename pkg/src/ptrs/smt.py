"""Constraint generation and external-solver plumbing.

Orientation of l -> {p1: r1, ..., pn: rn} is encoded over the integers by
clearing denominators: with weights wj = pj * w,

    w * [l]  -  (w1 * [r1] + ... + wn * [rn])

must have nonnegative coefficients on every non-constant monomial (entrywise
for matrix shapes) and a constant part of at least 1, which makes the
rational margin at least 1/w. Unknown coefficients range over a bounded
integer box, 0..bound.

Solvers are untrusted external processes speaking SMT-LIB 2 over a pipe.
Every model is decoded and re-validated exactly before it is believed.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product as iter_product
from typing import Iterator, Mapping, Sequence

from .interpretations import (
    DegreeOverflow,
    Interpretation,
    MatrixInterpretation,
    PolyForm,
    PolyInterpretation,
    VecForm,
    rule_difference,
)
from .rewriting import PTRS


class EncodingError(Exception):
    """The system cannot be encoded in the requested shape."""


class ModelDecodeError(Exception):
    """The solver's model is unusable: incomplete, fractional, or out of box."""


class Poly:
    """Polynomial in named integer unknowns with exact coefficients.

    Monomials are sorted tuples of unknown names, repeats meaning powers;
    the empty tuple is the constant term.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[str, ...], Fraction | int] | None = None):
        cleaned: dict[tuple[str, ...], Fraction] = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                cleaned[tuple(sorted(mono))] = cleaned.get(tuple(sorted(mono)), Fraction(0)) + c
        self.terms = {m: c for m, c in cleaned.items() if c != 0}

    @classmethod
    def constant(cls, value: Fraction | int) -> "Poly":
        return cls({(): Fraction(value)})

    @classmethod
    def unknown(cls, name: str) -> "Poly":
        return cls({(name,): Fraction(1)})

    def _coerce(self, other: "Poly | Fraction | int") -> "Poly":
        return other if isinstance(other, Poly) else Poly.constant(other)

    def __add__(self, other: "Poly | Fraction | int") -> "Poly":
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out)

    __radd__ = __add__

    def __sub__(self, other: "Poly | Fraction | int") -> "Poly":
        return self + self._coerce(other).__neg__()

    def __rsub__(self, other: "Poly | Fraction | int") -> "Poly":
        return self._coerce(other) - self

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __mul__(self, other: "Poly | Fraction | int") -> "Poly":
        other = self._coerce(other)
        out: dict[tuple[str, ...], Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(sorted(m1 + m2))
                out[mono] = out.get(mono, Fraction(0)) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def unknowns(self) -> set[str]:
        return {name for m in self.terms for name in m}

    def scaled_integral(self) -> "Poly":
        """The same polynomial times the lcm of coefficient denominators."""
        denom = math.lcm(*(c.denominator for c in self.terms.values())) if self.terms else 1
        return Poly({m: c * denom for m, c in self.terms.items()})

    def evaluate(self, env: Mapping[str, Fraction | int]) -> Fraction:
        total = Fraction(0)
        for mono, c in self.terms.items():
            value = c
            for name in mono:
                value = value * env[name]
            total += value
        return total

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.constant(other).terms
        if isinstance(other, Poly):
            return self.terms == other.terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for mono in sorted(self.terms, key=lambda m: (len(m), m)):
            c = self.terms[mono]
            if not mono:
                bits.append(str(c))
            elif c == 1:
                bits.append("*".join(mono))
            else:
                bits.append(f"{c}*" + "*".join(mono))
        return " + ".join(bits)

    __repr__ = __str__


@dataclass(frozen=True)
class UnknownSpec:
    name: str
    lo: int = 0
    hi: int = 16


@dataclass(frozen=True)
class Constraint:
    """poly >= at_least over the integers."""

    poly: Poly
    at_least: int
    label: str = field(compare=False, default="")


@dataclass
class ConstraintSet:
    unknowns: list[UnknownSpec]
    constraints: list[Constraint]
    logic: str


@dataclass(frozen=True)
class Shape:
    kind: str  # "poly" | "matrix"
    param: int  # degree for poly, dimension for matrix

    def __str__(self) -> str:
        if self.kind == "poly":
            return "poly-linear" if self.param == 1 else f"poly-multilinear-{self.param}"
        return f"matrix-{self.param}"


def parse_shape(text: str) -> Shape:
    if text == "poly-linear":
        return Shape("poly", 1)
    if text.startswith("poly-multilinear-") and text.rsplit("-", 1)[1].isdigit():
        degree = int(text.rsplit("-", 1)[1])
        if degree >= 2:
            return Shape("poly", degree)
    if text.startswith("matrix-") and text.split("-", 1)[1].isdigit():
        dim = int(text.split("-", 1)[1])
        if dim >= 1:
            return Shape("matrix", dim)
    raise ValueError(
        f"unknown shape {text!r} (expected poly-linear, poly-multilinear-K or matrix-N)"
    )


DEFAULT_SHAPES = (Shape("poly", 1), Shape("poly", 2), Shape("matrix", 2), Shape("matrix", 3))


@dataclass
class EncodedProblem:
    shape: Shape
    template: Interpretation
    constraint_set: ConstraintSet
    bound: int


def _subsets(indices: Sequence[int], max_size: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    for size in range(1, max_size + 1):
        out.extend(combinations(indices, size))
    return out


def poly_template(system: PTRS, degree: int, bound: int) -> tuple[PolyInterpretation, list[UnknownSpec]]:
    symbols = sorted(system.signature.symbols().items())
    coeffs: dict[str, dict[frozenset[int], Poly]] = {}
    unknowns: list[UnknownSpec] = []
    for index, (sym, arity) in enumerate(symbols):
        row: dict[frozenset[int], Poly] = {}
        for V in _subsets(range(1, arity + 1), degree):
            tag = "k" if not V else "_".join(str(i) for i in V)
            name = f"c{index}_{tag}"
            lo = 1 if len(V) == 1 else 0  # monotonicity witness folded into the box
            unknowns.append(UnknownSpec(name, lo, bound))
            row[frozenset(V)] = Poly.unknown(name)
        coeffs[sym] = row
    return PolyInterpretation(dict(symbols), coeffs), unknowns


def matrix_template(system: PTRS, dim: int, bound: int) -> tuple[MatrixInterpretation, list[UnknownSpec]]:
    symbols = sorted(system.signature.symbols().items())
    entries: dict[str, tuple[list, tuple]] = {}
    unknowns: list[UnknownSpec] = []
    for index, (sym, arity) in enumerate(symbols):
        mats = []
        for arg in range(1, arity + 1):
            rows = []
            for r in range(1, dim + 1):
                row = []
                for c in range(1, dim + 1):
                    name = f"m{index}_a{arg}_{r}_{c}"
                    lo = 1 if r == 1 and c == 1 else 0
                    unknowns.append(UnknownSpec(name, lo, bound))
                    row.append(Poly.unknown(name))
                rows.append(tuple(row))
            mats.append(tuple(rows))
        const = []
        for r in range(1, dim + 1):
            name = f"m{index}_k_{r}"
            unknowns.append(UnknownSpec(name, 0, bound))
            const.append(Poly.unknown(name))
        entries[sym] = (mats, tuple(const))
    return MatrixInterpretation(dict(symbols), dim, entries), unknowns


def rule_weights(rule) -> tuple[int, list[tuple[int, object]]]:
    """Integer weights recovered from the rule's probabilities."""
    items = list(rule.rhs.items())
    total = math.lcm(*(p.denominator for _, p in items))
    return total, [(int(p * total), term) for term, p in items]


def encode(system: PTRS, shape: Shape, bound: int = 16) -> EncodedProblem:
    """Orientation constraints for the whole system under one template.

    Raises DegreeOverflow when nesting leaves the shape's multilinear
    fragment, and EncodingError for shapes that cannot start at all.
    """
    if not system.rules:
        raise EncodingError("system has no rules")
    if shape.kind == "poly":
        template, unknowns = poly_template(system, shape.param, bound)
        cap: int | None = shape.param
    else:
        template, unknowns = matrix_template(system, shape.param, bound)
        cap = None
    constraints: list[Constraint] = []
    for index, rule in enumerate(system.rules, start=1):
        total, weighted = rule_weights(rule)
        lhs = _scaled_form(template, rule, cap, total, weighted)
        if isinstance(lhs, PolyForm):
            for V in lhs.monomials():
                coeff = _as_poly(lhs.coeffs[V]).scaled_integral()
                if not V:
                    constraints.append(
                        Constraint(coeff, 1, f"rule {index}: constant margin")
                    )
                else:
                    constraints.append(
                        Constraint(coeff, 0, f"rule {index}: monomial {'*'.join(sorted(V))}")
                    )
            if frozenset() not in lhs.coeffs:
                constraints.append(Constraint(Poly(), 1, f"rule {index}: constant margin"))
        else:
            for name in lhs.variables():
                M = lhs.matrix(name)
                for r, row in enumerate(M, start=1):
                    for c, value in enumerate(row, start=1):
                        constraints.append(
                            Constraint(
                                _as_poly(value).scaled_integral(),
                                0,
                                f"rule {index}: {name} entry ({r},{c})",
                            )
                        )
            for r, value in enumerate(lhs.const, start=1):
                constraints.append(
                    Constraint(
                        _as_poly(value).scaled_integral(),
                        1 if r == 1 else 0,
                        f"rule {index}: constant component {r}",
                    )
                )
    logic = "QF_NIA" if any(c.poly.degree() > 1 for c in constraints) else "QF_LIA"
    return EncodedProblem(shape, template, ConstraintSet(unknowns, constraints, logic), bound)


def _scaled_form(template, rule, cap, total, weighted):
    diff = rule_difference(template, rule, cap)
    # rule_difference computes [l] - sum pj [rj]; rescale by the weight total
    # so every coefficient clears its denominators.
    return diff.scale(total)


def _as_poly(value) -> Poly:
    return value if isinstance(value, Poly) else Poly.constant(value)


# ---------------------------------------------------------------------------
# SMT-LIB emission


def _mono_sexpr(mono: tuple[str, ...], c: Fraction) -> str:
    assert c.denominator == 1
    k = c.numerator
    parts = list(mono)
    if k != 1 or not parts:
        parts = [str(k) if k >= 0 else f"(- {-k})"] + parts
    if len(parts) == 1:
        return parts[0]
    return "(* " + " ".join(parts) + ")"


def poly_sexpr(poly: Poly) -> str:
    if not poly.terms:
        return "0"
    bits = [
        _mono_sexpr(mono, poly.terms[mono])
        for mono in sorted(poly.terms, key=lambda m: (len(m), m))
    ]
    if len(bits) == 1:
        return bits[0]
    return "(+ " + " ".join(bits) + ")"


def emit_smtlib(cs: ConstraintSet) -> str:
    """Deterministic rendering: identical input gives identical bytes."""
    lines = [f"(set-logic {cs.logic})"]
    for spec in cs.unknowns:
        lines.append(f"(declare-const {spec.name} Int)")
    for spec in cs.unknowns:
        lines.append(f"(assert (>= {spec.name} {spec.lo}))")
        lines.append(f"(assert (<= {spec.name} {spec.hi}))")
    for constraint in cs.constraints:
        lines.append(f"(assert (>= {poly_sexpr(constraint.poly)} {constraint.at_least}))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Running an external solver


class CancelToken:
    """Cooperative cancellation: kills registered solver processes."""

    def __init__(self) -> None:
        self._event = threading.Event()
        self._lock = threading.Lock()
        self._procs: list[subprocess.Popen] = []

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()

    def register(self, proc: subprocess.Popen) -> None:
        with self._lock:
            self._procs.append(proc)
            if self._event.is_set():
                self._kill(proc)

    def cancel(self) -> None:
        self._event.set()
        with self._lock:
            for proc in self._procs:
                self._kill(proc)

    @staticmethod
    def _kill(proc: subprocess.Popen) -> None:
        try:
            proc.kill()
        except ProcessLookupError:
            pass


@dataclass
class SolverResult:
    status: str  # sat | unsat | unknown | error
    model: dict[str, Fraction] | None = None
    detail: str = ""


def run_solver(
    script: str,
    command: str,
    timeout: float = 60.0,
    cancel: CancelToken | None = None,
) -> SolverResult:
    """One-shot pipe protocol: write the script, read the full reply."""
    argv = shlex.split(command)
    if not argv:
        return SolverResult("error", detail="empty solver command")
    try:
        proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
    except (FileNotFoundError, PermissionError) as exc:
        return SolverResult("error", detail=f"cannot start solver {argv[0]!r}: {exc}")
    if cancel is not None:
        cancel.register(proc)
    try:
        out, err = proc.communicate(script, timeout=timeout)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.communicate()
        return SolverResult("unknown", detail=f"solver timed out after {timeout}s")
    if cancel is not None and cancel.cancelled:
        return SolverResult("unknown", detail="cancelled")
    verdict = None
    for line in out.splitlines():
        word = line.strip()
        if word in ("sat", "unsat", "unknown"):
            verdict = word
            break
    if verdict is None:
        detail = (err or out or "").strip().splitlines()
        head = detail[0] if detail else f"exit code {proc.returncode}"
        return SolverResult("error", detail=f"no verdict in solver output ({head})")
    if verdict == "sat":
        try:
            model = parse_model(out)
        except ValueError as exc:
            return SolverResult("error", detail=str(exc))
        return SolverResult("sat", model=model)
    if verdict == "unsat":
        return SolverResult("unsat")
    return SolverResult("unknown", detail="solver answered unknown")


def _sexp_tokens(text: str) -> Iterator[str]:
    token = []
    for ch in text:
        if ch in "()":
            if token:
                yield "".join(token)
                token = []
            yield ch
        elif ch.isspace():
            if token:
                yield "".join(token)
                token = []
        else:
            token.append(ch)
    if token:
        yield "".join(token)


def _sexp_parse(tokens: Iterator[str]):
    out = []
    stack = [out]
    for tok in tokens:
        if tok == "(":
            new: list = []
            stack[-1].append(new)
            stack.append(new)
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')' in solver output")
            stack.pop()
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '(' in solver output")
    return out

def _atom_value(node) -> Fraction:
    if isinstance(node, list):
        if len(node) == 2 and node[0] == "-":
            return -_atom_value(node[1])
        if len(node) == 3 and node[0] == "/":
            return _atom_value(node[1]) / _atom_value(node[2])
        raise ValueError(f"cannot read model value {node!r}")
    try:
        return Fraction(node)
    except ValueError:
        raise ValueError(f"cannot read model value {node!r}") from None


def parse_model(text: str) -> dict[str, Fraction]:
    """Pull (define-fun name () Int value) entries out of solver output."""
    lines = text.splitlines()
    start = next((i for i, line in enumerate(lines) if line.strip() == "sat"), -1)
    body = "\n".join(lines[start + 1 :])
    nodes = _sexp_parse(_sexp_tokens(body))
    model: dict[str, Fraction] = {}

    def walk(node) -> None:
        if not isinstance(node, list):
            return
        if len(node) >= 5 and node[0] == "define-fun" and node[2] == []:
            model[node[1]] = _atom_value(node[4])
            return
        for child in node:
            walk(child)

    for node in nodes:
        walk(node)
    return model


def decode(encoded: EncodedProblem, model: Mapping[str, Fraction]) -> Interpretation:
    """Substitute the model into the template; reject anything off the box."""
    env: dict[str, Fraction] = {}
    for spec in encoded.constraint_set.unknowns:
        if spec.name not in model:
            raise ModelDecodeError(f"model misses unknown {spec.name}")
        value = Fraction(model[spec.name])
        if value.denominator != 1:
            raise ModelDecodeError(f"{spec.name} = {value} is not an integer")
        if not spec.lo <= value <= spec.hi:
            raise ModelDecodeError(f"{spec.name} = {value} outside box {spec.lo}..{spec.hi}")
        env[spec.name] = value
    template = encoded.template
    if isinstance(template, PolyInterpretation):
        coeffs = {
            sym: {V: poly.evaluate(env) for V, poly in row.items()}
            for sym, row in template.coeffs.items()
        }
        return PolyInterpretation(template.arities, coeffs)
    entries = {}
    for sym in template.symbols():
        mats = tuple(
            tuple(tuple(_as_poly(e).evaluate(env) for e in row) for row in M)
            for M in template.matrices(sym)
        )
        const = tuple(_as_poly(e).evaluate(env) for e in template.constant(sym))
        entries[sym] = (mats, const)
    return MatrixInterpretation(template.arities, template.dim, entries)


def enumerate_box(cs: ConstraintSet, limit: int | None = None) -> Iterator[dict[str, int]]:
    """Exhaustive models of the constraint set within its integer box.

    Independent of any solver; the test oracle for small bounds.
    """
    names = [spec.name for spec in cs.unknowns]
    ranges = [range(spec.lo, spec.hi + 1) for spec in cs.unknowns]
    count = 1
    for r in ranges:
        count *= len(r)
    if limit is not None and count > limit:
        raise ValueError(f"box holds {count} assignments, over the limit {limit}")
    for values in iter_product(*ranges):
        env = dict(zip(names, values))
        if all(c.poly.evaluate(env) >= c.at_least for c in cs.constraints):
            yield env
