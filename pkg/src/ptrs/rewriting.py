"""Probabilistic rewriting and the one-step multidistribution semantics.

A PARS maps every object to finitely many reduct distributions; objects with
none are terminal. A multidistribution steps by replacing each nonterminal
entry (p, a) with p times one chosen reduct distribution of a, and dropping
terminal entries, so mass only ever shrinks.

A PTRS induces a PARS on terms: every redex occurrence of a rule contributes
one reduct distribution, built by instantiating the rule's right-hand sides,
collapsing duplicates created by the substitution, and plugging the results
back into the surrounding context.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Hashable, Sequence

from .multidist import (
    FiniteDistribution,
    MultiDistribution,
    as_fraction,
    convex_union,
)
from .terms import (
    App,
    Position,
    Signature,
    Term,
    Var,
    apply_substitution,
    check_term,
    match,
    replace_at,
    subterm_at,
    subterm_positions,
    variables,
)


class RuleError(ValueError):
    """Ill-formed probabilistic rewrite rule."""


class NodeBudgetExceeded(RuntimeError):
    """Exhaustive exploration grew past the configured node budget."""


@dataclass(frozen=True)
class ProbRule:
    """l -> {p1: r1, ..., pn: rn} with vars(ri) contained in vars(l)."""

    lhs: Term
    rhs: FiniteDistribution[Term]

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Var):
            raise RuleError(f"left-hand side is the bare variable {self.lhs}")
        bound = variables(self.lhs)
        for term in self.rhs.support():
            extra = variables(term) - bound
            if extra:
                raise RuleError(f"right-hand side variable {sorted(extra)[0]!r} is not bound on the left")

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"


@dataclass(frozen=True)
class PTRS:
    signature: Signature
    rules: tuple[ProbRule, ...]

    def __post_init__(self) -> None:
        for rule in self.rules:
            check_term(rule.lhs, self.signature)
            for term in rule.rhs.support():
                check_term(term, self.signature)


@dataclass
class RedexStep:
    """One rule applied at one position, with the resulting distribution."""

    position: Position
    rule_index: int
    substitution: dict[str, Term]
    result: FiniteDistribution[Term]


def enumerate_redexes(system: PTRS, term: Term) -> list[RedexStep]:
    """All redexes in pre-order position order, rule order within a position."""
    steps: list[RedexStep] = []
    for position in subterm_positions(term):
        sub = subterm_at(term, position)
        for index, rule in enumerate(system.rules):
            subst = match(rule.lhs, sub)
            if subst is None:
                continue
            # Instantiation can merge distinct right-hand sides, so collapse
            # before plugging into the context (contexts are injective).
            local: dict[Term, Fraction] = {}
            for rhs_term, p in rule.rhs.items():
                image = apply_substitution(rhs_term, subst)
                local[image] = local.get(image, Fraction(0)) + p
            dist = FiniteDistribution(
                {replace_at(term, position, image): p for image, p in local.items()}
            )
            steps.append(RedexStep(position, index, subst, dist))
    return steps


class Pars:
    """One-step semantics: each object has finitely many reduct distributions."""

    def options(self, obj: Hashable) -> list[FiniteDistribution]:
        raise NotImplementedError

    def is_terminal(self, obj: Hashable) -> bool:
        return not self.options(obj)

    def truncates(self, obj: Hashable) -> bool:
        """True when the object sits on a configured truncation boundary."""
        return False

    def term_view(self, obj: Hashable) -> Term | None:
        """A term rendering of the object, when one exists (for ranking)."""
        return None

    def parse_object(self, text: str) -> Hashable:
        raise NotImplementedError(f"{type(self).__name__} cannot parse start objects")


class TermPars(Pars):
    """The PARS a PTRS induces on terms."""

    def __init__(self, system: PTRS):
        self.system = system
        self._memo: dict[Term, list[RedexStep]] = {}

    def redexes(self, term: Term) -> list[RedexStep]:
        steps = self._memo.get(term)
        if steps is None:
            steps = enumerate_redexes(self.system, term)
            if len(self._memo) < 65536:
                self._memo[term] = steps
        return steps

    def options(self, term: Term) -> list[FiniteDistribution]:
        return [step.result for step in self.redexes(term)]

    def term_view(self, obj: Hashable) -> Term | None:
        return obj if isinstance(obj, (Var, App)) else None

    def parse_object(self, text: str) -> Term:
        from .wst import parse_term_text

        return parse_term_text(text, set(), self.system.signature)


Chooser = Callable[[Pars, Hashable, Sequence[FiniteDistribution]], int]


def leftmost_outermost(pars: Pars, obj: Hashable, options: Sequence[FiniteDistribution]) -> int:
    # Redexes are enumerated in pre-order, so the first option is outermost.
    return 0


def leftmost_innermost(pars: Pars, obj: Hashable, options: Sequence[FiniteDistribution]) -> int:
    if isinstance(pars, TermPars):
        steps = pars.redexes(obj)
        positions = [s.position for s in steps]
        for index, pos in enumerate(positions):
            below = [q for q in positions if len(q) > len(pos) and q[: len(pos)] == pos]
            if not below:
                return index
    return 0


def random_chooser(rng: random.Random) -> Chooser:
    def choose(pars: Pars, obj: Hashable, options: Sequence[FiniteDistribution]) -> int:
        return rng.randrange(len(options))

    return choose


def step_multidist(pars: Pars, mu: MultiDistribution, chooser: Chooser) -> MultiDistribution:
    """One reduction step; terminal entries vanish, so mass is monotone."""
    parts: list[tuple[Fraction, MultiDistribution]] = []
    for p, obj in mu.entries:
        options = pars.options(obj)
        if not options:
            continue
        chosen = options[chooser(pars, obj, options)]
        parts.append((p, MultiDistribution.from_distribution(chosen)))
    return convex_union(parts)


class BudgetTracker:
    def __init__(self, budget: int):
        self.budget = budget
        self.spent = 0

    def spend(self, amount: int) -> None:
        self.spent += amount
        if self.spent > self.budget:
            raise NodeBudgetExceeded(f"node budget of {self.budget} exceeded")


def all_steps(
    pars: Pars, mu: MultiDistribution, tracker: BudgetTracker | None = None
) -> list[MultiDistribution]:
    """Every one-step successor of mu, one choice per nonterminal entry.

    Duplicate results (as multisets) are removed; first-seen order is kept.
    """
    alternatives: list[list[MultiDistribution]] = []
    for p, obj in mu.entries:
        options = pars.options(obj)
        if not options:
            continue
        alternatives.append([MultiDistribution.from_distribution(d).scale(p) for d in options])
    if not alternatives:
        return [MultiDistribution.empty()]
    seen: dict[MultiDistribution, None] = {}
    combos = 1
    for opts in alternatives:
        combos *= len(opts)
    if tracker is not None:
        tracker.spend(combos * len(alternatives))
    for combo in product(*alternatives):
        entries = [entry for part in combo for entry in part.entries]
        nu = MultiDistribution(entries)
        if nu not in seen:
            seen[nu] = None
    return list(seen)


@dataclass
class EmbeddingReport:
    ok: bool
    problems: list[str]


def ars_embedding_check(pars: Pars, objects: Sequence[Hashable]) -> EmbeddingReport:
    """For non-probabilistic systems the multidistribution semantics must
    mirror plain rewriting: one-step reducts of {1: a} are exactly the point
    masses of the successors of a, and the empty multidistribution for
    normal forms."""
    problems: list[str] = []
    for obj in objects:
        options = pars.options(obj)
        for dist in options:
            if len(dist) != 1:
                problems.append(f"{obj} has a non-point reduct distribution {dist}")
        got = all_steps(pars, MultiDistribution.point(obj))
        if not options:
            expected = [MultiDistribution.empty()]
        else:
            expected = [MultiDistribution.from_distribution(d) for d in options]
        if Counter(got) != Counter(expected):
            problems.append(
                f"one-step reducts of {{1: {obj}}} are "
                f"{[str(m) for m in got]}, expected {[str(m) for m in expected]}"
            )
    return EmbeddingReport(not problems, problems)


def random_term(
    signature: Signature,
    rng: random.Random,
    *,
    max_depth: int = 4,
    variable_pool: Sequence[str] = ("x", "y"),
) -> Term:
    """Random well-formed term; leaves are variables or nullary symbols."""
    symbols = sorted(signature.symbols().items())
    leaves: list[Term] = [App(s, ()) for s, a in symbols if a == 0]
    leaves.extend(Var(name) for name in variable_pool)
    if not leaves:
        raise ValueError("need a nullary symbol or a variable pool to close terms")

    def build(depth: int) -> Term:
        if depth >= max_depth or rng.random() < 0.25:
            return rng.choice(leaves)
        sym, arity = rng.choice(symbols)
        return App(sym, tuple(build(depth + 1) for _ in range(arity)))

    return build(0)


# ---------------------------------------------------------------------------
# Built-in PARS families, constructed in code rather than parsed.


class RandomWalk(Pars):
    """Walk on the naturals: n+1 steps to n with probability p, else to n+2.

    p is the probability of the decreasing alternative; 0 is terminal.
    """

    def __init__(self, p: Fraction | int | str, truncate: int | None = None):
        self.p = as_fraction(p)
        if not 0 <= self.p <= 1:
            raise ValueError(f"probability {self.p} outside [0, 1]")
        self.truncate = truncate

    def options(self, obj: int) -> list[FiniteDistribution]:
        if obj <= 0 or self.truncates(obj):
            return []
        return [FiniteDistribution([(obj - 1, self.p), (obj + 1, 1 - self.p)])]

    def truncates(self, obj: int) -> bool:
        return self.truncate is not None and obj >= self.truncate

    def term_view(self, obj: int) -> Term:
        term: Term = App("0", ())
        for _ in range(obj):
            term = App("s", (term,))
        return term

    def parse_object(self, text: str) -> int:
        value = int(text)
        if value < 0:
            raise ValueError("start object must be a natural number")
        return value


def random_walk_ptrs(p: Fraction | int | str) -> PTRS:
    """The term form of the walk: a single rule over s/1 (0 closes terms)."""
    p = as_fraction(p)
    x = Var("x")
    rule = ProbRule(
        App("s", (x,)),
        FiniteDistribution([(x, p), (App("s", (App("s", (x,)),)), 1 - p)]),
    )
    return PTRS(Signature({"s": 1, "0": 0}), (rule,))


class NondetBranch(Pars):
    """Six objects; a branches to b1/b2 fairly, both reach c, and c picks
    d1 or d2 nondeterministically. Terminal: d1, d2."""

    _RULES: dict[str, tuple[dict[str, Fraction], ...]] = {
        "a": ({"b1": Fraction(1, 2), "b2": Fraction(1, 2)},),
        "b1": ({"c": Fraction(1)},),
        "b2": ({"c": Fraction(1)},),
        "c": ({"d1": Fraction(1)}, {"d2": Fraction(1)}),
    }

    def options(self, obj: str) -> list[FiniteDistribution]:
        return [FiniteDistribution(alt) for alt in self._RULES.get(obj, ())]

    def parse_object(self, text: str) -> str:
        if text not in {"a", "b1", "b2", "c", "d1", "d2"}:
            raise ValueError(f"unknown object {text!r} (expected a, b1, b2, c, d1 or d2)")
        return text


@dataclass(frozen=True)
class Stake:
    """Pending stake in the payout family, rendered a0, a1, ..."""

    round: int

    def __str__(self) -> str:
        return f"a{self.round}"


class Payout(Pars):
    """Double-or-cash game: a_n either moves to a_{n+1} or busts (fair coin),
    or cashes out into a countdown of 2^n * n steps. Almost surely
    terminating, yet the expected derivation length over all schedulers is
    unbounded."""

    def __init__(self, truncate: int | None = None):
        self.truncate = truncate

    def options(self, obj: "Stake | int") -> list[FiniteDistribution]:
        if self.truncates(obj):
            return []
        if isinstance(obj, Stake):
            n = obj.round
            raise_or_bust = FiniteDistribution([(Stake(n + 1), Fraction(1, 2)), (0, Fraction(1, 2))])
            cash = FiniteDistribution([(2**n * n, Fraction(1))])
            return [raise_or_bust, cash]
        if obj > 0:
            return [FiniteDistribution([(obj - 1, Fraction(1))])]
        return []

    def truncates(self, obj: "Stake | int") -> bool:
        return self.truncate is not None and isinstance(obj, Stake) and obj.round >= self.truncate

    def parse_object(self, text: str) -> "Stake | int":
        if text.startswith("a") and text[1:].isdigit():
            return Stake(int(text[1:]))
        if text.isdigit():
            return int(text)
        raise ValueError(f"cannot read start object {text!r} (expected aN or a natural)")


FAMILY_NAMES = ("rw", "nd", "payout")


def make_family(name: str, p: Fraction | None = None, truncate: int | None = None) -> Pars:
    if name == "rw":
        if p is None:
            raise ValueError("family rw needs --p")
        return RandomWalk(p, truncate)
    if name == "nd":
        return NondetBranch()
    if name == "payout":
        return Payout(truncate)
    raise ValueError(f"unknown family {name!r} (expected rw, nd or payout)")
