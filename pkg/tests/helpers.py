"""Shared oracles and random generators for the test suite.

Everything here is deliberately independent of the package's symbolic
machinery: expectations are computed by direct enumeration and linear
systems are solved directly, so these values can confront the production
code paths.
"""

from __future__ import annotations

import random
from fractions import Fraction

from ptrs.interpretations import MatrixInterpretation, PolyInterpretation
from ptrs.multidist import FiniteDistribution


def rand_fraction(rng: random.Random, max_num: int = 8, max_den: int = 4) -> Fraction:
    return Fraction(rng.randrange(0, max_num + 1), rng.randrange(1, max_den + 1))


def rand_poly_interp(rng: random.Random, arities: dict[str, int], degree: int) -> PolyInterpretation:
    from itertools import combinations

    coeffs = {}
    for sym, arity in arities.items():
        row = {frozenset(): rand_fraction(rng)}
        for i in range(1, arity + 1):
            row[frozenset((i,))] = 1 + rand_fraction(rng)  # monotone witness
        if degree >= 2:
            for pair in combinations(range(1, arity + 1), 2):
                if rng.random() < 0.5:
                    row[frozenset(pair)] = rand_fraction(rng)
        coeffs[sym] = row
    return PolyInterpretation(arities, coeffs)


def rand_matrix_interp(rng: random.Random, arities: dict[str, int], dim: int) -> MatrixInterpretation:
    entries = {}
    for sym, arity in arities.items():
        mats = []
        for _ in range(arity):
            M = [[rand_fraction(rng) for _ in range(dim)] for _ in range(dim)]
            M[0][0] = 1 + rand_fraction(rng)  # monotone witness
            mats.append(tuple(tuple(row) for row in M))
        const = tuple(rand_fraction(rng) for _ in range(dim))
        entries[sym] = (tuple(mats), const)
    return MatrixInterpretation(arities, dim, entries)


def rand_value_distribution(rng: random.Random, values: list) -> FiniteDistribution:
    """Random distribution over a few of the given (hashable) values."""
    support = rng.sample(values, k=min(len(values), rng.randrange(1, 4)))
    cuts = sorted(rng.randrange(1, 16) for _ in range(len(support) - 1))
    weights = []
    last = 0
    for cut in cuts + [16]:
        weights.append(Fraction(cut - last, 16))
        last = cut
    pairs = [(v, w) for v, w in zip(support, weights) if w > 0]
    return FiniteDistribution(pairs)


def poly_form_value(form, assignment: dict[str, Fraction]) -> Fraction:
    """Evaluate a PolyForm numerically, independent of eval_term."""
    total = Fraction(0)
    for V, c in form.coeffs.items():
        value = Fraction(c)
        for name in V:
            value *= assignment[name]
        total += value
    return total


def vec_form_value(form, assignment: dict[str, tuple[Fraction, ...]]) -> tuple[Fraction, ...]:
    out = [Fraction(v) for v in form.const]
    for name, M in form.coeffs.items():
        vec = assignment[name]
        for r in range(form.dim):
            out[r] += sum(Fraction(M[r][j]) * vec[j] for j in range(form.dim))
    return tuple(out)


def dp_random_walk(p: Fraction, start: int, steps: int) -> list[dict[int, Fraction]]:
    """Collapsed state distributions of the biased walk, by direct iteration.

    Position 0 is absorbing and leaves the system (mass drops)."""
    states = [{start: Fraction(1)}]
    current = {start: Fraction(1)}
    for _ in range(steps):
        nxt: dict[int, Fraction] = {}
        for n, mass in current.items():
            if n == 0:
                continue  # terminal: entry vanishes
            nxt[n - 1] = nxt.get(n - 1, Fraction(0)) + mass * p
            nxt[n + 1] = nxt.get(n + 1, Fraction(0)) + mass * (1 - p)
        current = {k: v for k, v in nxt.items() if v > 0}
        states.append(dict(current))
    return states


def walk_masses(p: Fraction, start: int, steps: int) -> list[Fraction]:
    return [sum(d.values(), Fraction(0)) for d in dp_random_walk(p, start, steps)]


def walk_partial_edl(p: Fraction, start: int, steps: int) -> list[Fraction]:
    masses = walk_masses(p, start, steps)
    out = [Fraction(0)]
    for m in masses[1:]:
        out.append(out[-1] + m)
    return out


def hitting_times_truncated(p: Fraction, height: int) -> list[Fraction]:
    """Expected steps to absorption for the walk on 0..height with both ends
    absorbing: E_0 = E_height = 0, E_n = 1 + p E_{n-1} + (1-p) E_{n+1}.

    Solved exactly with the tridiagonal (Thomas) algorithm; index n in the
    returned list is the state."""
    size = height - 1  # unknowns E_1 .. E_{height-1}
    q = 1 - p
    # Row n: -p E_{n-1} + E_n - q E_{n+1} = 1
    sub = [-p] * size
    diag = [Fraction(1)] * size
    sup = [-q] * size
    rhs = [Fraction(1)] * size
    for i in range(1, size):
        factor = sub[i] / diag[i - 1]
        diag[i] -= factor * sup[i - 1]
        rhs[i] -= factor * rhs[i - 1]
    sol = [Fraction(0)] * size
    sol[-1] = rhs[-1] / diag[-1]
    for i in range(size - 2, -1, -1):
        sol[i] = (rhs[i] - sup[i] * sol[i + 1]) / diag[i]
    return [Fraction(0)] + sol + [Fraction(0)]
