"""Finite distributions and multidistributions with exact rational weights.

A multidistribution is a finite multiset of weighted objects {p1: a1, ...}
with 0 <= pi <= 1 and sum pi <= 1. Equal objects are kept as separate
entries; collapsing to an ordinary distribution is an explicit, lossy step.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Any, Callable, Generic, Hashable, Iterable, Iterator, TypeVar

T = TypeVar("T", bound=Hashable)
S = TypeVar("S", bound=Hashable)

Rational = Fraction | int


class InvalidWeights(ValueError):
    """Weights are negative, exceed one in total, or do not sum to one."""


def as_fraction(value: Rational | str) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


class FiniteDistribution(Generic[T]):
    """Probability distribution with finite support, weights summing to 1."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[T, Rational]] | dict[T, Rational]):
        if isinstance(entries, dict):
            entries = entries.items()
        acc: dict[T, Fraction] = {}
        for obj, p in entries:
            p = as_fraction(p)
            if p < 0:
                raise InvalidWeights(f"negative probability {p} for {obj}")
            if p == 0:
                continue
            acc[obj] = acc.get(obj, Fraction(0)) + p
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise InvalidWeights(f"probabilities sum to {total}, expected 1")
        self._entries = acc

    def probability(self, obj: T) -> Fraction:
        return self._entries.get(obj, Fraction(0))

    def support(self) -> list[T]:
        return list(self._entries)

    def items(self) -> Iterator[tuple[T, Fraction]]:
        return iter(self._entries.items())

    def map(self, fn: Callable[[T], S]) -> "FiniteDistribution[S]":
        out: dict[S, Fraction] = {}
        for obj, p in self._entries.items():
            image = fn(obj)
            out[image] = out.get(image, Fraction(0)) + p
        return FiniteDistribution(out)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, obj: T) -> bool:
        return obj in self._entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __str__(self) -> str:
        inner = ", ".join(f"{p}: {obj}" for obj, p in self._entries.items())
        return "{" + inner + "}"

    def __repr__(self) -> str:
        return f"FiniteDistribution({self})"


class MultiDistribution(Generic[T]):
    """Finite multiset of (probability, object) entries with total mass <= 1."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[Rational, T]]):
        kept: list[tuple[Fraction, T]] = []
        total = Fraction(0)
        for p, obj in entries:
            p = as_fraction(p)
            if p < 0 or p > 1:
                raise InvalidWeights(f"entry weight {p} outside [0, 1]")
            if p == 0:
                continue
            kept.append((p, obj))
            total += p
        if total > 1:
            raise InvalidWeights(f"total mass {total} exceeds 1")
        self._entries = tuple(kept)

    @classmethod
    def point(cls, obj: T) -> "MultiDistribution[T]":
        return cls([(Fraction(1), obj)])

    @classmethod
    def empty(cls) -> "MultiDistribution[T]":
        return cls([])

    @classmethod
    def from_distribution(cls, dist: FiniteDistribution[T]) -> "MultiDistribution[T]":
        return cls([(p, obj) for obj, p in dist.items()])

    @property
    def entries(self) -> tuple[tuple[Fraction, T], ...]:
        return self._entries

    def mass(self) -> Fraction:
        return sum((p for p, _ in self._entries), Fraction(0))

    def objects(self) -> list[T]:
        return [obj for _, obj in self._entries]

    def collapse(self) -> dict[T, Fraction]:
        """Merge equal objects; the result is a subdistribution as a dict."""
        out: dict[T, Fraction] = {}
        for p, obj in self._entries:
            out[obj] = out.get(obj, Fraction(0)) + p
        return out

    def map(self, fn: Callable[[T], S]) -> "MultiDistribution[S]":
        return MultiDistribution([(p, fn(obj)) for p, obj in self._entries])

    def scale(self, factor: Rational) -> "MultiDistribution[T]":
        factor = as_fraction(factor)
        return MultiDistribution([(factor * p, obj) for p, obj in self._entries])

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[tuple[Fraction, T]]:
        return iter(self._entries)

    def __eq__(self, other: object) -> bool:
        # Multiset equality: order-insensitive, multiplicity-sensitive.
        if not isinstance(other, MultiDistribution):
            return NotImplemented
        return Counter(self._entries) == Counter(other._entries)

    def __hash__(self) -> int:
        return hash(frozenset(Counter(self._entries).items()))

    def __str__(self) -> str:
        inner = ", ".join(f"{p}: {obj}" for p, obj in self._entries)
        return "{" + inner + "}"

    def __repr__(self) -> str:
        return f"MultiDistribution({self})"


def convex_union(
    parts: Iterable[tuple[Rational, MultiDistribution[T]]],
) -> MultiDistribution[T]:
    """Weighted multiset union sum pi * mui with pi >= 0 and sum pi <= 1."""
    entries: list[tuple[Fraction, T]] = []
    total = Fraction(0)
    for p, mu in parts:
        p = as_fraction(p)
        if p < 0:
            raise InvalidWeights(f"negative part weight {p}")
        total += p
        for q, obj in mu.entries:
            entries.append((p * q, obj))
    if total > 1:
        raise InvalidWeights(f"part weights sum to {total}, exceeding 1")
    return MultiDistribution(entries)


def expectation(mu: MultiDistribution[Any]) -> Fraction:
    """Expected value of a multidistribution over rational-valued objects."""
    return sum((p * as_fraction(obj) for p, obj in mu.entries), Fraction(0))


def expected_value(mu: MultiDistribution[T], fn: Callable[[T], Rational]) -> Fraction:
    return sum((p * as_fraction(fn(obj)) for p, obj in mu.entries), Fraction(0))


def display_key(entry: tuple[Fraction, Any]) -> tuple[str, str, Fraction]:
    """Deterministic ordering key for listings; equality never relies on it."""
    p, obj = entry
    return (type(obj).__name__, str(obj), p)


def canonical_order(mus: Iterable[MultiDistribution[T]]) -> list[MultiDistribution[T]]:
    return sorted(mus, key=lambda mu: [display_key(e) for e in sorted(mu.entries, key=display_key)])
