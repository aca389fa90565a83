"""First-order terms over a finite signature.

Positions follow the rewriting convention: a position is a tuple of 1-based
argument indices, and the empty tuple addresses the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Union


class TermError(Exception):
    """Malformed term or signature misuse."""


class InvalidPosition(TermError):
    """Position does not address a node of the given term."""


class Signature:
    """Function symbols with fixed arities."""

    def __init__(self, symbols: Mapping[str, int]):
        for name, arity in symbols.items():
            if not name:
                raise TermError("empty symbol name")
            if arity < 0:
                raise TermError(f"negative arity for symbol {name!r}")
        self._symbols = dict(symbols)

    def arity(self, symbol: str) -> int:
        try:
            return self._symbols[symbol]
        except KeyError:
            raise TermError(f"unknown symbol {symbol!r}") from None

    def symbols(self) -> dict[str, int]:
        return dict(self._symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._symbols

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._symbols))

    def __len__(self) -> int:
        return len(self._symbols)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Signature):
            return NotImplemented
        return self._symbols == other._symbols

    def __repr__(self) -> str:
        inner = ", ".join(f"{s}/{a}" for s, a in sorted(self._symbols.items()))
        return f"Signature({inner})"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return f"{self.symbol}({','.join(str(a) for a in self.args)})"


Term = Union[Var, App]
Position = tuple[int, ...]
Substitution = Mapping[str, Term]


def check_term(term: Term, signature: Signature) -> None:
    """Raise TermError unless every symbol occurs with its declared arity."""
    if isinstance(term, Var):
        return
    if signature.arity(term.symbol) != len(term.args):
        raise TermError(
            f"symbol {term.symbol!r} used with {len(term.args)} arguments, "
            f"declared arity is {signature.arity(term.symbol)}"
        )
    for arg in term.args:
        check_term(arg, signature)


def variables(term: Term) -> set[str]:
    if isinstance(term, Var):
        return {term.name}
    out: set[str] = set()
    for arg in term.args:
        out |= variables(arg)
    return out


def term_size(term: Term) -> int:
    if isinstance(term, Var):
        return 1
    return 1 + sum(term_size(a) for a in term.args)


def apply_substitution(term: Term, subst: Substitution) -> Term:
    """Capture is not a concern for first-order terms: plain replacement."""
    if isinstance(term, Var):
        return subst.get(term.name, term)
    return App(term.symbol, tuple(apply_substitution(a, subst) for a in term.args))


def subterm_positions(term: Term) -> list[Position]:
    """All positions of the term in pre-order (root first, leftmost first)."""
    out: list[Position] = [()]
    if isinstance(term, App):
        for i, arg in enumerate(term.args, start=1):
            out.extend((i, *p) for p in subterm_positions(arg))
    return out


def subterm_at(term: Term, position: Position) -> Term:
    node = term
    for step, i in enumerate(position):
        if isinstance(node, Var) or not 1 <= i <= len(node.args):
            raise InvalidPosition(f"no subterm of {term} at {position[: step + 1]}")
        node = node.args[i - 1]
    return node


def replace_at(term: Term, position: Position, replacement: Term) -> Term:
    if not position:
        return replacement
    i = position[0]
    if isinstance(term, Var) or not 1 <= i <= len(term.args):
        raise InvalidPosition(f"no subterm of {term} at position {position}")
    args = list(term.args)
    args[i - 1] = replace_at(args[i - 1], position[1:], replacement)
    return App(term.symbol, tuple(args))


def match(pattern: Term, subject: Term) -> dict[str, Term] | None:
    """Most general matcher with pattern variables only.

    Nonlinear patterns require consistent bindings; returns None on failure.
    """
    bindings: dict[str, Term] = {}
    stack: list[tuple[Term, Term]] = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            bound = bindings.get(p.name)
            if bound is None:
                bindings[p.name] = s
            elif bound != s:
                return None
        else:
            if not isinstance(s, App) or s.symbol != p.symbol or len(s.args) != len(p.args):
                return None
            stack.extend(zip(p.args, s.args))
    return bindings
