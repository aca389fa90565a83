"""Reader and writer for rule files in WST block syntax.

The probabilistic extension writes a rule as

    l -> w1 : r1 || w2 : r2 || ... || wn : rn

with positive integer weights; alternative j fires with probability wj over
the weight total. A rule without weights, `l -> r`, abbreviates `l -> 1 : r`.
Comments run from `;` to end of line. Symbol arities are inferred from use,
first use wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .multidist import FiniteDistribution
from .rewriting import PTRS, ProbRule
from .terms import App, Signature, Term, Var, variables

_DELIMS = set(" \t\r\n(),:;|")


class WstError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self) -> str:
        return f"line {self.line}, column {self.col}: {self.message}"


class ParseError(WstError):
    pass


class ElaborationError(WstError):
    """A parsed rule that cannot be turned into a probabilistic rewrite rule."""

    def __init__(self, message: str, line: int, col: int, reason: str):
        super().__init__(message, line, col)
        self.reason = reason


@dataclass(frozen=True)
class Token:
    kind: str  # LPAREN RPAREN COMMA COLON ARROW BAR IDENT
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def push(kind: str, lexeme: str) -> None:
        tokens.append(Token(kind, lexeme, line, col))

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "(":
            push("LPAREN", ch)
        elif ch == ")":
            push("RPAREN", ch)
        elif ch == ",":
            push("COMMA", ch)
        elif ch == ":":
            push("COLON", ch)
        elif ch == "|":
            if i + 1 < n and text[i + 1] == "|":
                push("BAR", "||")
                i += 2
                col += 2
                continue
            raise ParseError("stray '|' (alternatives are separated by '||')", line, col)
        elif ch == "-" and i + 1 < n and text[i + 1] == ">":
            push("ARROW", "->")
            i += 2
            col += 2
            continue
        else:
            j = i
            while j < n and text[j] not in _DELIMS:
                if text[j] == "-" and j + 1 < n and text[j + 1] == ">":
                    break
                j += 1
            if j == i:
                raise ParseError(f"unexpected character {ch!r}", line, col)
            push("IDENT", text[i:j])
            col += j - i
            i = j
            continue
        i += 1
        col += 1
    return tokens


@dataclass(frozen=True)
class RawRule:
    lhs: Term
    alternatives: tuple[tuple[int, Term], ...]
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)


@dataclass(frozen=True)
class ProblemFile:
    variables: tuple[str, ...]
    rules: tuple[RawRule, ...]
    signature: Signature


class _Cursor:
    def __init__(self, tokens: list[Token], end_line: int):
        self.tokens = tokens
        self.pos = 0
        self.end_line = end_line

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, expected: str | None = None) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.end_line, 1)
        if expected is not None and tok.kind != expected:
            raise ParseError(f"expected {expected}, found {tok.text!r}", tok.line, tok.col)
        self.pos += 1
        return tok


class _TermReader:
    """Parses terms while inferring arities, first use winning."""

    def __init__(self, variables: set[str]):
        self.variables = variables
        self.arities: dict[str, tuple[int, Token]] = {}

    def read(self, cur: _Cursor) -> Term:
        head = cur.next("IDENT")
        nxt = cur.peek()
        if nxt is not None and nxt.kind == "LPAREN":
            if head.text in self.variables:
                raise ParseError(f"variable {head.text!r} used with arguments", head.line, head.col)
            cur.next("LPAREN")
            args: list[Term] = []
            if cur.peek() is not None and cur.peek().kind != "RPAREN":
                args.append(self.read(cur))
                while cur.peek() is not None and cur.peek().kind == "COMMA":
                    cur.next("COMMA")
                    args.append(self.read(cur))
            cur.next("RPAREN")
            self._note(head, len(args))
            return App(head.text, tuple(args))
        if head.text in self.variables:
            return Var(head.text)
        self._note(head, 0)
        return App(head.text, ())

    def _note(self, tok: Token, arity: int) -> None:
        seen = self.arities.get(tok.text)
        if seen is None:
            self.arities[tok.text] = (arity, tok)
        elif seen[0] != arity:
            raise ParseError(
                f"symbol {tok.text!r} used with {arity} arguments here but with "
                f"{seen[0]} at line {seen[1].line}, column {seen[1].col}",
                tok.line,
                tok.col,
            )


def _split_blocks(tokens: list[Token], end_line: int) -> list[tuple[Token, list[Token]]]:
    blocks: list[tuple[Token, list[Token]]] = []
    i = 0
    while i < len(tokens):
        if tokens[i].kind != "LPAREN":
            raise ParseError(f"expected '(', found {tokens[i].text!r}", tokens[i].line, tokens[i].col)
        if i + 1 >= len(tokens) or tokens[i + 1].kind != "IDENT":
            tok = tokens[i + 1] if i + 1 < len(tokens) else tokens[i]
            raise ParseError("expected a block name after '('", tok.line, tok.col)
        name = tokens[i + 1]
        depth = 1
        j = i + 2
        while j < len(tokens) and depth > 0:
            if tokens[j].kind == "LPAREN":
                depth += 1
            elif tokens[j].kind == "RPAREN":
                depth -= 1
            j += 1
        if depth != 0:
            raise ParseError(f"unclosed block {name.text!r}", name.line, name.col)
        blocks.append((name, tokens[i + 2 : j - 1]))
        i = j
    return blocks


def parse_problem(text: str) -> ProblemFile:
    tokens = tokenize(text)
    end_line = text.count("\n") + 1
    if not tokens:
        raise ParseError("empty problem file", 1, 1)
    blocks = _split_blocks(tokens, end_line)

    variables: list[str] = []
    for name, body in blocks:
        if name.text == "VAR":
            for tok in body:
                if tok.kind != "IDENT":
                    raise ParseError(f"unexpected {tok.text!r} in VAR block", tok.line, tok.col)
                if tok.text not in variables:
                    variables.append(tok.text)

    reader = _TermReader(set(variables))
    rules: list[RawRule] = []
    for name, body in blocks:
        if name.text == "VAR":
            continue
        if name.text != "RULES":
            raise ParseError(f"unknown block {name.text!r}", name.line, name.col)
        cur = _Cursor(body, end_line)
        while cur.peek() is not None:
            rules.append(_read_rule(cur, reader))
    if not rules:
        raise ParseError("no rules found", end_line, 1)
    return ProblemFile(tuple(variables), tuple(rules), Signature({s: a for s, (a, _) in reader.arities.items()}))


def _read_rule(cur: _Cursor, reader: _TermReader) -> RawRule:
    start = cur.peek()
    lhs = reader.read(cur)
    cur.next("ARROW")
    alternatives: list[tuple[int, Term]] = []
    alternatives.append(_read_alternative(cur, reader))
    while cur.peek() is not None and cur.peek().kind == "BAR":
        cur.next("BAR")
        alternatives.append(_read_alternative(cur, reader))
    return RawRule(lhs, tuple(alternatives), start.line, start.col)


def _read_alternative(cur: _Cursor, reader: _TermReader) -> tuple[int, Term]:
    tok = cur.peek()
    if tok is not None and tok.kind == "IDENT" and tok.text.isdigit():
        after = cur.tokens[cur.pos + 1] if cur.pos + 1 < len(cur.tokens) else None
        if after is not None and after.kind == "COLON":
            cur.next("IDENT")
            cur.next("COLON")
            weight = int(tok.text)
            if weight <= 0:
                raise ParseError("weights must be positive integers", tok.line, tok.col)
            return weight, reader.read(cur)
    return 1, reader.read(cur)


def render_problem(problem: ProblemFile) -> str:
    """Canonical text form; parse(render(parse(t))) == parse(t)."""
    lines: list[str] = []
    if problem.variables:
        lines.append("(VAR " + " ".join(problem.variables) + ")")
    lines.append("(RULES")
    for rule in problem.rules:
        if len(rule.alternatives) == 1 and rule.alternatives[0][0] == 1:
            lines.append(f"  {rule.lhs} -> {rule.alternatives[0][1]}")
        else:
            alts = " || ".join(f"{w} : {r}" for w, r in rule.alternatives)
            lines.append(f"  {rule.lhs} -> {alts}")
    lines.append(")")
    return "\n".join(lines) + "\n"


def elaborate(problem: ProblemFile) -> PTRS:
    """Turn raw weighted rules into probability-carrying rewrite rules.

    Duplicate alternatives merge by summing their weights.
    """
    rules: list[ProbRule] = []
    for raw in problem.rules:
        if isinstance(raw.lhs, Var):
            raise ElaborationError(
                f"left-hand side is the bare variable {raw.lhs}", raw.line, raw.col, "variable-lhs"
            )
        if not raw.alternatives:
            raise ElaborationError("rule has no alternatives", raw.line, raw.col, "empty-rule")
        merged: dict[Term, int] = {}
        for weight, term in raw.alternatives:
            merged[term] = merged.get(term, 0) + weight
        total = sum(merged.values())
        lhs_vars = variables(raw.lhs)
        for term in merged:
            extra = variables(term) - lhs_vars
            if extra:
                name = sorted(extra)[0]
                raise ElaborationError(
                    f"right-hand side uses variable {name!r} not bound on the left",
                    raw.line,
                    raw.col,
                    "free-variable-on-rhs",
                )
        dist = FiniteDistribution({term: Fraction(w, total) for term, w in merged.items()})
        rules.append(ProbRule(raw.lhs, dist))
    return PTRS(problem.signature, tuple(rules))


def load_problem(path: str) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_problem(handle.read())


def load_system(path: str) -> PTRS:
    return elaborate(load_problem(path))


def parse_term_text(text: str, variables: set[str], signature: Signature | None = None) -> Term:
    """Parse a standalone term, e.g. a start object given on a command line.

    Symbols already known from `signature` must keep their arity; unseen
    symbols are accepted with the arity they are used at.
    """
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty term", 1, 1)
    reader = _TermReader(set(variables))
    if signature is not None:
        for sym, arity in signature.symbols().items():
            reader.arities[sym] = (arity, Token("IDENT", sym, 0, 0))
    cur = _Cursor(tokens, 1)
    term = reader.read(cur)
    leftover = cur.peek()
    if leftover is not None:
        raise ParseError(f"unexpected trailing {leftover.text!r}", leftover.line, leftover.col)
    return term
