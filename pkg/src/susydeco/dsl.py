"""Recursive-descent parser for polynomial superpotential expressions.

Grammar::

    expression := term (('+' | '-') term)*
    term       := factor (('*' | '/') factor)*
    factor     := '-' factor | '+' factor | power
    power      := primary ('^' unsigned-integer)?
    primary    := number | 'x' | '(' expression ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.
Division is only allowed by constant (x-free) operands.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .potential import Polynomial

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_UINT = re.compile(r"\d+")

MAX_POWER = 64


@dataclass(frozen=True)
class ExpressionSource:
    text: str
    origin: str = "flag"

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ParseError(ParseDiagnostic(0, "empty expression"), self)


@dataclass(frozen=True)
class ParseDiagnostic:
    position: int
    message: str


class ParseError(ValueError):
    def __init__(self, diagnostic: ParseDiagnostic, source: ExpressionSource | None = None):
        self.diagnostic = diagnostic
        self.source = source
        where = f"{source.origin}: " if source is not None else ""
        super().__init__(f"{where}offset {diagnostic.position}: {diagnostic.message}")

    @property
    def position(self) -> int:
        return self.diagnostic.position


class NonPolynomial(ParseError):
    """The expression is well formed but does not denote a polynomial in x."""


class _Parser:
    def __init__(self, src: ExpressionSource):
        self.src = src
        self.text = src.text
        self.pos = 0

    def fail(self, message: str, pos: int | None = None, cls=ParseError):
        pos = self.pos if pos is None else pos
        pos = min(max(pos, 0), max(len(self.text) - 1, 0))
        raise cls(ParseDiagnostic(pos, message), self.src)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Polynomial:
        result = self.expression()
        if self.peek():
            self.fail(f"unexpected {self.peek()!r}")
        return result

    def expression(self) -> Polynomial:
        acc = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Polynomial:
        acc = self.factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            self.skip_ws()
            start = self.pos
            rhs = self.factor()
            if op == "*":
                acc = acc * rhs
                continue
            if rhs.degree > 0:
                self.fail("division by an x-dependent factor", start, NonPolynomial)
            if rhs.is_zero():
                self.fail("division by zero", start)
            acc = acc * (1.0 / rhs.coefficients[0])
        return acc

    def factor(self) -> Polynomial:
        c = self.peek()
        if c == "-":
            self.pos += 1
            return -self.factor()
        if c == "+":
            self.pos += 1
            return self.factor()
        return self.power()

    def power(self) -> Polynomial:
        base = self.primary()
        if self.peek() != "^":
            return base
        self.pos += 1
        self.skip_ws()
        m = _UINT.match(self.text, self.pos)
        if not m:
            self.fail("expected an unsigned integer exponent after '^'")
        n = int(m.group())
        if n > MAX_POWER:
            self.fail(f"exponent {n} exceeds {MAX_POWER}")
        self.pos = m.end()
        out = Polynomial([1.0])
        for _ in range(n):
            out = out * base
        return out

    def primary(self) -> Polynomial:
        c = self.peek()
        if not c:
            self.fail("unexpected end of expression", len(self.text))
        if c == "(":
            open_at = self.pos
            self.pos += 1
            inner = self.expression()
            if self.peek() != ")":
                self.fail(f"unclosed '(' opened at offset {open_at}")
            self.pos += 1
            return inner
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Polynomial([float(m.group())])
        m = _IDENT.match(self.text, self.pos)
        if m:
            name = m.group()
            if name == "x":
                self.pos = m.end()
                return Polynomial([0.0, 1.0])
            self.fail(f"unsupported symbol {name!r}; only polynomials in x are accepted",
                      m.start(), NonPolynomial)
        self.fail(f"unexpected {c!r}")


def parse_superpotential(src: ExpressionSource | str) -> Polynomial:
    if isinstance(src, str):
        src = ExpressionSource(src)
    return _Parser(src).parse()


def _fmt(v: float) -> str:
    return format(v, ".17g")


def format_polynomial(p: Polynomial) -> str:
    """Highest degree first; re-parses to the identical coefficients."""
    parts: list[str] = []
    for k in range(p.degree, -1, -1):
        c = p.coefficients[k]
        if c == 0.0:
            continue
        mag = _fmt(abs(c))
        mono = mag if k == 0 else f"{mag}*x" if k == 1 else f"{mag}*x^{k}"
        if not parts:
            parts.append(mono if c > 0 else f"-{mono}")
        else:
            parts.append(f"+ {mono}" if c > 0 else f"- {mono}")
    return " ".join(parts) if parts else "0"
