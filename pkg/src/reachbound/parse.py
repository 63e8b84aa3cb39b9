"""Parser for expanded polynomial text such as ``"x0^2 + x1^2 - 1; x0 - 2.5*x1"``.

Grammar (whitespace ignored)::

    tuple  := poly (';' poly)*
    poly   := sign? term (sign term)*
    term   := factor ('*' factor)*
    factor := NUMBER | 'x' INT ('^' INT)?

Parentheses and nesting are deliberately unsupported.
"""

from __future__ import annotations

import re
from typing import Sequence

from .errors import DegreeOverflowError, PolySyntaxError
from .poly import PolyTuple

_NUMBER = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")
_INT = re.compile(r"\d+")


class _Scanner:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def skip(self) -> None:
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def error(self, msg: str):
        raise PolySyntaxError(msg, self.pos, self.src)

    def take(self, pattern: re.Pattern, what: str) -> str:
        self.skip()
        m = pattern.match(self.src, self.pos)
        if not m:
            found = repr(self.src[self.pos]) if self.pos < len(self.src) else "end of input"
            self.error(f"expected {what}, found {found}")
        self.pos = m.end()
        return m.group()


def _term(sc: _Scanner) -> tuple[float, dict[int, int]]:
    coef = 1.0
    powers: dict[int, int] = {}
    while True:
        ch = sc.peek()
        if ch == "x":
            sc.pos += 1
            if not sc.src[sc.pos : sc.pos + 1].isdigit():
                sc.error("expected variable index after 'x'")
            k = int(sc.take(_INT, "variable index"))
            e = 1
            if sc.peek() == "^":
                sc.pos += 1
                e = int(sc.take(_INT, "integer exponent"))
            powers[k] = powers.get(k, 0) + e
        elif ch.isdigit() or ch == ".":
            coef *= float(sc.take(_NUMBER, "number"))
        else:
            sc.error("expected number or variable")
        if sc.peek() != "*":
            return coef, powers
        sc.pos += 1


def _poly(sc: _Scanner) -> list[tuple[float, dict[int, int]]]:
    terms = []
    sign = 1.0
    if sc.peek() in "+-" and sc.peek():
        sign = -1.0 if sc.peek() == "-" else 1.0
        sc.pos += 1
    while True:
        c, p = _term(sc)
        terms.append((sign * c, p))
        ch = sc.peek()
        if ch in ("+", "-"):
            sign = -1.0 if ch == "-" else 1.0
            sc.pos += 1
        elif ch in (";", ""):
            return terms
        else:
            sc.error("expected '+', '-', '*', ';' or end of input")


def parse_poly_text(
    src: str, n: int | None = None, degrees: Sequence[int] | None = None
) -> PolyTuple:
    """Parse semicolon-separated expanded polynomials in variables x0..x{n-1}.

    When ``n`` is omitted it is one more than the largest variable index;
    when ``degrees`` is omitted each polynomial gets its total degree
    (at least 1). A monomial exceeding a declared degree raises
    :class:`DegreeOverflowError`.
    """
    sc = _Scanner(src)
    raw = []
    while True:
        start = sc.pos
        raw.append((start, _poly(sc)))
        if sc.peek() == ";":
            sc.pos += 1
            continue
        break
    max_var = max((k for _, ts in raw for _, p in ts for k in p), default=-1)
    if n is None:
        n = max(max_var + 1, 1)
    elif max_var >= n:
        raise PolySyntaxError(f"variable x{max_var} out of range for n={n}", 0, src)
    polys = []
    tot_degrees = []
    for _, ts in raw:
        acc: dict[tuple, float] = {}
        top = 0
        for c, p in ts:
            e = tuple(p.get(k, 0) for k in range(n))
            acc[e] = acc.get(e, 0.0) + c
            if c != 0.0:
                top = max(top, sum(e))
        polys.append(acc)
        tot_degrees.append(top)
    if degrees is None:
        degrees = [max(d, 1) for d in tot_degrees]
    degrees = list(degrees)
    if len(degrees) != len(polys):
        raise PolySyntaxError(
            f"{len(polys)} polynomials but {len(degrees)} declared degrees", len(src), src
        )
    for i, (d, top) in enumerate(zip(degrees, tot_degrees)):
        if top > d:
            raise DegreeOverflowError(i, top, d)
    return PolyTuple.from_terms(n, degrees, polys)
