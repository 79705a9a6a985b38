"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Poly` maps exponent tuples to nonzero ``Fraction`` coefficients.
Terms are kept in a canonical order (ascending total degree, then ascending
exponent tuple) so that equal polynomials print identically.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence

MAX_EXPONENT = 10_000


class Infinity:
    """The order of the zero polynomial; compares above every number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("desing-infinity")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __truediv__(self, other):
        return self


INF = Infinity()


class PolyError(ValueError):
    """Raised for arity mismatches and malformed polynomial operations."""


class ParseError(ValueError):
    """Raised when polynomial text cannot be parsed."""


def _check_exponents(exps: tuple) -> tuple:
    for e in exps:
        if e < 0:
            raise PolyError(f"negative exponent in {exps}")
        if e > MAX_EXPONENT:
            raise PolyError(f"exponent {e} exceeds {MAX_EXPONENT}")
    return exps


def _term_key(exps: tuple):
    return (sum(exps), exps)


class Poly:
    """An immutable polynomial in ``arity`` variables over the rationals."""

    __slots__ = ("arity", "_terms", "_hash")

    def __init__(self, arity: int, terms: Mapping[tuple, object] | None = None):
        if arity < 0:
            raise PolyError("arity must be nonnegative")
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != arity:
                raise PolyError(f"exponent {exps} does not have length {arity}")
            c = Fraction(c)
            if c:
                _check_exponents(exps)
                clean[exps] = clean.get(exps, 0) + c
        self.arity = arity
        self._terms = {e: clean[e] for e in sorted(clean, key=_term_key) if clean[e]}
        self._hash = None

    @classmethod
    def _raw(cls, arity: int, terms: dict) -> "Poly":
        # trusted constructor: terms already nonzero with correct arity
        p = object.__new__(cls)
        p.arity = arity
        p._terms = {e: terms[e] for e in sorted(terms, key=_term_key)}
        p._hash = None
        return p

    # constructors

    @classmethod
    def zero(cls, arity: int) -> "Poly":
        return cls._raw(arity, {})

    @classmethod
    def const(cls, arity: int, c) -> "Poly":
        c = Fraction(c)
        return cls._raw(arity, {(0,) * arity: c} if c else {})

    @classmethod
    def var(cls, arity: int, index: int) -> "Poly":
        if not 0 <= index < arity:
            raise PolyError(f"variable index {index} out of range for arity {arity}")
        exps = [0] * arity
        exps[index] = 1
        return cls._raw(arity, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Poly":
        return cls(len(exps), {tuple(exps): c})

    # inspection

    @property
    def terms(self) -> dict:
        """Copy of the term map in canonical order."""
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * self.arity)

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    def total_degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=-1)

    def variables(self) -> set:
        """Indices of variables that occur in some term."""
        return {i for e in self._terms for i, k in enumerate(e) if k}

    def leading(self):
        """Largest term in graded order as ``(exps, coeff)``."""
        if not self._terms:
            raise PolyError("zero polynomial has no leading term")
        exps = next(reversed(self._terms))
        return exps, self._terms[exps]

    def first_coefficient(self) -> Fraction:
        """Coefficient of the first term in canonical (printing) order."""
        return next(iter(self._terms.values()))

    def homogeneous_part(self, degree: int) -> "Poly":
        return Poly._raw(self.arity, {e: c for e, c in self._terms.items() if sum(e) == degree})

    def linear_part(self) -> list:
        """Coefficients of the degree-one part, indexed by variable."""
        out = [Fraction(0)] * self.arity
        for e, c in self._terms.items():
            if sum(e) == 1:
                out[e.index(1)] = c
        return out

    # equality and hashing

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.arity == other.arity and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(self.arity, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.arity, tuple(self._terms.items())))
        return self._hash

    def sort_key(self):
        """Deterministic key for sorting lists of polynomials."""
        return (len(self._terms), tuple((_term_key(e), c) for e, c in self._terms.items()))

    # arithmetic

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.arity != self.arity:
                raise PolyError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.arity, other)
        raise TypeError(f"cannot combine Poly with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly._raw(self.arity, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.arity, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        out = {e: c for e, c in out.items() if c}
        for e in out:
            _check_exponents(e)
        return Poly._raw(self.arity, out)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly.zero(self.arity)
        return Poly._raw(self.arity, {e: k * c for e, k in self._terms.items()})

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise PolyError("exponent must be a nonnegative integer")
        result = Poly.const(self.arity, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def monic(self) -> "Poly":
        """Scale so the first canonical term has coefficient one."""
        if not self._terms:
            return self
        return self.scale(1 / self.first_coefficient())

    # calculus and substitution

    def partial(self, index: int) -> "Poly":
        if not 0 <= index < self.arity:
            raise PolyError(f"variable index {index} out of range")
        out = {}
        for e, c in self._terms.items():
            k = e[index]
            if k:
                ne = list(e)
                ne[index] = k - 1
                out[tuple(ne)] = c * k
        return Poly._raw(self.arity, out)

    def truncate(self, degree: int) -> "Poly":
        """Drop every term of total degree above ``degree``."""
        return Poly._raw(self.arity, {e: c for e, c in self._terms.items() if sum(e) <= degree})

    def mul_upto(self, other: "Poly", degree: int) -> "Poly":
        """Product with all terms of total degree above ``degree`` discarded."""
        # canonical order is graded, so each inner loop stops at the first term too large
        right = [(sum(e), e, c) for e, c in other._terms.items()]
        out: dict = {}
        for e1, c1 in self._terms.items():
            room = degree - sum(e1)
            if room < 0:
                break
            for d2, e2, c2 in right:
                if d2 > room:
                    break
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly._raw(self.arity, {e: c for e, c in out.items() if c})

    def substitute(self, images: Sequence["Poly"], upto: int | None = None) -> "Poly":
        """Compose: replace variable ``i`` by ``images[i]``.

        With ``upto`` the result is computed modulo terms of total degree
        above ``upto``.
        """
        if len(images) != self.arity:
            raise PolyError(f"need {self.arity} images, got {len(images)}")
        if not images:
            return Poly._raw(0, dict(self._terms))
        target = images[0].arity
        if any(im.arity != target for im in images):
            raise PolyError("images must share one arity")
        powers: list = [dict() for _ in images]

        if upto is None:
            mul = Poly.__mul__
        else:
            images = [im.truncate(upto) for im in images]

            def mul(a, b):
                return a.mul_upto(b, upto)

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = images[i] if k == 1 else mul(power(i, k - 1), images[i])
            return cache[k]

        result = Poly.zero(target)
        for e, c in self._terms.items():
            term = Poly.const(target, c)
            for i, k in enumerate(e):
                if k:
                    term = mul(term, power(i, k))
            result = result + term
        return result

    def set_zero(self, indices: Iterable[int]) -> "Poly":
        """Restrict to the coordinate subspace where the given variables vanish."""
        idx = set(indices)
        return Poly._raw(self.arity, {e: c for e, c in self._terms.items()
                                      if not any(e[i] for i in idx)})

    def evaluate(self, point: Sequence) -> Fraction:
        if len(point) != self.arity:
            raise PolyError("point has wrong length")
        total = Fraction(0)
        for e, c in self._terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v *= Fraction(x) ** k
            total += v
        return total

    def translate(self, point: Sequence) -> "Poly":
        """Shift variables so that ``point`` becomes the origin."""
        if len(point) != self.arity:
            raise PolyError(f"point must have {self.arity} coordinates")
        images = [Poly.var(self.arity, i) + Fraction(point[i]) for i in range(self.arity)]
        return self.substitute(images)

    # orders and division

    def ord(self):
        """Order of vanishing at the origin; ``INF`` for the zero polynomial."""
        if not self._terms:
            return INF
        return sum(next(iter(self._terms)))

    def ord_in(self, indices: Iterable[int]):
        """Minimal degree of a term in the given variables (order along their zero set)."""
        idx = list(indices)
        if not self._terms:
            return INF
        return min(sum(e[i] for i in idx) for e in self._terms)

    def divmod_exact(self, divisor: "Poly"):
        """Return the quotient if ``divisor`` divides exactly, else ``None``."""
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise PolyError("division by zero polynomial")
        le, lc = divisor.leading()
        rest = self
        quotient: dict = {}
        while rest._terms:
            e, c = rest.leading()
            if any(a < b for a, b in zip(e, le)):
                return None
            qe = tuple(a - b for a, b in zip(e, le))
            qc = c / lc
            quotient[qe] = quotient.get(qe, 0) + qc
            rest = rest - Poly._raw(self.arity, {qe: qc}) * divisor
        return Poly(self.arity, quotient)

    def __floordiv__(self, other):
        q = self.divmod_exact(other)
        if q is None:
            raise PolyError("inexact division")
        return q

    def ord_along(self, h: "Poly") -> int:
        """Largest ``m`` with ``h**m`` dividing this polynomial exactly."""
        h = self._coerce(h)
        if h.is_zero() or h.is_constant():
            raise PolyError("ord_along needs a nonzero non-unit polynomial")
        if self.is_zero():
            raise PolyError("ord_along of the zero polynomial is unbounded")
        m = 0
        rest = self
        while True:
            q = rest.divmod_exact(h)
            if q is None:
                return m
            rest = q
            m += 1

    def divide_power(self, h: "Poly", m: int) -> "Poly":
        return self // (h ** m) if m else self

    # text

    def format(self, names: Sequence[str]) -> str:
        """Canonical text using the given variable names."""
        if len(names) != self.arity:
            raise PolyError("wrong number of variable names")
        if not self._terms:
            return "0"
        parts = []
        for e, c in self._terms.items():
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            mag = abs(c)
            if not mono:
                body = _fmt_rational(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_fmt_rational(mag)}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            out += sign + body
        return out

    def __repr__(self):
        names = [f"x{i}" for i in range(self.arity)]
        return f"Poly({self.format(names)!r}, arity={self.arity})"


def _fmt_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def gcd_monomial_exponents(polys: Iterable[Poly]) -> tuple:
    """Componentwise minimum exponent over all terms of all polynomials."""
    exps = [e for p in polys for e in p._terms]
    if not exps:
        raise PolyError("no terms")
    return tuple(min(col) for col in zip(*exps))


def product(polys: Iterable[Poly], arity: int) -> Poly:
    return reduce(lambda a, b: a * b, polys, Poly.const(arity, 1))


# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r} at {pos} in {text!r}")
        num, ident, op = m.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif ident is not None:
            tokens.append(("id", ident))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.names = list(names)
        self.arity = len(self.names)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r} in {self.text!r}")

    def parse(self) -> Poly:
        if not self.tokens:
            raise ParseError("empty polynomial text")
        p = self.expr()
        if self.pos != len(self.tokens):
            raise ParseError(f"trailing input in {self.text!r}")
        return p

    def expr(self) -> Poly:
        kind, val = self.peek()
        sign = 1
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        total = self.term().scale(sign)
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                total = total + t if val == "+" else total - t
            else:
                return total

    def term(self) -> Poly:
        acc = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.power()
            elif kind == "op" and val == "/":
                self.take()
                d = self.power()
                if not d.is_constant() or d.is_zero():
                    raise ParseError(f"division only by nonzero constants in {self.text!r}")
                acc = acc.scale(1 / d.constant_term())
            elif kind in ("num", "id") or (kind == "op" and val == "("):
                acc = acc * self.power()  # implicit multiplication
            else:
                return acc

    def power(self) -> Poly:
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            k, n = self.take()
            if k != "num":
                raise ParseError(f"exponent must be a natural number in {self.text!r}")
            base = base ** n
        return base

    def atom(self) -> Poly:
        kind, val = self.take()
        if kind == "num":
            return Poly.const(self.arity, val)
        if kind == "id":
            if val not in self.names:
                raise ParseError(f"unknown variable {val!r}; declared {self.names}")
            return Poly.var(self.arity, self.names.index(val))
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "op" and val == "-":
            return -self.power()
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")


def parse_poly(text: str, names: Sequence[str]) -> Poly:
    """Parse polynomial text over the declared variable names.

    Powers use ``^`` (``**`` is accepted too), ``*`` may be omitted between
    factors, and rational literals are written ``3/2``.
    """
    return _Parser(text, names).parse()


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {text!r}") from exc
