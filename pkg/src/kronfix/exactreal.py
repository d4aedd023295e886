"""Exact arithmetic on rational linear combinations of square roots.

An :class:`ExactReal` is ``q_0 + sum_i q_i * sqrt(d_i)`` with rational
``q_i`` and distinct square-free integers ``d_i > 1``.  Square roots of
distinct square-free integers are linearly independent over the rationals,
so the canonical form is unique and equality is structural.  Order
relations, floors and float conversion are certified by interval
enclosures built from integer square roots, refined until they decide.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from math import gcd, isqrt
from numbers import Rational
from typing import Iterable, Mapping, Sequence

from .errors import ParseError

__all__ = [
    "ExactReal",
    "add",
    "scale",
    "floor",
    "floor_abs",
    "fractional_part",
    "is_independent_over_q",
    "to_float",
    "parse",
    "rational_rank",
    "squarefree_decomposition",
]

_START_BITS = 64


def squarefree_decomposition(d: int) -> tuple[int, int]:
    """Return ``(k, m)`` with ``d == k*k*m`` and ``m`` square-free."""
    if d < 0:
        raise ValueError(f"square root of negative integer {d}")
    if d == 0:
        return 0, 1
    k, m = 1, d
    f = 2
    while f * f <= m:
        while m % (f * f) == 0:
            m //= f * f
            k *= f
        f += 1 if f == 2 else 2
    return k, m


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as a rational coefficient")


class ExactReal:
    """Immutable number ``q_0 + sum q_d * sqrt(d)`` in canonical form."""

    __slots__ = ("_q0", "_surds", "_hash")

    def __init__(self, rational_part=0, surd_coeffs: Mapping[int, object] | None = None):
        q0 = _as_fraction(rational_part)
        acc: dict[int, Fraction] = {}
        for d, c in (surd_coeffs or {}).items():
            c = _as_fraction(c)
            if int(d) != d:
                raise ValueError(f"radicand must be an integer, got {d!r}")
            k, m = squarefree_decomposition(int(d))
            if m == 1:
                q0 += c * k
            else:
                acc[m] = acc.get(m, Fraction(0)) + c * k
        self._q0 = q0
        self._surds = tuple(sorted((d, c) for d, c in acc.items() if c != 0))
        self._hash = None

    @classmethod
    def _raw(cls, q0: Fraction, surds: dict[int, Fraction]) -> "ExactReal":
        # caller guarantees square-free keys
        obj = cls.__new__(cls)
        obj._q0 = q0
        obj._surds = tuple(sorted((d, c) for d, c in surds.items() if c != 0))
        obj._hash = None
        return obj

    @classmethod
    def sqrt(cls, d) -> "ExactReal":
        """``sqrt(d)`` for a nonnegative rational ``d``."""
        d = _as_fraction(d)
        if d < 0:
            raise ValueError(f"square root of negative number {d}")
        # sqrt(p/q) = sqrt(p*q)/q
        return cls(0, {d.numerator * d.denominator: Fraction(1, d.denominator)})

    @classmethod
    def coerce(cls, x) -> "ExactReal":
        if isinstance(x, ExactReal):
            return x
        if isinstance(x, str):
            return parse(x)
        return cls(x)

    @property
    def rational_part(self) -> Fraction:
        return self._q0

    @property
    def surd_coeffs(self) -> dict[int, Fraction]:
        return dict(self._surds)

    def is_rational(self) -> bool:
        return not self._surds

    def is_integer(self) -> bool:
        return not self._surds and self._q0.denominator == 1

    # ring operations

    def __add__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._surds)
        for d, c in other._surds:
            acc[d] = acc.get(d, Fraction(0)) + c
        return ExactReal._raw(self._q0 + other._q0, acc)

    __radd__ = __add__

    def __neg__(self):
        return ExactReal._raw(-self._q0, {d: -c for d, c in self._surds})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, c) -> "ExactReal":
        c = _as_fraction(c)
        return ExactReal._raw(self._q0 * c, {d: v * c for d, v in self._surds})

    def __mul__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        if other.is_rational():
            return self.scale(other._q0)
        if self.is_rational():
            return other.scale(self._q0)
        terms_a = [(1, self._q0)] + list(self._surds)
        terms_b = [(1, other._q0)] + list(other._surds)
        q0 = Fraction(0)
        acc: dict[int, Fraction] = {}
        for da, ca in terms_a:
            for db, cb in terms_b:
                c = ca * cb
                if c == 0:
                    continue
                # sqrt(da*db) = g*sqrt((da/g)*(db/g)); the cofactors are coprime and square-free
                g = gcd(da, db)
                m = (da // g) * (db // g)
                if m == 1:
                    q0 += c * g
                else:
                    acc[m] = acc.get(m, Fraction(0)) + c * g
        return ExactReal._raw(q0, acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        if not other.is_rational():
            raise TypeError("division by an irrational ExactReal is not supported")
        if other._q0 == 0:
            raise ZeroDivisionError("division by zero")
        return self.scale(1 / other._q0)

    def __rtruediv__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    # comparison

    def __eq__(self, other):
        other = _maybe_coerce(other)
        if other is NotImplemented:
            return other
        return self._q0 == other._q0 and self._surds == other._surds

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._q0) if not self._surds else hash((self._q0, self._surds))
        return self._hash

    def sign(self) -> int:
        if not self._surds:
            return (self._q0 > 0) - (self._q0 < 0)
        bits = _START_BITS
        while True:
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2

    def _cmp(self, other) -> int:
        other = _maybe_coerce(other)
        if other is NotImplemented:
            raise TypeError
        return (self - other).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return bool(self._q0) or bool(self._surds)

    # certified evaluation

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational bounds ``lo <= self <= hi`` of width ``sum|q_d| / 2**bits``.

        For irrational values both inequalities are strict.
        """
        lo = hi = self._q0
        scale = 1 << bits
        for d, c in self._surds:
            s = isqrt(d << (2 * bits))
            a, b = Fraction(s, scale), Fraction(s + 1, scale)
            if c > 0:
                lo += c * a
                hi += c * b
            else:
                lo += c * b
                hi += c * a
        return lo, hi

    def floor(self) -> int:
        if not self._surds:
            return math.floor(self._q0)
        bits = _START_BITS
        while True:
            lo, hi = self.enclosure(bits)
            fl = math.floor(lo)
            # x is irrational, so lo < x < hi; hi == fl + 1 still pins the floor
            if hi <= fl + 1:
                return fl
            bits *= 2

    def floor_abs(self) -> int:
        """``[|x|]``, as used when shifting coefficients into the positive cone."""
        return abs(self).floor()

    def fractional_part(self) -> "ExactReal":
        r = self - self.floor()
        if r.sign() < 0 or not r < 1:
            raise ArithmeticError(f"fractional part {r} escaped [0, 1)")
        return r

    def to_float(self, abs_err: float = 1e-15) -> float:
        """Float within ``abs_err`` of the exact value (plus final rounding, at most half an ulp)."""
        if abs_err <= 0:
            raise ValueError("abs_err must be positive")
        if not self._surds:
            return float(self._q0)
        total = sum(abs(c) for _, c in self._surds)
        target = Fraction(abs_err) / 2
        bits = max(8, math.ceil(math.log2(float(total / target)) + 2) if total > target else 8)
        lo, hi = self.enclosure(bits)
        while hi - lo > 2 * target:
            bits *= 2
            lo, hi = self.enclosure(bits)
        return float((lo + hi) / 2)

    def __float__(self):
        return self.to_float(1e-18)

    def coordinates(self, keys: Sequence[int]) -> list[Fraction]:
        """Coordinates in the basis ``(1, sqrt(keys[0]), sqrt(keys[1]), ...)``."""
        coeffs = dict(self._surds)
        missing = set(coeffs) - set(keys)
        if missing:
            raise KeyError(f"basis lacks sqrt({min(missing)})")
        return [self._q0] + [coeffs.get(d, Fraction(0)) for d in keys]

    def __repr__(self):
        return f"ExactReal({str(self)!r})"

    def __str__(self):
        parts = []
        if self._q0 != 0 or not self._surds:
            parts.append(str(self._q0))
        for d, c in self._surds:
            mag = abs(c)
            term = f"sqrt({d})" if mag == 1 else f"{mag}*sqrt({d})"
            if not parts:
                parts.append(term if c > 0 else f"-{term}")
            else:
                parts.append(("+ " if c > 0 else "- ") + term)
        return " ".join(parts)


def _maybe_coerce(x):
    if isinstance(x, ExactReal):
        return x
    if isinstance(x, (int, Fraction, Rational)) and not isinstance(x, bool):
        return ExactReal(x)
    if isinstance(x, float):
        return ExactReal(x)
    return NotImplemented


# functional surface


def add(x: ExactReal, y: ExactReal) -> ExactReal:
    return ExactReal.coerce(x) + ExactReal.coerce(y)


def scale(x: ExactReal, c) -> ExactReal:
    return ExactReal.coerce(x).scale(c)


def floor(x) -> int:
    return ExactReal.coerce(x).floor()


def floor_abs(x) -> int:
    return ExactReal.coerce(x).floor_abs()


def fractional_part(x) -> ExactReal:
    return ExactReal.coerce(x).fractional_part()


def to_float(x, abs_err: float = 1e-15) -> float:
    return ExactReal.coerce(x).to_float(abs_err)


def rational_rank(rows: Iterable[Sequence]) -> int:
    """Rank of a rational matrix by fraction-exact Gaussian elimination."""
    m = [[_as_fraction(v) for v in row] for row in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def is_independent_over_q(xs: Sequence, include_one: bool = True) -> bool:
    """True iff ``xs`` (together with 1 when ``include_one``) has no nontrivial integer relation.

    Integer and rational relations coincide, so this is a rank test on the
    coordinates of each element in the basis ``{1} U {sqrt(d)}``.
    """
    elems = [ExactReal.coerce(x) for x in xs]
    if include_one:
        elems = [ExactReal(1)] + elems
    if not elems:
        return True
    keys = sorted({d for x in elems for d in x.surd_coeffs})
    rows = [x.coordinates(keys) for x in elems]
    return rational_rank(rows) == len(elems)


# literal syntax: rationals, decimals, sqrt(...), + - * / and parentheses

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(sqrt)|(.))")


def _tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        num, name, sym = m.groups()
        tok = num or name or sym
        if sym is not None and sym not in "+-*/()":
            raise ParseError(f"unexpected character {sym!r} at offset {m.start(3)} in {text!r}")
        out.append(tok)
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            want = expected or "a token"
            raise ParseError(f"expected {want} in {self.text!r}, got {tok!r}")
        self.i += 1
        return tok

    def parse(self) -> ExactReal:
        if not self.toks:
            raise ParseError("empty expression")
        value = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing input {self.peek()!r} in {self.text!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op == "*":
                value = value * rhs
            else:
                if not rhs.is_rational():
                    raise ParseError(f"division by irrational {rhs} in {self.text!r}")
                if rhs == 0:
                    raise ParseError(f"division by zero in {self.text!r}")
                value = value / rhs
        return value

    def unary(self):
        tok = self.peek()
        if tok == "-":
            self.take()
            return -self.unary()
        if tok == "+":
            self.take()
            return self.unary()
        return self.atom()

    def atom(self):
        tok = self.take()
        if tok == "(":
            value = self.expr()
            self.take(")")
            return value
        if tok == "sqrt":
            self.take("(")
            arg = self.expr()
            self.take(")")
            if not arg.is_rational():
                raise ParseError(f"nested radical sqrt({arg}) is not representable")
            if arg.rational_part < 0:
                raise ParseError(f"square root of negative number {arg}")
            return ExactReal.sqrt(arg.rational_part)
        if tok[0].isdigit() or tok[0] == ".":
            return ExactReal(Fraction(tok))
        raise ParseError(f"unexpected token {tok!r} in {self.text!r}")


def parse(text: str) -> ExactReal:
    """Parse a literal such as ``"1/6 + 2/3*sqrt(2) - sqrt(3)"``.

    Radicands that are not square-free are normalized (``sqrt(8)`` becomes
    ``2*sqrt(2)``).  Decimal literals are read as exact rationals.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a string literal, got {type(text).__name__}")
    return _Parser(text).parse()
