"""Exact arithmetic in the cubic field Q(eta).

``eta`` is the dominant root of ``t**3 - 11*t**2 + 7*t - 1`` (about 10.331851),
the Perron-Frobenius eigenvalue of the integer matrix ``P`` below.  Every
element is stored as ``c0 + c1*eta + c2*eta**2`` with rational coefficients.
Equality is decided on coefficients; order is decided by evaluating the
element on a dyadic bracket of ``eta`` that is bisected until the sign is
certain.  Since the minimal polynomial is irreducible, a non-zero element
never vanishes at ``eta`` and the refinement always terminates.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational as _RationalABC

__all__ = [
    "FieldElement",
    "IsolatingInterval",
    "ETA",
    "P",
    "Q",
    "SystemConstants",
    "constants",
    "compare",
    "eta_interval",
    "mat_vec",
    "min_poly",
    "to_decimal",
]

# t^3 = 11 t^2 - 7 t + 1
_RED = (Fraction(1), Fraction(-7), Fraction(11))


def min_poly(t):
    """Evaluate the minimal polynomial of eta at ``t``."""
    return t * t * t - 11 * t * t + 7 * t - 1


@dataclass(frozen=True)
class IsolatingInterval:
    lo: Fraction
    hi: Fraction

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


class _EtaBracket:
    """Monotone cache of a dyadic bracket ``(L/2**k, (L+1)/2**k)`` of eta.

    The bracket only ever shrinks, so readers holding an older snapshot are
    still correct.
    """

    def __init__(self):
        # [10, 11]: min_poly(10) = -31 < 0 < 76 = min_poly(11)
        self._state = (0, 10)
        self._lock = threading.Lock()

    def snapshot(self):
        return self._state

    def refine(self, bits: int):
        """Ensure the bracket has at least ``bits`` fractional bits."""
        with self._lock:
            k, L = self._state
            while k < bits:
                # sign of min_poly at (2L+1)/2^(k+1), scaled by 8^(k+1)
                m = 2 * L + 1
                s = 1 << (k + 1)
                val = m ** 3 - 11 * m * m * s + 7 * m * s * s - s ** 3
                k += 1
                # min_poly is increasing through eta (simple root, p(10)<0)
                L = m if val < 0 else 2 * L
                self._state = (k, L)
            return self._state


_BRACKET = _EtaBracket()


def eta_interval(bits: int = 0) -> IsolatingInterval:
    """Current isolating interval for eta, refined to ``bits`` bits if needed."""
    k, L = _BRACKET.refine(bits) if bits else _BRACKET.snapshot()
    return IsolatingInterval(Fraction(L, 1 << k), Fraction(L + 1, 1 << k))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, _RationalABC)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class FieldElement:
    """Immutable element ``c0 + c1*eta + c2*eta**2`` of Q(eta)."""

    __slots__ = ("c0", "c1", "c2", "_hash")

    def __init__(self, c0=0, c1=0, c2=0):
        object.__setattr__(self, "c0", _as_fraction(c0))
        object.__setattr__(self, "c1", _as_fraction(c1))
        object.__setattr__(self, "c2", _as_fraction(c2))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @classmethod
    def coerce(cls, x) -> "FieldElement":
        if isinstance(x, FieldElement):
            return x
        return cls(_as_fraction(x))

    @property
    def coefficients(self):
        return (self.c0, self.c1, self.c2)

    def is_rational(self) -> bool:
        return self.c1 == 0 and self.c2 == 0

    # -- ring operations -------------------------------------------------

    def __add__(self, other):
        try:
            o = FieldElement.coerce(other)
        except TypeError:
            return NotImplemented
        return FieldElement(self.c0 + o.c0, self.c1 + o.c1, self.c2 + o.c2)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(-self.c0, -self.c1, -self.c2)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            o = FieldElement.coerce(other)
        except TypeError:
            return NotImplemented
        return FieldElement(self.c0 - o.c0, self.c1 - o.c1, self.c2 - o.c2)

    def __rsub__(self, other):
        try:
            o = FieldElement.coerce(other)
        except TypeError:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.c0 * other, self.c1 * other, self.c2 * other)
        if not isinstance(other, FieldElement):
            try:
                other = FieldElement.coerce(other)
            except TypeError:
                return NotImplemented
        a0, a1, a2 = self.coefficients
        b0, b1, b2 = other.coefficients
        # degree-4 product, then fold eta^4 and eta^3 back down
        p = [a0 * b0, a0 * b1 + a1 * b0, a0 * b2 + a1 * b1 + a2 * b0,
             a1 * b2 + a2 * b1, a2 * b2]
        for deg in (4, 3):
            c = p[deg]
            if c:
                p[deg - 3] += c * _RED[0]
                p[deg - 2] += c * _RED[1]
                p[deg - 1] += c * _RED[2]
        return FieldElement(p[0], p[1], p[2])

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self == 0:
            raise ZeroDivisionError("inverse of zero in Q(eta)")
        # columns of the multiplication-by-self matrix are self*1, self*eta, self*eta^2
        cols = [self, self * ETA, self * ETA * ETA]
        m = [[cols[j].coefficients[i] for j in range(3)] + [Fraction(int(i == 0))]
             for i in range(3)]
        x = _solve3(m)
        return FieldElement(*x)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            q = Fraction(other)
            return FieldElement(self.c0 / q, self.c1 / q, self.c2 / q)
        try:
            o = FieldElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        try:
            o = FieldElement.coerce(other)
        except TypeError:
            return NotImplemented
        return o * self.inverse()

    # -- equality and order ----------------------------------------------

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.coefficients == other.coefficients
        try:
            o = _as_fraction(other)
        except TypeError:
            return NotImplemented
        return self.c1 == 0 and self.c2 == 0 and self.c0 == o

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.c0) if self.is_rational() else hash(self.coefficients)
            object.__setattr__(self, "_hash", h)
        return h

    def sign(self) -> int:
        return _sign(self.c0, self.c1, self.c2)

    def _cmp(self, other) -> int:
        try:
            o = FieldElement.coerce(other)
        except TypeError:
            return NotImplemented
        return (self - o).sign()

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return not (self.c0 == 0 and self.c1 == 0 and self.c2 == 0)

    # -- numeric views ---------------------------------------------------

    def enclosure(self, bits: int = 64):
        """Rational interval ``(lo, hi)`` containing the real value."""
        k, L = _BRACKET.refine(bits)
        return _enclose(self.c0, self.c1, self.c2, k, L)

    def __float__(self):
        lo, hi = self.enclosure(80)
        return float((lo + hi) / 2)

    def to_decimal(self, digits: int = 6, rounding: str = "half_away") -> str:
        return to_decimal(self, digits, rounding)

    def __repr__(self):
        terms = []
        for c, s in ((self.c2, "eta^2"), (self.c1, "eta"), (self.c0, "")):
            if c:
                terms.append(f"{c}*{s}" if s else f"{c}")
        body = " + ".join(terms) if terms else "0"
        return f"FieldElement({body})"

    def __str__(self):
        return self.to_decimal(6)


def _solve3(aug):
    """Gauss-Jordan on a 3x4 augmented Fraction matrix."""
    n = 3
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]


def _integerize(c0: Fraction, c1: Fraction, c2: Fraction):
    den = math.lcm(c0.denominator, c1.denominator, c2.denominator)
    return (c0.numerator * (den // c0.denominator),
            c1.numerator * (den // c1.denominator),
            c2.numerator * (den // c2.denominator), den)


def _scaled_range(n0, n1, n2, k, L):
    """Range of (n0 + n1 x + n2 x^2) * 4^k over x in [L, L+1] / 2^k."""
    s = 1 << k
    base = n0 * s * s
    a, b = n1 * s * L, n1 * s * (L + 1)
    c, d = n2 * L * L, n2 * (L + 1) * (L + 1)
    lo = base + min(a, b) + min(c, d)
    hi = base + max(a, b) + max(c, d)
    return lo, hi


def _enclose(c0, c1, c2, k, L):
    n0, n1, n2, den = _integerize(c0, c1, c2)
    lo, hi = _scaled_range(n0, n1, n2, k, L)
    scale = den << (2 * k)
    return Fraction(lo, scale), Fraction(hi, scale)


@lru_cache(maxsize=65536)
def _sign(c0: Fraction, c1: Fraction, c2: Fraction) -> int:
    if c1 == 0 and c2 == 0:
        return (c0 > 0) - (c0 < 0)
    n0, n1, n2, _ = _integerize(c0, c1, c2)
    k, L = _BRACKET.snapshot()
    if k < 64:
        k, L = _BRACKET.refine(64)
    while True:
        lo, hi = _scaled_range(n0, n1, n2, k, L)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        k, L = _BRACKET.refine(2 * k)


def compare(a, b) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    return (FieldElement.coerce(a) - FieldElement.coerce(b)).sign()


def _round_half_away(x: Fraction) -> int:
    n, d = x.numerator, x.denominator
    q, r = divmod(abs(n), d)
    if 2 * r >= d:
        q += 1
    return q if n >= 0 else -q


def _format_scaled(m: int, digits: int) -> str:
    neg = m < 0
    s = str(abs(m)).rjust(digits + 1, "0")
    out = f"{s[:-digits]}.{s[-digits:]}"
    return "-" + out if neg and m != 0 else out


def _round_down(x: Fraction) -> int:
    q = abs(x.numerator) // x.denominator
    return q if x >= 0 else -q


_ROUNDERS = {"half_away": _round_half_away, "down": _round_down}


def to_decimal(a, digits: int = 6, rounding: str = "half_away") -> str:
    """Render ``a`` with ``digits`` fractional digits.

    ``rounding="half_away"`` rounds to nearest with ties away from zero;
    ``rounding="down"`` truncates toward zero (leading digits only, the way
    tables print values followed by an ellipsis).
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    rnd = _ROUNDERS[rounding]
    x = FieldElement.coerce(a) if not isinstance(a, (int, Fraction)) else a
    scale = 10 ** digits
    if isinstance(x, (int, Fraction)) or x.is_rational():
        q = Fraction(x if isinstance(x, (int, Fraction)) else x.c0)
        return _format_scaled(rnd(q * scale), digits)
    bits = max(64, int(digits * 3.33) + 16)
    while True:
        lo, hi = x.enclosure(bits)
        mlo, mhi = rnd(lo * scale), rnd(hi * scale)
        if mlo == mhi:
            return _format_scaled(mlo, digits)
        bits *= 2


ETA = FieldElement(0, 1, 0)

P = ((3, 3, 5, 4),
     (1, 2, 3, 3),
     (1, 1, 2, 1),
     (2, 3, 5, 5))

Q = ((1, 0, 0, 0),
     (0, 1, 1, 0),
     (0, 0, 1, 1),
     (0, 1, 0, 0))


def _mat_vec(m, v):
    return tuple(sum((m[i][j] * v[j] for j in range(len(v))), FieldElement())
                 for i in range(len(m)))


@dataclass(frozen=True)
class SystemConstants:
    eta: FieldElement
    P: tuple
    Q: tuple
    nu: tuple
    lam: tuple

    @property
    def lam_norm(self) -> FieldElement:
        return sum(self.lam, FieldElement())


@lru_cache(maxsize=1)
def constants() -> SystemConstants:
    """eta, P, Q, the probability Perron eigenvector nu, and lambda = Q nu."""
    q = Fraction(1, 4)
    nu1 = FieldElement(-9, 32, -3) * q
    nu = (nu1,
          FieldElement(25, -54, 5) * q,
          FieldElement(-3, -10, 1) * q,
          nu1)
    lam = _mat_vec(Q, nu)
    return SystemConstants(ETA, P, Q, nu, lam)


def mat_vec(m, v):
    """Integer matrix times a vector of field elements."""
    return _mat_vec(m, v)
