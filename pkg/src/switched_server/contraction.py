"""Piecewise 1/2-affine contractions of [0, 1].

A :class:`PWContraction` has three breakpoints ``0 < z1 < z2 < z3 < 1`` and
four branches ``x -> -x/2 + b_i`` on ``[0,z1), [z1,z2), [z2,z3), [z3,1]``.
The family ``f_{d1,d2,d3}`` (offsets 1/2, 1, 1/2, 1) is built by
:func:`from_d`.

Exact orbits are computed on integer numerators over a shared denominator
``L * 2**n``; this keeps ten thousand iterates cheap even though the
denominators double at every step.  Past ``EXACT_STEP_CAP`` steps the
iteration switches to fixed-point arithmetic with ``FIXED_BITS`` fractional
bits.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .numfield import to_decimal

__all__ = [
    "PWContraction",
    "Coding",
    "PeriodicityVerdict",
    "AttractorCover",
    "from_d",
    "unit_map",
    "iterate",
    "natural_coding",
    "periodicity_scan",
    "attractor_cover",
    "attractor_covers",
    "EXACT_STEP_CAP",
    "FIXED_BITS",
]

EXACT_STEP_CAP = 20_000
FIXED_BITS = 512
SLOPE = Fraction(-1, 2)


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass an int, Fraction or decimal string")
    return Fraction(x)


@dataclass(frozen=True)
class PWContraction:
    breakpoints: tuple   # (z1, z2, z3)
    offsets: tuple       # (b1, b2, b3, b4)

    def __post_init__(self):
        z = tuple(_frac(v) for v in self.breakpoints)
        b = tuple(_frac(v) for v in self.offsets)
        if len(z) != 3 or len(b) != 4:
            raise ValueError("need 3 breakpoints and 4 offsets")
        if not 0 < z[0] < z[1] < z[2] < 1:
            raise ValueError("breakpoints must satisfy 0 < z1 < z2 < z3 < 1")
        object.__setattr__(self, "breakpoints", z)
        object.__setattr__(self, "offsets", b)

    @property
    def partition(self) -> tuple:
        return (Fraction(0),) + self.breakpoints + (Fraction(1),)

    def branch_index(self, x) -> int:
        """0-based branch index; domains are right-open except the last."""
        if x < 0 or x > 1:
            raise ValueError(f"{x} is outside [0, 1]")
        z1, z2, z3 = self.breakpoints
        if x < z1:
            return 0
        if x < z2:
            return 1
        if x < z3:
            return 2
        return 3

    def letter(self, x) -> int:
        return self.branch_index(x) + 1

    def __call__(self, x):
        x = _frac(x)
        return SLOPE * x + self.offsets[self.branch_index(x)]

    evaluate = __call__

    def branch_image(self, i: int, lo, hi) -> tuple:
        """Closed image ``[f(hi), f(lo)]`` of ``[lo, hi]`` under branch ``i`` (0-based)."""
        b = self.offsets[i]
        return SLOPE * hi + b, SLOPE * lo + b

    def maps_into_unit(self) -> bool:
        for i, (lo, hi) in enumerate(zip(self.partition, self.partition[1:])):
            a, b = self.branch_image(i, lo, hi)
            if a < 0 or b > 1:
                return False
        return True

    def images_disjoint(self) -> bool:
        """Branch images (half-open as dictated by the domains) never overlap."""
        ims = sorted(self.branch_image(i, lo, hi)
                     for i, (lo, hi) in enumerate(zip(self.partition, self.partition[1:])))
        # each image is (f(hi), f(lo)]; the left end is excluded except for the
        # last branch, so touching ends are allowed
        return all(b1 <= a2 for (_, b1), (a2, _) in zip(ims, ims[1:]))


def from_d(d1, d2, d3) -> PWContraction:
    """The map ``f_{d1,d2,d3}``."""
    d = tuple(_frac(v) for v in (d1, d2, d3))
    if any(v <= 0 for v in d):
        raise ValueError(f"parameters must be positive, got {tuple(map(str, d))}")
    third = Fraction(1, 3)
    z = (third / (1 + d[0]),
         third / (1 + d[1]) + third,
         third / (1 + d[2]) + 2 * third)
    half = Fraction(1, 2)
    return PWContraction(z, (half, Fraction(1), half, Fraction(1)))


def unit_map() -> PWContraction:
    return from_d(1, 1, 1)


class _Orbit:
    """Iterator over ``(x_n, letter_n)`` with exact-then-fixed arithmetic.

    In exact mode ``x_n = X / (L * 2**n)``.  In fixed mode ``x_n = X / 2**bits``
    with round-to-nearest on each step.
    """

    def __init__(self, f: PWContraction, z, exact_cap: int = EXACT_STEP_CAP,
                 bits: int = FIXED_BITS):
        z = _frac(z)
        if z < 0 or z > 1:
            raise ValueError(f"{z} is outside [0, 1]")
        self.f = f
        den = [z.denominator] + [b.denominator for b in f.offsets]
        self.L = math.lcm(*den)
        self.X = z.numerator * (self.L // z.denominator)
        self.n = 0
        # offsets scaled so that b * L * 2**(n+1) = B * 2**(n+1)
        self.B = [b.numerator * (self.L // b.denominator) for b in f.offsets]
        self.Z = [(q.numerator, q.denominator) for q in f.breakpoints]
        self.exact = True
        self.exact_cap = exact_cap
        self.bits = bits
        self.steps = 0

    def value(self) -> Fraction:
        if self.exact:
            return Fraction(self.X, self.L << self.n)
        return Fraction(self.X, 1 << self.bits)

    def key(self):
        """Hashable canonical form of the current point (exact mode only)."""
        X, n = self.X, self.n
        if X == 0:
            return (0, 0)
        tz = min((X & -X).bit_length() - 1, n)
        return (X >> tz, n - tz)

    def _branch(self) -> int:
        X = self.X
        scale = (self.L << self.n) if self.exact else (1 << self.bits)
        for i, (p, q) in enumerate(self.Z):
            if X * q < p * scale:
                return i
        return 3

    def letter(self) -> int:
        return self._branch() + 1

    def _to_fixed(self):
        num = self.X << self.bits
        den = self.L << self.n
        q, r = divmod(num, den)
        if 2 * r >= den:
            q += 1
        self.X = q
        self.exact = False

    def step(self) -> int:
        """Advance one iterate; returns the letter of the point left behind."""
        if self.exact and self.steps >= self.exact_cap:
            self._to_fixed()
        i = self._branch()
        if self.exact:
            # -X/(L 2^n)/2 + B/L = (-X + B 2^(n+1)) / (L 2^(n+1))
            self.X = -self.X + (self.B[i] << (self.n + 1))
            self.n += 1
        else:
            # fixed: x' = -x/2 + b, rounded to nearest
            b_fixed = Fraction(self.B[i] << self.bits, self.L)
            val = Fraction(-self.X, 2) + b_fixed
            q, r = divmod(val.numerator, val.denominator)
            if 2 * r >= val.denominator:
                q += 1
            self.X = q
        self.steps += 1
        return i + 1


def iterate(f: PWContraction, z, n: int, exact_cap: int = EXACT_STEP_CAP) -> list:
    """``[z, f(z), ..., f^n(z)]`` (exact up to ``exact_cap`` steps)."""
    orb = _Orbit(f, z, exact_cap)
    out = [orb.value()]
    for _ in range(n):
        orb.step()
        out.append(orb.value())
    return out


def fixed_error_bound(bits: int = FIXED_BITS) -> Fraction:
    """Uniform bound on the fixed-point drift: one ulp over ``1 - 1/2``.

    Valid as long as no rounded iterate falls on the other side of a
    breakpoint from the exact one.
    """
    return Fraction(2, 1 << bits)


@dataclass(frozen=True)
class Coding:
    start: object
    word: str

    @property
    def length(self) -> int:
        return len(self.word)

    def letters(self) -> tuple:
        return tuple(int(c) for c in self.word)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start", "length", "word"])
        w.writerow([str(self.start), self.length, self.word])
        return buf.getvalue()


def natural_coding(f: PWContraction, z, n: int, exact_cap: int = EXACT_STEP_CAP) -> Coding:
    """Branch letters of ``z, f(z), ..., f^(n-1)(z)``."""
    orb = _Orbit(f, z, exact_cap)
    letters = [str(orb.step()) for _ in range(n)]
    return Coding(_frac(z), "".join(letters))


@dataclass(frozen=True)
class PeriodicityVerdict:
    """Outcome of a finite-horizon periodicity scan.

    ``kind`` is ``"point_cycle"`` (an exact repetition ``f^m(z) = f^(m+p)(z)``),
    ``"coding_period"`` (the tail of the coding word is ``p``-periodic) or
    ``"none"`` at this horizon, which is evidence and not a proof.
    """
    kind: str
    preperiod: int | None
    period: int | None
    horizon: int
    max_period: int
    exact_steps: int

    @property
    def found(self) -> bool:
        return self.kind != "none"


def _tail_period(word: str, max_period: int) -> int | None:
    """Smallest ``p <= max_period`` such that the second half of ``word`` is ``p``-periodic."""
    tail = word[len(word) // 2:]
    for p in range(1, min(max_period, len(tail) // 2) + 1):
        if tail[p:] == tail[:-p]:
            return p
    return None


def _preperiod(word: str, p: int) -> int:
    m = len(word) - p
    while m > 0 and word[m - 1] == word[m - 1 + p]:
        m -= 1
    return m


def periodicity_scan(f: PWContraction, z, horizon: int,
                     max_period: int | None = None,
                     exact_cap: int = EXACT_STEP_CAP) -> PeriodicityVerdict:
    """Look for an ultimately periodic orbit or coding within ``horizon`` steps."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if max_period is None:
        max_period = max(1, horizon // 4)
    orb = _Orbit(f, z, exact_cap)
    seen = {orb.key(): 0}
    letters = []
    for k in range(1, horizon + 1):
        letters.append(str(orb.step()))
        if orb.exact:
            key = orb.key()
            if key in seen:
                m = seen[key]
                return PeriodicityVerdict("point_cycle", m, k - m, horizon, max_period,
                                          min(k, exact_cap))
            seen[key] = k
    word = "".join(letters)
    p = _tail_period(word, max_period)
    if p is not None:
        return PeriodicityVerdict("coding_period", _preperiod(word, p), p, horizon,
                                  max_period, min(horizon, exact_cap))
    return PeriodicityVerdict("none", None, None, horizon, max_period,
                              min(horizon, exact_cap))


@dataclass(frozen=True)
class AttractorCover:
    """Disjoint closed intervals, in order, covering ``f^n([0, 1])``."""
    depth: int
    intervals: tuple

    @property
    def total_length(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    @property
    def n_components(self) -> int:
        return len(self.intervals)

    def contains(self, other: "AttractorCover") -> bool:
        """True when every interval of ``other`` lies inside one interval of ``self``."""
        j = 0
        mine = self.intervals
        for a, b in other.intervals:
            while j < len(mine) and mine[j][1] < a:
                j += 1
            if j == len(mine) or not (mine[j][0] <= a and b <= mine[j][1]):
                return False
        return True

    def to_csv(self, digits: int = 12) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["depth", "index", "lo", "hi"])
        for i, (a, b) in enumerate(self.intervals):
            w.writerow([self.depth, i, to_decimal(a, digits), to_decimal(b, digits)])
        return buf.getvalue()


def _merge(intervals: Sequence) -> tuple:
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return tuple(out)


def _push(f: PWContraction, intervals: Sequence) -> tuple:
    part = f.partition
    pieces = []
    for a, b in intervals:
        for i in range(4):
            lo, hi = max(a, part[i]), min(b, part[i + 1])
            if lo < hi or (lo == hi and i == f.branch_index(lo)):
                pieces.append(f.branch_image(i, lo, hi))
    return _merge(pieces)


def attractor_covers(f: PWContraction, n: int) -> Iterator[AttractorCover]:
    """Covers at depths ``0, 1, ..., n``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cur = ((Fraction(0), Fraction(1)),)
    yield AttractorCover(0, cur)
    for k in range(1, n + 1):
        cur = _push(f, cur)
        yield AttractorCover(k, cur)


def attractor_cover(f: PWContraction, n: int) -> AttractorCover:
    cover = None
    for cover in attractor_covers(f, n):
        pass
    return cover
