"""Interval exchange transformations with flips.

An :class:`IntervalExchange` is an ordered list of affine branches
``x -> sign*x + offset`` whose domains partition ``[0, length]``.  Each
domain carries its own endpoint-inclusion flags, so boundary behaviour is
exactly the one written down for a given map rather than a global
half-open convention.

Coordinates are usually :class:`~switched_server.numfield.FieldElement`, but
any exactly ordered scalar (``int``, ``Fraction``) works.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .numfield import FieldElement, constants

__all__ = [
    "Interval",
    "Branch",
    "IntervalExchange",
    "IETValidation",
    "DomainError",
    "ValidationError",
    "isometric_model",
    "map_S",
    "from_lengths",
]


class DomainError(ValueError):
    """A point lies outside the ambient interval of a map."""


class ValidationError(ValueError):
    """An IntervalExchange violates partition, isometry or injectivity."""


@dataclass(frozen=True)
class Interval:
    lo: object
    hi: object
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval: lo={self.lo!r} hi={self.hi!r}")

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, True, True)

    @classmethod
    def open(cls, lo, hi):
        return cls(lo, hi, False, False)

    def __contains__(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo:
            return self.lo_closed
        if x == self.hi:
            return self.hi_closed
        return True

    def contains_interior(self, x) -> bool:
        return self.lo < x < self.hi

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def midpoint(self):
        return (self.lo + self.hi) / 2

    def scaled(self, s) -> "Interval":
        return Interval(self.lo * s, self.hi * s, self.lo_closed, self.hi_closed)

    def __str__(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{_fmt(self.lo)}, {_fmt(self.hi)}{right}"


def _fmt(x):
    if isinstance(x, FieldElement):
        return x.to_decimal(6)
    return str(x)


@dataclass(frozen=True)
class Branch:
    domain: Interval
    sign: int
    offset: object

    def __call__(self, x):
        return x + self.offset if self.sign > 0 else self.offset - x

    def image(self) -> Interval:
        d = self.domain
        if self.sign > 0:
            return Interval(self(d.lo), self(d.hi), d.lo_closed, d.hi_closed)
        return Interval(self(d.hi), self(d.lo), d.hi_closed, d.lo_closed)

    def compose_after(self, inner: "Branch") -> tuple:
        """(sign, offset) of ``self . inner`` as an affine map on the line."""
        if self.sign > 0:
            return inner.sign, inner.offset + self.offset
        return -inner.sign, self.offset - inner.offset


@dataclass(frozen=True)
class IETValidation:
    n_branches: int
    flips: tuple          # 1-based branch indices with sign -1
    breakpoints: tuple

    @property
    def n_flips(self) -> int:
        return len(self.flips)


@dataclass(frozen=True)
class IntervalExchange:
    length: object
    branches: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def breakpoints(self) -> tuple:
        """Interior partition points ``x_1 < ... < x_{n-1}``."""
        return tuple(b.domain.hi for b in self.branches[:-1])

    @property
    def discontinuities(self) -> tuple:
        return self.breakpoints

    @property
    def signs(self) -> tuple:
        return tuple(b.sign for b in self.branches)

    @property
    def offsets(self) -> tuple:
        return tuple(b.offset for b in self.branches)

    @property
    def ambient(self) -> Interval:
        return Interval.closed(0 * self.length, self.length)

    def __len__(self):
        return len(self.branches)

    def branch_index(self, x) -> int:
        """0-based index of the branch whose domain contains ``x``."""
        if x < 0 or x > self.length:
            raise DomainError(f"{_fmt(x)} is outside [0, {_fmt(self.length)}]")
        for i, b in enumerate(self.branches):
            if x in b.domain:
                return i
        raise DomainError(f"{_fmt(x)} is not covered by any branch domain")

    def letter(self, x) -> int:
        return self.branch_index(x) + 1

    def evaluate(self, x):
        return self.branches[self.branch_index(x)](x)

    __call__ = evaluate

    def orbit(self, x, n: int) -> list:
        """``[x, T(x), ..., T^n(x)]`` in exact arithmetic."""
        out = [x]
        for _ in range(n):
            x = self.evaluate(x)
            out.append(x)
        return out

    def itinerary(self, x, n: int) -> tuple:
        """Branch letters (1-based) of ``x, T(x), ..., T^(n-1)(x)``."""
        word = []
        for _ in range(n):
            i = self.branch_index(x)
            word.append(i + 1)
            x = self.branches[i](x)
        return tuple(word)

    def validate(self) -> IETValidation:
        """Check partition exactness, isometry and disjoint image interiors."""
        bs = self.branches
        if not bs:
            raise ValidationError("no branches")
        if bs[0].domain.lo != 0 or not bs[0].domain.lo_closed:
            raise ValidationError("partition must start with a closed endpoint at 0")
        if bs[-1].domain.hi != self.length or not bs[-1].domain.hi_closed:
            raise ValidationError("partition must end with a closed endpoint at the ambient length")
        for i, (a, b) in enumerate(zip(bs, bs[1:])):
            if a.domain.hi != b.domain.lo:
                raise ValidationError(f"domains {i + 1} and {i + 2} are not adjacent")
            if a.domain.hi_closed == b.domain.lo_closed:
                raise ValidationError(
                    f"endpoint {_fmt(a.domain.hi)} is "
                    + ("claimed by both" if a.domain.hi_closed else "missing from")
                    + f" domains {i + 1} and {i + 2}")
        images = []
        for i, b in enumerate(bs):
            if b.sign not in (1, -1):
                raise ValidationError(f"branch {i + 1} is not an isometry (sign {b.sign})")
            im = b.image()
            if im.lo < 0 or im.hi > self.length:
                raise ValidationError(f"image of branch {i + 1} leaves the ambient interval: {im}")
            images.append((im, i))
        images.sort(key=lambda t: _SortKey(t[0].lo))
        for (im1, i1), (im2, i2) in zip(images, images[1:]):
            if im2.lo < im1.hi:
                raise ValidationError(
                    f"images of branches {i1 + 1} and {i2 + 1} overlap: {im1} and {im2}")
        flips = tuple(i + 1 for i, b in enumerate(bs) if b.sign < 0)
        return IETValidation(len(bs), flips, self.breakpoints)

    def scaled(self, s) -> "IntervalExchange":
        """The conjugate ``L T L^-1`` with ``L(x) = s*x``."""
        return IntervalExchange(
            self.length * s,
            [Branch(b.domain.scaled(s), b.sign, b.offset * s) for b in self.branches])


class _SortKey:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return self.v < other.v


def from_lengths(lengths: Sequence, signs: Sequence[int], offsets: Sequence,
                 closed: Sequence[tuple] | None = None) -> IntervalExchange:
    """Build an IET from consecutive domain lengths.

    ``closed`` gives ``(lo_closed, hi_closed)`` per domain; the default is
    right-open domains with the last one closed.
    """
    n = len(lengths)
    if closed is None:
        closed = [(True, False)] * (n - 1) + [(True, True)]
    pts = [0 * lengths[0]]
    for lam in lengths:
        pts.append(pts[-1] + lam)
    branches = [Branch(Interval(pts[i], pts[i + 1], *closed[i]), signs[i], offsets[i])
                for i in range(n)]
    return IntervalExchange(pts[-1], branches)


def isometric_model(lengths: Sequence | None = None) -> IntervalExchange:
    """The 4-IET with all branches flipped.

    On ``I_1 = [0, l1)``, ``I_2``, ``I_3`` (right-open) and ``I_4`` (closed) it
    acts by ``-x + l1 + l3``, ``-x + l1 + |l|``, ``-x + l1 + l2 + l3`` and
    ``-x + l1 + l3 + |l|``.  ``lengths`` defaults to ``lambda = Q nu``.
    """
    if lengths is None:
        lengths = constants().lam
    l1, l2, l3, l4 = (FieldElement.coerce(v) for v in lengths)
    norm = l1 + l2 + l3 + l4
    offsets = (l1 + l3, l1 + norm, l1 + l2 + l3, l1 + l3 + norm)
    return from_lengths((l1, l2, l3, l4), (-1, -1, -1, -1), offsets)


def map_S() -> IntervalExchange:
    """The 4-IET on ``[0, 1]`` with domain lengths ``nu`` and signs (-, +, +, -).

    Domains are ``[0, y1)``, ``[y1, y2]``, ``(y2, y3)``, ``[y3, 1]``.
    """
    nu1, nu2, nu3, _ = constants().nu
    one = FieldElement(1)
    offsets = (one - nu2, one - nu1 - nu2, -nu1 - nu2, nu3 + one)
    closed = [(True, False), (True, True), (False, False), (True, True)]
    return from_lengths(constants().nu, (-1, 1, 1, -1), offsets, closed)
