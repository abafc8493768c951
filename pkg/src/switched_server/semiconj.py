"""Exotic parameters ``d1, d2, d3`` and the semiconjugacy onto T.

Pipeline: the special points ``p_j`` and their T-orbits give the visit
series ``c_ij``; a 3x3 linear system in ``u`` is solved exactly for the
truncated series; ``z, l, d`` follow.  Because the series are truncated at
depth ``K`` every derived quantity carries a certified error bound obtained
from a norm perturbation argument on the linear system.

The semiconjugacy ``h`` is realised at finite resolution by the gap family:
each enumerated orbit point ``p`` gets a weight ``w(p)`` and an interval
``G_p`` of that length, laid out by prefix sums in the order of the points.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .contraction import PWContraction, from_d
from .iet import IntervalExchange, isometric_model
from .numfield import to_decimal

__all__ = [
    "SemiconjugacyError",
    "VisitSeries",
    "ParameterSolution",
    "GapFamily",
    "SemiconjugacyReport",
    "special_points",
    "visit_series",
    "solve_parameters",
    "build_g",
    "build_f",
    "gap_family",
    "check_semiconjugacy",
    "DEFAULT_K",
    "DEFAULT_DEPTH",
]

DEFAULT_K = 64
DEFAULT_DEPTH = 24

# the integer matrix acting on u in the fixed-point system
_A = ((-1, -1, -1), (0, 1, 0), (0, 0, 1))


class SemiconjugacyError(RuntimeError):
    """An exact check of the semiconjugacy construction failed."""


def special_points(T: IntervalExchange | None = None) -> tuple:
    """``(p1, p2, p3, p4) = (0, T(x2), T(x3), |lambda|)``."""
    if T is None:
        T = isometric_model()
    x2, x3 = T.breakpoints[1], T.breakpoints[2]
    zero = 0 * T.length
    return (zero, T(x2), T(x3), T.length)


@dataclass(frozen=True)
class VisitSeries:
    """Truncated sums ``c_ij = sum 2^-k`` over ``0 <= k <= K`` with ``T^k(p_j)`` in ``I_i``."""
    K: int
    c: tuple              # c[i][j], 0-based
    visits: tuple         # visits[j][k] = 0-based interval index of T^k(p_j)

    @property
    def tail_bound(self) -> Fraction:
        return Fraction(1, 2 ** self.K)

    def column_sum(self, j: int) -> Fraction:
        return sum((self.c[i][j] for i in range(4)), Fraction(0))


def visit_series(K: int = DEFAULT_K, T: IntervalExchange | None = None) -> VisitSeries:
    if K < 1:
        raise ValueError("K must be >= 1")
    if T is None:
        T = isometric_model()
    return _visit_series(K, T)


@lru_cache(maxsize=16)
def _visit_series(K: int, T: IntervalExchange) -> VisitSeries:
    # numerators over the common denominator 2^K
    num = [[0] * 4 for _ in range(4)]
    visits = []
    for j, p in enumerate(special_points(T)):
        row = []
        x = p
        for k in range(K + 1):
            i = T.branch_index(x)
            row.append(i)
            num[i][j] += 1 << (K - k)
            x = T.branches[i](x)
        visits.append(tuple(row))
    den = 1 << K
    c = tuple(tuple(Fraction(v, den) for v in r) for r in num)
    return VisitSeries(K, c, tuple(visits))


def _solve(B, rhs):
    """Exact Gauss-Jordan with partial pivoting; raises on singular ``B``."""
    n = len(B)
    aug = [list(B[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if aug[piv][col] == 0:
            raise ZeroDivisionError("singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                fac = aug[r][col]
                aug[r] = [a - fac * b for a, b in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def _inverse(B):
    n = len(B)
    cols = [_solve(B, [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def _inf_norm(m) -> Fraction:
    return max(sum(abs(v) for v in row) for row in m)


@dataclass(frozen=True)
class ParameterSolution:
    """Solved parameters for the truncated series, with certified error radii.

    ``eps_u`` bounds ``|u_i - u_i(true)|`` for ``i = 1..3``; the other radii are
    derived from it.  ``d_bounds[i]`` is a certified enclosure of the true
    ``d_i``.
    """
    K: int
    series: VisitSeries = field(repr=False)
    M: tuple
    u: tuple
    z: tuple
    ell: tuple
    d: tuple
    eps_u: Fraction
    eps_z: Fraction
    eps_ell: Fraction
    d_bounds: tuple
    balance_residual: Fraction
    residual_bound: Fraction
    binv_norm: Fraction

    @property
    def tail_bound(self) -> Fraction:
        return self.series.tail_bound

    def invariants(self) -> dict:
        u, z, ell, d = self.u, self.z, self.ell, self.d
        third = Fraction(1, 3)
        return {
            "u_positive": all(v > 0 for v in u),
            "u_sum_one": sum(u) == 1,
            "ell_positive": all(v > 0 for v in ell),
            "ell_sum_half": sum(ell) == Fraction(1, 2),
            "z_ordering": 0 < z[0] < third < z[1] < 2 * third < z[2] < 1,
            "d_positive": all(v > 0 for v in d),
            "residual_within_bound": self.balance_residual <= self.residual_bound,
        }

    def to_dict(self, digits: int = 6) -> dict:
        def dec(v):
            return to_decimal(v, digits)
        out = {"K": self.K, "tail_bound_exp": -self.K}
        for name, vals in (("u", self.u), ("z", self.z), ("ell", self.ell), ("d", self.d)):
            for i, v in enumerate(vals, 1):
                out[f"{name}{i}"] = dec(v)
        for i, (lo, hi) in enumerate(self.d_bounds, 1):
            out[f"d{i}_lo"] = to_decimal(lo, digits + 6)
            out[f"d{i}_hi"] = to_decimal(hi, digits + 6)
        out["eps_u_log2"] = _log2_ceil(self.eps_u)
        out["balance_residual_log2"] = _log2_ceil(self.balance_residual)
        out["residual_bound_log2"] = _log2_ceil(self.residual_bound)
        return out


def _log2_ceil(x: Fraction) -> int | None:
    """Smallest ``e`` with ``x <= 2**e`` (None for zero)."""
    if x == 0:
        return None
    e = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** e < x:
        e += 1
    while Fraction(2) ** (e - 1) >= x:
        e -= 1
    return e


def _decreasing_image(fn, lo, hi):
    return fn(hi), fn(lo)


def solve_parameters(K: int = DEFAULT_K, series: VisitSeries | None = None,
                     check_residual: bool = True) -> ParameterSolution:
    """Solve ``(I - M A / 2) u = M e1 / 2 + c4 / 2`` and derive ``z, l, d``.

    ``check_residual=False`` skips the depth-2K cross-check (the residual is
    then reported as the bound itself), which halves the cost at large K.
    """
    if series is None:
        series = visit_series(K)
    K = series.K
    c = series.c
    M = tuple(tuple(c[i][j] - c[i][3] for j in range(3)) for i in range(3))
    half = Fraction(1, 2)
    MA = [[sum(M[i][k] * _A[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    B = [[Fraction(int(i == j)) - half * MA[i][j] for j in range(3)] for i in range(3)]
    rhs = [half * M[i][0] + half * c[i][3] for i in range(3)]
    try:
        u3 = _solve(B, rhs)
        Binv = _inverse(B)
    except ZeroDivisionError as exc:
        raise ValueError(f"linear system is singular at K={K}") from exc

    # perturbation bound: |dc| <= 2^-K entrywise, so |dM| <= 2^-K, ||dB|| <= 4.5 2^-K,
    # ||d rhs|| <= 2^-K
    tail = series.tail_bound
    nB = _inf_norm(Binv)
    dB = Fraction(9, 2) * tail
    if nB * dB >= 1:
        raise ValueError(f"K={K} is too small to certify the solution")
    nu = max(abs(v) for v in u3)
    eps_u = nB * (dB * nu + tail) / (1 - nB * dB)

    u = (u3[0], u3[1], u3[2], 1 - u3[0] - u3[1] - u3[2])
    z = (u[0], u[0] + u[1], u[0] + u[1] + u[2])
    # the two-by-two relations pin l as half of a permutation of u
    ell = (u[3] / 2, u[1] / 2, u[2] / 2, u[0] / 2)
    eps_z = 3 * eps_u
    eps_ell = Fraction(3, 2) * eps_u

    def d1(z1):
        return 1 / (3 * z1) - 1

    def d2(z2):
        return (2 - 3 * z2) / (3 * z2 - 1)

    def d3(z3):
        return (3 - 3 * z3) / (3 * z3 - 2)

    third = Fraction(1, 3)
    if not 0 < z[0] < third < z[1] < 2 * third < z[2] < 1:
        raise ValueError("solution violates 0 < z1 < 1/3 < z2 < 2/3 < z3 < 1")
    d = (d1(z[0]), d2(z[1]), d3(z[2]))
    bounds = []
    for fn, zi, lo_lim, hi_lim in ((d1, z[0], 0, third), (d2, z[1], third, 2 * third),
                                   (d3, z[2], 2 * third, 1)):
        lo, hi = zi - eps_z, zi + eps_z
        if not (lo_lim < lo and hi < hi_lim):
            raise ValueError(f"error radius too large at K={K}")
        bounds.append(_decreasing_image(fn, lo, hi))

    # residual of u = M l + c4/2 against the depth-2K series: by construction it
    # vanishes for the depth-K series, and the deeper series moves each entry
    # of M and c4 by at most 2^-K, so the residual is at most 2^-K
    residual_bound = tail
    if check_residual:
        cd = visit_series(2 * K).c
        Md = [[cd[i][j] - cd[i][3] for j in range(3)] for i in range(3)]
        res = max(abs(u[i] - sum(Md[i][j] * ell[j] for j in range(3)) - half * cd[i][3])
                  for i in range(3))
    else:
        res = residual_bound
    return ParameterSolution(K, series, M, u, z, ell, d, eps_u, eps_z, eps_ell,
                             tuple(bounds), res, residual_bound, nB)


def build_g(sol: ParameterSolution) -> PWContraction:
    """``g_{u,l}`` with breakpoints ``u1, u1+u2, u1+u2+u3``."""
    u, ell = sol.u, sol.ell
    half = Fraction(1, 2)
    offsets = (
        u[0] / 2 + u[2] / 2 + ell[0] + ell[1],
        u[0] / 2 + half + ell[0] + ell[1] + ell[2],
        u[0] / 2 + u[1] / 2 + u[2] / 2 + ell[0],
        u[0] / 2 + u[2] / 2 + half + ell[0] + ell[1],
    )
    return PWContraction(sol.z, offsets)


def build_f(sol: ParameterSolution) -> PWContraction:
    return from_d(*sol.d)


@dataclass(frozen=True)
class GapFamily:
    """Enumerated orbit points with their weights and gap intervals.

    ``points`` are sorted; ``starts[k]`` and ``weights[k]`` describe the
    approximate gap ``[starts[k], starts[k] + weights[k]]`` of ``points[k]``.
    The true gap starts somewhere in ``[starts[k] - E, starts[k] + R + E]``
    where ``R = residual`` is the weight of all points not enumerated and
    ``E = position_error`` accounts for the uncertainty in ``l``.
    """
    depth: int
    points: tuple
    weights: tuple
    starts: tuple
    levels: tuple          # (j, k): points[i] = T^k(p_j), j 1-based
    residual: Fraction
    position_error: Fraction
    index: dict = field(repr=False, compare=False, default_factory=dict)

    def __len__(self):
        return len(self.points)

    def gap(self, i: int) -> tuple:
        return self.starts[i], self.starts[i] + self.weights[i]

    def core(self, i: int) -> tuple:
        """Part of the gap of ``points[i]`` certainly inside the true gap."""
        s, w = self.starts[i], self.weights[i]
        return s + self.residual + self.position_error, s + w - self.position_error

    def hull(self, i: int) -> tuple:
        """Region certainly containing the true gap of ``points[i]``."""
        s, w = self.starts[i], self.weights[i]
        return s - self.position_error, s + w + self.residual + self.position_error

    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def locate(self, x) -> int | None:
        """Index whose core contains ``x``, or None."""
        k = bisect.bisect_right(self.starts, x) - 1
        for i in (k - 1, k, k + 1):
            if 0 <= i < len(self.points):
                lo, hi = self.core(i)
                if lo <= x <= hi:
                    return i
        return None

    def h_hat(self, x):
        i = self.locate(x)
        return None if i is None else self.points[i]


class _Key:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return self.v < other.v


def gap_family(depth: int = DEFAULT_DEPTH, sol: ParameterSolution | None = None,
               T: IntervalExchange | None = None) -> GapFamily:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if sol is None:
        sol = solve_parameters()
    if T is None:
        T = isometric_model()
    ell = sol.ell
    p = special_points(T)
    entries = []          # (point, weight, (j, k))
    for j in range(3):
        x = p[j]
        for k in range(depth + 1):
            if k == 0:
                w = ell[j]
            elif j == 0:
                w = (ell[0] + ell[3]) / 2 ** k
            else:
                w = ell[j] / 2 ** k
            entries.append((x, w, (j + 1, k)))
            x = T(x)
    entries.append((p[3], ell[3], (4, 0)))
    seen = {}
    for x, _, lv in entries:
        if x in seen:
            raise SemiconjugacyError(
                f"orbit points T^{lv[1]}(p{lv[0]}) and T^{seen[x][1]}(p{seen[x][0]}) coincide")
        seen[x] = lv
    entries.sort(key=lambda e: _Key(e[0]))
    points = tuple(e[0] for e in entries)
    weights = tuple(e[1] for e in entries)
    levels = tuple(e[2] for e in entries)
    starts = []
    acc = Fraction(0)
    for w in weights:
        starts.append(acc)
        acc += w
    # the last point is p4 = |lambda| whose gap is pinned to [1 - l4, 1]
    starts[-1] = 1 - weights[-1]
    residual = Fraction(1, 2 ** (depth + 1))       # sum over k > depth of 1/2^(k+1)
    position_error = 8 * sol.eps_ell
    index = {pt: i for i, pt in enumerate(points)}
    return GapFamily(depth, points, weights, tuple(starts), levels, residual,
                     position_error, index)


@dataclass(frozen=True)
class SemiconjugacyReport:
    depth: int
    n_exact: int
    exact_failures: tuple
    monotone: bool
    n_envelope: int
    max_envelope: Fraction
    envelope_bound: Fraction
    coding_mismatches: int

    @property
    def passed(self) -> bool:
        return (not self.exact_failures and self.monotone and self.coding_mismatches == 0
                and self.max_envelope <= self.envelope_bound)

    def to_dict(self, digits: int = 12) -> dict:
        return {
            "depth": self.depth,
            "exact_samples": self.n_exact,
            "exact_failures": len(self.exact_failures),
            "monotone": self.monotone,
            "envelope_samples": self.n_envelope,
            "max_envelope": to_decimal(self.max_envelope, digits),
            "envelope_bound": to_decimal(self.envelope_bound, digits),
            "coding_mismatches": self.coding_mismatches,
            "passed": self.passed,
        }


def check_monotone(gaps: GapFamily) -> bool:
    """Point order equals gap order: gaps laid out left to right without overlap."""
    for i in range(len(gaps) - 1):
        if not gaps.points[i] < gaps.points[i + 1]:
            return False
        if not gaps.gap(i)[1] <= gaps.gap(i + 1)[0]:
            return False
    return True


def _uniform(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    return lo + (hi - lo) * Fraction(rng.randrange(1, 2 ** 32), 2 ** 32)


def _margin_ok(f: PWContraction, y, eps) -> bool:
    return all(abs(y - z) > eps for z in f.breakpoints)


def check_semiconjugacy(depth: int = DEFAULT_DEPTH, samples: int = 100,
                        sol: ParameterSolution | None = None, seed: int = 0,
                        envelope_samples: int | None = None,
                        gaps: GapFamily | None = None) -> SemiconjugacyReport:
    """Spot-check ``h(f(y)) = T(h(y))`` at gap-resolution ``depth``.

    Exact part: ``y`` is drawn from the middle of the core of an enumerated
    gap ``G_p`` whose image point ``T(p)`` is enumerated; ``f(y)`` must fall in
    the core of ``G_{T(p)}``, and the branch of ``y`` under ``f`` must be the
    branch of ``p`` under T.  Any violation raises SemiconjugacyError.

    Envelope part: ``y`` is drawn from the uncertain margins of gaps; the
    distance from ``f(y)`` to ``G_{T(p)}`` for the owning point ``p`` must not
    exceed ``4 * 2^-depth``.
    """
    if sol is None:
        sol = solve_parameters()
    if gaps is None:
        gaps = gap_family(depth, sol)
    T = isometric_model()
    f = build_f(sol)
    rng = random.Random(seed)
    R = gaps.residual
    eligible = []
    for i, (pt, w) in enumerate(zip(gaps.points, gaps.weights)):
        tp = T(pt)
        j = gaps.index.get(tp)
        if j is None:
            continue
        if w > 16 * R:
            eligible.append((i, j))
    failures = []
    mismatches = 0
    n_exact = 0
    if samples > 0 and not eligible:
        raise SemiconjugacyError("no gap is wide enough for exact samples at this depth")
    # put the gap of p2 first so that its midpoint is always checked
    p2 = special_points(T)[1]
    eligible.sort(key=lambda e: e[0] != gaps.index[p2])
    for s in range(samples):
        i, j = eligible[s % len(eligible)]
        lo, hi = gaps.core(i)
        if s < len(eligible):
            y = (lo + hi) / 2
        else:
            q = (hi - lo) / 4
            y = _uniform(rng, lo + q, hi - q)
        n_exact += 1
        if not _margin_ok(f, y, sol.eps_z):
            failures.append((y, "too close to a breakpoint"))
            continue
        if f.letter(y) != T.letter(gaps.points[i]):
            mismatches += 1
        got = gaps.h_hat(f(y))
        if got is None or got != T(gaps.points[i]):
            failures.append((y, f"h(f(y)) = {got}, expected T(p) = {T(gaps.points[i])}"))
    if failures:
        y, why = failures[0]
        raise SemiconjugacyError(f"{len(failures)} exact failures; first at y={y}: {why}")

    bound = Fraction(4, 2 ** depth)
    if envelope_samples is None:
        envelope_samples = samples
    max_env = Fraction(0)
    n_env = 0
    for _ in range(envelope_samples):
        i = rng.randrange(len(gaps))
        s0, w0 = gaps.starts[i], gaps.weights[i]
        # margins next to the left and right ends of the core
        if rng.random() < 0.5:
            y = _uniform(rng, max(Fraction(0), s0 - gaps.position_error),
                         min(Fraction(1), s0 + R + gaps.position_error))
        else:
            y = _uniform(rng, s0 + w0 - gaps.position_error, min(Fraction(1), s0 + w0 + R))
        owner = _owner(gaps, f, y)
        if owner is None:
            continue
        tp = T(gaps.points[owner])
        j = gaps.index.get(tp)
        if j is None:
            continue
        a, b = gaps.gap(j)
        fy = f(y)
        env = a - fy if fy < a else (fy - b if fy > b else Fraction(0))
        max_env = max(max_env, env)
        n_env += 1

    return SemiconjugacyReport(depth, n_exact, tuple(failures), check_monotone(gaps),
                               n_env, max_env, bound, mismatches)


def _owner(gaps: GapFamily, f: PWContraction, y) -> int | None:
    """Nearest enumerated gap on the same branch of ``f`` as ``y``."""
    k = bisect.bisect_right(gaps.starts, y) - 1
    br = f.branch_index(y)
    best, best_d = None, None
    for i in range(max(0, k - 2), min(len(gaps), k + 3)):
        lo, hi = gaps.core(i)
        if lo > hi:
            continue
        mid = (lo + hi) / 2
        if f.branch_index(mid) != br:
            continue
        a, b = gaps.gap(i)
        d = a - y if y < a else (y - b if y > b else Fraction(0))
        if best_d is None or d < best_d:
            best, best_d = i, d
    return best


def series_column_sums(series: VisitSeries) -> tuple:
    return tuple(series.column_sum(j) for j in range(4))


def compare_depths(K1: int, K2: int) -> Fraction:
    """Largest componentwise difference of ``u, z, l, d`` between two depths."""
    a, b = solve_parameters(K1), solve_parameters(K2)
    diffs = [abs(x - y) for x, y in zip(a.u + a.z + a.ell + a.d, b.u + b.z + b.ell + b.d)]
    return max(diffs)


def decimal_d(sol: ParameterSolution, digits: int = 6) -> tuple:
    """6-digit renderings of ``d`` that are certified by the enclosures."""
    out = []
    for lo, hi in sol.d_bounds:
        a, b = to_decimal(lo, digits), to_decimal(hi, digits)
        if a != b:
            raise ValueError(f"enclosure [{a}, {b}] is too wide for {digits} digits")
        out.append(a)
    return tuple(out)
