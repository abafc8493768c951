"""First-return maps of IETs, towers over admissible intervals, and the
transitivity certificate chain.

For ``I' = [0, a']`` inside the ambient interval of ``T`` and cut points
``0 = x'_0 < ... < x'_n = a'``:

* :func:`admissibility` computes the return times ``N(x'_i)``, the set ``B``
  of pre-return orbit points, and decides (H1) ``B`` contains every
  discontinuity of ``T`` and (H2) ``a'`` lies in ``T(B)``;
* :func:`towers` follows each open base ``J_i = (x'_{i-1}, x'_i)`` until it
  returns, checking that every floor sits inside the interior of a single
  branch domain and that all floors are pairwise disjoint;
* :func:`poincare_iet` composes the branch maps along each itinerary.

Everything is exact; a return time above ``cap`` raises
:class:`ReturnTimeExceeded` rather than truncating.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .iet import Branch, Interval, IntervalExchange, ValidationError, isometric_model, map_S
from .numfield import ETA, FieldElement, P, constants, to_decimal

__all__ = [
    "DEFAULT_CAP",
    "ReturnTimeExceeded",
    "TowerError",
    "AdmissibilityCertificate",
    "Floor",
    "TowerDecomposition",
    "SelfSimilarityReport",
    "ConnectionScan",
    "Link",
    "CertificateReport",
    "return_time",
    "admissibility",
    "towers",
    "poincare_iet",
    "substitution_matrix",
    "exhaustiveness_H3",
    "self_similarity",
    "connection_scan",
    "transitivity_certificate",
    "unit_cuts",
    "eta_cuts",
]

log = logging.getLogger(__name__)

DEFAULT_CAP = 1000


class ReturnTimeExceeded(RuntimeError):
    """No return to ``I'`` within the configured cap."""

    def __init__(self, x, cap):
        super().__init__(f"no return within {cap} iterates for x = {to_decimal(x, 9)}")
        self.x = x
        self.cap = cap


class TowerError(RuntimeError):
    """A floor straddles a branch boundary or floors overlap."""


def return_time(T: IntervalExchange, target: Interval, x, cap: int = DEFAULT_CAP) -> int:
    """Smallest ``N`` in ``[1, cap]`` with ``T^N(x)`` in ``target``."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    y = x
    for n in range(1, cap + 1):
        y = T(y)
        if y in target:
            return n
    raise ReturnTimeExceeded(x, cap)


def _first_return(T, target, x, cap):
    """(N, pre-return orbit [x, ..., T^(N-1) x], T^N x)."""
    orbit = [x]
    y = x
    for n in range(1, cap + 1):
        y = T(y)
        if y in target:
            return n, orbit, y
        orbit.append(y)
    raise ReturnTimeExceeded(x, cap)


@dataclass(frozen=True)
class AdmissibilityCertificate:
    target: Interval
    cuts: tuple
    return_times: tuple       # N(x'_i), i = 0..n
    orbits: tuple             # {T^k(x'_i) : 0 <= k < N(x'_i)}
    returns: tuple            # T^N(x'_i)(x'_i)
    B: frozenset
    H1: bool
    H2: bool
    missing_discontinuities: tuple = ()

    @property
    def admissible(self) -> bool:
        return self.H1 and self.H2


def admissibility(T: IntervalExchange, target: Interval, cuts: Sequence,
                  cap: int = DEFAULT_CAP) -> AdmissibilityCertificate:
    cuts = tuple(cuts)
    if cuts[0] != target.lo or cuts[-1] != target.hi:
        raise ValueError("cuts must span the target interval")
    if any(not a < b for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cuts must be strictly increasing")
    times, orbits, returns = [], [], []
    for c in cuts:
        n, orb, ret = _first_return(T, target, c, cap)
        times.append(n)
        orbits.append(tuple(orb))
        returns.append(ret)
    # B is built from x'_1..x'_n only
    B = frozenset(p for orb in orbits[1:] for p in orb)
    missing = tuple(d for d in T.discontinuities if d not in B)
    TB = {T(p) for p in B}
    return AdmissibilityCertificate(
        target, cuts, tuple(times), tuple(orbits), tuple(returns), B,
        H1=not missing, H2=target.hi in TB, missing_discontinuities=missing)


@dataclass(frozen=True)
class Floor:
    base_index: int     # 1-based letter of the tower
    level: int          # k in T^k(J_i)
    interval: Interval  # open
    letter: int         # branch of T containing the floor


@dataclass(frozen=True)
class TowerDecomposition:
    T: IntervalExchange
    target: Interval
    cuts: tuple
    certificate: AdmissibilityCertificate
    bases: tuple              # open intervals J_i
    return_times: tuple       # r_i
    itineraries: tuple        # tuple of letter tuples
    floors: tuple             # all Floor objects
    tops: tuple               # T^{r_i}(J_i), open
    matrix: tuple = field(default=())

    def words(self) -> tuple:
        return tuple("".join(map(str, w)) for w in self.itineraries)


def _open_image(branch: Branch, iv: Interval) -> Interval:
    a, b = branch(iv.lo), branch(iv.hi)
    return Interval.open(a, b) if branch.sign > 0 else Interval.open(b, a)


def towers(T: IntervalExchange, target: Interval, cuts: Sequence,
           cap: int = DEFAULT_CAP,
           certificate: AdmissibilityCertificate | None = None) -> TowerDecomposition:
    """Towers over the open bases between consecutive cuts."""
    cuts = tuple(cuts)
    if certificate is None:
        certificate = admissibility(T, target, cuts, cap)
    if not certificate.admissible:
        raise TowerError("target interval is not admissible for this map")
    bases, rs, words, floors, tops = [], [], [], [], []
    for i in range(1, len(cuts)):
        J = Interval.open(cuts[i - 1], cuts[i])
        mid = J.midpoint
        r = return_time(T, target, mid, cap)
        word = []
        floor_iv, x = J, mid
        for k in range(r):
            j = T.branch_index(x)
            dom = T.branches[j].domain
            # the whole floor, not only its midpoint, must sit in one branch interior
            if floor_iv.lo < dom.lo or floor_iv.hi > dom.hi:
                raise TowerError(
                    f"floor {k} of tower {i} is {floor_iv}, not inside branch {j + 1} {dom}")
            if k >= 1 and floor_iv.lo < target.hi:
                raise TowerError(f"floor {k} of tower {i} meets the target before returning")
            floors.append(Floor(i, k, floor_iv, j + 1))
            word.append(j + 1)
            floor_iv = _open_image(T.branches[j], floor_iv)
            x = T.branches[j](x)
        if floor_iv.lo < target.lo or floor_iv.hi > target.hi:
            raise TowerError(f"top of tower {i} is {floor_iv}, not inside the target")
        bases.append(J)
        rs.append(r)
        words.append(tuple(word))
        tops.append(floor_iv)
    ordered = sorted(floors, key=lambda f: _Key(f.interval.lo))
    for f1, f2 in zip(ordered, ordered[1:]):
        if f2.interval.lo < f1.interval.hi:
            raise TowerError(
                f"floors overlap: tower {f1.base_index} level {f1.level} {f1.interval} "
                f"and tower {f2.base_index} level {f2.level} {f2.interval}")
    dec = TowerDecomposition(T, target, cuts, certificate, tuple(bases), tuple(rs),
                             tuple(words), tuple(floors), tuple(tops))
    object.__setattr__(dec, "matrix", substitution_matrix(dec))
    return dec


class _Key:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return self.v < other.v


def substitution_matrix(decomposition: TowerDecomposition) -> tuple:
    """``m[j][i]`` = number of occurrences of letter ``j+1`` in the word of tower ``i+1``."""
    n = len(decomposition.T)
    m = [[0] * len(decomposition.itineraries) for _ in range(n)]
    for i, word in enumerate(decomposition.itineraries):
        for letter in word:
            m[letter - 1][i] += 1
    return tuple(tuple(row) for row in m)


def _compose_word(T: IntervalExchange, word) -> tuple:
    sign, offset = 1, 0 * T.length
    for letter in word:
        b = T.branches[letter - 1]
        sign, offset = b.compose_after(Branch(b.domain, sign, offset))
    return sign, offset


def poincare_iet(T: IntervalExchange, decomposition: TowerDecomposition) -> IntervalExchange:
    """First-return map of ``T`` on the target, one branch per tower.

    A cut point belongs to whichever adjacent branch formula reproduces its
    actual first return; when both do, it goes to the branch on its right.
    """
    dec = decomposition
    cuts, cert = dec.cuts, dec.certificate
    maps = [_compose_word(T, w) for w in dec.itineraries]

    def value(i, x):
        s, b = maps[i]
        return b + x if s > 0 else b - x

    n = len(maps)
    owner = []
    for k, c in enumerate(cuts):
        actual = cert.returns[k]
        right = k < n and value(k, c) == actual
        left = k > 0 and value(k - 1, c) == actual
        if right and (k < n):
            owner.append(k)
        elif left:
            owner.append(k - 1)
        else:
            raise TowerError(f"return of cut point {k} matches neither adjacent branch")
    branches = []
    for i in range(n):
        dom = Interval(cuts[i], cuts[i + 1], owner[i] == i, owner[i + 1] == i)
        s, b = maps[i]
        branches.append(Branch(dom, s, b))
    return IntervalExchange(dec.target.hi, branches)


def exhaustiveness_H3(T: IntervalExchange, decomposition: TowerDecomposition) -> bool:
    """Exact check of ``sum_i r_i |J_i| == |I|``."""
    total = sum((r * J.length for r, J in zip(decomposition.return_times, decomposition.bases)),
                0 * T.length)
    return total == T.length


@dataclass(frozen=True)
class SelfSimilarityReport:
    scale: object
    branches_match: bool
    matrix: tuple
    matrix_matches: bool | None
    mismatches: tuple = ()

    @property
    def self_similar(self) -> bool:
        return self.branches_match


def self_similarity(T: IntervalExchange, decomposition: TowerDecomposition,
                    expected_matrix=None) -> SelfSimilarityReport:
    """Compare the first-return map with ``L T L^-1``, ``L(x) = (a'/a) x``.

    Only breakpoints, signs and offsets are compared; endpoint flags are
    irrelevant off the cut points.
    """
    scale = decomposition.target.hi / T.length
    Tp = poincare_iet(T, decomposition)
    ref = T.scaled(scale)
    bad = []
    if len(Tp) != len(ref):
        bad.append(f"branch count {len(Tp)} != {len(ref)}")
    else:
        for i, (a, b) in enumerate(zip(Tp.branches, ref.branches)):
            if a.domain.lo != b.domain.lo or a.domain.hi != b.domain.hi:
                bad.append(f"branch {i + 1}: domain {a.domain} != {b.domain}")
            if a.sign != b.sign:
                bad.append(f"branch {i + 1}: sign {a.sign} != {b.sign}")
            if a.offset != b.offset:
                bad.append(f"branch {i + 1}: offset {_dec(a.offset)} != {_dec(b.offset)}")
    M = decomposition.matrix
    mm = None if expected_matrix is None else tuple(map(tuple, expected_matrix)) == M
    return SelfSimilarityReport(scale, not bad, M, mm, tuple(bad))


def _dec(x, digits=9):
    return to_decimal(x, digits)


@dataclass(frozen=True)
class ConnectionScan:
    horizon: int
    connection: tuple | None   # (i, k, j): T^k(x_i) == x_j

    @property
    def clean(self) -> bool:
        return self.connection is None


def connection_scan(T: IntervalExchange, horizon: int = 1000) -> ConnectionScan:
    """Look for ``T^k(x_i) = x_j`` with ``1 <= k <= horizon`` among discontinuities."""
    disc = T.discontinuities
    index = {d: j for j, d in enumerate(disc)}
    for i, d in enumerate(disc):
        x = d
        for k in range(1, horizon + 1):
            x = T(x)
            j = index.get(x)
            if j is not None:
                return ConnectionScan(horizon, (i + 1, k, j + 1))
    return ConnectionScan(horizon, None)


# -- the certificate chain --------------------------------------------------

def unit_cuts() -> tuple:
    nu = constants().nu
    zero, one = FieldElement(0), FieldElement(1)
    return (zero, nu[0], nu[0] + nu[1], nu[0] + nu[1] + nu[2], one)


def eta_cuts() -> tuple:
    inv = 1 / ETA
    return tuple(c * inv for c in unit_cuts())


@dataclass
class Link:
    name: str
    passed: bool
    witnesses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"link": self.name, "status": "pass" if self.passed else "fail",
                "witnesses": dict(self.witnesses)}


@dataclass
class CertificateReport:
    links: list
    digits: int = 6

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "digits": self.digits,
                "links": [link.to_dict() for link in self.links]}


def _run(links, name, fn):
    try:
        ok, wit = fn()
    except (ReturnTimeExceeded, TowerError, ValidationError, ValueError) as exc:
        log.info("link %s failed: %s", name, exc)
        links.append(Link(name, False, {"error": str(exc)}))
        return False
    links.append(Link(name, bool(ok), wit))
    return bool(ok)


def transitivity_certificate(T: IntervalExchange | None = None, S: IntervalExchange | None = None,
                             cap: int = DEFAULT_CAP, horizon: int = 1000,
                             digits: int = 6) -> CertificateReport:
    """Run the chain that certifies topological transitivity of ``T``.

    1. ``[0, 1]`` admissible for ``T`` and its towers well formed;
    2. (H3) for ``T`` on ``[0, 1]``;
    3. the first-return map equals ``S``;
    4. ``[0, 1/eta]`` admissible for ``S``;
    5. ``S`` self-similar there, (H3), and the substitution matrix is ``P``
       and positive (H4);
    6. no connection between discontinuities of ``T`` within ``horizon``.
    """
    T = isometric_model() if T is None else T
    S = map_S() if S is None else S
    links: list = []
    d = lambda x: to_decimal(x, digits)  # noqa: E731
    one = Interval.closed(FieldElement(0), FieldElement(1))
    small = Interval.closed(FieldElement(0), 1 / ETA)
    ctx: dict = {}

    def valid_T():
        v = T.validate()
        return True, {"flips": ",".join(map(str, v.flips))}

    def adm_T():
        c = admissibility(T, one, unit_cuts(), cap)
        ctx["cT"] = c
        return c.admissible, {"H1": str(c.H1), "H2": str(c.H2),
                              "N": ",".join(map(str, c.return_times)),
                              "missing": ",".join(d(x) for x in c.missing_discontinuities)}

    def towers_T():
        dec = towers(T, one, unit_cuts(), cap, ctx.get("cT"))
        ctx["dT"] = dec
        return True, {"r": ",".join(map(str, dec.return_times)), "words": ",".join(dec.words())}

    def h3_T():
        dec = ctx["dT"]
        total = sum((r * J.length for r, J in zip(dec.return_times, dec.bases)), FieldElement())
        return exhaustiveness_H3(T, dec), {"sum_r_len": d(total), "length": d(T.length)}

    def equals_S():
        Tp = poincare_iet(T, ctx["dT"])
        same = Tp == S
        return same, {"signs": ",".join(map(str, Tp.signs))}

    def adm_S():
        c = admissibility(S, small, eta_cuts(), cap)
        ctx["cS"] = c
        return c.admissible, {"H1": str(c.H1), "H2": str(c.H2),
                              "N": ",".join(map(str, c.return_times))}

    def towers_S():
        dec = towers(S, small, eta_cuts(), cap, ctx.get("cS"))
        ctx["dS"] = dec
        return True, {"r": ",".join(map(str, dec.return_times)), "words": ",".join(dec.words())}

    def selfsim_S():
        rep = self_similarity(S, ctx["dS"], P)
        ctx["rS"] = rep
        return rep.self_similar, {"scale": d(rep.scale), "mismatches": "; ".join(rep.mismatches)}

    def h3_S():
        return exhaustiveness_H3(S, ctx["dS"]), {}

    def h4_S():
        M = ctx["dS"].matrix
        positive = all(v >= 1 for row in M for v in row)
        return positive and ctx["rS"].matrix_matches, {
            "M": ";".join(",".join(map(str, row)) for row in M),
            "M_equals_P": str(ctx["rS"].matrix_matches)}

    def no_connection():
        scan = connection_scan(T, horizon)
        wit = {"horizon": str(horizon)}
        if scan.connection:
            wit["connection"] = "T^%d(x_%d) = x_%d" % (scan.connection[1], scan.connection[0],
                                                        scan.connection[2])
        return scan.clean, wit

    chain = [
        ("T is a 4-IET with flips", valid_T, ()),
        ("[0,1] admissible for T (H1, H2)", adm_T, ()),
        ("towers of T over [0,1]", towers_T, ("cT",)),
        ("towers of T over [0,1] exhaustive (H3)", h3_T, ("dT",)),
        ("first return of T to [0,1] equals S", equals_S, ("dT",)),
        ("[0,1/eta] admissible for S (H1, H2)", adm_S, ()),
        ("towers of S over [0,1/eta]", towers_S, ("cS",)),
        ("S self-similar on [0,1/eta]", selfsim_S, ("dS",)),
        ("towers of S over [0,1/eta] exhaustive (H3)", h3_S, ("dS",)),
        ("substitution matrix of S is P and positive (H4)", h4_S, ("dS", "rS")),
        (f"no T-connection up to {horizon} iterates", no_connection, ()),
    ]
    for name, fn, needs in chain:
        if needs and any(k not in ctx for k in needs):
            links.append(Link(name, False, {"error": "prerequisite link failed"}))
            continue
        _run(links, name, fn)
    return CertificateReport(links, digits)
