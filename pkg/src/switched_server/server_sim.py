"""Event-driven simulation of the three-tank switched server.

Each tank fills at rate 1/3 and the server drains its tank at rate 1, so a
served tank with level ``v_j`` empties after ``3/2 * v_j`` while the other
two gain ``v_j / 2`` each.  When tank ``i`` empties the server moves to the
tank ``k != i`` with the largest ``d_ik * v_k``; at the three switch corners
``r_1, r_2, r_3`` (where the two scaled volumes tie) the right-continuity
rule sends emptied tank 1 to 3, 2 to 1 and 3 to 2.

Exact runs keep the three levels as integer numerators over a shared
denominator.  Beyond ``EXACT_SWITCH_CAP`` switches the run continues in
fixed point with ``FIXED_BITS`` fractional bits; the half-level transfer
is split into ``floor(v_j/2)`` and ``v_j - floor(v_j/2)`` so the total stays
exactly one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .contraction import PWContraction, from_d
from .numfield import to_decimal

__all__ = [
    "ServerParams",
    "ServerState",
    "SwitchEvent",
    "SimulationResult",
    "VertexError",
    "TieError",
    "params_from_ratios",
    "next_switch",
    "server_for",
    "poincare_F",
    "phi",
    "phi_inv",
    "conjugacy_check",
    "simulate",
    "iter_switches",
    "trajectory",
    "EXACT_SWITCH_CAP",
    "FIXED_BITS",
]

EXACT_SWITCH_CAP = 20_000
FIXED_BITS = 512
E1 = (Fraction(1), Fraction(0), Fraction(0))
E2 = (Fraction(0), Fraction(1), Fraction(0))
E3 = (Fraction(0), Fraction(0), Fraction(1))

# emptied tank -> server chosen at the switch corner of that edge
_CORNER_RULE = {0: 2, 1: 0, 2: 1}


class VertexError(ValueError):
    """The state has two empty tanks, where the dynamics is not defined."""


class TieError(RuntimeError):
    """Two candidate tanks have equal scaled volume away from a switch corner."""

    def __init__(self, msg, event_index=None):
        super().__init__(msg if event_index is None else f"{msg} (event {event_index})")
        self.event_index = event_index


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass an int, Fraction or decimal string")
    return Fraction(x)


@dataclass(frozen=True)
class ServerParams:
    """Scaled-volume weights ``d[i][k]`` (0-based, diagonal unused)."""
    d: tuple

    def __post_init__(self):
        d = tuple(tuple(_frac(v) for v in row) for row in self.d)
        for i in range(3):
            for k in range(3):
                if i != k and d[i][k] <= 0:
                    raise ValueError(f"d{i + 1}{k + 1} must be positive")
        object.__setattr__(self, "d", d)

    def dij(self, i: int, j: int) -> Fraction:
        """1-based accessor."""
        return self.d[i - 1][j - 1]

    @property
    def ratios(self) -> tuple:
        return (self.dij(1, 3) / self.dij(1, 2),
                self.dij(2, 1) / self.dij(2, 3),
                self.dij(3, 2) / self.dij(3, 1))

    def contraction(self) -> PWContraction:
        return from_d(*self.ratios)

    def corners(self) -> tuple:
        """Switch corners ``r_1, r_2, r_3`` as points of the simplex."""
        d = self.dij
        s1 = d(1, 2) + d(1, 3)
        s2 = d(2, 3) + d(2, 1)
        s3 = d(3, 1) + d(3, 2)
        return ((Fraction(0), d(1, 3) / s1, d(1, 2) / s1),
                (d(2, 3) / s2, Fraction(0), d(2, 1) / s2),
                (d(3, 2) / s3, d(3, 1) / s3, Fraction(0)))


def params_from_ratios(d1, d2, d3) -> ServerParams:
    """Canonical gauge ``d12 = d23 = d31 = 1``, ``d13 = d1``, ``d21 = d2``, ``d32 = d3``."""
    d1, d2, d3 = (_frac(v) for v in (d1, d2, d3))
    if min(d1, d2, d3) <= 0:
        raise ValueError("ratios must be positive")
    one, zero = Fraction(1), Fraction(0)
    return ServerParams(((zero, one, d1), (d2, zero, one), (one, d3, zero)))


@dataclass(frozen=True)
class ServerState:
    v: tuple
    server: int        # 1-based
    t: Fraction = Fraction(0)

    def __post_init__(self):
        v = tuple(_frac(x) for x in self.v)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", _frac(self.t))
        if any(x < 0 for x in v) or sum(v) != 1:
            raise ValueError(f"{v} is not a point of the simplex")
        if self.server not in (1, 2, 3):
            raise ValueError("server must be 1, 2 or 3")

    @property
    def on_boundary(self) -> bool:
        return any(x == 0 for x in self.v)


@dataclass(frozen=True)
class SwitchEvent:
    k: int
    t: Fraction
    v: tuple
    server: int


def _choose(i: int, v: Sequence, d) -> int:
    """0-based server after tank ``i`` (0-based) empties; ``v`` are comparable scalars."""
    a, b = [k for k in range(3) if k != i]
    sa, sb = d[i][a] * v[a], d[i][b] * v[b]
    if sa > sb:
        return a
    if sb > sa:
        return b
    if v[a] == 0 and v[b] == 0:
        raise VertexError("all tanks empty")
    return _CORNER_RULE[i]


def server_for(p: Sequence, params: ServerParams) -> int:
    """1-based server the region decomposition assigns to a boundary point."""
    p = tuple(_frac(x) for x in p)
    if sum(p) != 1 or any(x < 0 for x in p):
        raise ValueError(f"{p} is not a point of the simplex")
    zeros = [i for i in range(3) if p[i] == 0]
    if not zeros:
        raise ValueError(f"{p} is not on the boundary")
    if len(zeros) == 2:
        # vertices e_3, e_1, e_2 belong to the regions of servers 3, 1, 2
        return [i for i in range(3) if p[i] == 1][0] + 1
    return _choose(zeros[0], p, params.d) + 1


def next_switch(state: ServerState, params: ServerParams) -> tuple:
    """Run until the served tank empties; return ``(dt, new_state)``."""
    v, j = state.v, state.server - 1
    if sum(1 for x in v if x == 0) >= 2:
        raise VertexError(f"state {tuple(map(str, v))} is a vertex of the simplex")
    if v[j] == 0:
        raise ValueError(f"server {j + 1} is attached to an empty tank")
    dt = Fraction(3, 2) * v[j]
    half = v[j] / 2
    w = tuple(Fraction(0) if k == j else v[k] + half for k in range(3))
    nxt = _choose(j, w, params.d)
    return dt, ServerState(w, nxt + 1, state.t + dt)


def poincare_F(p: Sequence, params: ServerParams) -> tuple:
    """Boundary Poincare map: serve the tank picked by the region rule until empty."""
    p = tuple(_frac(x) for x in p)
    j = server_for(p, params) - 1
    half = p[j] / 2
    return tuple(Fraction(0) if k == j else p[k] + half for k in range(3))


def phi(t) -> tuple:
    """Anticlockwise arc-length parametrisation of the boundary, ``phi(0) = e2``."""
    t = _frac(t)
    if t < 0 or t > 1:
        raise ValueError(f"{t} is outside [0, 1]")
    zero = Fraction(0)
    if t < Fraction(1, 3):
        return (zero, 1 - 3 * t, 3 * t)
    if t < Fraction(2, 3):
        return (3 * t - 1, zero, 2 - 3 * t)
    return (3 - 3 * t, 3 * t - 2, zero)


def phi_inv(p: Sequence, tol=None) -> Fraction:
    """Inverse of :func:`phi`; ``e2`` maps to 0.

    Exact inputs must lie on the boundary.  With ``tol`` (approximate mode) the
    smallest coordinate is snapped to zero when it is below ``tol``.
    """
    p = tuple(_frac(x) for x in p)
    if tol is not None:
        tol = _frac(tol)
        if abs(sum(p) - 1) > tol:
            raise ValueError("point is off the simplex beyond tolerance")
        m = min(range(3), key=lambda i: p[i])
        if abs(p[m]) > tol:
            raise ValueError("point is off the boundary beyond tolerance")
        p = tuple(Fraction(0) if i == m else p[i] for i in range(3))
    elif sum(p) != 1 or any(x < 0 for x in p):
        raise ValueError(f"{p} is not a point of the simplex")
    if p[0] == 0:
        return p[2] / 3
    if p[1] == 0:
        return Fraction(1, 3) + p[0] / 3
    if p[2] == 0:
        return Fraction(2, 3) + p[1] / 3
    raise ValueError(f"{p} is not on the boundary")


def conjugacy_check(params: ServerParams, samples: int = 1000, seed: int = 0,
                    f: PWContraction | None = None, include_breakpoints: bool = True):
    """``max |phi_inv(F(phi(z))) - f(z)|`` over rational samples ``z``."""
    import random
    if f is None:
        f = params.contraction()
    rng = random.Random(seed)
    zs = [Fraction(rng.randrange(0, 2 ** 40 + 1), 2 ** 40) for _ in range(samples)]
    if include_breakpoints:
        zs += [Fraction(0), Fraction(1, 3), Fraction(2, 3), Fraction(1), *f.breakpoints]
    dev = Fraction(0)
    for z in zs:
        dev = max(dev, abs(phi_inv(poincare_F(phi(z), params)) - f(z)))
    return dev


# -- long runs ---------------------------------------------------------------

class _Engine:
    """Integer state ``V / D`` (shared denominator) with exact or fixed steps."""

    def __init__(self, v0: Sequence, server: int, params: ServerParams,
                 exact_cap: int, bits: int):
        v0 = tuple(_frac(x) for x in v0)
        self.D = math.lcm(*(x.denominator for x in v0))
        self.V = [x.numerator * (self.D // x.denominator) for x in v0]
        self.Tn = 0                      # t = Tn / (2 D)
        self.j = server - 1
        # integer weights: d_ik = W[i][k] / den
        den = math.lcm(*(params.d[i][k].denominator for i in range(3) for k in range(3) if i != k))
        self.W = [[(params.d[i][k] * den).numerator if i != k else 0 for k in range(3)]
                  for i in range(3)]
        self.exact = True
        self.exact_cap = exact_cap
        self.bits = bits
        self.steps = 0
        self.max_drift = 0

    def _to_fixed(self):
        S = 1 << self.bits
        newV = [(2 * x * S + self.D) // (2 * self.D) for x in self.V]
        # fix the total by adjusting the largest level
        big = max(range(3), key=lambda i: newV[i])
        newV[big] += S - sum(newV)
        self.Tn = (2 * self.Tn * S + self.D) // (2 * self.D)
        self.D = S
        self.V = newV
        self.exact = False

    def step(self) -> int:
        """Serve tank ``j`` until empty; return the new 0-based server."""
        if self.exact and self.steps >= self.exact_cap:
            self._to_fixed()
        V, j = self.V, self.j
        if V[j] == 0:
            raise ValueError(f"server {j + 1} is attached to an empty tank")
        a, b = [k for k in range(3) if k != j]
        if self.exact:
            # over the doubled denominator: others become 2V_k + V_j and
            # t + 3V_j/(2D) = (2Tn + 6V_j) / (2 * 2D)
            self.Tn = 2 * self.Tn + 6 * V[j]
            V[a], V[b] = 2 * V[a] + V[j], 2 * V[b] + V[j]
            V[j] = 0
            self.D *= 2
            # strip common powers of two to keep numbers short
            g = self.D | V[a] | V[b] | self.Tn
            tz = (g & -g).bit_length() - 1
            if tz:
                self.D >>= tz
                V[a] >>= tz
                V[b] >>= tz
                self.Tn >>= tz
        else:
            h = V[j] >> 1
            self.Tn += 3 * V[j]
            V[a] += h
            V[b] += V[j] - h
            V[j] = 0
        self.j = _choose(j, V, self.W)
        self.steps += 1
        return self.j

    def state(self) -> tuple:
        D = self.D
        return tuple(Fraction(x, D) for x in self.V)

    def time(self) -> Fraction:
        return Fraction(self.Tn, 2 * self.D)


def _initial_server(v0: Sequence) -> int:
    """Default server: the fullest tank, lowest index on ties."""
    m = max(v0)
    return [i for i in range(3) if v0[i] == m][0] + 1


def iter_switches(params: ServerParams, v0: Sequence, n: int, server: int | None = None,
                  exact_cap: int = EXACT_SWITCH_CAP, bits: int = FIXED_BITS,
                  materialize: bool = True) -> Iterator:
    """Yield switch events ``k = 1..n``.

    With ``materialize=False`` only the 1-based server after each switch is
    yielded, which avoids building rationals on long runs.
    """
    v0 = tuple(_frac(x) for x in v0)
    ServerState(v0, server or 1)        # validates the simplex point
    if sum(1 for x in v0 if x == 0) >= 2:
        raise VertexError("initial state is a vertex of the simplex")
    if server is None:
        server = _initial_server(v0)
    if v0[server - 1] == 0:
        raise ValueError(f"initial server {server} is attached to an empty tank")
    eng = _Engine(v0, server, params, exact_cap, bits)
    for k in range(1, n + 1):
        j = eng.step()
        if materialize:
            yield SwitchEvent(k, eng.time(), eng.state(), j + 1)
        else:
            yield j + 1


@dataclass(frozen=True)
class SimulationResult:
    events: tuple
    n: int
    counts: tuple
    precision_mode: str
    exact_switches: int
    error_envelope: Fraction

    @property
    def freq(self) -> tuple:
        return tuple(Fraction(c, self.n) for c in self.counts)

    def frequency_report(self, digits: int = 6) -> dict:
        return {
            "n": self.n,
            "freq1": to_decimal(self.freq[0], digits),
            "freq2": to_decimal(self.freq[1], digits),
            "freq3": to_decimal(self.freq[2], digits),
            "precision_mode": self.precision_mode,
            "exact_switches": self.exact_switches,
            "error_envelope": to_decimal(self.error_envelope, digits),
            "error_envelope_log2": _log2(self.error_envelope),
        }

    def frequency_json(self, digits: int = 6) -> str:
        return json.dumps(self.frequency_report(digits), sort_keys=True, indent=2) + "\n"

    def events_csv(self, digits: int = 12) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "t", "v1", "v2", "v3", "server"])
        for e in self.events:
            w.writerow([e.k, to_decimal(e.t, digits), *(to_decimal(x, digits) for x in e.v),
                        e.server])
        return buf.getvalue()


def _log2(x: Fraction) -> int | None:
    """Exponent of a power of two (None for zero)."""
    if x == 0:
        return None
    return x.numerator.bit_length() - x.denominator.bit_length()


def simulate(params: ServerParams, v0: Sequence, n_switches: int,
             precision_mode: str = "auto", server: int | None = None,
             keep_events: bool = True, exact_cap: int = EXACT_SWITCH_CAP,
             bits: int = FIXED_BITS) -> SimulationResult:
    """Run ``n_switches`` switches from ``v0``.

    ``precision_mode`` is ``"exact"`` (never leave rational arithmetic),
    ``"fixed"`` (fixed point from the first switch) or ``"auto"`` (exact for
    the first ``exact_cap`` switches, then fixed point).  Frequencies count the
    server ``l(t_k)`` right after each switch ``k = 1..n``.
    """
    if n_switches < 1:
        raise ValueError("n_switches must be >= 1")
    if precision_mode == "exact":
        cap = n_switches
    elif precision_mode == "fixed":
        cap = 0
    elif precision_mode == "auto":
        cap = exact_cap
    else:
        raise ValueError(f"unknown precision mode {precision_mode!r}")
    counts = [0, 0, 0]
    events = []
    for ev in iter_switches(params, v0, n_switches, server, cap, bits, materialize=keep_events):
        s = ev.server if keep_events else ev
        counts[s - 1] += 1
        if keep_events:
            events.append(ev)
    fixed_used = n_switches > cap
    mode = "fixed" if cap == 0 else ("exact+fixed" if fixed_used else "exact")
    envelope = Fraction(2, 1 << bits) if fixed_used else Fraction(0)
    return SimulationResult(tuple(events), n_switches, tuple(counts), mode,
                            min(cap, n_switches), envelope)


def trajectory(events: Sequence, v0: Sequence, step, server: int | None = None) -> list:
    """Samples ``(t, v1, v2, v3)`` every ``step`` time units along the flow.

    Levels move linearly between events, so interpolation is exact.
    """
    step = _frac(step)
    if step <= 0:
        raise ValueError("step must be positive")
    v0 = tuple(_frac(x) for x in v0)
    knots = [(Fraction(0), v0)] + [(e.t, e.v) for e in events]
    out = []
    t = Fraction(0)
    seg = 0
    while seg < len(knots) - 1:
        (ta, va), (tb, vb) = knots[seg], knots[seg + 1]
        if t > tb:
            seg += 1
            continue
        s = (t - ta) / (tb - ta)
        out.append((t, *(a + s * (b - a) for a, b in zip(va, vb))))
        t += step
    return out
