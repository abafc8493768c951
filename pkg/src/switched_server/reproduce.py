"""Recompute the published tables and compare with the printed values."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import reference_values as ref
from .iet import Interval, isometric_model, map_S
from .numfield import ETA, P, constants, mat_vec, to_decimal
from .return_map import admissibility, eta_cuts, towers, unit_cuts

__all__ = ["TableCheck", "spectral_check", "table_unit_cuts", "table_unit_towers",
           "table_eta_cuts", "table_eta_midpoints", "table_eta_words", "all_tables"]


@dataclass
class TableCheck:
    name: str
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["match"] for r in self.rows)

    def add(self, label: str, computed, expected, match: bool | None = None, digits: int = 6):
        if match is None:
            match = ref.matches_printed(computed, expected)
        if not isinstance(computed, (int, str)):
            d = max(digits, ref.printed_digits(expected) if isinstance(expected, str) else 0)
            computed = to_decimal(computed, d)
        self.rows.append({"item": label, "computed": str(computed), "expected": str(expected),
                          "match": bool(match)})

    def to_dict(self) -> dict:
        return {"table": self.name, "status": "pass" if self.passed else "fail", "rows": self.rows}


def spectral_check() -> TableCheck:
    c = constants()
    chk = TableCheck("spectral data")
    chk.add("eta", c.eta, ref.ETA_PRINTED)
    for i, (v, s) in enumerate(zip(c.nu, ref.NU_PRINTED), 1):
        chk.add(f"nu{i}", v, s)
    for i, (v, s) in enumerate(zip(c.lam, ref.LAMBDA_6_DIGITS), 1):
        chk.add(f"lambda{i}", v, s)
    chk.add("|lambda|", c.lam_norm, ref.LAMBDA_NORM_PRINTED)
    chk.add("1/eta", 1 / ETA, ref.INV_ETA_PRINTED)
    exact = all(a == c.eta * b for a, b in zip(mat_vec(P, c.nu), c.nu))
    chk.add("P nu = eta nu", "exact" if exact else "differs", "exact", exact)
    return chk


def _cut_table(name, T, target, cuts, expected):
    cert = admissibility(T, target, cuts)
    chk = TableCheck(name)
    for i, (orb, ret, N) in enumerate(expected):
        chk.add(f"N(x{i}')", cert.return_times[i], N, cert.return_times[i] == N)
        if len(cert.orbits[i]) != len(orb):
            chk.add(f"orbit length {i}", len(cert.orbits[i]), len(orb), False)
        for k, (x, s) in enumerate(zip(cert.orbits[i], orb)):
            chk.add(f"T^{k}(x{i}')", x, s)
        chk.add(f"return of x{i}'", cert.returns[i], ret)
    chk.add("H1", str(cert.H1), "True", cert.H1)
    chk.add("H2", str(cert.H2), "True", cert.H2)
    return chk


def table_unit_cuts() -> TableCheck:
    return _cut_table("first returns of T to [0,1]", isometric_model(), Interval.closed(0, 1),
                      unit_cuts(), ref.T_UNIT_CUTS)


def table_eta_cuts() -> TableCheck:
    return _cut_table("first returns of S to [0,1/eta]", map_S(), Interval.closed(0, 1 / ETA),
                      eta_cuts(), ref.S_ETA_CUTS)


def _tower_table(name, T, target, cuts, expected, with_words):
    dec = towers(T, target, cuts)
    chk = TableCheck(name)
    for i, row in enumerate(expected):
        mid_s, floors, top, r = row[:4]
        mid = dec.bases[i].midpoint
        chk.add(f"c{i + 1}", mid, mid_s)
        chk.add(f"r{i + 1}", dec.return_times[i], r, dec.return_times[i] == r)
        orb = T.orbit(mid, dec.return_times[i])
        for k, (x, s) in enumerate(zip(orb, floors)):
            chk.add(f"T^{k}(c{i + 1})", x, s)
        chk.add(f"T^r(c{i + 1})", orb[-1], top)
        if with_words:
            chk.add(f"word {i + 1}", dec.words()[i], row[4], dec.words()[i] == row[4])
    return chk


def table_unit_towers() -> TableCheck:
    return _tower_table("towers of T over [0,1]", isometric_model(), Interval.closed(0, 1),
                        unit_cuts(), ref.T_UNIT_TOWERS, True)


def table_eta_midpoints() -> TableCheck:
    return _tower_table("tower midpoints of S over [0,1/eta]", map_S(),
                        Interval.closed(0, 1 / ETA), eta_cuts(), ref.S_ETA_MIDPOINTS, False)


def table_eta_words() -> TableCheck:
    dec = towers(map_S(), Interval.closed(0, 1 / ETA), eta_cuts())
    chk = TableCheck("substitution words of S over [0,1/eta]")
    for i, (w, s) in enumerate(zip(dec.words(), ref.S_ETA_WORDS), 1):
        chk.add(f"sigma({i})", w, s, w == s)
    chk.add("r", ",".join(map(str, dec.return_times)), "7,9,15,13",
            dec.return_times == (7, 9, 15, 13))
    return chk


def all_tables() -> list:
    return [spectral_check(), table_unit_cuts(), table_unit_towers(), table_eta_cuts(),
            table_eta_midpoints(), table_eta_words()]
