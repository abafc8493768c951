"""Published decimal values used as regression targets.

Values are strings exactly as printed (leading digits, usually followed by an
ellipsis in print).  Symbolic entries name an exact point: ``x1, x2, x3`` are
the discontinuities of T, ``x4'`` is 1, ``y1, y2, y3`` the discontinuities
of S and ``y4'`` is ``1/eta``.
"""

from __future__ import annotations

from .numfield import ETA, FieldElement, constants, to_decimal

ETA_PRINTED = "10.331851"
NU_PRINTED = ("0.344446", "0.203947", "0.107159", "0.344446")
LAMBDA_PRINTED = ("0.344446", "0.3111078", "0.4516059", "0.203947")
LAMBDA_NORM_PRINTED = "1.311107"
LAMBDA_6_DIGITS = ("0.344446", "0.311108", "0.451606", "0.203947")
T_BREAKPOINTS_PRINTED = ("0.344446", "0.655553", "1.107159", "1.311107")
S_BREAKPOINTS_PRINTED = ("0.344446", "0.548394", "0.655553")
INV_ETA_PRINTED = "0.096788"

D_PRINTED = ("0.213841", "4.036935", "1.428826")
FREQ_PRINTED = ("0.3444", "0.4182", "0.2372")

# first returns of the cut points of [0, 1] under T:
# (pre-return orbit, return value, N)
T_UNIT_CUTS = (
    (("0",), "0.796052", 1),
    (("x1", "1.311107"), "0.796052", 2),
    (("0.548394", "x3"), "x4'", 2),
    (("x2",), "0.451606", 1),
    (("1",), "0.107159", 1),
)

# towers of T over [0, 1]: (midpoint, floors, top, r, word)
T_UNIT_TOWERS = (
    ("0.172223", ("0.172223",), "0.623829", 1, "1"),
    ("0.4464201", ("0.446420", "1.209134"), "0.898026", 2, "24"),
    ("0.601974", ("0.601974", "1.053579"), "0.053579", 2, "23"),
    ("0.827777", ("0.827777",), "0.2793829", 1, "3"),
)

# first returns of the cut points of [0, 1/eta] under S
S_ETA_CUTS = (
    (("0", "0.796052", "0.311107", "0.484944", "0.936550", "0.170609", "0.625442"),
     "0.077048", 7),
    (("0.033338", "0.762713", "y1", "0.796052", "0.311107", "0.484944", "0.936550",
      "0.170609", "0.625442"), "0.077048", 9),
    (("0.053078", "0.742974", "0.364185", "0.815791", "0.291368", "0.504683", "0.956289",
      "0.150869", "0.645182"), "y4'", 9),
    (("0.063449", "0.732602", "0.374557", "0.826163", "0.280996", "0.515055", "0.966661",
      "0.140498", "y3", "0.451605", "0.903211", "0.203947", "0.592104"), "0.043710", 13),
    (("0.096788", "0.699263", "0.407895", "0.859501", "0.247658", "y2", "1", "0.107159",
      "0.688892", "0.418267", "0.869873", "0.237286", "0.558765"), "0.010371", 13),
)

# orbits of the tower midpoints of S over [0, 1/eta]: (midpoint, floors, top, r)
S_ETA_MIDPOINTS = (
    ("0.016669", ("0.016669", "0.779382", "0.327776", "0.468275", "0.919881", "0.187278",
                  "0.608773"), "0.060379", 7),
    ("0.043208", ("0.043208", "0.752843", "0.354315", "0.805921", "0.301237", "0.494814",
                  "0.946420", "0.160739", "0.635312"), "0.086918", 9),
    ("0.0582639", ("0.058263", "0.737788", "0.369371", "0.820977", "0.286182", "0.509869",
                   "0.961475", "0.145684", "0.650368", "0.101973", "0.694078", "0.413081",
                   "0.864687", "0.242472", "0.553579"), "0.005185", 15),
    ("0.08011894", ("0.080118", "0.715933", "0.391226", "0.842832", "0.264327", "0.531724",
                    "0.983330", "0.123829", "0.672223", "0.434936", "0.886542", "0.220617",
                    "0.575434"), "0.027040", 13),
)

S_ETA_WORDS = ("1412413", "142412413", "142412413142413", "1424124142413")


def symbols() -> dict:
    c = constants()
    lam, nu = c.lam, c.nu
    one = FieldElement(1)
    return {
        "x1": lam[0],
        "x2": lam[0] + lam[1],
        "x3": lam[0] + lam[1] + lam[2],
        "x4'": one,
        "y1": nu[0],
        "y2": nu[0] + nu[1],
        "y3": nu[0] + nu[1] + nu[2],
        "y4'": 1 / ETA,
    }


def printed_digits(s: str) -> int:
    return len(s.split(".")[1]) if "." in s else 0


def matches_printed(x, printed: str) -> bool:
    """True when ``printed`` is a faithful rendering of the exact value ``x``.

    Symbolic entries must match exactly.  A decimal string with ``d``
    fractional digits matches when it equals ``x`` either truncated or
    rounded to ``d`` digits, i.e. it is within one unit of its last digit.
    """
    syms = symbols()
    if printed in syms:
        return FieldElement.coerce(x) == syms[printed]
    d = printed_digits(printed)
    if d == 0:
        return FieldElement.coerce(x) == int(printed)
    return printed in (to_decimal(x, d, "down"), to_decimal(x, d, "half_away"))
