"""Exact computations for an aperiodic three-tank switched server.

Modules:

* ``numfield``: exact arithmetic in Q(eta), eta the Perron root of P.
* ``iet``: interval exchanges with flips, the isometric model T and the map S.
* ``return_map``: first returns, Rauzy towers and the self-similarity certificate.
* ``semiconj``: visit series, the parameters d and the gap-resolution semiconjugacy.
* ``contraction``: piecewise contractions f_d, codings and attractor covers.
* ``server_sim``: the switched-server flow and its Poincare map.
* ``cli``: the ``switched-server`` command.
"""

from .contraction import PWContraction, from_d, natural_coding, periodicity_scan, unit_map
from .iet import IntervalExchange, isometric_model, map_S
from .numfield import ETA, FieldElement, constants
from .semiconj import check_semiconjugacy, gap_family, solve_parameters
from .server_sim import ServerParams, params_from_ratios, simulate

__version__ = "0.1.0"

__all__ = [
    "ETA", "FieldElement", "constants",
    "IntervalExchange", "isometric_model", "map_S",
    "solve_parameters", "gap_family", "check_semiconjugacy",
    "PWContraction", "from_d", "unit_map", "natural_coding", "periodicity_scan",
    "ServerParams", "params_from_ratios", "simulate",
]
