"""Frozen reference values, and the package checked against them.

The literals below were produced once by ``oracles.py`` (mpmath at 80 digits,
independent of the package) and are kept fixed as a regression surface.
"""

from fractions import Fraction

import mpmath as mp
import pytest

import oracles
from switched_server.numfield import constants
from switched_server.semiconj import solve_parameters

ETA = "10.331851412666623662316211625754"
NU = ("0.344446091267009050034859261604",
      "0.203947945777214306222532626367",
      "0.107159871688767593707748850424",
      "0.344446091267009050034859261604")
LAM = ("0.344446091267009050034859261604",
       "0.311107817465981899930281476791",
       "0.451605962955776643742608112029",
       "0.203947945777214306222532626367")
# truncation depth 64
U64 = ("0.274610329784625759749882147389",
       "0.124900819733738899224186098902",
       "0.404396055267732285032627046134",
       "0.196092795213903055993304707575")
D64 = ("0.213841203988078163070391387380",
       "4.036934618714867285236668702537",
       "1.428825607221519471544944169882")

TOL = mp.mpf(10) ** -28


def _close(x, s, tol=TOL):
    with mp.workdps(40):
        return abs(mp.mpf(x) - mp.mpf(s)) < tol


def _mpf(q):
    if isinstance(q, Fraction):
        return mp.mpf(q.numerator) / q.denominator
    return mp.mpf(q.to_decimal(40))


def test_oracle_eigendata_frozen():
    eta, nu, lam = oracles.eigendata()
    assert _close(eta, ETA)
    assert _close(oracles.eta_newton(), ETA)
    assert all(_close(a, b) for a, b in zip(nu, NU))
    assert all(_close(a, b) for a, b in zip(lam, LAM))


def test_oracle_parameters_frozen():
    u, _, d = oracles.solve_d(64)
    assert all(_close(a, b) for a, b in zip(u, U64))
    assert all(_close(a, b) for a, b in zip(d, D64))


def test_package_eigendata_matches_oracle():
    c = constants()
    with mp.workdps(40):
        assert _close(_mpf(c.eta), ETA)
        for x, s in zip(c.nu, NU):
            assert _close(_mpf(x), s)
        for x, s in zip(c.lam, LAM):
            assert _close(_mpf(x), s)


def test_package_parameters_match_oracle():
    sol = solve_parameters(64)
    with mp.workdps(40):
        for x, s in zip(sol.u, U64):
            assert _close(_mpf(x), s)
        for x, s in zip(sol.d, D64):
            assert _close(_mpf(x), s)


@pytest.mark.parametrize("K", [32, 128])
def test_package_parameters_match_oracle_other_depths(K):
    sol = solve_parameters(K, check_residual=False)
    _, _, d = oracles.solve_d(K)
    with mp.workdps(40):
        for x, y in zip(sol.d, d):
            assert abs(_mpf(x) - y) < mp.mpf(10) ** -25


def test_float_simulator_frequencies_near_lambda_ratios():
    d = [float(s) for s in D64]
    freq = oracles.float_frequencies(d, n=20_000)
    lam = [float(s) for s in LAM]
    n = sum(lam)
    target = (lam[2] / n, (lam[0] + lam[3]) / n, lam[1] / n)
    assert all(abs(a - b) < 0.01 for a, b in zip(freq, target))
