from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from switched_server.iet import (Branch, DomainError, Interval, IntervalExchange, ValidationError,
                                 from_lengths, isometric_model, map_S)
from switched_server.numfield import FieldElement, constants, to_decimal
from switched_server.reference_values import matches_printed

C = constants()
T = isometric_model()
S = map_S()
L1, L2, L3, L4 = C.lam
N1, N2, N3, N4 = C.nu
NORM = C.lam_norm


def test_isometric_model_shape():
    assert T.signs == (-1, -1, -1, -1)
    assert T.breakpoints == (L1, L1 + L2, L1 + L2 + L3)
    assert T.length == NORM
    assert T.offsets == (L1 + L3, L1 + NORM, L1 + L2 + L3, L1 + L3 + NORM)
    for x, s in zip(T.breakpoints, ("0.344446", "0.655553", "1.107159")):
        assert matches_printed(x, s)
    assert matches_printed(NORM, "1.311107")


def test_isometric_model_endpoints():
    doms = [b.domain for b in T.branches]
    assert [(d.lo_closed, d.hi_closed) for d in doms] == [(True, False)] * 3 + [(True, True)]


def test_map_S_shape():
    assert S.signs == (-1, 1, 1, -1)
    assert S.length == 1
    assert S.breakpoints == (N1, N1 + N2, N1 + N2 + N3)
    for x, s in zip(S.breakpoints, ("0.344446", "0.548394", "0.655553")):
        assert matches_printed(x, s)
    flags = [(b.domain.lo_closed, b.domain.hi_closed) for b in S.branches]
    assert flags == [(True, False), (True, True), (False, False), (True, True)]


def test_evaluate_examples():
    assert T(FieldElement()) == L1 + L3
    assert to_decimal(T(0), 6) == "0.796052"
    assert T(L1) == NORM
    assert T(NORM) == T(0)
    assert S(0) == 1 - N2
    assert to_decimal(S(0), 6) == "0.796052"


def test_orbit_examples():
    o = T.orbit(N1, 2)
    assert [to_decimal(x, 6, "down") for x in o] == ["0.344446", "1.311107", "0.796052"]
    o = T.orbit(N1 + N2, 2)
    assert o[1] == L1 + L2 + L3 and o[2] == 1
    assert T.orbit(N3, 0) == [N3]


def test_itinerary_matches_orbit():
    x = NORM / 7
    orb = T.orbit(x, 50)
    assert T.itinerary(x, 50) == tuple(T.letter(p) for p in orb[:50])


def test_evaluate_outside_domain():
    with pytest.raises(DomainError):
        T(-FieldElement(1, 0, 0) / 10)
    with pytest.raises(DomainError):
        T(NORM + 1)


def test_validate_reports_flips():
    assert T.validate().flips == (1, 2, 3, 4)
    assert S.validate().flips == (1, 4)


def test_validate_rejects_image_overlap():
    half = Fraction(1, 2)
    bad = from_lengths([half, half], [1, 1], [0, -half])
    with pytest.raises(ValidationError, match="overlap"):
        bad.validate()


def test_validate_rejects_bad_partition():
    dom = [Interval(0, Fraction(1, 2), True, True), Interval(Fraction(1, 2), 1, True, True)]
    bad = IntervalExchange(1, [Branch(dom[0], 1, Fraction(1, 2)), Branch(dom[1], 1, Fraction(-1, 2))])
    with pytest.raises(ValidationError, match="claimed by both"):
        bad.validate()


def test_validate_rejects_non_isometry():
    dom = Interval(0, 1, True, True)
    with pytest.raises(ValidationError, match="isometry"):
        IntervalExchange(1, [Branch(dom, 2, 0)]).validate()


def test_interval_requires_order():
    with pytest.raises(ValueError):
        Interval(1, 0, True, True)


def test_interval_membership_flags():
    iv = Interval(0, 1, False, True)
    assert 0 not in iv and 1 in iv and Fraction(1, 2) in iv


def test_scaled_conjugate():
    s = Fraction(1, 3)
    Ts = T.scaled(s)
    for x in (FieldElement(), L1 / 2, L1 + L2 / 3, NORM):
        assert Ts(x * s) == T(x) * s


# -- properties ---------------------------------------------------------------

frac01 = st.fractions(min_value=0, max_value=1, max_denominator=10 ** 6)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 3), frac01, frac01)
def test_measure_preservation_inside_branch(i, a, b):
    dom = T.branches[i].domain
    x = dom.lo + (dom.hi - dom.lo) * a
    y = dom.lo + (dom.hi - dom.lo) * b
    if (x not in dom) or (y not in dom):
        return
    assert abs(T(x) - T(y)) == abs(x - y)


@settings(max_examples=200, deadline=None)
@given(frac01)
def test_image_stays_in_ambient(a):
    x = NORM * a
    assert 0 <= T(x) <= NORM
    assert 0 <= S(a) <= 1


@settings(max_examples=100, deadline=None)
@given(frac01, frac01)
def test_injective_off_zero(a, b):
    x, y = NORM * a, NORM * b
    if x != y and x != 0 and y != 0:
        assert T(x) != T(y)


def test_branch_images_disjoint():
    ims = sorted((b.image() for b in T.branches), key=lambda iv: float(iv.lo))
    for a, b in zip(ims, ims[1:]):
        assert a.hi <= b.lo


@pytest.fixture(scope="module")
def long_orbit():
    return [float(x) for x in T.orbit(NORM / 7, 10_000 - 1)]


def test_orbit_density(long_orbit):
    pts = sorted(long_orbit)
    norm = float(NORM)
    gaps = [b - a for a, b in zip(pts, pts[1:])] + [pts[0], norm - pts[-1]]
    assert max(gaps) < 0.01


def test_birkhoff_statistic(long_orbit):
    a, b = float(L1), float(L1 + L2)
    frac = sum(1 for x in long_orbit if a <= x < b) / len(long_orbit)
    assert abs(frac - float(L2 / NORM)) < 0.01
