import math
import random

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from hypgeo.errors import DomainError, GeometryInfeasible
from hypgeo.hyptrig import (
    REGULAR_HEXAGON_SIDE,
    REGULAR_PENTAGON_SIDE,
    Collar,
    acosh_from_excess,
    collar_width,
    crossing_length_bound,
    hexagon_rotate,
    hexagon_solve,
    pants_perpendiculars,
    pentagon_from_legs,
    trirectangle_solve,
)

from oracles import bisect, hexagon_from_hyperboloid, trirectangle_defect, walk_right_angled

# Frozen with mpmath at 30 digits.
ALPHA_03_04 = 0.326008862965847473256571672619
PENTAGON_SIDE = 1.06127506190503565203301891621
HEXAGON_SIDE = 1.31695789692481670862504634731
COLLAR_W_2 = 0.771936832905304725070639140035

lengths = st.floats(min_value=0.05, max_value=6.0, allow_nan=False)


def test_trirectangle_reference_value():
    t = trirectangle_solve(0.3, 0.4)
    assert t.alpha == pytest.approx(ALPHA_03_04, abs=1e-14)
    assert max(t.residuals().values()) < 1e-12
    assert trirectangle_defect(t.a, t.b, t.alpha, t.beta) < 1e-13


def test_trirectangle_symmetric_sides():
    t = trirectangle_solve(0.5, 0.5)
    assert t.alpha == pytest.approx(t.beta, rel=1e-13)


def test_trirectangle_infeasible():
    with pytest.raises(GeometryInfeasible):
        trirectangle_solve(1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(lengths, lengths)
def test_trirectangle_closes_in_hyperboloid(a, b):
    try:
        t = trirectangle_solve(a, b)
    except GeometryInfeasible:
        assert math.cosh(b) * math.tanh(a) >= 1 or math.cosh(a) * math.tanh(b) >= 1
        return
    assert trirectangle_defect(t.a, t.b, t.alpha, t.beta) < 1e-9 * math.cosh(t.beta)


def test_regular_pentagon():
    root = bisect(lambda x: x * x - x - 1, 1, 2)  # cosh of the side
    side = float(mp.acosh(root))
    assert side == pytest.approx(PENTAGON_SIDE, abs=1e-15)
    assert REGULAR_PENTAGON_SIDE == pytest.approx(side, abs=1e-12)
    p = pentagon_from_legs(REGULAR_PENTAGON_SIDE, REGULAR_PENTAGON_SIDE)
    for s in p.sides():
        assert s == pytest.approx(side, abs=1e-12)


def test_degenerate_pentagon():
    with pytest.raises(GeometryInfeasible):
        pentagon_from_legs(math.asinh(1.0), math.asinh(1.0))


def test_pentagon_coth_identity():
    p = pentagon_from_legs(1.2, 1.3)
    coth = 1.0 / (math.tanh(p.alpha) * math.tanh(p.beta))
    assert math.cosh(p.c) == pytest.approx(coth, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(lengths, lengths)
def test_pentagon_closes_in_hyperboloid(a, b):
    if math.sinh(a) * math.sinh(b) <= 1.0 + 1e-9:
        return
    p = pentagon_from_legs(a, b)
    scale = max(math.cosh(s) for s in p.sides())
    assert walk_right_angled(p.sides()) < 1e-9 * scale**2


def test_regular_hexagon():
    root = bisect(lambda x: x * x - x - 2, 1, 3)
    side = float(mp.acosh(root))
    assert side == pytest.approx(HEXAGON_SIDE, abs=1e-15)
    h = hexagon_solve(side, side, side)
    for s in (h.gamma, h.alpha, h.beta):
        assert s == pytest.approx(side, abs=1e-12)
    assert math.sinh(h.h_alpha) <= math.cosh(h.gamma) ** 2 / math.tanh(h.alpha) + 1e-12


def test_hexagon_symmetry_and_rotation():
    h1 = hexagon_solve(0.7, 1.9, 1.1)
    h2 = hexagon_solve(1.9, 0.7, 1.1)
    assert h1.gamma == pytest.approx(h2.gamma, rel=1e-14)
    r = hexagon_rotate(h1)
    assert (r.a, r.b, r.c) == (h1.b, h1.c, h1.a)
    assert r.gamma == pytest.approx(h1.alpha, rel=1e-13)


@pytest.mark.parametrize("a,b,c", [(0.4, 1.1, 2.0), (0.1, 0.1, 0.1), (3.0, 0.2, 1.5)])
def test_hexagon_against_hyperboloid_newton(a, b, c):
    h = hexagon_solve(a, b, c)
    g, al, be = hexagon_from_hyperboloid(a, b, c)
    assert h.gamma == pytest.approx(float(g), rel=1e-12)
    assert h.alpha == pytest.approx(float(al), rel=1e-12)
    assert h.beta == pytest.approx(float(be), rel=1e-12)


def test_hexagon_round_trip_and_identities():
    rng = random.Random(11)
    for _ in range(2000):
        a, b, c = (rng.uniform(0.05, 5.0) for _ in range(3))
        h = hexagon_solve(a, b, c)
        assert (h.a, h.b, h.c) == (a, b, c)
        back = hexagon_solve(h.a, h.b, h.c)
        assert back == h
        res = h.residuals()
        assert res["sinh2_d_legs"] < 1e-9
        assert res["altitude_excess"] == 0.0


def test_pants_perpendiculars_regular():
    l = 2.0 * REGULAR_HEXAGON_SIDE
    perps = pants_perpendiculars(l, l, l)
    for p in perps:
        assert p == pytest.approx(HEXAGON_SIDE, abs=1e-12)
    g, _, _ = hexagon_from_hyperboloid(l / 2, l / 2, l / 2)
    assert perps[0] == pytest.approx(float(g), abs=1e-12)


def test_pants_perpendiculars_equilateral_symmetry():
    perps = pants_perpendiculars(1.3, 1.3, 1.3)
    assert perps[0] == pytest.approx(perps[1], rel=1e-14)
    assert perps[1] == pytest.approx(perps[2], rel=1e-14)


def test_pants_perpendiculars_monotone_in_third_boundary():
    # Lengthening gamma lengthens the seam opposite to it and shortens the two seams touching it.
    grid = [0.2 + 0.05 * i for i in range(80)]
    seams = [pants_perpendiculars(1.0, 1.5, g) for g in grid]
    for s0, s1 in zip(seams, seams[1:]):
        assert s1[0] > s0[0]
        assert s1[1] < s0[1]
        assert s1[2] < s0[2]


def test_collar_width_values():
    assert collar_width(2.0 * math.asinh(1.0)) == pytest.approx(math.asinh(1.0), abs=1e-15)
    assert collar_width(2.0) == pytest.approx(COLLAR_W_2, abs=1e-14)
    assert crossing_length_bound(2.0) == pytest.approx(2 * COLLAR_W_2, abs=1e-14)
    assert crossing_length_bound(2.0 * math.asinh(1.0)) == pytest.approx(2 * math.asinh(1.0), abs=1e-15)


@pytest.mark.parametrize("ell", [0.01, 0.1, 1.0, 10.0])
def test_collar_area_at_most_four(ell):
    c = Collar.standard(ell)
    assert c.area <= 4.0 + 1e-12
    assert Collar.standard(ell, half=True).area == pytest.approx(c.area / 2)


def test_collar_width_decreasing_and_unbounded():
    ells = [10.0 ** k for k in range(-6, 2)]
    widths = [crossing_length_bound(e) for e in ells]
    assert all(w0 > w1 for w0, w1 in zip(widths, widths[1:]))
    assert widths[0] > 25.0


def test_acosh_small_excess():
    e = 1e-14
    assert acosh_from_excess(e) == pytest.approx(float(mp.acosh(1 + mp.mpf(e))), rel=1e-12)
    with pytest.raises(DomainError):
        acosh_from_excess(-1e-3)


def test_nonpositive_lengths_rejected():
    with pytest.raises(DomainError):
        hexagon_solve(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        collar_width(-1.0)
