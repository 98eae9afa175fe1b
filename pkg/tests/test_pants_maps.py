import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypgeo.errors import AdmissibilityFailed, CertificationFailed, DomainError, GeometryInconsistent
from hypgeo.hyptrig import hexagon_solve
from hypgeo.pants_maps import (
    Pants,
    boundary_trace_check,
    certify_hexagon_map,
    certify_pentagon_map,
    distortion_constant,
    distortion_grid,
    fermi_pentagon,
    hexagon_admissibility,
    hexagon_frame,
    hexagon_map,
    lipschitz_estimate,
    pants_admissibility,
    pants_map,
    pentagon_jacobian,
    pentagon_estimate_checks,
    pentagon_map,
    perturbed_pentagon,
    side_perturbation,
)

from oracles import fermi_altitude, walk_right_angled

lengths = st.floats(min_value=0.15, max_value=4.0, allow_nan=False)


def _random_pairs(rng, count, delta, max_h0=None):
    out = []
    while len(out) < count:
        p = fermi_pentagon(rng.uniform(0.2, 4.0), rng.uniform(0.2, 4.0))
        if max_h0 is not None and p.h0 > max_h0:
            continue
        q = perturbed_pentagon(p, 1.0 + delta * rng.uniform(-1.0, 1.0))
        if max_h0 is not None and q.h0 > max_h0:
            continue
        out.append((p, q))
    return out


# -- pentagon geometry ---------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(lengths, lengths)
def test_pentagon_closes_in_hyperboloid(alpha, d):
    p = fermi_pentagon(alpha, d)
    assert max(p.residuals().values()) < 1e-10
    assert walk_right_angled(p.sides()) < 1e-13 * math.exp(2 * sum(p.sides()))


@pytest.mark.parametrize("alpha,d", [(1.5, 1.5), (0.4, 2.5), (3.0, 0.3), (2.0, 1.0)])
def test_altitude_against_hyperboloid(alpha, d):
    p = fermi_pentagon(alpha, d)
    order = (p.d, p.gamma, p.b, p.alpha, p.c)
    for u in np.linspace(0.0, p.d, 9):
        assert p.altitude(u) == pytest.approx(float(fermi_altitude(order, u)), abs=1e-11)


def test_altitude_branches_meet_at_foot():
    p = fermi_pentagon(1.2, 0.9)
    assert p.altitude(p.u0, "left") == pytest.approx(p.altitude(p.u0, "right"), abs=1e-14)
    assert p.altitude(p.u0) == p.altitude(p.u0, "left")
    assert p.altitude(0.0) == pytest.approx(p.c, abs=1e-14)
    assert p.altitude(p.d) == pytest.approx(p.gamma, abs=1e-14)
    us = np.linspace(0, p.d, 500)
    assert np.max(p.altitude(us)) <= p.h0 + 1e-14
    assert math.cosh(p.h0) * math.cosh(p.u0) == pytest.approx(math.cosh(p.alpha) * math.cosh(p.c), rel=1e-13)


def test_altitude_derivative_matches_finite_difference():
    p = fermi_pentagon(1.1, 1.7)
    for u, br in ((0.3, "left"), (p.u0 - 1e-3, "left"), (p.u0 + 1e-3, "right"), (1.5, "right")):
        eps = 1e-6
        fd = (p.tanh_altitude(u + eps, br) - p.tanh_altitude(u - eps, br)) / (2 * eps)
        assert p.dtanh_altitude(u, br) == pytest.approx(fd, rel=1e-8)


def test_inconsistent_sides_rejected():
    p = fermi_pentagon(1.0, 1.0)
    assert fermi_pentagon(1.0, 1.0, c=p.c, gamma=p.gamma) == p
    with pytest.raises(GeometryInconsistent):
        fermi_pentagon(1.0, 1.0, c=p.c * 1.01)
    with pytest.raises(DomainError):
        fermi_pentagon(-1.0, 1.0)


# -- pentagon map ----------------------------------------------------------------


def test_identity_pair_has_unit_distortion():
    p = fermi_pentagon(1.4, 1.3)
    r = certify_pentagon_map(p, p, grid_n=80)
    assert r.ratio_max == 1.0 and r.ratio_min == 1.0
    assert r.cross_max == 0.0 and r.bound == 0.0
    assert r.certified


def test_map_sends_sides_to_sides():
    p = fermi_pentagon(1.3, 1.1)
    q = perturbed_pentagon(p, 1.001)
    us = np.linspace(0, p.d, 50)
    up, vp = pentagon_map(p, q, us, np.asarray(p.altitude(us)))
    assert np.allclose(vp, q.altitude(up), atol=1e-13)
    up, vp = pentagon_map(p, q, us, np.zeros_like(us))
    assert np.all(vp == 0)
    assert up[-1] == pytest.approx(q.d, abs=1e-14)
    assert pentagon_map(p, q, p.u0, 0.0)[0] == pytest.approx(q.u0, abs=1e-14)
    with pytest.raises(DomainError):
        pentagon_map(p, q, 0.5, p.h0 + 0.1)
    with pytest.raises(DomainError):
        pentagon_map(p, fermi_pentagon(1.2, 1.1), 0.5, 0.1)


def test_jacobian_matches_finite_differences():
    p = fermi_pentagon(1.0, 1.4)
    q = perturbed_pentagon(p, 1.05)
    eps = 1e-6
    for u, s in ((0.2, 0.5), (0.7, 0.3), (1.2, 0.8), (1.35, 0.2)):
        v = s * p.altitude(u)
        j = pentagon_jacobian(p, q, u, v)
        up1, vp1 = pentagon_map(p, q, u + eps, v)
        up0, vp0 = pentagon_map(p, q, u - eps, v)
        _, vpa = pentagon_map(p, q, u, v + eps)
        _, vpb = pentagon_map(p, q, u, v - eps)
        assert float(j["du_du"]) == pytest.approx((up1 - up0) / (2 * eps), rel=1e-7)
        assert float(j["dv_du"]) == pytest.approx((vp1 - vp0) / (2 * eps), rel=1e-5, abs=1e-9)
        assert float(j["dv_dv"]) == pytest.approx((vpa - vpb) / (2 * eps), rel=1e-7)


def test_one_sided_jacobians_at_foot_differ():
    p = fermi_pentagon(1.0, 1.4)
    q = perturbed_pentagon(p, 1.05)
    v = 0.5 * p.h0
    left = pentagon_jacobian(p, q, p.u0, v, "left")
    right = pentagon_jacobian(p, q, p.u0, v, "right")
    assert float(left["dv_dv"]) == pytest.approx(float(right["dv_dv"]), rel=1e-12)
    assert abs(float(left["dv_du"]) - float(right["dv_du"])) > 1e-4
    r = certify_pentagon_map(p, perturbed_pentagon(p, 1 + 1e-7), grid_n=40)
    assert set(r.one_sided_at_foot) == {"left", "right"}


def test_certification_on_random_pairs():
    rng = np.random.default_rng(7)
    for p, q in _random_pairs(rng, 30, 1e-6, max_h0=1.0):
        r = certify_pentagon_map(p, q, grid_n=60)
        assert r.certified
        assert r.ratio_max <= 1 + r.bound and r.ratio_min >= 1 - r.bound
        assert r.cross_max <= r.bound / 3
        assert r.delta_d == pytest.approx(side_perturbation(p, q))


def test_certification_near_admissibility_edge():
    rng = np.random.default_rng(11)
    for _ in range(40):
        p = fermi_pentagon(rng.uniform(0.2, 4.0), rng.uniform(0.2, 4.0))
        dd = 0.99 / (54 * math.exp(2 * p.h0)) ** 2
        sign = rng.choice([-1.0, 1.0])
        q = perturbed_pentagon(p, 1 + sign * dd)
        if distortion_constant(p, q)[2] > 1:
            continue
        assert certify_pentagon_map(p, q, grid_n=50).certified


def test_inadmissible_pair_rejected_and_failure_reported():
    p = fermi_pentagon(1.0, 1.0)
    with pytest.raises(AdmissibilityFailed):
        certify_pentagon_map(p, perturbed_pentagon(p, 1.01))
    # a pair within the admissible range, judged against a deliberately shrunk bound
    from hypgeo import pants_maps

    q = perturbed_pentagon(p, 1 + 1e-6)
    orig = pants_maps.PENTAGON_CONSTANT
    try:
        pants_maps.PENTAGON_CONSTANT = 1e-3
        with pytest.raises(CertificationFailed) as info:
            certify_pentagon_map(p, q, grid_n=30)
        assert info.value.margin < 0
        rep = certify_pentagon_map(p, q, grid_n=30, raise_on_failure=False)
        assert not rep.certified
    finally:
        pants_maps.PENTAGON_CONSTANT = orig


@pytest.mark.parametrize("cap", [0.99, 0.5, 0.2, 1 / 15, 1 / 49, 1 / 735])
def test_intermediate_estimates_hold_within_preconditions(cap):
    rng = np.random.default_rng(int(1 / cap))
    checked = 0
    for _ in range(150):
        p = fermi_pentagon(rng.uniform(0.1, 4.0), rng.uniform(0.1, 4.0))
        q = perturbed_pentagon(p, 1 + cap * rng.uniform(0.05, 1.0) * rng.choice([-1.0, 1.0]))
        for c in pentagon_estimate_checks(p, q, grid_n=40):
            if c.applies:
                assert c.holds, c
                checked += 1
    assert checked > 150


def test_boundary_trace_identity():
    p = fermi_pentagon(1.3, 1.6)
    assert boundary_trace_check(p, perturbed_pentagon(p, 1.2))
    other = fermi_pentagon(1.5, 1.6)
    res = boundary_trace_check(p, other)
    assert not res
    assert res.max_arclength_defect > 1e-3


def test_distortion_grid_shape():
    p = fermi_pentagon(1.3, 1.6)
    g = distortion_grid(p, perturbed_pentagon(p, 1 + 1e-5), grid_n=20)
    assert g["ratio_max"].shape == (20, 20)
    assert np.all(g["ratio_max"] >= g["ratio_min"])


# -- hexagons and pants --------------------------------------------------------------


def test_hexagon_split_reassembles_hexagon():
    h = hexagon_frame(1.2, 1.3, 0.5)
    ref = hexagon_solve(1.2, 1.3, 0.5)
    assert h.P_alpha.c + h.P_beta.c == pytest.approx(ref.gamma, abs=1e-13)
    assert h.P_alpha.gamma + h.P_beta.gamma == pytest.approx(0.5, abs=1e-13)
    assert h.P_alpha.b == pytest.approx(ref.beta, abs=1e-13)
    assert h.P_beta.b == pytest.approx(ref.alpha, abs=1e-13)
    # altitude from alpha across the hexagon
    sh = 1 / (math.tanh(h.alpha) * math.tanh(h.P_alpha.b) * math.tanh(h.d))
    assert sh <= math.cosh(h.gamma) ** 2 / math.tanh(h.alpha)


def test_hexagon_map_continuous_across_cut():
    h = hexagon_frame(1.2, 1.3, 0.5)
    h2 = hexagon_frame(1.2, 1.3, 0.5 * (1 + 1e-10))
    for u in np.linspace(0, h.d, 7):
        up_plus = hexagon_map(h, h2, (u, 0.0))
        up_minus = hexagon_map(h, h2, (u, -0.0))
        assert up_plus == up_minus
        a = hexagon_map(h, h2, (u, 1e-9))
        b = hexagon_map(h, h2, (u, -1e-9))
        assert a[0] == pytest.approx(b[0], abs=1e-12)
        assert a[1] == pytest.approx(-b[1], rel=1e-2)


def test_hexagon_admissibility_and_perpendicular_drift():
    h = hexagon_frame(1.0, 1.5, 0.4)
    ell = 0.5
    dg = 0.5 / (1350 * math.exp(5 * ell)) ** 2
    h2 = hexagon_frame(1.0, 1.5, 0.4 / (1 + dg))
    info = hexagon_admissibility(h, h2, ell)
    assert info["delta_d"] <= info["delta_d_bound"]
    rep = certify_hexagon_map(h, h2, ell, grid_n=40)
    assert rep["alpha_half"]["certified"] and rep["beta_half"]["certified"]
    with pytest.raises(AdmissibilityFailed):
        hexagon_admissibility(h, hexagon_frame(1.0, 1.5, 0.41), ell)
    with pytest.raises(AdmissibilityFailed):
        hexagon_admissibility(hexagon_frame(0.5, 1.5, 0.4), hexagon_frame(0.5, 1.5, 0.4), ell)
    with pytest.raises(DomainError):
        hexagon_admissibility(h, hexagon_frame(1.1, 1.5, 0.4), ell)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.9, 3.0), st.floats(0.9, 3.0), st.floats(0.05, 2.0))
def test_perpendicular_drift_bound(alpha, beta, gamma):
    ell = gamma
    dg = 1e-7
    h = hexagon_frame(alpha, beta, gamma)
    h2 = hexagon_frame(alpha, beta, gamma / (1 + dg))
    dd = side_perturbation(h.P_alpha, h2.P_alpha)
    assert dd <= math.cosh(ell) * dg * (1 + 1e-6)
    assert math.exp(h.P_alpha.h0) <= 5 * math.exp(2 * ell)


def test_pants_map_composes_with_hexagon_map():
    P = Pants(2.5, 3.0, 0.6)
    ell = 0.6
    delta = 0.5 / (450 * math.exp(5 * ell)) ** 2
    P2 = Pants(2.5, 3.0, 0.6 / (1 + delta))
    info = pants_admissibility(P, P2, ell)
    assert max(info["pentagon_constants"].values()) <= 1
    h, h2 = P.hexagon, P2.hexagon
    for k in (0, 1):
        for u, v in ((0.1, 0.2), (0.5, -0.3), (h.d, 0.0)):
            assert pants_map(P, P2, (k, u, v))[1:] == hexagon_map(h, h2, (u, v))
            assert pants_map(P, P2, (k, u, v))[0] == k


def test_pants_admissibility_failures():
    P = Pants(2.5, 3.0, 0.6)
    with pytest.raises(AdmissibilityFailed):
        pants_admissibility(P, Pants(2.5, 3.0, 0.61))
    with pytest.raises(AdmissibilityFailed):
        pants_admissibility(Pants(1.0, 3.0, 0.6), Pants(1.0, 3.0, 0.6))
    with pytest.raises(DomainError):
        pants_admissibility(P, Pants(2.6, 3.0, 0.6))
    with pytest.raises(DomainError):
        pants_map(P, P, (2, 0.1, 0.1))
    with pytest.raises(DomainError):
        Pants(0.0, 1.0, 1.0)


def test_small_gamma_pentagon_constant_stays_below_one():
    # the pants condition is weaker than the hexagon one for short gamma; the pieces still certify
    la = 2 * math.asinh(1.0)
    for lg in (0.05, 0.2):
        delta = 0.999 / (450 * math.exp(5 * lg)) ** 2
        P, P2 = Pants(la, la, lg), Pants(la, la, lg / (1 + delta))
        info = pants_admissibility(P, P2, lg * (1 + 1e-9))
        assert info["constant"] <= 1
        assert HEXAGON_LIMIT(lg, delta) > 1
        assert max(info["pentagon_constants"].values()) < 1


def HEXAGON_LIMIT(ell_pants, delta):
    return 1350 * math.exp(5 * ell_pants / 2) * math.sqrt(delta)


# -- lipschitz ---------------------------------------------------------------------


def test_lipschitz_of_pure_u_stretch():
    k = 1.01

    def fn(u, v):
        return np.arctanh(k * np.tanh(u)), np.asarray(v, dtype=float)

    def jac(u, v):
        up = np.arctanh(k * np.tanh(u))
        return k * np.cosh(up) ** 2 / np.cosh(u) ** 2, np.zeros_like(u), np.zeros_like(u), np.ones_like(u)

    dom = (0.0, 1.0, -0.5, 0.5)
    hi_fd, lo_fd = lipschitz_estimate(fn, dom, 60)
    hi_an, lo_an = lipschitz_estimate(fn, dom, 60, jacobian=jac)
    assert hi_fd == pytest.approx(hi_an, abs=1e-6)
    assert lo_fd == pytest.approx(lo_an, abs=1e-6)
    up = math.atanh(k * math.tanh(1.0))
    assert hi_an == pytest.approx(k * math.cosh(up) ** 2 / math.cosh(1.0) ** 2, rel=1e-12)
    assert lo_an == pytest.approx(1.0, abs=1e-12)


def test_lipschitz_of_certified_pentagon_map():
    p = fermi_pentagon(1.5, 1.5)
    q = perturbed_pentagon(p, 1 + 1e-6)
    r = certify_pentagon_map(p, q, grid_n=60)
    hi, lo = lipschitz_estimate(lambda u, v: pentagon_map(p, q, u, v), p, 60, jacobian=None, step=1e-7)
    assert hi - 1 <= r.bound and 1 - lo <= r.bound
    assert hi**2 == pytest.approx(r.ratio_max, abs=1e-5)
