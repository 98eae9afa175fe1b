import json
import math

import mpmath as mp
import pytest

from hypgeo.errors import (
    AdmissibilityFailed,
    ArityMismatch,
    DegenerateArea,
    DomainError,
    LengthConstraintViolated,
    PatternMismatch,
    PreconditionUnmet,
)
from hypgeo.surface import (
    MIN_INTERIOR_LENGTH,
    PantsComplex,
    ball_area,
    build_decomposition,
    cheng_ball_bound,
    cheng_bound,
    cheng_radius,
    genus_partition,
    glue_chain,
    net_size_lower_bound,
    perturb_boundaries,
    piece_quotient,
    rayleigh_upper_bound,
    whitehead_move,
)

mp.mp.dps = 40


def _mp_piece_quotient(genus, l1, l2):
    area = 2 * mp.pi * (2 * genus)
    total = 0
    for ell in (l1, l2):
        w = mp.asinh(1 / mp.sinh(mp.mpf(ell) / 2))
        total += ell * mp.sinh(w) / w**2
    return total / (area - 4)


# Frozen with mpmath at 40 digits: the collar test-function quotient of a
# genus-2 piece with two boundary curves of length 2.
QUOTIENT_Y22_L2 = 0.270289020736315779


# -- decompositions ----------------------------------------------------------------


@pytest.mark.parametrize("g,n", [(1, 1), (1, 2), (1, 3), (2, 0), (2, 2), (3, 0), (3, 1), (4, 5)])
def test_decomposition_counts(g, n):
    z = build_decomposition(g, n)
    assert len(z.pants) == 2 * g - 2 + n
    assert len(z.gluings) == 3 * g - 3 + n
    assert len(z.free_boundary) == n
    assert -z.euler_characteristic == 2 * g - 2 + n
    assert z.genus == g
    assert len(z.components()) == 1


def test_boundary_curves_in_distinct_pants():
    z = build_decomposition(1, 2)
    assert len(z.pants) == 2 and len(z.gluings) == 2
    assert len({s.pants for s in z.free_boundary}) == 2
    z = build_decomposition(3, 4)
    assert len(z.boundary_pants()) == 4


def test_short_interior_curve_next_to_boundary_rejected():
    with pytest.raises(LengthConstraintViolated):
        build_decomposition(2, 2, lengths={"alpha1": 1.0})
    # short curves away from the boundary are fine
    z = build_decomposition(3, 1, lengths={"e2": 0.1})
    assert z.curve_lengths()["e2"] == 0.1


def test_invalid_topologies():
    for g, n in ((0, 3), (1, 0), (-1, 2)):
        with pytest.raises(DomainError):
            build_decomposition(g, n)


def test_json_round_trip_is_stable():
    z = build_decomposition(2, 3, twists={"alpha1": 0.5})
    text = z.to_json()
    back = PantsComplex.from_dict(json.loads(text))
    assert back == z
    assert back.to_json() == text
    assert z.gluing_of("alpha1").twist == 0.5


def test_twists_reduced_modulo_length():
    z = build_decomposition(2, 0, twists={"s1": 5.0})
    assert z.gluing_of("s1").twist == pytest.approx(math.fmod(5.0, 2.0))


def test_mismatched_glued_lengths_rejected():
    z = build_decomposition(2, 0)
    data = z.to_dict()
    data["pants"][0]["lengths"][2] = 2.5
    with pytest.raises(PatternMismatch):
        PantsComplex.from_dict(data)


# -- Whitehead moves ------------------------------------------------------------------


def test_whitehead_move_is_an_involution():
    z = build_decomposition(2, 3)
    once = whitehead_move(z, "alpha1", 2.1, new_name="beta1")
    assert once != z
    twice = whitehead_move(once, "beta1", z.curve_lengths()["alpha1"], new_name="alpha1")
    assert twice == z


def test_whitehead_move_keeps_invariants():
    z = build_decomposition(2, 3)
    for curve in ("alpha1", "alpha2"):
        w = whitehead_move(z, curve, 2.0)
        assert len(w.pants) == len(z.pants)
        assert len(w.free_boundary) == len(z.free_boundary)
        for i in w.boundary_pants():
            assert sum(1 for s in w.free_boundary if s.pants == i) == 1
        assert sorted(w.boundary_curves) == sorted(z.boundary_curves)
        assert w.genus == z.genus


def test_whitehead_move_errors():
    z = build_decomposition(2, 3)
    with pytest.raises(LengthConstraintViolated):
        whitehead_move(z, "alpha1", 1.0)
    with pytest.raises(DomainError):
        whitehead_move(z, "gamma1", 2.0)
    closed = build_decomposition(2, 0)
    with pytest.raises(PatternMismatch):
        whitehead_move(closed, "c0", 2.0)  # both sides of c0 are the same pants
    with pytest.raises(PatternMismatch):
        whitehead_move(z, "alpha1", 2.0, new_name="alpha2")


# -- boundary perturbation ----------------------------------------------------------------


def test_zero_deltas_return_identical_complex():
    z = build_decomposition(2, 3, lengths={"gamma1": 0.5, "gamma2": 0.5, "gamma3": 0.5})
    assert perturb_boundaries(z, [0.0, 0.0, 0.0]) == z


def test_single_boundary_perturbation_is_local():
    z = build_decomposition(2, 3, lengths={"gamma1": 0.5, "gamma2": 0.5, "gamma3": 0.5})
    d = 1e-9
    y = perturb_boundaries(z, {"gamma2": d})
    changed = [i for i, (a, b) in enumerate(zip(z.pants, y.pants)) if a != b]
    assert changed == [1]
    assert y.curve_lengths()["gamma2"] == pytest.approx(0.5 * (1 + d), rel=1e-15)
    assert y.gluings == z.gluings


def test_perturbation_inverse_restores_lengths():
    z = build_decomposition(3, 2, lengths={"gamma1": 0.4, "gamma2": 0.6})
    deltas = [2e-9, -3e-9]
    y = perturb_boundaries(z, deltas)
    back = perturb_boundaries(y, [1 / (1 + d) - 1 for d in deltas])
    for name, length in z.curve_lengths().items():
        assert back.curve_lengths()[name] == pytest.approx(length, abs=1e-12)


def test_equalizing_deltas():
    eps = 0.5
    lengths = {"gamma1": eps * (1 + 1e-9), "gamma2": eps * (1 - 2e-9), "gamma3": eps * (1 + 3e-10)}
    z = build_decomposition(2, 3, lengths=lengths)
    y = perturb_boundaries(z, {k: eps / v - 1 for k, v in lengths.items()})
    for name in ("gamma1", "gamma2", "gamma3"):
        assert y.curve_lengths()[name] == pytest.approx(eps, abs=1e-15)


def test_perturbation_errors():
    z = build_decomposition(2, 2, lengths={"gamma1": 0.5, "gamma2": 0.5})
    with pytest.raises(AdmissibilityFailed):
        perturb_boundaries(z, [0.01, 0.0])
    assert perturb_boundaries(z, [0.01, 0.0], check_admissible=False).curve_lengths()["gamma1"] == pytest.approx(0.505)
    with pytest.raises(ArityMismatch):
        perturb_boundaries(z, [0.0])
    with pytest.raises(DomainError):
        perturb_boundaries(z, {"alpha1": 0.0})


def test_perturbation_needs_one_boundary_per_pants():
    crowded = PantsComplex.from_dict(
        {
            "pants": [{"curves": ["gamma1", "gamma2", "a"], "lengths": [0.5, 0.5, 2.0]},
                      {"curves": ["a", "b", "b"], "lengths": [2.0, 2.0, 2.0]}],
            "gluings": [{"a": [0, 2], "b": [1, 0], "curve": "a", "twist": 0.0},
                        {"a": [1, 1], "b": [1, 2], "curve": "b", "twist": 0.0}],
            "free_boundary": [[0, 0], [0, 1]],
        }
    )
    with pytest.raises(PreconditionUnmet):
        perturb_boundaries(crowded, [0.0, 0.0])
    z = build_decomposition(2, 3)
    with pytest.raises(PatternMismatch):
        whitehead_move(z, "alpha1", 2.0, swap="first")


# -- chain gluing ------------------------------------------------------------------------


def test_partitions():
    p = genus_partition(9, 4)
    assert (p.i_g, p.r_g, p.pieces) == (2, 0, (2, 2, 2, 2))
    p = genus_partition(10, 4)
    assert (p.i_g, p.r_g, sorted(p.pieces)) == (2, 1, [2, 2, 2, 3])
    assert sum(p.pieces) == p.g - 1
    with pytest.raises(DomainError):
        genus_partition(4, 4)


@pytest.mark.parametrize("g,k", [(9, 4), (10, 4), (5, 1), (7, 2), (20, 3)])
def test_glue_chain_topology(g, k):
    z = glue_chain(genus_partition(g, k), 1.0)
    assert -z.euler_characteristic == 2 * g - 2
    assert z.genus == g
    assert not z.free_boundary
    lengths = z.curve_lengths()
    for i in range(k):
        assert lengths[f"chain{i}"] == 1.0
    assert len(z.components(cut=[f"chain{i}" for i in range(k)])) == k


def test_glue_chain_arity():
    with pytest.raises(ArityMismatch):
        glue_chain(genus_partition(9, 4), 1.0, twists=[0.0] * 3)


# -- Rayleigh bound -------------------------------------------------------------------------


def test_piece_quotient_matches_high_precision():
    q, areas, widths = piece_quotient(8 * math.pi, 2.0, 2.0)
    assert q == pytest.approx(float(_mp_piece_quotient(2, 2, 2)), rel=1e-13)
    assert q == pytest.approx(QUOTIENT_Y22_L2, rel=1e-13)
    assert widths[0] == pytest.approx(0.7719368329053047, rel=1e-14)
    # each half-collar has area at most 2
    assert max(areas) <= 2.0


def test_chain_bound_is_max_of_pieces():
    z = glue_chain(genus_partition(10, 4), 1.0)
    r = rayleigh_upper_bound(z)
    assert len(r.pieces) == 4 and r.index == 3
    assert r.bound == max(p.quotient for p in r.pieces)
    by_genus = {p.genus: p.quotient for p in r.pieces}
    assert by_genus[2] > by_genus[3]
    for p in r.pieces:
        assert p.quotient == pytest.approx(float(_mp_piece_quotient(p.genus, 1, 1)), rel=1e-13)


def test_symmetric_chain_has_equal_quotients():
    r = rayleigh_upper_bound(glue_chain(genus_partition(7, 2), 1.3))
    assert r.pieces[0].quotient == r.pieces[1].quotient


def test_bound_decreases_and_halves_with_genus():
    values = {}
    for gi in (1, 2, 4, 8, 16, 100):
        values[gi] = rayleigh_upper_bound(glue_chain(genus_partition(2 * gi + 1, 2), 1.0)).bound
    assert values[100] < values[2]
    order = sorted(values)
    assert all(values[a] > values[b] for a, b in zip(order, order[1:]))
    for gi in (1, 2, 4, 8):
        ratio = values[2 * gi] / values[gi]
        area = 4 * math.pi * gi
        assert ratio == pytest.approx((area - 4) / (2 * area - 4), rel=1e-13)
        assert 0.4 <= ratio <= 0.6


def test_degenerate_area():
    with pytest.raises(DegenerateArea):
        piece_quotient(4.0, 1.0, 1.0)


# -- Cheng-type bounds ------------------------------------------------------------------------


def test_cheng_reference_value():
    ref = mp.mpf(1) / 4 + (4 * mp.pi / mp.acosh(2)) ** 2
    assert cheng_bound(2, 1) == pytest.approx(float(ref), abs=1e-9)
    assert cheng_bound(2, 1) == pytest.approx(91.30, abs=0.01)


def test_cheng_monotone_to_quarter():
    vals = [cheng_bound(g, 3) for g in (2, 10, 100, 10**4, 10**100)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v >= 0.25 for v in vals)
    assert vals[-1] - 0.25 < 0.01


def test_cheng_with_growing_index_stays_away_from_quarter():
    limit = 0.25 + (4 * math.pi / math.acosh(3.0)) ** 2
    for g in (10, 100, 10**4, 10**8):
        assert cheng_bound(g, g) > limit


def test_cheng_ball_consistency():
    for g, k in ((2, 1), (10, 3), (100, 7), (10**4, 2)):
        assert cheng_bound(g, k) == pytest.approx(cheng_ball_bound(cheng_radius(g, k) / 2), rel=1e-14)


def test_ball_area_and_bound():
    assert ball_area(0.0) == 0.0
    assert ball_area(math.acosh(2.0)) == pytest.approx(2 * math.pi, rel=1e-15)
    assert cheng_ball_bound(2 * math.pi) == pytest.approx(1.25, rel=1e-15)
    rs = [0.5, 1, 5, 50, 5000]
    vals = [cheng_ball_bound(r) for r in rs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] - 0.25 < 1e-5
    with pytest.raises(DomainError):
        cheng_ball_bound(0.0)
    with pytest.raises(DomainError):
        ball_area(-1.0)


@pytest.mark.parametrize("g,k", [(2, 1), (10, 3), (1000, 9)])
def test_net_count(g, k):
    assert net_size_lower_bound(g, k) == k + 1
