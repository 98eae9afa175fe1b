import math
import random
import warnings
from collections import Counter

import mpmath as mp
import numpy as np
import pytest

from hypgeo.covers import (
    PermRep,
    cycle_length_counts,
    cycle_type,
    enumerate_short_geodesics,
    eval_word,
    fixed_point_counts,
    fixed_point_free_prob,
    geodesic_class,
    joint_fixed_point_free,
    nica_limit,
    sample_rep,
    systole_prob,
    transitivity_fraction,
    word,
    word_matrix,
    word_trace,
)
from hypgeo.errors import DomainError

from oracles import (
    all_reduced_words,
    brute_force_transitive_fraction,
    conjugacy_key,
    is_proper_power,
    lifted_cycle_lengths,
    word_trace_oracle,
)

FIGURE_EIGHT = 2 * math.acosh(3.0)


def _random_word(rng, length):
    return word("".join(rng.choice("aAbB") for _ in range(length)))


# -- words ---------------------------------------------------------------------


def test_reduction_and_parsing():
    assert str(word("aA")) == "1"
    assert word_matrix("aA") == ((1, 0), (0, 1))
    assert str(word("abBa")) == "aa"
    assert word("ab") * word("Ba") == word("aa")
    with pytest.raises(DomainError):
        word("ax")


def test_reference_matrix_and_length():
    assert word_matrix("ab") == ((5, 2), (2, 1))
    c = geodesic_class("ab")
    assert c.trace == 6
    assert c.length == pytest.approx(3.52549434, abs=1e-8)


def test_parabolic_words_excluded():
    for w in ("a", "b", "aB", "aaa"):
        assert abs(word_trace(w)) == 2
    with pytest.raises(DomainError):
        geodesic_class("a")
    with pytest.raises(DomainError):
        geodesic_class("abab")


def test_matrices_have_unit_determinant_and_integer_growth():
    rng = random.Random(3)
    for _ in range(100):
        w = _random_word(rng, rng.randint(1, 60))
        m = word_matrix(w)
        assert m[0][0] * m[1][1] - m[0][1] * m[1][0] == 1
        assert word_trace(w) == word_trace_oracle(str(w)) if len(w) else True
    big = word_matrix(word("ab") ** 80)
    assert max(abs(x) for row in big for x in row) > 2**63


def test_power_decomposition():
    v, d = word("abab").power_decomposition
    assert (str(v), d) == ("ab", 2)
    v, d = word("aabAaabA").power_decomposition
    assert d == 2 and v**d == word("aabAaabA")
    w = word("b") * word("ab") ** 3 * word("B")
    v, d = w.power_decomposition
    assert d == 3 and v == word("bab") * word("B")
    assert word("aab").power_decomposition[1] == 1


def test_canonical_representative_dedupes_rotation_and_inverse():
    assert word("ab").canonical() == word("ba").canonical()
    assert word("ab").canonical() == word("BA").canonical()
    assert (word("B") * word("ab") * word("b")).canonical() == word("ab").canonical()


# -- enumeration ------------------------------------------------------------------


def _oracle_classes(eps, max_len):
    keys = {}
    for w in all_reduced_words(max_len):
        t = abs(word_trace_oracle(w))
        if t > 2 and not is_proper_power(w) and 2 * math.acosh(t / 2) < eps:
            keys[conjugacy_key(w)] = t
    return keys


def test_short_geodesics_at_eps_4():
    got = enumerate_short_geodesics(4.0, 6)
    assert len(got) == 3
    assert all(c.length == pytest.approx(FIGURE_EIGHT) for c in got)
    assert {c.word for c in got} == {word(w).canonical() for w in ("ab", "aaB", "bbA")}
    assert word("aB").canonical() not in {c.word for c in got}


@pytest.mark.parametrize("eps,max_len", [(4.0, 6), (5.0, 6), (6.0, 6)])
def test_enumeration_matches_brute_force(eps, max_len):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        got = enumerate_short_geodesics(eps, max_len)
    oracle = _oracle_classes(eps, max_len)
    assert len(got) == len(oracle)
    assert sorted(c.trace for c in got) == sorted(oracle.values())


def test_enumeration_below_systole_and_truncation_warning():
    assert enumerate_short_geodesics(3.5, 6) == []
    with pytest.warns(RuntimeWarning):
        enumerate_short_geodesics(8.0, 4)


# -- sampling and evaluation ---------------------------------------------------------


def test_degree_one_and_reproducibility():
    r = sample_rep(1, 5)
    assert r.sigma_a == (0,) and r.sigma_b == (0,)
    assert sample_rep(50, 123) == sample_rep(50, 123)
    assert sample_rep(50, 123) != sample_rep(50, 124)
    with pytest.raises(DomainError):
        PermRep(2, (0, 0), (0, 1))


def test_uniformity_at_degree_three():
    from hypgeo.covers import _streams, sample_reps

    sa, sb = sample_reps(3, 100_000, _streams(99, 1)[0])
    counts = Counter(zip(map(tuple, sa.tolist()), map(tuple, sb.tolist())))
    assert len(counts) == 36
    for c in counts.values():
        assert abs(c / 100_000 - 1 / 36) < 0.005


def test_eval_is_a_homomorphism():
    rng = random.Random(11)
    for t in range(1000):
        rep = sample_rep(12, t)
        u = _random_word(rng, rng.randint(0, 6))
        v = _random_word(rng, rng.randint(0, 6))
        pu, pv = eval_word(rep, u), eval_word(rep, v)
        assert eval_word(rep, u * v) == tuple(pu[pv[i]] for i in range(12))
        inv = eval_word(rep, u.inverse())
        assert tuple(inv[pu[i]] for i in range(12)) == tuple(range(12))


def test_powers_and_identity():
    rng = random.Random(5)
    rep = sample_rep(20, 9)
    assert eval_word(rep, "") == tuple(range(20))
    for _ in range(20):
        w = _random_word(rng, rng.randint(1, 5))
        for d in range(1, 6):
            p = eval_word(rep, w)
            q = tuple(range(20))
            for _ in range(d):
                q = tuple(p[q[i]] for i in range(20))
            assert eval_word(rep, w**d) == q


def test_fixed_points_are_one_cycles():
    rep = sample_rep(30, 4)
    p = eval_word(rep, "aB")
    assert cycle_type(p).get(1, 0) == sum(1 for i, x in enumerate(p) if i == x)
    assert sum(k * v for k, v in cycle_type(p).items()) == 30


@pytest.mark.parametrize("n", [3, 4, 6])
def test_cycles_match_lifted_loops(n):
    rng = random.Random(n)
    for t in range(40):
        rep = sample_rep(n, 1000 + t)
        w = _random_word(rng, rng.randint(1, 7))
        lengths = lifted_cycle_lengths(rep.sigma_a, rep.sigma_b, str(w) if len(w) else "")
        ct = cycle_type(eval_word(rep, w))
        assert sorted(k for k, v in ct.items() for _ in range(v)) == lengths


# -- limits and estimates ---------------------------------------------------------------


@pytest.mark.parametrize("d,expected", [(1, mp.e**-1), (2, mp.e ** mp.mpf(-1.5)), (6, mp.e**-2)])
def test_nica_limit_values(d, expected):
    assert nica_limit(d) == pytest.approx(float(expected), rel=1e-14)


def test_nica_limit_range():
    vals = [nica_limit(d) for d in range(1, 200)]
    assert vals[0] == pytest.approx(math.exp(-1))
    assert all(0 < v < math.exp(-1) for v in vals[1:])


def test_degree_one_everything_fixed():
    assert fixed_point_free_prob("a", 1, 50, 1) == (0.0, 0.0)


def test_conjugate_words_give_identical_estimates():
    a = fixed_point_counts("ab", 40, 3000, 17)
    b = fixed_point_counts(word("b") * word("ab") * word("B"), 40, 3000, 17)
    assert np.array_equal(a, b)
    assert fixed_point_free_prob("ab", 40, 3000, 17) == fixed_point_free_prob("ba", 40, 3000, 17)


def test_thread_count_does_not_change_results(monkeypatch):
    monkeypatch.setenv("HYPGEO_THREADS", "1")
    one = fixed_point_free_prob("aB", 60, 3500, 8)
    monkeypatch.setenv("HYPGEO_THREADS", "4")
    four = fixed_point_free_prob("aB", 60, 3500, 8)
    assert one == four


def test_fixed_point_free_limits_at_moderate_degree():
    p, se = fixed_point_free_prob("a", 200, 4000, 21)
    assert abs(p - math.exp(-1)) < 3 * se + 1e-3
    p, se = fixed_point_free_prob("aa", 200, 4000, 22)
    assert abs(p - math.exp(-1.5)) < 3 * se + 1e-3


def test_joint_factorizes_for_non_conjugate_words():
    r = joint_fixed_point_free(["ab", "aaB"], 200, 4000, 5)
    assert abs(r["difference"]) < 3 * r["difference_stderr"]
    assert r["joint"] == pytest.approx(r["product"], abs=3 * r["joint_stderr"])


def test_systole_empty_below_base_systole():
    r = systole_prob(3.5, 50, 10, 1)
    assert r["estimate"] == 1.0 and r["classes"] == []


def test_systole_events_are_nested():
    with pytest.warns(RuntimeWarning, match="truncated"):
        r = systole_prob(7.2, 150, 1500, 2)
    assert r["factorial_d"] == "2"
    assert r["estimate"] >= r["factorial_estimate"]
    assert r["estimate"] >= r["nica_product"] - 3 * r["stderr"] - 0.02
    for pw in r["per_word"]:
        assert pw["no_short_cycle"] >= pw["power_fixed_point_free"]


def test_systole_at_figure_eight_length():
    r = systole_prob(4.0, 300, 2000, 3)
    assert len(r["classes"]) == 3
    assert r["estimate"] == r["factorial_estimate"]
    assert abs(r["estimate"] - math.exp(-3)) < 3 * r["stderr"] + 0.01


def test_transitivity():
    assert transitivity_fraction(1, 10, 1) == (1.0, 0.0)
    assert float(brute_force_transitive_fraction(2)) == 0.75
    p, se = transitivity_fraction(2, 4000, 3)
    assert abs(p - 0.75) < 3 * se
    p3, se3 = transitivity_fraction(3, 6000, 4)
    assert abs(p3 - float(brute_force_transitive_fraction(3))) < 3 * se3
    p, _ = transitivity_fraction(100, 1000, 5)
    assert p >= 0.95


def test_cycle_length_counts_match_cycle_types():
    counts = cycle_length_counts("aB", 9, 30, 4, max_len=9)
    assert np.array_equal(counts[:, 0], fixed_point_counts("aB", 9, 30, 4))
    assert np.all((counts * np.arange(1, 10)).sum(axis=1) == 9)
    mean = cycle_length_counts("a", 200, 3000, 5, max_len=4).mean(axis=0)
    assert np.allclose(mean, 1 / np.arange(1, 5), atol=0.06)
