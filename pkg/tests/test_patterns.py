"""Tests for zero-pattern combinatorics."""

import random
from fractions import Fraction

import pytest

from specdens.errors import NoSupportError, TooLargeError, ZeroRowError
from specdens.patterns import (
    ZeroPattern,
    brute_force_oracle,
    fid_skeleton,
    has_support,
    has_total_support,
    is_fully_indecomposable,
    max_bipartite_matching,
    maximal_zero_submatrix,
)


def pat(rows):
    return ZeroPattern.from_rows(rows)


def random_pattern(rng, k, density):
    return pat([[1 if rng.random() < density else 0 for _ in range(k)] for _ in range(k)])


# --- matching -------------------------------------------------------------------


def test_matching_all_present_2x2():
    m = max_bipartite_matching(pat([[1, 1], [1, 1]]))
    assert m.size == 2 and m.perfect
    assert sorted(m.row_match) == [0, 1]


def test_matching_deficient_3x3():
    m = max_bipartite_matching(pat([[0, 0, 1], [0, 0, 1], [1, 1, 1]]))
    assert m.size == 2 and not m.perfect


def test_matching_zero_1x1():
    m = max_bipartite_matching(pat([[0]]))
    assert m.size == 0 and not m.perfect and m.row_match == (None,)


def test_matching_deterministic():
    p = pat([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    assert max_bipartite_matching(p) == max_bipartite_matching(p)


# --- support classes --------------------------------------------------------------


def test_support_examples():
    assert has_support(pat([[1, 1], [1, 0]]))
    assert not has_support(pat([[0, 0, 1], [0, 0, 1], [1, 1, 1]]))


def test_total_support_examples():
    assert not has_total_support(pat([[1, 1], [1, 0]]))
    assert has_total_support(pat([[0, 1], [1, 0]]))
    assert has_total_support(pat([[1, 1], [1, 1]]))


def test_fid_examples():
    assert is_fully_indecomposable(pat([[1, 1], [1, 1]]))
    # permutation pattern: total support but decomposable
    assert not is_fully_indecomposable(pat([[0, 1], [1, 0]]))
    assert is_fully_indecomposable(pat([[1, 1, 0], [1, 1, 1], [0, 1, 1]]))
    assert is_fully_indecomposable(pat([[1]]))
    assert not is_fully_indecomposable(pat([[0]]))


def test_fid_implies_total_support_implies_support():
    rng = random.Random(7)
    for _ in range(300):
        k = rng.randint(1, 6)
        p = random_pattern(rng, k, rng.choice([0.3, 0.5, 0.8]))
        if is_fully_indecomposable(p):
            assert has_total_support(p)
        if has_total_support(p):
            assert has_support(p)


def test_fid_skeleton_example():
    res = fid_skeleton(pat([[1, 1], [1, 0]]))
    assert res.skeleton.present == ((False, True), (True, False))


def test_fid_skeleton_no_support_raises():
    with pytest.raises(NoSupportError):
        fid_skeleton(pat([[0, 0, 1], [0, 0, 1], [1, 1, 1]]))


def test_skeleton_has_total_support():
    rng = random.Random(11)
    n_checked = 0
    while n_checked < 200:
        k = rng.randint(1, 7)
        p = random_pattern(rng, k, rng.choice([0.35, 0.5, 0.7]))
        if not has_support(p):
            continue
        sk = fid_skeleton(p).skeleton
        assert has_total_support(sk)
        # idempotent
        assert fid_skeleton(sk).skeleton.present == sk.present
        n_checked += 1


def test_skeleton_matching_independent_under_permutation():
    # conjugating by (P, Q) changes which matching the scan finds; the
    # skeleton must transform covariantly.
    rng = random.Random(13)
    n_checked = 0
    while n_checked < 100:
        k = rng.randint(2, 7)
        p = random_pattern(rng, k, 0.5)
        if not has_support(p):
            continue
        rp = list(range(k))
        cp = list(range(k))
        rng.shuffle(rp)
        rng.shuffle(cp)
        sk_then_perm = fid_skeleton(p).skeleton.permuted(rp, cp)
        perm_then_sk = fid_skeleton(p.permuted(rp, cp)).skeleton
        assert sk_then_perm.present == perm_then_sk.present
        n_checked += 1


# --- no-support witnesses -----------------------------------------------------------


def test_maximal_zero_submatrix_example():
    res = maximal_zero_submatrix(pat([[0, 0, 1], [0, 0, 1], [1, 1, 1]]))
    assert res.tag == "NoSupport"
    assert res.witness_i == (0, 1)
    assert res.witness_j == (0, 1)
    assert res.kappa == Fraction(1, 3)


def test_maximal_zero_submatrix_support_only():
    res = maximal_zero_submatrix(pat([[1, 1], [1, 0]]))
    assert res.tag == "SupportOnly"
    assert res.kappa is None


def test_maximal_zero_submatrix_total_support():
    assert maximal_zero_submatrix(pat([[0, 1], [1, 0]])).tag == "TotalSupport"


def test_maximal_zero_submatrix_zero_row():
    with pytest.raises(ZeroRowError):
        maximal_zero_submatrix(pat([[1, 0], [0, 0]]))


def test_kappa_in_unit_interval_and_witness_zero():
    rng = random.Random(17)
    n_checked = 0
    while n_checked < 200:
        k = rng.randint(2, 7)
        p = random_pattern(rng, k, 0.3)
        if any(not any(row) for row in p.present):
            continue
        res = maximal_zero_submatrix(p)
        if res.tag != "NoSupport":
            continue
        assert 0 < res.kappa <= 1
        assert len(res.witness_i) + len(res.witness_j) > k
        assert all(not p.present[i][j] for i in res.witness_i for j in res.witness_j)
        n_checked += 1


# --- permutation invariance ----------------------------------------------------------


def test_classification_permutation_invariant():
    rng = random.Random(19)
    for _ in range(150):
        k = rng.randint(1, 6)
        p = random_pattern(rng, k, rng.choice([0.3, 0.6]))
        rp = list(range(k))
        cp = list(range(k))
        rng.shuffle(rp)
        rng.shuffle(cp)
        q = p.permuted(rp, cp)
        assert has_support(p) == has_support(q)
        assert has_total_support(p) == has_total_support(q)
        assert is_fully_indecomposable(p) == is_fully_indecomposable(q)


# --- oracle agreement ------------------------------------------------------------------


def test_oracle_limit():
    with pytest.raises(TooLargeError):
        brute_force_oracle(pat([[1] * 9 for _ in range(9)]), "support")


def test_oracle_agreement_random():
    rng = random.Random(23)
    for _ in range(250):
        k = rng.randint(1, 6)
        p = random_pattern(rng, k, rng.choice([0.25, 0.45, 0.7]))
        assert has_support(p) == brute_force_oracle(p, "support")
        assert has_total_support(p) == brute_force_oracle(p, "total_support")
        assert is_fully_indecomposable(p) == brute_force_oracle(p, "fid")
        if has_support(p):
            assert fid_skeleton(p).on_diagonal == brute_force_oracle(p, "skeleton")
        elif all(any(row) for row in p.present):
            res = maximal_zero_submatrix(p)
            perimeter, _, _ = brute_force_oracle(p, "max_zero")
            assert len(res.witness_i) + len(res.witness_j) == perimeter


def test_oracle_rejects_unknown_query():
    with pytest.raises(ValueError):
        brute_force_oracle(pat([[1]]), "banana")
