"""Tests for the random-matrix sampler and the scaling-law sweep."""

import math

import numpy as np
import pytest

from specdens.errors import EigFailureError, SingularMatrixError
from specdens.montecarlo import (
    EnsembleConfig,
    condition_number,
    run_sweep,
    sample_block_hermitian,
    smallest_singular_value,
)

ARROW = np.array([[1.0, 1.0], [1.0, 0.0]])
NOSUPPORT3 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])


def _rng(*seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(seed))))


# --- sampling ---------------------------------------------------------------------


def test_sample_is_hermitian_with_real_diagonal():
    h = sample_block_hermitian(ARROW, 16, _rng(1))
    assert h.shape == (32, 32)
    assert np.array_equal(h, h.conj().T)
    assert not h.diagonal().imag.any()


def test_sample_zero_blocks_are_exactly_zero():
    h = sample_block_hermitian(ARROW, 8, _rng(2))
    assert not h[8:, 8:].any()
    assert h[:8, :].all()


def test_sample_is_bitwise_reproducible():
    h1 = sample_block_hermitian(ARROW, 12, _rng(3, 4))
    h2 = sample_block_hermitian(ARROW, 12, _rng(3, 4))
    assert np.array_equal(h1, h2)
    h3 = sample_block_hermitian(ARROW, 12, _rng(3, 5))
    assert not np.array_equal(h1, h3)


def test_sample_norm_matches_semicircle_edge():
    h = sample_block_hermitian([[1.0]], 512, _rng(6))
    assert 1.8 < np.linalg.norm(h, 2) < 2.2


def test_sample_entry_variance():
    n = 64
    h = sample_block_hermitian(ARROW, n, _rng(7))
    dim = 2 * n
    offdiag = np.abs(h[:n, n:]) ** 2  # block (0, 1), variance 1/dim
    assert offdiag.mean() == pytest.approx(1.0 / dim, rel=0.1)
    diag = h.diagonal()[:n].real ** 2
    assert diag.mean() == pytest.approx(1.0 / dim, rel=0.5)


# --- spectra ----------------------------------------------------------------------


def test_smallest_singular_value_matches_svd():
    h = sample_block_hermitian(ARROW, 10, _rng(8))
    direct = np.linalg.svd(h, compute_uv=False).min()
    assert abs(smallest_singular_value(h) - direct) < 1e-10


def test_eig_failure_on_bad_matrix():
    with pytest.raises(EigFailureError):
        smallest_singular_value(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        smallest_singular_value(np.ones((2, 3)))


def test_condition_number():
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([4.0, 1.0])) == pytest.approx(4.0)
    with pytest.raises(SingularMatrixError):
        condition_number(np.diag([1.0, 0.0]))


# --- sweeps -----------------------------------------------------------------------


def test_sweep_is_deterministic_across_worker_counts():
    cfg1 = EnsembleConfig(ARROW, (8, 16), trials=6, master_seed=99, workers=1)
    cfg4 = EnsembleConfig(ARROW, (8, 16), trials=6, master_seed=99, workers=4)
    r1, r4 = run_sweep(cfg1), run_sweep(cfg4)
    assert np.array_equal(r1.smin, r4.smin)
    assert r1.mean_smin == r4.mean_smin
    assert r1.slope == r4.slope


def test_sweep_report_contents():
    rep = run_sweep(EnsembleConfig(ARROW, (8, 16), trials=5, master_seed=1))
    assert rep.dims == (16, 32)
    assert rep.smin.shape == (2, 5)
    assert all(s > 0 for s in rep.mean_smin)
    assert all(s > 0 for s in rep.stderr_smin)
    assert all(c > 1 for c in rep.mean_cond)
    assert rep.predicted_slope == pytest.approx(-1.5)  # sigma = 1/3


def test_sweep_regular_profile_scales_like_inverse_dimension():
    rep = run_sweep(
        EnsembleConfig([[1.0]], (16, 32, 64, 128), trials=80, master_seed=5)
    )
    assert rep.predicted_slope == pytest.approx(-1.0)  # sigma = 0
    assert rep.slope == pytest.approx(-1.0, abs=0.3)


def test_sweep_no_support_has_no_prediction():
    rep = run_sweep(EnsembleConfig(NOSUPPORT3, (6, 12), trials=4, master_seed=3))
    assert rep.predicted_slope is None
    # the pattern forces an exact kernel, so smin vanishes identically
    assert max(rep.mean_smin) < 1e-12


def test_sweep_validates_config():
    with pytest.raises(ValueError):
        run_sweep(EnsembleConfig(ARROW, (), trials=5))
    with pytest.raises(ValueError):
        run_sweep(EnsembleConfig(ARROW, (8,), trials=1))
