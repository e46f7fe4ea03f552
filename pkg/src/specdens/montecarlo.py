"""Monte Carlo verification of the smallest-singular-value scaling law.

Samples Hermitian random matrices whose entry variances follow a variance
profile blown up from ``K`` blocks to dimension ``N = n K`` (entry ``(i, j)``
has variance ``s[block(i), block(j)] / N``; blocks where the profile
vanishes are exactly zero), measures the smallest singular value across
sizes and trials, and fits the log-log slope of its mean against the
dimension.  When the density of states diverges at zero like
``tau**(-sigma)``, the smallest singular value shrinks like
``N**(-1/(1-sigma))`` rather than the regular ``1/N``; the fitted slope is
compared against this prediction.

Sampling is reproducible bit for bit: trial ``(t)`` at size index ``(i)``
uses a counter-based generator seeded from ``[master_seed, i, t]``, so the
result is independent of the number of worker threads, and all reductions
run in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EigFailureError, SingularMatrixError
from .minmax import index_exponents
from .normal_form import as_profile, build_relation, pattern_of, symmetric_normal_form
from .patterns import has_support

__all__ = [
    "EnsembleConfig",
    "SweepReport",
    "sample_block_hermitian",
    "smallest_singular_value",
    "condition_number",
    "run_sweep",
]


@dataclass(frozen=True, eq=False)
class EnsembleConfig:
    """Plan for a smallest-singular-value sweep.

    ``sizes`` are per-block sizes ``n`` (matrix dimension is ``n * K``);
    ``trials`` independent samples are drawn per size; ``workers`` caps the
    thread pool (the eigensolver releases the interpreter lock, so threads
    scale; determinism does not depend on the worker count)."""

    profile: object
    sizes: tuple[int, ...]
    trials: int
    master_seed: int = 20240
    workers: int | None = None


@dataclass(frozen=True, eq=False)
class SweepReport:
    """Result of a sweep.

    ``smin[i, t]`` is the smallest singular value of trial ``t`` at size
    ``sizes[i]``; ``mean_smin``/``stderr_smin``/``mean_cond`` aggregate per
    size (``mean_cond`` is infinite when a sample is exactly singular).
    ``slope`` is the least squares slope of ``log mean_smin`` against
    ``log dims``; ``predicted_slope`` is ``-1/(1-sigma)`` from the exact
    singularity degree of the profile, or None when the pattern has no
    support (the spectrum then has an atom at zero and the scaling law does
    not apply)."""

    sizes: tuple[int, ...]
    dims: tuple[int, ...]
    trials: int
    master_seed: int
    smin: np.ndarray
    mean_smin: tuple[float, ...]
    stderr_smin: tuple[float, ...]
    mean_cond: tuple[float, ...]
    slope: float
    predicted_slope: float | None


def _trial_rng(master_seed: int, size_index: int, trial: int) -> np.random.Generator:
    seq = np.random.SeedSequence([int(master_seed), int(size_index), int(trial)])
    return np.random.Generator(np.random.Philox(seq))


def sample_block_hermitian(s, n: int, rng: np.random.Generator) -> np.ndarray:
    """One Hermitian sample of dimension ``N = n * K``.

    Off-diagonal entries are complex Gaussian with variance
    ``s[block(i), block(j)] / N``, the diagonal is real Gaussian with the
    same variance, and entries in vanishing blocks are exactly zero."""
    profile = as_profile(s)
    if n < 1:
        raise ValueError("block size n must be positive")
    k = profile.k
    dim = n * k
    x = rng.standard_normal((dim, dim))
    y = rng.standard_normal((dim, dim))
    a = (x + 1j * y) / math.sqrt(2.0)
    b = (a + a.conj().T) / math.sqrt(2.0)
    scale = np.sqrt(np.kron(profile.entries, np.ones((n, n))) / dim)
    return scale * b


def _checked_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix with decomposition sanity checks:
    the eigenvalue sum must reproduce the trace and the sum of squares the
    squared Frobenius norm."""
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("matrix must be square")
    if not np.isfinite(h).all():
        raise EigFailureError("matrix has non-finite entries")
    try:
        w = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise EigFailureError(f"eigendecomposition failed: {exc}") from exc
    if not np.isfinite(w).all():
        raise EigFailureError("eigendecomposition returned non-finite values")
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    dim = h.shape[0]
    if abs(w.sum() - np.trace(h).real) > 1e-8 * scale * dim:
        raise EigFailureError("eigenvalue sum does not match the trace")
    fro2 = float(np.linalg.norm(h, "fro") ** 2)
    if abs(float(w @ w) - fro2) > 1e-8 * max(1.0, fro2):
        raise EigFailureError(
            "eigenvalue squares do not match the Frobenius norm"
        )
    return w


def smallest_singular_value(h: np.ndarray) -> float:
    """Smallest singular value of a Hermitian matrix (the minimum absolute
    eigenvalue).  Raises EigFailureError when the decomposition fails its
    sanity checks."""
    w = _checked_eigenvalues(h)
    return float(np.abs(w).min())


def condition_number(h: np.ndarray) -> float:
    """Spectral condition number of a Hermitian matrix.  Raises
    SingularMatrixError when the matrix is exactly singular."""
    w = np.abs(_checked_eigenvalues(h))
    smallest = float(w.min())
    if smallest == 0.0:
        raise SingularMatrixError("matrix is exactly singular")
    return float(w.max()) / smallest


def _predicted_slope(profile) -> float | None:
    if not has_support(pattern_of(profile)):
        return None
    nf = symmetric_normal_form(profile)
    sigma = index_exponents(build_relation(nf)).sigma
    return -1.0 / (1.0 - float(sigma))


def run_sweep(config: EnsembleConfig) -> SweepReport:
    """Run the full sweep described by ``config`` and fit the scaling law.

    Trials run on a thread pool but are seeded per ``(size, trial)`` and
    reduced in index order, so the report is identical for any worker
    count."""
    profile = as_profile(config.profile)
    sizes = tuple(int(n) for n in config.sizes)
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError("sizes must be positive integers")
    if config.trials < 2:
        raise ValueError("need at least two trials per size")
    k = profile.k
    dims = tuple(n * k for n in sizes)

    def one(size_index: int, trial: int) -> tuple[float, float]:
        rng = _trial_rng(config.master_seed, size_index, trial)
        h = sample_block_hermitian(profile, sizes[size_index], rng)
        w = np.abs(_checked_eigenvalues(h))
        small = float(w.min())
        cond = math.inf if small == 0.0 else float(w.max()) / small
        return small, cond

    smin = np.empty((len(sizes), config.trials))
    cond = np.empty_like(smin)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for i in range(len(sizes)):
            futures = [
                pool.submit(one, i, t) for t in range(config.trials)
            ]
            for t, fut in enumerate(futures):
                smin[i, t], cond[i, t] = fut.result()

    mean = smin.mean(axis=1)
    stderr = smin.std(axis=1, ddof=1) / math.sqrt(config.trials)
    if len(sizes) >= 2 and (mean > 0).all():
        slope = float(np.polyfit(np.log(dims), np.log(mean), 1)[0])
    else:
        slope = math.nan
    smin.flags.writeable = False
    return SweepReport(
        sizes=sizes,
        dims=dims,
        trials=config.trials,
        master_seed=config.master_seed,
        smin=smin,
        mean_smin=tuple(float(x) for x in mean),
        stderr_smin=tuple(float(x) for x in stderr),
        mean_cond=tuple(float(x) for x in cond.mean(axis=1)),
        slope=slope,
        predicted_slope=_predicted_slope(profile),
    )
