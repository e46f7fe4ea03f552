"""Numerical solvers for the self-consistent density equations.

For a symmetric, entrywise non-negative variance profile ``S`` the system

    1 / v_i  =  eta + (S v)_i ,        v_i > 0,   eta > 0,

has a unique positive solution ``v(eta)``, and ``m(i eta) = i v(eta)``
extends to the holomorphic solution of

    -1 / m_i  =  z + (S m)_i ,         Im m_i > 0,   Im z > 0,

whose averaged imaginary part ``Im <m> / pi`` is the density of states of
the random-matrix ensemble with variance profile ``S``.  This module

* solves both systems (damped fixed point with a scale-free Newton
  acceleration and continuation in ``eta`` resp. ``Im z``),
* evaluates the density along a grid of real energies,
* measures the small-``eta`` power laws of the per-block averages of ``v``,
* builds the rescaled zero-energy data: the block coefficient matrices of
  the rescaled profile, the exactly rational growth rates of its
  first-order term, the limiting weight vector obtained by extrapolation,
  and the constraint residuals that certify the weights,
* estimates the point mass at zero for profiles without support, and
* computes density quantiles together with the predicted finite-size
  scaling slope of the smallest singular value.

Throughout, averages are normalized: ``<x>`` is the arithmetic mean over
the indices involved, and block inner products carry a ``1/dim`` factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import (
    GridTooCoarseError,
    HasSupportError,
    ImaginarySignLostError,
    NonConvergenceError,
    NonPositiveInputError,
    ZeroRowError,
)
from .minmax import IndexExponents, index_exponents
from .normal_form import (
    NormalForm,
    VarianceProfile,
    as_profile,
    build_relation,
    pattern_of,
    symmetric_normal_form,
)
from .patterns import fid_skeleton, has_support, maximal_zero_submatrix

__all__ = [
    "AxisSolution",
    "PlaneSolution",
    "DensityCurve",
    "ScalingFit",
    "RescaledData",
    "RescaledResiduals",
    "AtomMass",
    "QuantileFit",
    "solve_imaginary_axis",
    "solve_upper_half_plane",
    "density_profile",
    "variational_value",
    "empirical_exponents",
    "rescaled_profile",
    "limit_weights",
    "rescaled_residuals",
    "atom_mass_estimate",
    "quantile",
]


# --- results --------------------------------------------------------------------


@dataclass(frozen=True)
class AxisSolution:
    """Positive solution of ``1/v = eta + S v`` at one point ``eta > 0``.

    ``residual`` is the max-norm defect of the product form
    ``v * (eta + S v) - 1`` (identical zero set as the stated equation for
    positive ``v``, but free of the catastrophic cancellation that the
    reciprocal form suffers when ``v`` spans many orders of magnitude)."""

    eta: float
    v: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class PlaneSolution:
    """Upper-half-plane solution of ``-1/m = z + S m`` at one ``z``.

    ``residual`` is the max-norm of ``m * (z + S m) + 1``."""

    z: complex
    m: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class DensityCurve:
    """Density of states sampled along real energies ``tau``.

    ``rho[j]`` is ``Im <m(tau[j] + i epsilon)> / pi``; the small
    ``epsilon > 0`` regularizes points inside the spectrum."""

    tau: np.ndarray
    rho: np.ndarray
    epsilon: float


@dataclass(frozen=True, eq=False)
class ScalingFit:
    """Power-law fit of the per-block averages of ``v`` on an ``eta`` grid.

    ``block_averages[p, b]`` is the mean of ``v(eta[p])`` over the indices
    of block ``b`` of the normal form.  ``fitted_slopes[b]`` is the least
    squares slope of ``log`` average versus ``log eta``; the prediction is
    ``-f_b`` where ``f`` are the exact block exponents
    (``v_i(eta) ~ eta**(-f_i)``)."""

    eta: np.ndarray
    block_averages: np.ndarray
    fitted_slopes: tuple[float, ...]
    predicted_slopes: tuple[float, ...]
    exponents: IndexExponents
    nf: NormalForm
    max_deviation: float


@dataclass(frozen=True, eq=False)
class RescaledData:
    """Block data of the rescaled profile, in normal-form (permuted) order.

    After rescaling with the block exponents ``f`` and the variable
    ``omega = eta**(1/Q)``, the profile splits as

        S(omega) = s0 + diag(omega**(Q h)) @ s1 + higher order,

    where ``s0`` keeps exactly the anti-diagonal pair blocks (equivalently:
    the entries of the permuted profile lying on positive diagonals), and
    ``s1`` keeps, for each block ``i``, the couplings to the partners of
    its slowest-growing direct successors (``succ_sets[i]``).  The rational
    rates ``h_i > 0`` satisfy ``h_i = h_{partner(i)}`` exactly.

    ``w`` (when set by :func:`limit_weights`) approximates the positive
    limit of ``eta**f * v(eta)`` and satisfies ``w * (s0 @ w) = 1`` up to
    ``w_residual``."""

    nf: NormalForm
    exponents: IndexExponents
    s0: np.ndarray
    s1: np.ndarray
    h: tuple[Fraction, ...]
    succ_sets: tuple[tuple[int, ...], ...]
    w: np.ndarray | None = None
    w_residual: float | None = None
    eta_pair: tuple[float, float] | None = None


@dataclass(frozen=True, eq=False)
class RescaledResiduals:
    """Zero-order constraint residuals of a limiting weight vector ``w``.

    ``f0_vector`` is ``w * (s0 @ w) - 1`` projected onto the orthogonal
    complement of the span of the pair-difference vectors
    ``1_{block l} - 1_{block partner(l)}``; ``fl_values[l]`` (one per
    anti-diagonal pair) is the scalar first-order constraint that fixes the
    remaining degrees of freedom along those directions.  All must vanish
    at the true limit."""

    f0_vector: np.ndarray
    f0_residual: float
    fl_values: tuple[float, ...]
    fl_residual: float


@dataclass(frozen=True, eq=False)
class AtomMass:
    """Mass of the point spectrum at zero for a profile without support.

    ``kappa_exact`` is the combinatorial value (|I| + |J| - K) / K of a
    maximal all-zero submatrix; ``kappa_numeric`` is ``eta * <v(eta)>`` at
    the smallest grid point, which converges to the same value."""

    kappa_exact: Fraction
    kappa_numeric: float
    eta_grid: tuple[float, ...]
    estimates: tuple[float, ...]


@dataclass(frozen=True)
class QuantileFit:
    """Location ``gamma`` of the ``1/n`` density quantile near zero and the
    predicted log-log slope ``-1/(1 - sigma)`` of the smallest singular
    value against the matrix dimension."""

    gamma: float
    predicted_slope: float
    mass_target: float


# --- shared validation ----------------------------------------------------------


def _solver_matrix(s) -> np.ndarray:
    """Validated dense profile matrix; rejects rows with no non-zero entry
    (the corresponding component would equal 1/eta identically and the
    density would not be a function)."""
    profile = as_profile(s)
    a = profile.entries
    zero_rows = np.flatnonzero(~(a != 0).any(axis=1))
    if zero_rows.size:
        raise ZeroRowError(f"profile row {zero_rows[0]} is identically zero")
    return a


def _positive_start(start, k: int) -> np.ndarray:
    v = np.asarray(start, dtype=float)
    if v.shape != (k,):
        raise ValueError(f"start vector must have shape ({k},)")
    if not (v > 0).all():
        raise NonPositiveInputError("start vector must be strictly positive")
    return v.copy()


class _Budget:
    """Shared iteration countdown across continuation stages."""

    def __init__(self, limit: int):
        self.left = int(limit)
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.left -= n
        self.used += n

    @property
    def exhausted(self) -> bool:
        return self.left <= 0


# --- solver on the imaginary axis -----------------------------------------------


def _axis_residual(a: np.ndarray, eta: float, v: np.ndarray) -> float:
    return float(np.max(np.abs(v * (eta + a @ v) - 1.0)))


def _axis_newton_step(a, eta, v):
    """One Newton step in multiplicative coordinates.

    Solves (diag(v*(eta+Sv)) + diag(v) S diag(v)) y = -(v*(eta+Sv) - 1)
    and updates v <- v * (1 + t y), halving t only until the trial stays
    positive; the column scaling by diag(v) keeps the linear system well
    conditioned even when v spans many orders of magnitude.  The step is
    deliberately not forced to decrease the residual: close to the
    zero-energy singularity the Jacobian is nearly singular along the
    pair-scaling direction and the residual rises sharply for one step
    before quadratic contraction sets in; a monotone line search would
    crawl.  Divergence is contained by the caller's watchdog."""
    u = eta + a @ v
    g = v * u - 1.0
    jac = np.diag(v * u) + (v[:, None] * a) * v[None, :]
    try:
        y = np.linalg.solve(jac, -g)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(y).all():
        return None
    t = 1.0
    for _ in range(60):
        trial = v * (1.0 + t * y)
        if (trial > 0).all():
            return trial, _axis_residual(a, eta, trial)
        t *= 0.5
    return None


def _axis_damped_step(a, eta, v, res, theta):
    """One damped fixed-point sweep v <- (1-theta) v + theta / (eta + S v),
    halving theta until the residual does not increase.  Returns
    (v, res, theta); theta is re-expanded slowly on success."""
    cand = 1.0 / (eta + a @ v)
    while True:
        trial = (1.0 - theta) * v + theta * cand
        r = _axis_residual(a, eta, trial)
        if r <= res or theta <= 1e-8:
            break
        theta *= 0.5
    return trial, r, min(1.0, theta * 1.25)


_WATCHDOG = 20


def _axis_stage(a, eta, v, tol, budget: _Budget, method: str):
    """Drive v to tolerance at fixed eta.

    Newton steps are accepted without a monotonicity requirement; a
    watchdog tracks the best iterate seen and, after _WATCHDOG consecutive
    steps without a 10 percent improvement on it, reverts to the best
    iterate and finishes the stage with monotone damped sweeps."""
    res = _axis_residual(a, eta, v)
    theta = 1.0
    best_v, best_res = v, res
    stale = 0
    while res > tol:
        if budget.exhausted:
            raise NonConvergenceError(
                f"no convergence at eta={eta:g}: residual {res:.3e} > {tol:g} "
                f"after {budget.used} iterations",
                residual=res,
            )
        stepped = None
        if method == "hybrid" and stale < _WATCHDOG:
            stepped = _axis_newton_step(a, eta, v)
        if stepped is None:
            v, res, theta = _axis_damped_step(a, eta, v, res, theta)
        else:
            v, res = stepped
        budget.spend()
        if res < best_res * 0.9:
            best_v, best_res, stale = v, res, 0
        else:
            stale += 1
            if stale == _WATCHDOG:
                v, res = best_v, best_res
    return v, res


def _continuation_path(target: float, top: float = 1.0) -> list[float]:
    """Geometric path from max(target, top) down to target (inclusive)."""
    path = [max(target, top)]
    while path[-1] > target * 1.0000001:
        path.append(max(target, path[-1] * 0.5))
    return path


def solve_imaginary_axis(
    s,
    eta: float,
    *,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    method: str = "hybrid",
    start=None,
) -> AxisSolution:
    """Solve ``1/v = eta + S v`` for the positive vector ``v`` at ``eta > 0``.

    Parameters
    ----------
    s : matrix-like or VarianceProfile
        Symmetric non-negative profile without identically zero rows.
    eta : float
        Strictly positive point on the imaginary axis.
    tol : float
        Convergence threshold for the product-form residual
        ``max |v * (eta + S v) - 1|``.
    max_iter : int
        Total iteration budget across all continuation stages.
    method : {"hybrid", "damped"}
        "hybrid" (default) accelerates the damped fixed point with
        backtracked Newton steps; "damped" uses pure damped sweeps
        ``v <- (1 - theta) v + theta / (eta + S v)`` with adaptive theta.
    start : array, optional
        Positive warm start; when given, continuation is skipped and the
        equation is solved directly at ``eta``.

    Raises
    ------
    ZeroRowError, NonConvergenceError, NonPositiveInputError, ValueError
    """
    if method not in ("hybrid", "damped"):
        raise ValueError(f"unknown method {method!r}")
    if not (isinstance(eta, (int, float)) and math.isfinite(eta) and eta > 0):
        raise ValueError("eta must be a finite positive real number")
    a = _solver_matrix(s)
    k = a.shape[0]
    eta = float(eta)
    budget = _Budget(max_iter)
    if start is not None:
        v = _positive_start(start, k)
        path = [eta]
    else:
        path = _continuation_path(eta)
        row = a.sum(axis=1)
        v = 1.0 / (path[0] + row / path[0])
    for stage_eta in path:
        stage_tol = tol if stage_eta == eta else max(tol, 1e-10)
        v, res = _axis_stage(a, stage_eta, v, stage_tol, budget, method)
    _assert_axis_bounds(a, eta, v, tol)
    v = v.copy()
    v.flags.writeable = False
    return AxisSolution(eta=eta, v=v, residual=res, iterations=budget.used)


def _assert_axis_bounds(a, eta, v, tol):
    """A priori bounds: the solution always satisfies v <= 1/eta and
    v >= min(eta, 1/eta) / (1 + max row sum); violation beyond numerical
    slack indicates an internal solver defect."""
    slack = 1.0 + 1e-9 + 10.0 * tol
    upper = 1.0 / eta
    lower = min(eta, upper) / (1.0 + float(a.sum(axis=1).max()))
    if (v > upper * slack).any() or (v < lower / slack).any():
        raise RuntimeError(
            "solver result violates the a priori bounds "
            f"[{lower:.3e}, {upper:.3e}] at eta={eta:g}"
        )


# --- solver on the upper half-plane ---------------------------------------------


def _plane_residual(a, z, m) -> float:
    return float(np.max(np.abs(m * (z + a @ m) + 1.0)))


def _plane_newton_step(a, z, m):
    """Complex Newton step for m * (z + S m) + 1 = 0 in multiplicative
    coordinates, halving the step only until Im m stays positive (no
    monotone line search; see _axis_newton_step)."""
    u = z + a @ m
    g = m * u + 1.0
    jac = np.diag(m * u) + (m[:, None] * a) * m[None, :]
    try:
        y = np.linalg.solve(jac, -g)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(y).all():
        return None
    t = 1.0
    for _ in range(60):
        trial = m * (1.0 + t * y)
        if (trial.imag > 0).all():
            return trial, _plane_residual(a, z, trial)
        t *= 0.5
    return None


def _plane_damped_step(a, z, m, res, theta):
    """Damped sweep m <- (1-theta) m + theta * (-1/(z + S m)).  The
    candidate has positive imaginary part whenever m does, so the convex
    combination stays in the upper half-plane for every theta in (0, 1]."""
    cand = -1.0 / (z + a @ m)
    while True:
        trial = (1.0 - theta) * m + theta * cand
        r = _plane_residual(a, z, trial)
        if r <= res or theta <= 1e-8:
            break
        theta *= 0.5
    return trial, r, min(1.0, theta * 1.25)


def _plane_stage(a, z, m, tol, budget: _Budget):
    res = _plane_residual(a, z, m)
    theta = 1.0
    best_m, best_res = m, res
    stale = 0
    while res > tol:
        if budget.exhausted:
            raise NonConvergenceError(
                f"no convergence at z={z:g}: residual {res:.3e} > {tol:g} "
                f"after {budget.used} iterations",
                residual=res,
            )
        stepped = None
        if stale < _WATCHDOG:
            stepped = _plane_newton_step(a, z, m)
        if stepped is None:
            m, res, theta = _plane_damped_step(a, z, m, res, theta)
        else:
            m, res = stepped
        budget.spend()
        if not (m.imag > 0).all():
            raise ImaginarySignLostError(
                f"iterate left the upper half-plane at z={z:g}"
            )
        if res < best_res * 0.9:
            best_m, best_res, stale = m, res, 0
        else:
            stale += 1
            if stale == _WATCHDOG:
                m, res = best_m, best_res
    return m, res


def solve_upper_half_plane(
    s,
    z: complex,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    start=None,
) -> PlaneSolution:
    """Solve ``-1/m = z + S m`` with ``Im m > 0`` at ``z`` with ``Im z > 0``.

    Continuation descends from ``Re z + i max(Im z, 1)`` by halving the
    imaginary part; pass ``start`` (an upper-half-plane vector) to solve
    directly at ``z``.  On the imaginary axis the solution equals
    ``i v(eta)`` with ``v`` from :func:`solve_imaginary_axis`.

    Raises
    ------
    ZeroRowError, NonConvergenceError, ImaginarySignLostError, ValueError
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag) and z.imag > 0):
        raise ValueError("z must lie in the open upper half-plane")
    a = _solver_matrix(s)
    k = a.shape[0]
    budget = _Budget(max_iter)
    if start is not None:
        m = np.asarray(start, dtype=complex)
        if m.shape != (k,):
            raise ValueError(f"start vector must have shape ({k},)")
        if not (m.imag > 0).all():
            raise ImaginarySignLostError("start vector must have Im m > 0")
        m = m.copy()
        path = [z]
    else:
        ims = _continuation_path(z.imag)
        path = [complex(z.real, im) for im in ims]
        m = np.full(k, -1.0 / path[0], dtype=complex)
        if not (m.imag > 0).all():  # pragma: no cover - safe by construction
            m = np.full(k, 1j, dtype=complex)
    for stage_z in path:
        stage_tol = tol if stage_z == z else max(tol, 1e-9)
        m, res = _plane_stage(a, stage_z, m, stage_tol, budget)
    m = m.copy()
    m.flags.writeable = False
    return PlaneSolution(z=z, m=m, residual=res, iterations=budget.used)


# --- density of states -----------------------------------------------------------


def density_profile(
    s,
    tau_grid,
    *,
    epsilon: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> DensityCurve:
    """Density of states ``rho(tau) = Im <m(tau + i epsilon)> / pi`` along a
    grid of real energies, warm-starting each point from its predecessor.

    ``epsilon > 0`` controls the regularization; the curve converges to the
    true density as ``epsilon`` decreases (at a rate set by the local
    regularity).  The result is strictly positive since ``Im m > 0``.
    """
    if not (isinstance(epsilon, (int, float)) and epsilon > 0):
        raise NonPositiveInputError("epsilon must be strictly positive")
    a = _solver_matrix(s)
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or taus.size == 0:
        raise ValueError("tau_grid must be a non-empty 1-D array")
    rho = np.empty_like(taus)
    m_prev = None
    for j, tau in enumerate(taus):
        z = complex(tau, epsilon)
        try:
            sol = solve_upper_half_plane(
                a, z, tol=tol, max_iter=max_iter, start=m_prev
            )
        except NonConvergenceError:
            if m_prev is None:
                raise
            sol = solve_upper_half_plane(a, z, tol=tol, max_iter=max_iter)
        m_prev = sol.m
        rho[j] = float(sol.m.imag.mean() / math.pi)
    taus = taus.copy()
    taus.flags.writeable = False
    rho.flags.writeable = False
    return DensityCurve(tau=taus, rho=rho, epsilon=float(epsilon))


# --- variational characterization ------------------------------------------------


def variational_value(s, x, eta: float) -> float:
    """Value of the strictly convex functional whose unique minimizer over
    positive vectors is the solution ``v(eta)``:

        J(x) = <x, S x> / 2 - <log x> + eta <x>,

    with normalized averages ``<y> = mean(y)``.  Raises
    NonPositiveInputError unless ``x > 0`` entrywise."""
    profile = as_profile(s)
    xv = np.asarray(x, dtype=float)
    if xv.shape != (profile.k,):
        raise ValueError(f"x must have shape ({profile.k},)")
    if not (xv > 0).all():
        raise NonPositiveInputError("x must be strictly positive entrywise")
    if not (isinstance(eta, (int, float)) and math.isfinite(eta) and eta >= 0):
        raise ValueError("eta must be a finite non-negative real number")
    a = profile.entries
    return float(
        0.5 * np.mean(xv * (a @ xv)) - np.mean(np.log(xv)) + eta * np.mean(xv)
    )


# --- empirical power laws ---------------------------------------------------------


def _geometric_grid(eta_max: float, eta_min: float, points_per_decade: int):
    if not (0 < eta_min < eta_max):
        raise ValueError("need 0 < eta_min < eta_max")
    decades = math.log10(eta_max / eta_min)
    n = max(2, int(round(decades * points_per_decade)) + 1)
    return np.geomspace(eta_max, eta_min, n)


def empirical_exponents(
    s,
    *,
    eta_min: float = 1e-10,
    eta_max: float = 1e-4,
    points_per_decade: int = 4,
    tol: float = 1e-12,
) -> ScalingFit:
    """Fit the small-``eta`` power laws of the per-block averages of ``v``.

    Solves the axis equation on a descending geometric grid (warm starts),
    averages ``v`` over each block of the normal form, and fits the slope
    of ``log`` average against ``log eta`` per block.  The prediction is
    ``-f_b`` with ``f`` the exact block exponents; ``max_deviation`` is the
    largest absolute gap between fitted and predicted slopes.  The fit
    converges only logarithmically in ``eta``, so wide grids (several
    decades) are required for tight comparisons."""
    profile = as_profile(s)
    nf = symmetric_normal_form(profile)
    ex = index_exponents(build_relation(nf))
    etas = _geometric_grid(eta_max, eta_min, points_per_decade)
    n_blocks = nf.n_blocks
    block_orig = [
        [nf.perm[i] for i in nf.block_indices(b)] for b in range(n_blocks)
    ]
    avgs = np.empty((etas.size, n_blocks))
    v_prev = None
    for p, eta in enumerate(etas):
        sol = solve_imaginary_axis(profile, float(eta), tol=tol, start=v_prev)
        v_prev = sol.v
        for b in range(n_blocks):
            avgs[p, b] = sol.v[block_orig[b]].mean()
    log_eta = np.log(etas)
    fitted = tuple(
        float(np.polyfit(log_eta, np.log(avgs[:, b]), 1)[0])
        for b in range(n_blocks)
    )
    predicted = tuple(float(-f) for f in ex.f)
    dev = max(abs(a - b) for a, b in zip(fitted, predicted))
    etas.flags.writeable = False
    avgs.flags.writeable = False
    return ScalingFit(
        eta=etas,
        block_averages=avgs,
        fitted_slopes=fitted,
        predicted_slopes=predicted,
        exponents=ex,
        nf=nf,
        max_deviation=dev,
    )


# --- rescaled zero-energy data ----------------------------------------------------


def rescaled_profile(s) -> RescaledData:
    """Block coefficient matrices and rational rates of the rescaled profile.

    Requires a profile whose pattern has support (otherwise the density has
    an atom at zero and no rescaling limit; see :func:`atom_mass_estimate`).
    All arrays are in normal-form (permuted) order.  Internal consistency
    is verified exactly: the zero pattern of ``s0`` must coincide with the
    entries of the permuted profile lying on positive diagonals, the rates
    must satisfy both one-sided identities

        h_i = (min over successors j of f_j) - f_i
            = f_i - (max over predecessors j of f_j)

    (with the conventions min over the empty set = 1, max = -1), and
    ``h_i = h_{partner(i)}``."""
    profile = as_profile(s)
    nf = symmetric_normal_form(profile)
    rel = build_relation(nf)
    ex = index_exponents(rel)
    n = nf.n_blocks
    partner = [nf.partner(i) for i in range(n)]
    succs = [sorted(j for (i, j) in rel.edges if i == b) for b in range(n)]
    preds = [sorted(i for (i, j) in rel.edges if j == b) for b in range(n)]

    one = Fraction(1)
    h = []
    succ_sets = []
    for b in range(n):
        min_succ = min((ex.f[j] for j in succs[b]), default=one)
        max_pred = max((ex.f[j] for j in preds[b]), default=-one)
        hb = Fraction(1, 2) * (min_succ - max_pred)
        if hb != min_succ - ex.f[b] or hb != ex.f[b] - max_pred:
            raise RuntimeError(
                f"rate identities fail at block {b}: h={hb}, f={ex.f[b]}"
            )
        if hb <= 0:
            raise RuntimeError(f"non-positive rate h={hb} at block {b}")
        h.append(hb)
        succ_sets.append(
            tuple(j for j in succs[b] if ex.f[j] == min_succ) if succs[b] else ()
        )
    for b in range(n):
        if h[b] != h[partner[b]]:
            raise RuntimeError(f"rates differ across the pair ({b}, {partner[b]})")

    permuted = nf.permuted_profile
    k = permuted.shape[0]
    s0 = np.zeros((k, k))
    s1 = np.zeros((k, k))
    for b in range(n):
        rows = nf.block_indices(b)
        cols = nf.block_indices(partner[b])
        s0[np.ix_(rows, cols)] = permuted[np.ix_(rows, cols)]
        for j in succ_sets[b]:
            jcols = nf.block_indices(partner[j])
            s1[np.ix_(rows, jcols)] = permuted[np.ix_(rows, jcols)]

    skel = fid_skeleton(pattern_of(permuted)).on_diagonal
    if not np.array_equal(s0 != 0, np.array(skel, dtype=bool)):
        raise RuntimeError(
            "pair blocks do not match the positive-diagonal entries"
        )
    s0.flags.writeable = False
    s1.flags.writeable = False
    return RescaledData(
        nf=nf,
        exponents=ex,
        s0=s0,
        s1=s1,
        h=tuple(h),
        succ_sets=tuple(succ_sets),
    )


def _per_index_exponents(data: RescaledData) -> np.ndarray:
    """Block exponents expanded to one float per permuted index."""
    out = np.empty(sum(data.nf.dims))
    for b in range(data.nf.n_blocks):
        out[list(data.nf.block_indices(b))] = float(data.exponents.f[b])
    return out


def limit_weights(
    s,
    *,
    eta_pair: tuple[float, float] = (2e-12, 1e-12),
    tol: float = 1e-13,
    data: RescaledData | None = None,
) -> RescaledData:
    """Extrapolate the positive limit ``w = lim eta**f * v(eta)``.

    The rescaled solution is analytic in ``omega = eta**(1/Q)`` near zero,
    so a two-point linear extrapolation in ``omega`` from the pair of
    points ``eta_pair`` (descending) removes the leading correction; the
    remaining error is of order ``omega_1 * omega_2``.  Returns a copy of
    ``data`` (computed if not supplied) with ``w``, ``w_residual`` (the
    max-norm of ``w * (s0 @ w) - 1``) and ``eta_pair`` filled in."""
    profile = as_profile(s)
    if data is None:
        data = rescaled_profile(profile)
    e1, e2 = (float(eta_pair[0]), float(eta_pair[1]))
    if not (e1 > e2 > 0):
        raise ValueError("eta_pair must be two descending positive values")
    perm = list(data.nf.perm)
    f_idx = _per_index_exponents(data)
    q = data.exponents.Q

    sol1 = solve_imaginary_axis(profile, e1, tol=tol)
    sol2 = solve_imaginary_axis(profile, e2, tol=tol, start=sol1.v)
    x1 = sol1.v[perm] * e1**f_idx
    x2 = sol2.v[perm] * e2**f_idx
    w1, w2 = e1 ** (1.0 / q), e2 ** (1.0 / q)
    w = x2 - w2 * (x1 - x2) / (w1 - w2)
    if not (w > 0).all():
        raise RuntimeError(
            "extrapolated weights are not positive; use smaller eta_pair"
        )
    residual = float(np.max(np.abs(w * (data.s0 @ w) - 1.0)))
    w.flags.writeable = False
    return replace(data, w=w, w_residual=residual, eta_pair=(e1, e2))


def rescaled_residuals(data: RescaledData) -> RescaledResiduals:
    """Constraint residuals certifying the limiting weights ``data.w``.

    The limit equation ``w * (s0 @ w) = 1`` determines ``w`` only up to the
    pair-difference directions; the residual splits into the projected
    vector part (``f0_vector``) and one scalar per anti-diagonal pair.  For
    a pair ``(l, partner(l))`` whose block ``l`` has no predecessor the
    scalar is

        <w_l, (s1 w)_l> - <w_{partner(l)}> ,

    and otherwise

        <w_l, (s1 w)_l> - <w_{partner(l)}, (s1 w)_{partner(l)}> ,

    with block averages normalized by the block dimension."""
    if data.w is None:
        raise ValueError("data has no weights; call limit_weights first")
    nf = data.nf
    w = data.w
    k = w.size
    m_pairs = nf.M
    r = w * (data.s0 @ w) - 1.0
    for l in range(m_pairs):
        e = np.zeros(k)
        e[list(nf.block_indices(l))] = 1.0
        e[list(nf.block_indices(nf.partner(l)))] = -1.0
        r = r - (e @ r) / (e @ e) * e
    f0_res = float(np.max(np.abs(r))) if k else 0.0

    rel = build_relation(nf)
    has_pred = {j for (_, j) in rel.edges}
    sw = data.s1 @ w
    fl = []
    for l in range(m_pairs):
        bl = list(nf.block_indices(l))
        blh = list(nf.block_indices(nf.partner(l)))
        term = float(np.mean(w[bl] * sw[bl]))
        if l not in has_pred:
            fl.append(term - float(np.mean(w[blh])))
        else:
            fl.append(term - float(np.mean(w[blh] * sw[blh])))
    r.flags.writeable = False
    return RescaledResiduals(
        f0_vector=r,
        f0_residual=f0_res,
        fl_values=tuple(fl),
        fl_residual=max((abs(x) for x in fl), default=0.0),
    )


# --- atom at zero -----------------------------------------------------------------


def atom_mass_estimate(
    s,
    *,
    eta_grid: tuple[float, ...] = (1e-4, 1e-6, 1e-8),
    tol: float = 1e-12,
) -> AtomMass:
    """Mass of the zero atom of the density for a profile without support.

    ``eta * <v(eta)>`` converges to the exact combinatorial mass
    (|I| + |J| - K) / K of a maximal all-zero submatrix; the numeric value
    is taken at the smallest point of the descending ``eta_grid``.  Raises
    HasSupportError when the pattern has support (no atom at zero)."""
    profile = as_profile(s)
    p = pattern_of(profile)
    if has_support(p):
        raise HasSupportError(
            "profile pattern has support: the density has no atom at zero"
        )
    cls = maximal_zero_submatrix(p)
    etas = tuple(sorted((float(e) for e in eta_grid), reverse=True))
    if not etas or etas[-1] <= 0:
        raise ValueError("eta_grid must contain positive values")
    estimates = []
    v_prev = None
    for eta in etas:
        sol = solve_imaginary_axis(profile, eta, tol=tol, start=v_prev)
        v_prev = sol.v
        estimates.append(eta * float(sol.v.mean()))
    return AtomMass(
        kappa_exact=cls.kappa,
        kappa_numeric=estimates[-1],
        eta_grid=etas,
        estimates=tuple(estimates),
    )


# --- quantiles and scaling prediction ---------------------------------------------


def quantile(curve: DensityCurve, sigma, n: int) -> QuantileFit:
    """Smallest ``gamma`` with ``integral of rho from the grid start to
    gamma`` equal to ``1/n`` (trapezoid rule, linear interpolation inside
    the bracketing cell), with the predicted log-log slope ``-1/(1-sigma)``
    of the smallest singular value against the matrix dimension.

    Raises GridTooCoarseError when the quantile falls inside the first grid
    cell or beyond the grid."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    sig = Fraction(sigma) if not isinstance(sigma, float) else sigma
    sig_f = float(sig)
    if not (0 <= sig_f < 1):
        raise ValueError("sigma must lie in [0, 1)")
    taus = np.asarray(curve.tau, dtype=float)
    rho = np.asarray(curve.rho, dtype=float)
    if taus.size < 3 or (np.diff(taus) <= 0).any():
        raise ValueError("curve must be sampled on an increasing grid")
    target = 1.0 / n
    cum = np.concatenate(
        ([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(taus)))
    )
    if cum[-1] < target:
        raise GridTooCoarseError(
            f"grid carries mass {cum[-1]:.3e} < target {target:.3e}"
        )
    j = int(np.searchsorted(cum, target))
    if j <= 1:
        raise GridTooCoarseError(
            "quantile falls inside the first grid cell; refine the grid"
        )
    gamma = taus[j - 1] + (target - cum[j - 1]) * (taus[j] - taus[j - 1]) / (
        cum[j] - cum[j - 1]
    )
    return QuantileFit(
        gamma=float(gamma),
        predicted_slope=-1.0 / (1.0 - sig_f),
        mass_target=target,
    )
