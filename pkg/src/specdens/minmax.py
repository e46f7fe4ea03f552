"""Min-max averaging problems on directed acyclic graphs.

Given a DAG, a boundary set containing every vertex with empty past or
future, and monotone boundary values, there is exactly one extension f to
all vertices satisfying, at every interior vertex x,

    f(x) = ( min over successors of x of f  +  max over predecessors of f ) / 2.

The solution is built constructively: repeatedly find, among all pairs of
already-assigned vertices, the path through unassigned vertices minimizing
the value gap per edge, and fill that path with an arithmetic progression.
The per-stage slopes are strictly increasing; applied to the block relation
of a normal form they are exact rationals, the block scaling exponents of
the associated self-consistent Dyson equation.

The module also provides an independent fixed-point iteration for
cross-checking, and a quantitative perturbation check for the averaging
property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import (
    BadBoundaryError,
    InfeasibleError,
    NotDAGError,
    PreconditionViolatedError,
)
from .normal_form import BlockRelation, longest_chain

__all__ = [
    "Rational",
    "BoundaryProblem",
    "ExponentSolution",
    "OracleResult",
    "StabilityReport",
    "IndexExponents",
    "solve_min_max",
    "verify_solution",
    "fixed_point_oracle",
    "stability_check",
    "relation_problem",
    "index_exponents",
]

Rational = Fraction


@dataclass(frozen=True)
class BoundaryProblem:
    """A DAG with boundary data.

    vertices : ordered tuple of hashable labels (the order fixes all
    tie-breaking); edges : directed pairs (u, v) meaning u precedes v;
    boundary_values : mapping from boundary vertices to exact rational
    values. The boundary must contain every vertex with no predecessor or
    no successor.
    """

    vertices: tuple
    edges: tuple[tuple, ...]
    boundary_values: Mapping

    @property
    def boundary_set(self) -> frozenset:
        return frozenset(self.boundary_values)


@dataclass(frozen=True)
class ExponentSolution:
    """Solution of a min-max averaging problem.

    values maps every vertex to its exact rational value; deltas are the
    distinct per-stage slopes in construction order (strictly increasing);
    stage_sets[k] is the set of vertices assigned after stage k
    (stage_sets[0] is the boundary)."""

    values: dict
    deltas: tuple[Fraction, ...]
    stage_sets: tuple[frozenset, ...]


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the damped-free fixed-point iteration: float values, the
    last sweep's maximum change, and whether tolerance was reached within
    the sweep budget (non-convergence is reported, not raised)."""

    values: dict
    max_change: float
    sweeps: int
    converged: bool


@dataclass(frozen=True)
class StabilityReport:
    """Perturbed-averaging check.

    g_values solves the averaging identity with an additive perturbation d;
    deviation = max |g - f|; delta is the smallest non-zero gap among values
    of common neighbours (inf when there is none); bound = 2**ell * max|d|
    with ell the longest path of the graph, sharper_bound = 3**(ell/2) *
    max|d|; within_bound says deviation <= bound."""

    g_values: dict
    deviation: float
    delta: float
    bound: float
    sharper_bound: float
    within_bound: bool
    sweeps: int
    converged: bool


@dataclass(frozen=True)
class IndexExponents:
    """Block scaling exponents of a normal form: exact rational f per block,
    their maximum sigma (the singularity degree), and the least common
    denominator Q of all exponents."""

    f: tuple[Fraction, ...]
    sigma: Fraction
    Q: int


# --- structural helpers ----------------------------------------------------------


def _adjacency(p: BoundaryProblem):
    pos = {v: i for i, v in enumerate(p.vertices)}
    if len(pos) != len(p.vertices):
        raise ValueError("duplicate vertices")
    succ = {v: [] for v in p.vertices}
    pred = {v: [] for v in p.vertices}
    for (u, v) in p.edges:
        if u not in pos or v not in pos:
            raise ValueError(f"edge ({u!r}, {v!r}) uses an unknown vertex")
        if u == v:
            raise NotDAGError(f"self-loop at {u!r}")
        succ[u].append(v)
        pred[v].append(u)
    for v in p.vertices:
        succ[v].sort(key=pos.get)
        pred[v].sort(key=pos.get)
    return pos, succ, pred


def _topological_order(p: BoundaryProblem, pos, succ) -> list:
    indeg = {v: 0 for v in p.vertices}
    for (_, v) in p.edges:
        indeg[v] += 1
    order = sorted((v for v in p.vertices if indeg[v] == 0), key=pos.get)
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        newly = []
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                newly.append(v)
        order.extend(sorted(newly, key=pos.get))
    if len(order) != len(p.vertices):
        raise NotDAGError("the relation contains a directed cycle")
    return order


def _validate_structure(p: BoundaryProblem):
    pos, succ, pred = _adjacency(p)
    topo = _topological_order(p, pos, succ)
    for y in p.boundary_values:
        if y not in pos:
            raise ValueError(f"boundary vertex {y!r} is not a vertex")
    for v in p.vertices:
        if (not pred[v] or not succ[v]) and v not in p.boundary_values:
            raise BadBoundaryError(
                f"vertex {v!r} has empty past or future but is not boundary"
            )
    return pos, succ, pred, topo


def _check_feasible(p: BoundaryProblem, succ):
    """Boundary data must be monotone along reachability."""
    boundary = list(p.boundary_values)
    for y in boundary:
        seen = {y}
        stack = [y]
        while stack:
            u = stack.pop()
            for w in succ[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        for x in boundary:
            if x in seen and x != y:
                if Fraction(p.boundary_values[x]) < Fraction(p.boundary_values[y]):
                    raise InfeasibleError(
                        f"boundary decreases from {y!r} to reachable {x!r}"
                    )


# --- solver ------------------------------------------------------------------------


def solve_min_max(p: BoundaryProblem) -> ExponentSolution:
    """Construct the unique monotone min-max averaging extension.

    Raises NotDAGError / BadBoundaryError on malformed problems and
    InfeasibleError when the boundary data decreases along reachability.
    The result is self-certified exactly before returning.
    """
    pos, succ, pred, topo = _validate_structure(p)
    _check_feasible(p, succ)
    values: dict = {y: Fraction(v) for y, v in p.boundary_values.items()}
    unassigned = {v for v in p.vertices if v not in values}

    def interior_longest_from(y) -> dict:
        """Longest path length from y to each assigned vertex, through >= 1
        unassigned intermediate vertices."""
        dist = {y: 0}
        best: dict = {}
        for v in topo:
            if v not in dist:
                continue
            dv = dist[v]
            for u in succ[v]:
                if u in unassigned:
                    if dist.get(u, -1) < dv + 1:
                        dist[u] = dv + 1
                elif v != y:
                    # u is assigned and v is an unassigned intermediate, so
                    # the path y -> ... -> v -> u has interior vertices;
                    # direct y -> assigned edges are never counted
                    if best.get(u, 0) < dv + 1:
                        best[u] = dv + 1
        return {x: l for x, l in best.items() if l >= 2}

    def lex_smallest_path(y, x, length: int) -> list:
        """Lexicographically smallest longest path y -> x through unassigned
        vertices (by vertex position)."""
        r: dict = {x: 0}
        for v in reversed(topo):
            if v in unassigned or v == y:
                cands = []
                for u in succ[v]:
                    if u == x:
                        cands.append(1)
                    elif u in unassigned and u in r:
                        cands.append(r[u] + 1)
                if cands:
                    r[v] = max(cands)
        assert r.get(y) == length, "path reconstruction mismatch"
        path = [y]
        rem = length
        while rem > 0:
            v = path[-1]
            if rem == 1:
                assert x in succ[v]
                path.append(x)
            else:
                path.append(
                    min(
                        (u for u in succ[v]
                         if u in unassigned and r.get(u) == rem - 1),
                        key=pos.get,
                    )
                )
            rem -= 1
        return path

    per_pick: list[Fraction] = []
    pick_snapshots: list[frozenset] = []
    while unassigned:
        best = None  # (slope, pos[y], pos[x], y, x, length)
        for y in sorted(values, key=pos.get):
            reach = interior_longest_from(y)
            for x, length in reach.items():
                slope = (values[x] - values[y]) / length
                key = (slope, pos[y], pos[x])
                if best is None or key < best[0]:
                    best = (key, y, x, length)
        if best is None:
            raise RuntimeError(
                "no assignable path found; boundary validation should have "
                "caught this"
            )
        (slope, _, _), y, x, length = best
        if slope < 0:
            raise InfeasibleError(
                f"negative slope {slope} between {y!r} and {x!r}"
            )
        if per_pick and slope < per_pick[-1]:
            raise RuntimeError("stage slopes decreased; internal error")
        path = lex_smallest_path(y, x, length)
        for j, v in enumerate(path[1:-1], start=1):
            values[v] = values[y] + slope * j
            unassigned.remove(v)
        per_pick.append(slope)
        pick_snapshots.append(frozenset(values))

    deltas: list[Fraction] = []
    stage_sets: list[frozenset] = [frozenset(p.boundary_values)]
    for slope, snap in zip(per_pick, pick_snapshots):
        if deltas and slope == deltas[-1]:
            stage_sets[-1] = snap
        else:
            deltas.append(slope)
            stage_sets.append(snap)
    if any(a >= b for a, b in zip(deltas, deltas[1:])):
        raise RuntimeError("stage deltas not strictly increasing")

    if not verify_solution(p, values):
        raise RuntimeError("solution failed exact self-certification")
    return ExponentSolution(values, tuple(deltas), tuple(stage_sets))


def verify_solution(p: BoundaryProblem, values: Mapping) -> bool:
    """Exact check: boundary match, monotonicity along every edge, and the
    averaging identity at every interior vertex."""
    pos, succ, pred = _adjacency(p)
    if set(values) != set(p.vertices):
        return False
    vals = {v: Fraction(values[v]) for v in p.vertices}
    for y, fy in p.boundary_values.items():
        if vals[y] != Fraction(fy):
            return False
    for (u, v) in p.edges:
        if vals[u] > vals[v]:
            return False
    for x in p.vertices:
        if x in p.boundary_values:
            continue
        if not succ[x] or not pred[x]:
            return False
        lo = min(vals[u] for u in succ[x])
        hi = max(vals[u] for u in pred[x])
        if 2 * vals[x] != lo + hi:
            return False
    return True


def fixed_point_oracle(
    p: BoundaryProblem, max_sweeps: int = 20000, tol: float = 1e-13
) -> OracleResult:
    """Independent floating-point iteration of the averaging identity.

    Gauss-Seidel sweeps in topological order with the boundary pinned and
    interior values started at 0. Non-convergence within the sweep budget is
    reported through the converged flag, not raised."""
    pos, succ, pred, topo = _validate_structure(p)
    g = {v: 0.0 for v in p.vertices}
    for y, fy in p.boundary_values.items():
        g[y] = float(Fraction(fy))
    interior = [v for v in topo if v not in p.boundary_values]
    change = math.inf
    sweeps = 0
    while sweeps < max_sweeps and change > tol:
        change = 0.0
        for x in interior:
            new = 0.5 * (min(g[u] for u in succ[x]) + max(g[u] for u in pred[x]))
            change = max(change, abs(new - g[x]))
            g[x] = new
        sweeps += 1
    return OracleResult(g, change, sweeps, change <= tol)


def stability_check(
    p: BoundaryProblem,
    solution: ExponentSolution,
    d: Mapping,
    tol: float = 1e-12,
    max_sweeps: int = 100_000,
) -> StabilityReport:
    """Solve the perturbed averaging problem and compare with the bound.

    The perturbation d maps vertices to floats; g is computed by damped
    (factor 1/2) Gauss-Seidel sweeps of g(x) = (min succ g + max pred g)/2 +
    d(x) with boundary pinned at f(y) + d(y). PreconditionViolatedError is
    raised when max|g - f| fails to sit strictly below half the smallest
    non-zero common-neighbour gap delta, the regime in which the
    2**ell * max|d| bound is asserted."""
    pos, succ, pred, topo = _validate_structure(p)
    f_exact = solution.values
    f = {v: float(f_exact[v]) for v in p.vertices}
    dmap = {v: float(d.get(v, 0.0)) for v in p.vertices}

    g = dict(f)
    for y in p.boundary_values:
        g[y] = float(Fraction(p.boundary_values[y])) + dmap[y]
    interior = [v for v in topo if v not in p.boundary_values]
    change = math.inf
    sweeps = 0
    while sweeps < max_sweeps and change > tol:
        change = 0.0
        for x in interior:
            target = 0.5 * (
                min(g[u] for u in succ[x]) + max(g[u] for u in pred[x])
            ) + dmap[x]
            new = 0.5 * g[x] + 0.5 * target
            change = max(change, abs(new - g[x]))
            g[x] = new
        sweeps += 1

    # smallest non-zero gap among values of common direct neighbours
    delta: Optional[Fraction] = None
    for x in interior:
        for group in (pred[x], succ[x]):
            for i, u in enumerate(group):
                for v in group[i + 1:]:
                    gap = abs(f_exact[u] - f_exact[v])
                    if gap != 0 and (delta is None or gap < delta):
                        delta = gap
    delta_f = math.inf if delta is None else float(delta)

    deviation = max(abs(g[v] - f[v]) for v in p.vertices)
    if not deviation < delta_f / 2:
        raise PreconditionViolatedError(
            f"perturbed solution deviates by {deviation}, not below "
            f"delta/2 = {delta_f / 2}"
        )

    ell = _longest_path_length(p.vertices, p.edges, pos, succ, topo)
    dnorm = max(abs(x) for x in dmap.values()) if dmap else 0.0
    bound = (2.0 ** ell) * dnorm
    sharper = (3.0 ** (ell / 2.0)) * dnorm
    return StabilityReport(
        g, deviation, delta_f, bound, sharper,
        deviation <= bound * (1 + 1e-12) + 1e-300, sweeps, change <= tol,
    )


def _longest_path_length(vertices, edges, pos, succ, topo) -> int:
    depth = {v: 0 for v in vertices}
    for v in reversed(topo):
        for u in succ[v]:
            depth[v] = max(depth[v], depth[u] + 1)
    return max(depth.values()) if depth else 0


# --- block exponents -----------------------------------------------------------------


def relation_problem(rel: BlockRelation) -> BoundaryProblem:
    """Boundary problem of a block relation: blocks plus a source vertex -1
    valued -1 and a sink vertex n valued +1; self-paired (middle) blocks are
    boundary with value 0."""
    n = rel.n
    vertices = (-1, *range(n), n)
    edges = tuple(sorted(rel.edges | rel.extended_edges))
    boundary = {-1: Fraction(-1), n: Fraction(1)}
    for i in range(n):
        if rel.partner[i] == i:
            boundary[i] = Fraction(0)
    return BoundaryProblem(vertices, edges, boundary)


def index_exponents(rel: BlockRelation) -> IndexExponents:
    """Exact block scaling exponents of a normal form's relation.

    Solves the min-max averaging problem on the extended relation and
    checks: every exponent lies strictly between -1 and 1, paired blocks
    have opposite exponents, and the maximum equals l/(l+2) where l is the
    longest chain of the relation. Q is the least common denominator."""
    sol = solve_min_max(relation_problem(rel))
    f = tuple(sol.values[i] for i in range(rel.n))
    sigma = max(f)
    for i, fi in enumerate(f):
        if not -1 < fi < 1:
            raise RuntimeError(f"exponent f[{i}] = {fi} out of (-1, 1)")
        if fi != -f[rel.partner[i]]:
            raise RuntimeError("exponents are not antisymmetric under pairing")
    ell = longest_chain(rel).length
    if sigma != Fraction(ell, ell + 2):
        raise RuntimeError(
            f"sigma = {sigma} does not match chain length {ell}"
        )
    q = math.lcm(*(fi.denominator for fi in f))
    return IndexExponents(f, sigma, q)
