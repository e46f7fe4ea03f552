"""Symmetric block normal form of a non-negative variance profile.

A symmetric profile S whose zero pattern admits a positive diagonal can be
brought, by one symmetric permutation, into a block form organized in three
bands. Writing n = L + 2M for the number of blocks:

- band 1 (blocks 0..M-1) and band 3 (blocks M+L..n-1) pair up
  anti-diagonally: block j pairs with block n-1-j, and the paired
  off-diagonal blocks are fully indecomposable;
- band 2 (blocks M..M+L-1) holds L fully indecomposable principal blocks,
  mutually disconnected;
- the (2,3), (3,2) and (3,3) bands vanish, and the (1,3)/(3,1) bands vanish
  strictly below the block anti-diagonal.

The boolean block mask of the permuted profile induces a strict relation on
blocks, i < j whenever block i is coupled to the partner of block j; this
relation is acyclic and its longest chain controls how singular the
associated density of states is at zero.

Profiles without a positive diagonal instead admit a symmetric 3-block
splitting whose lower-right corner vanishes; the normalized perimeter excess
of that corner is the exact mass of the point mass at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CyclicRelationError,
    HasSupportError,
    NegativeEntryError,
    NoSupportError,
    NotSymmetricError,
    StructureViolationError,
)
from .patterns import (
    ZeroPattern,
    fid_skeleton,
    has_support,
    is_fully_indecomposable,
    max_bipartite_matching,
    maximal_zero_submatrix,
)

__all__ = [
    "VarianceProfile",
    "as_profile",
    "pattern_of",
    "NormalForm",
    "NoSupportForm",
    "BlockRelation",
    "ChainResult",
    "symmetric_normal_form",
    "no_support_normal_form",
    "verify_normal_form",
    "build_relation",
    "longest_chain",
]


class VarianceProfile:
    """Symmetric entrywise non-negative K x K matrix of variances.

    Entries are stored as float64 exactly as given (no thresholding); the
    zero pattern is defined by exact comparison with 0. The array is made
    read-only so a profile can be shared safely.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("profile must be a square matrix")
        if a.shape[0] < 1:
            raise ValueError("profile must be at least 1 x 1")
        if not np.isfinite(a).all():
            raise ValueError("profile entries must be finite")
        if not np.array_equal(a, a.T):
            raise NotSymmetricError("profile is not symmetric")
        if (a < 0).any():
            raise NegativeEntryError("profile has a negative entry")
        a.flags.writeable = False
        self.entries = a

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_rows(cls, rows) -> "VarianceProfile":
        return cls(rows)

    def __repr__(self):
        return f"VarianceProfile(k={self.k})"


def as_profile(s) -> VarianceProfile:
    """Coerce a matrix-like object into a validated VarianceProfile."""
    return s if isinstance(s, VarianceProfile) else VarianceProfile(s)


def pattern_of(s) -> ZeroPattern:
    """Zero pattern of a profile (exact comparison with zero)."""
    return ZeroPattern.from_matrix(as_profile(s).entries)


@dataclass(eq=False)
class NormalForm:
    """Result of the symmetric block normal form.

    perm : tuple of int
        Symmetric permutation, new position -> original index, so
        ``permuted_profile == S[perm][:, perm]``.
    dims : tuple of int
        Block dimensions in block order (len L + 2M).
    L, M : int
        Number of middle blocks and of anti-diagonal pairs.
    mask : ndarray of bool, shape (L+2M, L+2M)
        Block coupling mask of the permuted profile: mask[i, j] is True iff
        the (i, j) block contains a non-zero entry.
    permuted_profile : ndarray
        The profile conjugated into block order.
    """

    perm: tuple[int, ...]
    dims: tuple[int, ...]
    L: int
    M: int
    mask: np.ndarray
    permuted_profile: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.L + 2 * self.M

    def partner(self, i: int) -> int:
        """Index of the block paired with block i (i itself for middles)."""
        n = self.n_blocks
        if i < self.M or i >= self.M + self.L:
            return n - 1 - i
        return i

    def block_indices(self, i: int) -> range:
        """Index range of block i inside the permuted profile."""
        start = sum(self.dims[:i])
        return range(start, start + self.dims[i])


@dataclass(eq=False)
class NoSupportForm:
    """Symmetric 3-block splitting of a profile without positive diagonal.

    perm : new position -> original index; sizes : the three block sizes
    (first, middle, last); the last block, against the middle-plus-last
    column range, is entirely zero. witness_i / witness_j are the original
    row / column index sets of that maximal zero corner (witness_i is the
    last block, witness_j the union of middle and last); kappa is the
    normalized perimeter excess (|I| + |J| - K) / K, the exact mass of the
    point mass at zero of the associated density of states.
    """

    perm: tuple[int, ...]
    sizes: tuple[int, int, int]
    witness_i: tuple[int, ...]
    witness_j: tuple[int, ...]
    kappa: Fraction
    permuted_profile: np.ndarray


@dataclass(frozen=True)
class BlockRelation:
    """Strict relation between blocks of a normal form.

    i precedes j (written i < j here) iff i != j and the mask couples block
    i to the partner of block j. The relation is acyclic; extended_edges
    additionally routes a source vertex -1 to every minimal block and every
    maximal block to a sink vertex n.
    """

    n: int
    partner: tuple[int, ...]
    edges: frozenset[tuple[int, int]]
    extended_edges: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class ChainResult:
    """Longest chain of the block relation: number of edges and the
    lexicographically smallest witness path (block indices)."""

    length: int
    witness: tuple[int, ...]


# --- symmetric normal form ------------------------------------------------------


def _undirected_components(adj_present: np.ndarray) -> list[list[int]]:
    """Connected components (sorted, in order of smallest member) of the
    undirected graph with an edge i-j iff i != j and adj_present[i, j]."""
    k = adj_present.shape[0]
    seen = [False] * k
    comps = []
    for start in range(k):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = [start]
        while queue:
            i = queue.pop()
            for j in range(k):
                if j != i and adj_present[i, j] and not seen[j]:
                    seen[j] = True
                    comp.append(j)
                    queue.append(j)
        comps.append(sorted(comp))
    return comps


def _two_color(comp: list[int], skel: np.ndarray) -> tuple[list[int], list[int]]:
    """Split a connected non-FID skeleton component into its two sides.

    Every skeleton entry inside the component must join opposite sides
    (in particular no diagonal skeleton entry may occur); the side of the
    smallest index comes first. StructureViolationError otherwise.
    """
    color: dict[int, int] = {comp[0]: 0}
    queue = [comp[0]]
    while queue:
        i = queue.pop()
        for j in comp:
            if j != i and (skel[i, j] or skel[j, i]):
                if j not in color:
                    color[j] = 1 - color[i]
                    queue.append(j)
    for i in comp:
        for j in comp:
            if skel[i, j] and color[i] == color[j]:
                raise StructureViolationError(
                    "skeleton component is neither fully indecomposable nor "
                    "two-sided"
                )
    side0 = [i for i in comp if color[i] == 0]
    side1 = [i for i in comp if color[i] == 1]
    if len(side0) != len(side1):
        raise StructureViolationError("two-sided component has unequal sides")
    return side0, side1


def symmetric_normal_form(s) -> NormalForm:
    """Compute the symmetric block normal form of a supported profile.

    Steps: (1) keep only entries lying on positive diagonals (the skeleton);
    (2) split its connected components into fully indecomposable principal
    blocks and two-sided pairs; (3) repeatedly extract a side whose coupling
    row (in the full profile) touches nothing but its own partner, sending
    it to the outermost free slot of the last band and its partner to the
    matching slot of the first band; leftover principal blocks form the
    middle band, sorted by (dimension, smallest index).

    Raises NotSymmetricError / NegativeEntryError on invalid input,
    NoSupportError when no positive diagonal exists, and
    StructureViolationError if the block structure cannot be realized
    (not reachable for valid symmetric profiles).
    """
    profile = as_profile(s)
    k = profile.k
    pat = pattern_of(profile)
    skel_res = fid_skeleton(pat)  # NoSupportError when there is no support
    skel = np.array(skel_res.on_diagonal, dtype=bool)
    present = profile.entries != 0

    # sides: (indices, partner_side_id); middles partner themselves
    side_indices: list[list[int]] = []
    side_partner: list[int] = []
    for comp in _undirected_components(skel):
        sub = ZeroPattern(len(comp), tuple(
            tuple(bool(skel[i, j]) for j in comp) for i in comp
        ))
        if is_fully_indecomposable(sub):
            side_indices.append(comp)
            side_partner.append(len(side_partner))
        else:
            side0, side1 = _two_color(comp, skel)
            a = len(side_indices)
            side_indices.append(side0)
            side_indices.append(side1)
            side_partner.extend([a + 1, a])

    def coupled(a: int, b: int) -> bool:
        return bool(present[np.ix_(side_indices[a], side_indices[b])].any())

    remaining = set(range(len(side_indices)))
    pivot_pairs: list[tuple[int, int]] = []  # (last-band side, first-band side)
    middles: list[int] = []
    while remaining:
        candidates = [
            sid
            for sid in remaining
            if all(
                not coupled(sid, other)
                for other in remaining
                if other != side_partner[sid]
            )
        ]
        if not candidates:
            raise StructureViolationError(
                "no extractable block: profile admits no symmetric block "
                "normal form"
            )
        sid = min(candidates, key=lambda x: side_indices[x][0])
        if side_partner[sid] == sid:
            middles.append(sid)
            remaining.remove(sid)
        else:
            pivot_pairs.append((sid, side_partner[sid]))
            remaining.remove(sid)
            remaining.remove(side_partner[sid])

    middles.sort(key=lambda x: (len(side_indices[x]), side_indices[x][0]))
    block_sets = (
        [side_indices[q] for _, q in pivot_pairs]
        + [side_indices[c] for c in middles]
        + [side_indices[p] for p, _ in reversed(pivot_pairs)]
    )
    m_pairs = len(pivot_pairs)
    l_mid = len(middles)

    perm = tuple(i for block in block_sets for i in block)
    dims = tuple(len(block) for block in block_sets)
    permuted = profile.entries[np.ix_(perm, perm)]
    n = l_mid + 2 * m_pairs
    mask = np.zeros((n, n), dtype=bool)
    offs = np.cumsum((0,) + dims)
    for i in range(n):
        for j in range(n):
            mask[i, j] = bool(
                permuted[offs[i]:offs[i + 1], offs[j]:offs[j + 1]].any()
            )

    nf = NormalForm(perm, dims, l_mid, m_pairs, mask, permuted)
    verify_normal_form(profile, nf)
    return nf


def verify_normal_form(s, nf: NormalForm) -> None:
    """Audit every structural invariant of a claimed normal form; raises
    StructureViolationError on the first failure."""
    profile = as_profile(s)
    k = profile.k
    n, m, l_mid = nf.n_blocks, nf.M, nf.L

    def fail(msg: str):
        raise StructureViolationError(f"normal form invariant violated: {msg}")

    if sorted(nf.perm) != list(range(k)):
        fail("perm is not a permutation")
    if sum(nf.dims) != k or len(nf.dims) != n:
        fail("block dimensions do not tile the matrix")
    if not np.array_equal(nf.permuted_profile, profile.entries[np.ix_(nf.perm, nf.perm)]):
        fail("permuted profile does not match the permutation")

    offs = np.cumsum((0,) + nf.dims)
    present = nf.permuted_profile != 0
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            mask[i, j] = bool(present[offs[i]:offs[i + 1], offs[j]:offs[j + 1]].any())
    if not np.array_equal(mask, nf.mask):
        fail("mask does not match the permuted profile")
    if not np.array_equal(mask, mask.T):
        fail("mask is not symmetric")

    for j in range(m):
        if nf.dims[j] != nf.dims[n - 1 - j]:
            fail("paired blocks have different dimensions")
    for i in range(n):
        if not mask[i, nf.partner(i)]:
            fail("a block is not coupled to its partner")

    mid = range(m, m + l_mid)
    last = range(m + l_mid, n)
    for i in mid:
        for j in mid:
            if i != j and mask[i, j]:
                fail("middle blocks are coupled to each other")
    for i in mid:
        for j in last:
            if mask[i, j] or mask[j, i]:
                fail("middle band couples to the last band")
    for i in last:
        for j in last:
            if mask[i, j]:
                fail("last band has an internal coupling")
    for i in range(m):
        for j in last:
            if i + j > n - 1 and (mask[i, j] or mask[j, i]):
                fail("coupling strictly below the block anti-diagonal")

    for i in range(n):
        j = nf.partner(i)
        rows = list(nf.block_indices(i))
        cols = list(nf.block_indices(j))
        block = ZeroPattern.from_matrix(nf.permuted_profile[np.ix_(rows, cols)])
        if not is_fully_indecomposable(block):
            fail("an anti-diagonal block is not fully indecomposable")


# --- no-support splitting ---------------------------------------------------------

_EXACT_HEIGHT_LIMIT = 16


def _strong_hall(present: np.ndarray) -> bool:
    """True iff every non-empty row set X of the given rectangular 0/1 matrix
    touches at least |X| + 1 columns. Polynomial test: no zero row, all rows
    matchable, and all rows still matchable after deleting any one column."""
    rows, cols = present.shape
    if rows == 0:
        return True
    if not present.any(axis=1).all():
        return False

    def saturates(allowed_cols: list[int]) -> bool:
        col_match: list[Optional[int]] = [None] * cols

        def try_augment(r: int, visited: set[int]) -> bool:
            for c in allowed_cols:
                if present[r, c] and c not in visited:
                    visited.add(c)
                    if col_match[c] is None or try_augment(col_match[c], visited):
                        col_match[c] = r
                        return True
            return False

        return all(try_augment(r, set()) for r in range(rows))

    if not saturates(list(range(cols))):
        return False
    return all(saturates([c for c in range(cols) if c != drop]) for drop in range(cols))


def no_support_normal_form(s) -> NoSupportForm:
    """Symmetric 3-block splitting of a profile without positive diagonal.

    The blocks are (complement of J, J minus I, I) where the I x J submatrix
    is all-zero with nested I, a subset of J, of maximal perimeter |I| + |J|;
    among those, |J| is made as large as possible. The returned splitting
    always satisfies: the middle principal block has a positive diagonal,
    and every non-empty set of first-block rows touches strictly more
    third-block columns than its size (row spreading).

    Raises ZeroRowError when a row vanishes identically and
    HasSupportError when the profile has a positive diagonal.
    """
    profile = as_profile(s)
    k = profile.k
    pat = pattern_of(profile)
    cls = maximal_zero_submatrix(pat)  # ZeroRowError propagates
    if cls.tag != "NoSupport":
        raise HasSupportError("profile has a positive diagonal")

    present = profile.entries != 0
    perimeter = len(cls.witness_i) + len(cls.witness_j)

    if k <= _EXACT_HEIGHT_LIMIT:
        row_bits = [
            sum(1 << j for j in range(k) if present[i, j]) for i in range(k)
        ]
        best_b, best_a, best_perim = 0, 0, 0
        for b in range(1, 1 << k):
            a = 0
            nb = b.bit_count()
            for i in range(k):
                if (b >> i) & 1 and not (row_bits[i] & b):
                    a |= 1 << i
            perim = nb + a.bit_count()
            if perim > best_perim or (perim == best_perim and nb > best_b.bit_count()):
                best_b, best_a, best_perim = b, a, perim
        if best_perim != perimeter:
            raise StructureViolationError(
                "height maximization disagrees with the matching bound"
            )
        set_a = {i for i in range(k) if (best_a >> i) & 1}
        set_b = {i for i in range(k) if (best_b >> i) & 1}
    else:
        # symmetrize the Koenig witness into a nested pair, then grow the
        # column side by absorbing first-block rows whose third-block
        # non-zeros fit into as many columns (perimeter-preserving).
        set_i, set_j = set(cls.witness_i), set(cls.witness_j)
        set_b = set_i | set_j
        while True:
            set_a = {i for i in set_b if not any(present[i, j] for j in set_b)}
            rows = sorted(set(range(k)) - set_b)
            cols = sorted(set_a)
            sub = present[np.ix_(rows, cols)]
            move = _find_absorbable(sub)
            if move is None:
                break
            row_set, col_set = move
            set_b |= {rows[r] for r in row_set}
        if len(set_a) + len(set_b) != perimeter:
            raise StructureViolationError(
                "height repair changed the witness perimeter"
            )

    block1 = sorted(set(range(k)) - set_b)
    block2 = sorted(set_b - set_a)
    block3 = sorted(set_a)
    perm = tuple(block1 + block2 + block3)
    permuted = profile.entries[np.ix_(perm, perm)]
    sizes = (len(block1), len(block2), len(block3))
    kappa = Fraction(len(set_a) + len(set_b) - k, k)
    form = NoSupportForm(
        perm, sizes, tuple(block3), tuple(sorted(set_b)), kappa, permuted
    )
    _verify_no_support_form(profile, form)
    return form


def _find_absorbable(present: np.ndarray) -> Optional[tuple[set[int], set[int]]]:
    """A non-empty row set X with |N(X)| <= |X| in a rectangular 0/1 matrix,
    or None when every row set spreads over more columns than its size."""
    rows, cols = present.shape
    for r in range(rows):
        if not present[r].any():
            return {r}, set()

    def max_match(allowed_cols: set[int]):
        col_match: dict[int, int] = {}

        def try_augment(r: int, visited: set[int]) -> bool:
            for c in allowed_cols:
                if present[r, c] and c not in visited:
                    visited.add(c)
                    if c not in col_match or try_augment(col_match[c], visited):
                        col_match[c] = r
                        return True
            return False

        unmatched = [r for r in range(rows) if not try_augment(r, set())]
        return col_match, unmatched

    def alternating_rows(col_match, unmatched, allowed_cols):
        row_of = dict(col_match)
        reach_rows = set(unmatched)
        reach_cols: set[int] = set()
        queue = list(unmatched)
        while queue:
            r = queue.pop()
            for c in allowed_cols:
                if present[r, c] and c not in reach_cols:
                    reach_cols.add(c)
                    r2 = row_of.get(c)
                    if r2 is not None and r2 not in reach_rows:
                        reach_rows.add(r2)
                        queue.append(r2)
        return reach_rows, reach_cols

    all_cols = set(range(cols))
    col_match, unmatched = max_match(all_cols)
    if unmatched:
        x, nx = alternating_rows(col_match, unmatched, all_cols)
        return x, {c for c in all_cols if any(present[r, c] for r in x)}
    for drop in range(cols):
        allowed = all_cols - {drop}
        cm, um = max_match(allowed)
        if um:
            x, _ = alternating_rows(cm, um, allowed)
            return x, {c for c in all_cols if any(present[r, c] for r in x)}
    return None


def _verify_no_support_form(profile: VarianceProfile, form: NoSupportForm) -> None:
    k = profile.k
    n1, n2, n3 = form.sizes

    def fail(msg: str):
        raise StructureViolationError(f"no-support splitting invalid: {msg}")

    if sorted(form.perm) != list(range(k)):
        fail("perm is not a permutation")
    if n1 + n2 + n3 != k or n1 < 1 or n3 < 1:
        fail("block sizes are inconsistent")
    present = form.permuted_profile != 0
    if present[n1 + n2:, n1:].any() or present[n1:, n1 + n2:].any():
        fail("zero corner is not zero")
    if n2:
        mid = ZeroPattern.from_matrix(form.permuted_profile[n1:n1 + n2, n1:n1 + n2])
        if not max_bipartite_matching(mid).perfect:
            fail("middle block has no positive diagonal")
    if not _strong_hall(present[:n1, n1 + n2:]):
        fail("first-block rows do not spread over the zero-corner columns")
    if form.kappa != Fraction(n3 + (n2 + n3) - k, k) or not 0 < form.kappa <= 1:
        fail("kappa does not match the block sizes")


# --- block relation and chains ------------------------------------------------------


def build_relation(nf: NormalForm) -> BlockRelation:
    """Strict precedence between blocks: i precedes j iff i != j and the
    mask couples block i to the partner of block j. Raises
    CyclicRelationError if the relation fails to be acyclic (impossible for
    masks produced by symmetric_normal_form, but asserted regardless)."""
    n = nf.n_blocks
    partner = tuple(nf.partner(i) for i in range(n))
    edges = frozenset(
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and nf.mask[i, partner[j]]
    )
    succ = {i: [j for (a, j) in edges if a == i] for i in range(n)}
    indeg = {i: 0 for i in range(n)}
    for _, j in edges:
        indeg[j] += 1
    order = [i for i in range(n) if indeg[i] == 0]
    head = 0
    while head < len(order):
        i = order[head]
        head += 1
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                order.append(j)
    if len(order) != n:
        raise CyclicRelationError("block relation contains a cycle")

    firsts = [i for i in range(n) if not any(a == i for _, a in edges)]
    lasts = [i for i in range(n) if not any(a == i for a, _ in edges)]
    extended = frozenset(
        [(-1, i) for i in firsts] + [(i, n) for i in lasts]
    )
    return BlockRelation(n, partner, edges, extended)


def longest_chain(rel: BlockRelation) -> ChainResult:
    """Longest chain (edge count) of the strict block relation, with the
    lexicographically smallest witness path."""
    n = rel.n
    succ = {i: sorted(j for (a, j) in rel.edges if a == i) for i in range(n)}
    depth: dict[int, int] = {}

    def compute(v: int) -> int:
        if v not in depth:
            depth[v] = max((compute(u) + 1 for u in succ[v]), default=0)
        return depth[v]

    for v in range(n):
        compute(v)
    length = max(depth.values())
    start = min(v for v in range(n) if depth[v] == length)
    witness = [start]
    while depth[witness[-1]] > 0:
        v = witness[-1]
        witness.append(min(u for u in succ[v] if depth[u] == depth[v] - 1))
    return ChainResult(length, tuple(witness))
