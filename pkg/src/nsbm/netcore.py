"""Graph storage and block-sum sufficient statistics with exact integer deltas.

Adjacency is kept as sorted neighbor lists (CSR-style) plus the edge list;
dense matrices are never materialized. Block sums use the convention that a
cross-block edge is counted once in the stored (x, y) entry and the matrices
are mirrored, so summing the upper triangle recovers the total edge count.
All counts are 64-bit integers and every incremental update is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Adjacency",
    "BlockStats",
    "DeltaStats",
    "NeighborCounts",
    "validate_labels",
    "compute_block_sums",
    "delta_block_sums",
    "move_delta_matrices",
    "neighbor_counts",
    "label_counts",
    "network_move_deltas",
    "canonical_relabel",
]


@dataclass(frozen=True)
class Adjacency:
    """Simple undirected graph: no self-loops, no parallel edges.

    edges is an (E, 2) array of node pairs with s < t, sorted lexicographically;
    indptr/indices store the symmetric neighbor lists for O(degree) iteration.
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Adjacency":
        n = int(n)
        if n < 0:
            raise ValueError("node count must be nonnegative")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            if np.any(lo == hi):
                raise ValueError("self-loops are not allowed")
            if lo.min() < 0 or hi.max() >= n:
                raise ValueError("edge endpoint out of range")
            edges = np.stack([lo, hi], axis=1)
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if np.any(np.all(edges[1:] == edges[:-1], axis=1)):
                raise ValueError("duplicate edges are not allowed")
        # symmetric CSR from both edge directions
        deg = np.zeros(n, dtype=np.int64)
        if edges.size:
            np.add.at(deg, edges[:, 0], 1)
            np.add.at(deg, edges[:, 1], 1)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        fill = indptr[:-1].copy()
        for s, t in edges:
            indices[fill[s]] = t
            fill[s] += 1
            indices[fill[t]] = s
            fill[t] += 1
        for s in range(n):
            indices[indptr[s] : indptr[s + 1]].sort()
        return cls(n=n, edges=edges, indptr=indptr, indices=indices)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, s: int) -> np.ndarray:
        return self.indices[self.indptr[s] : self.indptr[s + 1]]

    def degree(self, s: int) -> int:
        return int(self.indptr[s + 1] - self.indptr[s])

    def has_edge(self, s: int, t: int) -> bool:
        if s == t:
            return False
        row = self.neighbors(s)
        i = np.searchsorted(row, t)
        return bool(i < row.size and row[i] == t)

    def equals(self, other: "Adjacency") -> bool:
        return self.n == other.n and np.array_equal(self.edges, other.edges)


@dataclass
class BlockStats:
    """Edge block sums m and pair counts N (symmetric L x L, int64)."""

    m: np.ndarray
    N: np.ndarray

    @property
    def mbar(self) -> np.ndarray:
        return self.N - self.m

    def apply(self, ds: "DeltaStats") -> None:
        """Apply a single-node move delta in place."""
        self.m += ds.D
        self.N += ds.Delta

    def copy(self) -> "BlockStats":
        return BlockStats(self.m.copy(), self.N.copy())


@dataclass(frozen=True)
class DeltaStats:
    """Exact change to (m, N) from relabeling one node.

    D = delta U^T + U delta^T with the diagonal halved; Delta is the same
    construction with V in place of U. mbar changes by Delta - D.
    """

    D: np.ndarray
    Delta: np.ndarray
    delta: np.ndarray
    U: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class NeighborCounts:
    """tau[y]: edges from s into community y; nu[y]: other nodes in y."""

    tau: np.ndarray
    nu: np.ndarray


def validate_labels(xi: np.ndarray, n: int, L: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.int64)
    if xi.shape != (n,):
        raise ValueError(f"label vector has length {xi.shape}, expected ({n},)")
    if xi.size and (xi.min() < 0 or xi.max() >= L):
        raise ValueError(f"labels must lie in [0, {L})")
    return xi


def compute_block_sums(A: Adjacency, xi, L: int) -> BlockStats:
    """Block sums from scratch: m over edges, N over all node pairs.

    Within-block pairs are counted once over s < t; cross-block pairs once in
    the stored (x <= y) entry, then mirrored.
    """
    xi = validate_labels(xi, A.n, L)
    counts = np.bincount(xi, minlength=L).astype(np.int64)
    N = np.outer(counts, counts)
    np.fill_diagonal(N, counts * (counts - 1) // 2)
    m = np.zeros((L, L), dtype=np.int64)
    if A.n_edges:
        a = xi[A.edges[:, 0]]
        b = xi[A.edges[:, 1]]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        np.add.at(m, (lo, hi), 1)
        m = m + np.triu(m, 1).T
    return BlockStats(m=m, N=N)


def neighbor_counts(A: Adjacency, xi, s: int, L: int) -> NeighborCounts:
    """Per-community edge and node counts seen from node s."""
    xi = validate_labels(xi, A.n, L)
    tau = np.bincount(xi[A.neighbors(s)], minlength=L).astype(np.int64)
    nu = np.bincount(xi, minlength=L).astype(np.int64)
    nu[xi[s]] -= 1
    return NeighborCounts(tau=tau, nu=nu)


def move_delta_matrices(tau, nu, x_old: int, x_new: int, L: int):
    """(D, Delta) for moving a node with counts (tau, nu) from x_old to x_new."""
    delta = np.zeros(L, dtype=np.int64)
    if x_new != x_old:
        delta[x_new] += 1
        delta[x_old] -= 1
    D = np.outer(delta, tau) + np.outer(tau, delta)
    Delta = np.outer(delta, nu) + np.outer(nu, delta)
    idx = np.arange(L)
    D[idx, idx] //= 2
    Delta[idx, idx] //= 2
    return D, Delta


def delta_block_sums(A: Adjacency, xi, omega: int, x_new: int, L: int) -> DeltaStats:
    """Exact (D, Delta) for relabeling node omega to x_new; O(degree + L)."""
    xi = validate_labels(xi, A.n, L)
    if not 0 <= x_new < L:
        raise ValueError(f"target label {x_new} out of range [0, {L})")
    nc = neighbor_counts(A, xi, omega, L)
    x_old = int(xi[omega])
    D, Delta = move_delta_matrices(nc.tau, nc.nu, x_old, x_new, L)
    delta = np.zeros(L, dtype=np.int64)
    if x_new != x_old:
        delta[x_new] += 1
        delta[x_old] -= 1
    return DeltaStats(D=D, Delta=Delta, delta=delta, U=nc.tau, V=nc.nu)


def label_counts(xi, L: int):
    """(n_x, n_gt_x): occupancy of each label and of all strictly larger ones."""
    xi = np.asarray(xi, dtype=np.int64)
    if xi.size and (xi.min() < 0 or xi.max() >= L):
        raise ValueError(f"labels must lie in [0, {L})")
    n_x = np.bincount(xi, minlength=L).astype(np.int64)
    n_gt = np.concatenate((np.cumsum(n_x[::-1])[::-1][1:], [0]))
    return n_x, n_gt


def network_move_deltas(A: Adjacency, xi, L: int):
    """Per-network block sums (Dj, Dbar_j): the amounts a network carries
    into/out of a class aggregate when its class label changes."""
    bs = compute_block_sums(A, xi, L)
    return bs.m, bs.N - bs.m


def canonical_relabel(xi, L: int) -> np.ndarray:
    """Relabel communities by decreasing size, ties by first occurrence.

    The partition is unchanged; only the index assignment is normalized, so
    independently fitted networks with matching community structure receive
    matching indices.
    """
    xi = np.asarray(xi, dtype=np.int64)
    if xi.size == 0:
        return xi.copy()
    sizes = np.bincount(xi, minlength=L)
    first = np.full(L, xi.size, dtype=np.int64)
    for i in range(xi.size - 1, -1, -1):
        first[xi[i]] = i
    occupied = np.flatnonzero(sizes > 0)
    order = sorted(occupied, key=lambda x: (-int(sizes[x]), int(first[x])))
    mapping = np.zeros(L, dtype=np.int64)
    for new, old in enumerate(order):
        mapping[old] = new
    return mapping[xi]
