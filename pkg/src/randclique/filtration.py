"""Random edge filtrations of the complete graph.

Each unordered pair {u, v} of vertices in {1, ..., n} gets an independent
weight drawn uniformly from (0, 1], interpreted as the time the edge appears.
Thresholding the weights at p gives the standard monotone coupling of the
Erdos-Renyi process: the graph at p contains exactly the edges with
weight <= p, and the graph at p is a subgraph of the graph at p' for p <= p'.

Weights are sampled on the half-open interval (exact zeros are redrawn) so
that every clique built on top of the edges has a strictly positive
filtration value and death/birth ratios stay finite.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import InvalidParameterError
from .serialize import fmt17

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def mix_seed(master_seed: int, sample_index: int) -> int:
    """Per-sample RNG seed: output number `sample_index` of the SplitMix64
    stream started at `master_seed`.

    The function is the fixed published mixing rule for this package:
    sweeps are reproducible and order-independent because sample i depends
    on (master_seed, i) only.
    """
    if sample_index < 0:
        raise InvalidParameterError("sample_index must be nonnegative")
    z = (int(master_seed) + (int(sample_index) + 1) * _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def pair_index(u: int, v: int) -> int:
    """Colexicographic rank of the pair {u, v} (1-based vertices, u != v)."""
    if u == v:
        raise InvalidParameterError("self-loops have no weight")
    if u > v:
        u, v = v, u
    a, b = u - 1, v - 1
    return a + b * (b - 1) // 2


class EdgeFiltration:
    """Immutable weighted complete graph on vertices {1, ..., n}.

    Weights are stored condensed in colexicographic pair order; a dense
    symmetric matrix view (with +inf on the diagonal, so the diagonal never
    passes a threshold test) is kept for vectorized queries.
    """

    __slots__ = ("n", "weights", "_matrix")

    def __init__(self, n: int, weights: np.ndarray):
        if n < 1:
            raise InvalidParameterError("vertex count must be positive")
        m = n * (n - 1) // 2
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (m,):
            raise InvalidParameterError(
                f"expected {m} weights for n={n}, got shape {weights.shape}"
            )
        if m and (weights.min() <= 0.0 or weights.max() > 1.0):
            raise InvalidParameterError("edge weights must lie in (0, 1]")
        weights = weights.copy()
        weights.flags.writeable = False
        self.n = n
        self.weights = weights
        mat = np.full((n, n), np.inf)
        if m:
            iu, iv = np.triu_indices(n, k=1)
            order = pair_index_array(iu + 1, iv + 1)
            mat[iu, iv] = weights[order]
            mat[iv, iu] = weights[order]
        mat.flags.writeable = False
        self._matrix = mat

    @property
    def edge_count(self) -> int:
        return self.n * (self.n - 1) // 2

    def weight(self, u: int, v: int) -> float:
        """Weight of edge {u, v}; vertices are 1-based."""
        self._check_vertex(u)
        self._check_vertex(v)
        return float(self.weights[pair_index(u, v)])

    def matrix(self) -> np.ndarray:
        """Read-only (n, n) weight matrix with +inf on the diagonal."""
        return self._matrix

    def relabel(self, perm) -> "EdgeFiltration":
        """New filtration with vertex u renamed to perm[u-1] (a bijection of
        {1, ..., n}); weight(perm(u), perm(v)) equals the old weight(u, v)."""
        n = self.n
        perm = list(perm)
        if sorted(perm) != list(range(1, n + 1)):
            raise InvalidParameterError("perm must be a permutation of 1..n")
        out = np.empty_like(self.weights)
        for v in range(2, n + 1):
            for u in range(1, v):
                out[pair_index(perm[u - 1], perm[v - 1])] = self.weights[
                    pair_index(u, v)
                ]
        return EdgeFiltration(n, out)

    def _check_vertex(self, u: int) -> None:
        if not 1 <= u <= self.n:
            raise InvalidParameterError(f"vertex {u} outside 1..{self.n}")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EdgeFiltration)
            and self.n == other.n
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self) -> str:
        return f"EdgeFiltration(n={self.n}, edges={self.edge_count})"


def pair_index_array(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized pair_index for 1-based vertex arrays."""
    a = np.minimum(u, v) - 1
    b = np.maximum(u, v) - 1
    return a + b * (b - 1) // 2


def sample_filtration(
    n: int, master_seed: int = 0, sample_index: int = 0
) -> EdgeFiltration:
    """Draw the n(n-1)/2 edge weights i.i.d. uniform on (0, 1].

    Streams for distinct sample indices are disjoint by construction
    (see mix_seed); a fixed (master_seed, sample_index) reproduces the same
    weights bit for bit.
    """
    if n < 1:
        raise InvalidParameterError("vertex count must be positive")
    rng = np.random.Generator(np.random.PCG64(mix_seed(master_seed, sample_index)))
    m = n * (n - 1) // 2
    w = rng.random(m)
    while True:
        zeros = np.flatnonzero(w == 0.0)
        if zeros.size == 0:
            break
        w[zeros] = rng.random(zeros.size)
    return EdgeFiltration(n, w)


@dataclass(frozen=True)
class GraphSnapshot:
    """The simple graph {e : weight(e) <= p} on the full vertex set."""

    n: int
    p: float
    adjacency: np.ndarray  # (n, n) bool, symmetric, False diagonal

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u - 1, v - 1])

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.adjacency)) // 2

    def edges(self) -> Iterator[tuple]:
        iu, iv = np.nonzero(np.triu(self.adjacency, k=1))
        for a, b in zip(iu, iv):
            yield (int(a) + 1, int(b) + 1)


def snapshot(ef: EdgeFiltration, p: float) -> GraphSnapshot:
    """Materialize the graph at threshold p (0 <= p <= 1)."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("threshold p must lie in [0, 1]")
    adj = ef.matrix() <= p
    adj.flags.writeable = False
    return GraphSnapshot(ef.n, float(p), adj)


def save_edges_csv(ef: EdgeFiltration, path) -> None:
    """Dump the filtration as CSV `u,v,weight`, rows sorted by (u, v),
    weights with 17 significant digits (round-trip exact)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("u,v,weight\n")
        for u in range(1, ef.n + 1):
            for v in range(u + 1, ef.n + 1):
                fh.write(f"{u},{v},{fmt17(ef.weights[pair_index(u, v)])}\n")


def load_edges_csv(path, n: Optional[int] = None) -> EdgeFiltration:
    """Inverse of save_edges_csv.  n is inferred from the largest vertex
    unless given explicitly (needed for the edgeless n=1 case)."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "u,v,weight":
            raise InvalidParameterError(f"unexpected header {header!r} in {path}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u_s, v_s, w_s = line.split(",")
            rows.append((int(u_s), int(v_s), float(w_s)))
    if n is None:
        n = max((max(u, v) for u, v, _ in rows), default=1)
    weights = np.full(n * (n - 1) // 2, np.nan)
    for u, v, w in rows:
        weights[pair_index(u, v)] = w
    if np.isnan(weights).any():
        raise InvalidParameterError(f"{path} does not cover all vertex pairs")
    return EdgeFiltration(n, weights)
