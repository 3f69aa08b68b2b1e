"""Flag (clique) filtrations of a weighted complete graph.

A clique enters the filtration at the largest weight among its edges, so the
subcomplex at threshold p is exactly the clique complex of the graph at p.
Simplices are listed in a canonical total order: by filtration value, then
dimension, then the combinatorial-number-system rank of the vertex tuple.
Ties in value occur with probability zero under random weights but
deterministically in replayed inputs; the (dim, rank) tie-break keeps every
downstream computation reproducible.  Every face of a simplex precedes it,
so each prefix of the canonical list is itself a simplicial complex.

Storage is columnar (numpy arrays per dimension) because experiment-scale
complexes run to millions of simplices.
"""
from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np

from .errors import InvalidParameterError
from .filtration import EdgeFiltration
from .serialize import fmt17

Vertices = Tuple[int, ...]


def simplex_rank(vertices: Sequence[int]) -> int:
    """Combinatorial-number-system rank of a sorted 1-based vertex tuple.

    For fixed dimension this is a bijection onto {0, ..., C(n, d+1) - 1};
    simplex_from_rank inverts it.
    """
    r = 0
    prev = 0
    for i, v in enumerate(vertices):
        if v <= prev:
            raise InvalidParameterError("vertices must be strictly increasing")
        r += math.comb(v - 1, i + 1)
        prev = v
    return r


def simplex_from_rank(dim: int, rank: int) -> Vertices:
    """Vertex tuple (1-based, ascending) of the simplex with the given
    combinatorial rank in dimension dim."""
    if dim < 0 or rank < 0:
        raise InvalidParameterError("dim and rank must be nonnegative")
    out = []
    r = rank
    for i in range(dim, -1, -1):
        c = i  # smallest candidate with C(c, i+1) == 0
        while math.comb(c + 1, i + 1) <= r:
            c += 1
        out.append(c + 1)
        r -= math.comb(c, i + 1)
    return tuple(reversed(out))


def simplex_value(ef: EdgeFiltration, vertices: Sequence[int]) -> float:
    """Filtration value of a clique: 0 for vertices, max edge weight otherwise."""
    vs = tuple(vertices)
    for v in vs:
        if not 1 <= v <= ef.n:
            raise InvalidParameterError(f"vertex {v} outside 1..{ef.n}")
    if len(set(vs)) != len(vs):
        raise InvalidParameterError("vertices must be distinct")
    if len(vs) == 1:
        return 0.0
    mat = ef.matrix()
    best = 0.0
    for i, u in enumerate(vs):
        for v in vs[i + 1 :]:
            w = mat[u - 1, v - 1]
            if w > best:
                best = w
    return float(best)


def adaptive_cap(n: int, k: int, eps: float) -> float:
    """Initial weight cap for computing degree-k persistence.

    Above ((k/2 + 1 + eps) log n / n)^(1/(k+1)) the degree-k homology of the
    clique complex vanishes with high probability, so classes of dimension
    <= k are expected to be paired below this cutoff.  Callers escalate the
    cap (see the retry protocol in experiment.py) on the rare samples where
    some class is still unpaired.
    """
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    if k < 1:
        raise InvalidParameterError("need k >= 1")
    if eps <= 0:
        raise InvalidParameterError("need eps > 0")
    return min(1.0, ((k / 2 + 1 + eps) * math.log(n) / n) ** (1.0 / (k + 1)))


class FlagFiltration:
    """All cliques with value <= w_cap and dimension <= max_dim, canonically
    ordered.  Immutable after construction.

    Global arrays follow the canonical order; per-dimension vertex matrices
    (`verts_by_dim[d]`, one row per simplex, aligned with
    `positions_by_dim[d]`) allow bulk cofacet computations without storing a
    tuple per simplex.
    """

    def __init__(
        self,
        n: int,
        max_dim: int,
        w_cap: float,
        values: np.ndarray,
        dims: np.ndarray,
        ranks: np.ndarray,
        verts_by_dim: List[np.ndarray],
        adjacency: np.ndarray,
    ):
        self.n = n
        self.max_dim = max_dim
        self.w_cap = w_cap
        self.values = values
        self.dims = dims
        self.ranks = ranks
        self.verts_by_dim = verts_by_dim
        self.adjacency = adjacency  # bool (n, n), thresholded at w_cap
        self.positions_by_dim: List[np.ndarray] = [
            np.flatnonzero(dims == d) for d in range(max_dim + 1)
        ]
        # rank -> global position lookup, per dimension, via searchsorted
        self._rank_sorted: List[np.ndarray] = []
        self._pos_by_rank: List[np.ndarray] = []
        for d in range(max_dim + 1):
            pos = self.positions_by_dim[d]
            r = ranks[pos]
            order = np.argsort(r)
            self._rank_sorted.append(r[order])
            self._pos_by_rank.append(pos[order])
        # C(v, k) lookup: _comb2d[v, k] for v <= n, k <= max_dim + 2
        self._comb2d = np.array(
            [[math.comb(v, c) for c in range(max_dim + 3)] for v in range(n + 1)],
            dtype=np.int64,
        )

    def __len__(self) -> int:
        return len(self.values)

    def count_in_dim(self, d: int) -> int:
        if d < 0 or d > self.max_dim:
            return 0
        return len(self.positions_by_dim[d])

    def position_of(self, d: int, rank: int) -> int:
        """Global canonical position of the dim-d simplex with this rank."""
        i = int(np.searchsorted(self._rank_sorted[d], rank))
        if i >= len(self._rank_sorted[d]) or self._rank_sorted[d][i] != rank:
            raise KeyError((d, rank))
        return int(self._pos_by_rank[d][i])

    def positions_of_ranks(self, d: int, ranks: np.ndarray) -> np.ndarray:
        """Vectorized position_of for ranks known to be present."""
        idx = np.searchsorted(self._rank_sorted[d], ranks)
        return self._pos_by_rank[d][idx]

    def vert_row(self, pos: int) -> np.ndarray:
        """Vertex row (1-based) of the simplex at a global position."""
        d = int(self.dims[pos])
        i = int(np.searchsorted(self.positions_by_dim[d], pos))
        return self.verts_by_dim[d][i]

    def vert_tuple(self, pos: int) -> Vertices:
        return tuple(int(v) for v in self.vert_row(pos))

    def iter_simplices(self):
        """Yield (value, vertex tuple) in canonical order."""
        cursor = [0] * (self.max_dim + 1)
        for pos in range(len(self.values)):
            d = int(self.dims[pos])
            row = self.verts_by_dim[d][cursor[d]]
            cursor[d] += 1
            yield float(self.values[pos]), tuple(int(v) for v in row)

    def rank_of(self, vertices: Sequence[int]) -> int:
        return simplex_rank(vertices)

    def __repr__(self) -> str:
        counts = ",".join(str(self.count_in_dim(d)) for d in range(self.max_dim + 1))
        return (
            f"FlagFiltration(n={self.n}, max_dim={self.max_dim}, "
            f"w_cap={self.w_cap:g}, counts=[{counts}])"
        )


def build_flag_filtration(
    ef: EdgeFiltration, max_dim: int, w_cap: float
) -> FlagFiltration:
    """Enumerate every clique with dim <= max_dim and value <= w_cap.

    Ordered expansion: a clique is grown only by common neighbors with a
    higher vertex index, so each clique is produced exactly once.  Children
    of one parent clique are emitted in bulk (their ranks differ from the
    parent only by the appended vertex, which lands in the last slot of the
    combinatorial rank).
    """
    if max_dim < 0:
        raise InvalidParameterError("max_dim must be nonnegative")
    if not 0.0 < w_cap <= 1.0:
        raise InvalidParameterError("w_cap must lie in (0, 1]")
    n = ef.n
    mat = ef.matrix()
    adj = mat <= w_cap
    adj.flags.writeable = False
    comb2d = np.array(
        [[math.comb(v, c) for c in range(max_dim + 3)] for v in range(n + 1)],
        dtype=np.int64,
    )

    # raw (unsorted) per-dimension buffers
    vals_raw: List[List[np.ndarray]] = [[] for _ in range(max_dim + 1)]
    ranks_raw: List[List[np.ndarray]] = [[] for _ in range(max_dim + 1)]
    verts_raw: List[List[np.ndarray]] = [[] for _ in range(max_dim + 1)]

    vals_raw[0].append(np.zeros(n))
    ranks_raw[0].append(np.arange(n, dtype=np.int64))
    verts_raw[0].append(np.arange(1, n + 1, dtype=np.int32).reshape(n, 1))

    if max_dim >= 1 and n >= 2:
        idx = np.arange(n)
        higher = [adj[v] & (idx > v) for v in range(n)]

        def expand(members0: Tuple[int, ...], value: float, rank: int, mask) -> None:
            cands = np.flatnonzero(mask)
            if cands.size == 0:
                return
            d = len(members0)  # dimension of the children
            if d == 1:
                child_vals = mat[members0[0], cands]
            else:
                child_vals = np.maximum(
                    value, mat[np.ix_(cands, list(members0))].max(axis=1)
                )
            child_ranks = rank + comb2d[cands, d + 1]
            rows = np.empty((cands.size, d + 1), dtype=np.int32)
            rows[:, :d] = np.array(members0, dtype=np.int32) + 1
            rows[:, d] = cands.astype(np.int32) + 1
            vals_raw[d].append(child_vals.astype(np.float64, copy=False))
            ranks_raw[d].append(child_ranks)
            verts_raw[d].append(rows)
            if d < max_dim:
                for j, x in enumerate(cands):
                    x = int(x)
                    m2 = mask & higher[x]
                    if m2.any():
                        expand(
                            members0 + (x,),
                            float(child_vals[j]),
                            int(child_ranks[j]),
                            m2,
                        )

        for v in range(n):
            if higher[v].any():
                expand((v,), 0.0, v, higher[v])

    # assemble and sort canonically: (value, dim, rank)
    per_dim_vals = []
    per_dim_ranks = []
    per_dim_verts = []
    for d in range(max_dim + 1):
        if vals_raw[d]:
            per_dim_vals.append(np.concatenate(vals_raw[d]))
            per_dim_ranks.append(np.concatenate(ranks_raw[d]))
            per_dim_verts.append(np.vstack(verts_raw[d]))
        else:
            per_dim_vals.append(np.empty(0))
            per_dim_ranks.append(np.empty(0, dtype=np.int64))
            per_dim_verts.append(np.empty((0, d + 1), dtype=np.int32))
    all_vals = np.concatenate(per_dim_vals)
    all_dims = np.concatenate(
        [np.full(len(per_dim_vals[d]), d, dtype=np.int8) for d in range(max_dim + 1)]
    )
    all_ranks = np.concatenate(per_dim_ranks)
    order = np.lexsort((all_ranks, all_dims, all_vals))
    values = all_vals[order]
    dims = all_dims[order]
    ranks = all_ranks[order]

    # reorder each dimension's vertex rows to canonical (within-dim) order
    offsets = np.cumsum([0] + [len(per_dim_vals[d]) for d in range(max_dim + 1)])
    verts_by_dim: List[np.ndarray] = []
    for d in range(max_dim + 1):
        sel = order[dims == d] - offsets[d]
        verts_by_dim.append(per_dim_verts[d][sel])

    for arr in (values, dims, ranks):
        arr.flags.writeable = False
    return FlagFiltration(
        n, max_dim, float(w_cap), values, dims, ranks, verts_by_dim, adj
    )


def export_filtration_text(ff: FlagFiltration, path) -> None:
    """One simplex per line in canonical order: `value v0 v1 ... vd`."""
    with open(path, "w", newline="\n") as fh:
        for val, vs in ff.iter_simplices():
            fh.write(fmt17(val) + " " + " ".join(str(v) for v in vs) + "\n")
