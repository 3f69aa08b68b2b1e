"""Persistent homology of a flag filtration over a finite field.

compute_persistence is the production engine.  It computes degree 0 with a
union-find pass over the edges (the elder rule with minimum-vertex
representatives reproduces the canonical reduction pairing exactly) and
degrees 1..k_max with the coboundary (anti-transpose) formulation plus
clearing: columns are the degree-k simplices in reverse canonical order,
entries are cofacet positions, and the pivot is the cofacet with the
smallest canonical position.  By the standard duality of the anti-transposed
boundary matrix this yields the same persistence pairs as left-to-right
column reduction, while skipping almost all of the expensive
reduce-to-zero columns.  GF(2) columns are sorted index arrays (pivot is the
first entry, addition is a vectorized symmetric difference); a column
finalized without any additions is stored as its generating simplex and its
coboundary is regenerated on demand, which keeps collision chains cheap.

naive_reduction_oracle is the verification oracle: the textbook global
left-to-right boundary-matrix reduction with no optimizations.  It shares no
reduction code with the engine and is kept deliberately simple.

Conventions shared by both:
  * a class alive on [birth, death) contributes to Betti numbers at
    thresholds t with birth <= t < death;
  * pairs with birth == death (zero persistence) are discarded at emission;
  * classes unpaired at the cap are ESSENTIAL when they can never die
    (the surviving connected component, or any unpaired class at w_cap = 1)
    and ESSENTIAL-AT-CAP otherwise, a distinct marker so callers can
    escalate the cap instead of silently treating the cap as a death time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .errors import InvalidParameterError
from .flag import FlagFiltration
from .serialize import fmt17

ESSENTIAL = math.inf


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    for d in range(2, int(q**0.5) + 1):
        if q % d == 0:
            return False
    return True


@dataclass(frozen=True)
class PersistencePair:
    """One point of the persistence diagram.

    death is +inf for unpaired classes; at_cap distinguishes classes whose
    fate beyond the weight cap is unknown from genuinely immortal ones.
    """

    dim: int
    birth: float
    death: float
    at_cap: bool = False

    @property
    def finite(self) -> bool:
        return math.isfinite(self.death)

    @property
    def ratio(self) -> float:
        """Multiplicative persistence death/birth (finite pairs, dim >= 1)."""
        return self.death / self.birth


@dataclass
class PersistenceDiagram:
    n: int
    k_max: int
    w_cap: float
    characteristic: int
    pairs_by_degree: Dict[int, List[PersistencePair]] = field(default_factory=dict)

    def pairs(self, k: int) -> List[PersistencePair]:
        if not 0 <= k <= self.k_max:
            raise InvalidParameterError(f"degree {k} not computed (k_max={self.k_max})")
        return self.pairs_by_degree.get(k, [])

    def has_at_cap(self, k: int) -> bool:
        return any(p.at_cap for p in self.pairs(k))

    def __repr__(self) -> str:
        sizes = {k: len(self.pairs_by_degree.get(k, [])) for k in range(self.k_max + 1)}
        return (
            f"PersistenceDiagram(n={self.n}, k_max={self.k_max}, "
            f"w_cap={self.w_cap:g}, char={self.characteristic}, sizes={sizes})"
        )


def _validate(ff: FlagFiltration, k_max: int, characteristic: int) -> None:
    if k_max < 0:
        raise InvalidParameterError("k_max must be nonnegative")
    if not _is_prime(characteristic):
        raise InvalidParameterError("characteristic must be 2 or an odd prime")
    if k_max + 1 > ff.max_dim:
        raise InvalidParameterError(
            f"need max_dim >= k_max + 1 (got max_dim={ff.max_dim}, k_max={k_max})"
        )


def _classify_unpaired(
    by_degree: Dict[int, List[PersistencePair]],
    unpaired: Dict[int, List[int]],
    values,
    w_cap: float,
) -> None:
    for d, positions in unpaired.items():
        for i, pos in enumerate(sorted(positions)):
            immortal = (d == 0 and i == 0) or w_cap >= 1.0
            by_degree[d].append(
                PersistencePair(d, float(values[pos]), ESSENTIAL, at_cap=not immortal)
            )


def _finish(
    n: int,
    k_max: int,
    w_cap: float,
    characteristic: int,
    by_degree: Dict[int, List[PersistencePair]],
) -> PersistenceDiagram:
    for d in by_degree:
        by_degree[d].sort(key=lambda p: (p.birth, p.death, p.at_cap))
    return PersistenceDiagram(n, k_max, w_cap, characteristic, by_degree)


def _xor_sorted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Symmetric difference of two sorted unique int arrays, sorted.

    Stable sort merges the two pre-sorted runs in near-linear time; elements
    appearing twice cancel (GF(2) addition).  Inputs are left untouched.
    """
    aux = np.concatenate((a, b))
    aux.sort(kind="stable")
    keep = np.empty(aux.size + 1, dtype=bool)
    keep[0] = keep[-1] = True
    np.not_equal(aux[1:], aux[:-1], out=keep[1:-1])
    return aux[keep[:-1] & keep[1:]]


class _DegreeCofacets:
    """All cofacets of the degree-k simplices of one filtration, precomputed
    in one vectorized pass and stored CSR-style.

    For the i-th dim-k simplex (vertices vs, sorted) and a candidate vertex
    x adjacent to all of vs, the rank of vs + {x} decomposes as
    pref[i][slot] + C(x-1, slot+1) + suf[i][slot] where slot is the
    insertion index of x; (-1)^slot is the sign of x in the cofacet's
    boundary.  Per-column access is then a pure slice, so regenerating the
    raw column of a zero-addition pivot owner costs nothing.
    """

    def __init__(self, ff: FlagFiltration, k: int):
        rows = ff.verts_by_dim[k]
        m = len(rows)
        self.offsets = np.zeros(m + 1, dtype=np.int64)
        if m == 0:
            self.positions = np.empty(0, dtype=np.int32)
            self.slots = np.empty(0, dtype=np.int8)
            return
        comb2d = ff._comb2d
        contrib = comb2d[rows - 1, np.arange(1, k + 2)]
        pref = np.zeros((m, k + 2), dtype=np.int64)
        np.cumsum(contrib, axis=1, out=pref[:, 1:])
        shifted = comb2d[rows - 1, np.arange(2, k + 3)]
        suf = np.zeros((m, k + 2), dtype=np.int64)
        suf[:, :-1] = shifted[:, ::-1].cumsum(axis=1)[:, ::-1]

        pos = ff.positions_by_dim[k + 1]
        r = ff.ranks[pos]
        order = np.argsort(r)
        rank_sorted = r[order]
        pos_by_rank = pos[order].astype(np.int32)

        # candidate vertices: common neighbors of each row (vectorized AND)
        mask2d = ff.adjacency[rows[:, 0] - 1]
        for j in range(1, k + 1):
            mask2d = mask2d & ff.adjacency[rows[:, j] - 1]
        np.cumsum(mask2d.sum(axis=1), out=self.offsets[1:])
        row_ids, cand_ids = np.nonzero(mask2d)
        slots = (rows[row_ids] - 1 < cand_ids[:, None]).sum(axis=1)
        ranks = (
            pref[row_ids, slots]
            + comb2d[cand_ids, slots + 1]
            + suf[row_ids, slots]
        )
        positions = pos_by_rank[np.searchsorted(rank_sorted, ranks)]
        # sort cofacets by position within each row
        order2 = np.lexsort((positions, row_ids))
        self.positions = positions[order2]
        self.slots = slots[order2].astype(np.int8)

    def column(self, i: int) -> np.ndarray:
        """Cofacet positions of the i-th dim-k simplex, ascending (a view)."""
        return self.positions[self.offsets[i] : self.offsets[i + 1]]

    def column_slots(self, i: int) -> np.ndarray:
        return self.slots[self.offsets[i] : self.offsets[i + 1]]


def compute_persistence(
    ff: FlagFiltration, k_max: int, characteristic: int = 2
) -> PersistenceDiagram:
    """Persistence diagram of the filtration restricted to values <= w_cap,
    for homology degrees 0..k_max over GF(characteristic)."""
    _validate(ff, k_max, characteristic)
    values = ff.values
    n = ff.n
    by_degree: Dict[int, List[PersistencePair]] = {d: [] for d in range(k_max + 1)}
    unpaired: Dict[int, List[int]] = {d: [] for d in range(k_max + 1)}

    vertex_positions = ff.positions_by_dim[0]
    assert len(vertex_positions) == n

    # Degree 0: Kruskal-style union-find over edges in canonical order.
    # Components are represented by their minimum vertex; when an edge merges
    # two components the one with the larger representative dies (elder rule),
    # which is exactly the pairing produced by column reduction.
    parent = list(range(n))

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    merge_edges: set = set()
    cycle_edges: List[int] = []
    if ff.max_dim >= 1:
        edge_rows = ff.verts_by_dim[1]
        for i, pos in enumerate(ff.positions_by_dim[1].tolist()):
            u, v = int(edge_rows[i, 0]), int(edge_rows[i, 1])
            ru, rv = find(u - 1), find(v - 1)
            if ru == rv:
                cycle_edges.append(pos)
                continue
            lives, dies = (ru, rv) if ru < rv else (rv, ru)
            parent[dies] = lives
            merge_edges.add(pos)
            death = float(values[pos])
            if death > 0.0:
                by_degree[0].append(PersistencePair(0, 0.0, death))
    unpaired[0] = [int(vertex_positions[r]) for r in range(n) if find(r) == r]

    # Degrees >= 1: coboundary reduction with clearing.  `cleared` holds the
    # degree-k simplices already known to die into degree k-1 (their columns
    # reduce to zero); for k = 1 those are precisely the merge edges.
    oddp = characteristic if characteristic != 2 else 0
    cleared = merge_edges

    for k in range(1, k_max + 1):
        all_positions = ff.positions_by_dim[k].tolist()
        if k == 1:
            simplex_positions = cycle_edges
        else:
            simplex_positions = all_positions
        row_index = {pos: i for i, pos in enumerate(all_positions)}
        gen = _DegreeCofacets(ff, k)
        pivot_owner: Dict[int, object] = {}
        pivot_birth: Dict[int, int] = {}
        zero_cols: List[int] = []
        for posj in reversed(simplex_positions):
            if posj in cleared:
                continue
            i = row_index[posj]
            if oddp:
                col: Dict[int, int] = {}
                for p, s in zip(
                    gen.column(i).tolist(), gen.column_slots(i).tolist()
                ):
                    col[p] = 1 if s % 2 == 0 else oddp - 1
                while True:
                    if not col:
                        zero_cols.append(posj)
                        break
                    piv = min(col)
                    owner = pivot_owner.get(piv)
                    if owner is None:
                        pivot_owner[piv] = col
                        pivot_birth[piv] = posj
                        break
                    factor = (col[piv] * pow(owner[piv], -1, oddp)) % oddp
                    for r2, oc in owner.items():
                        nv = (col.get(r2, 0) - factor * oc) % oddp
                        if nv:
                            col[r2] = nv
                        else:
                            col.pop(r2, None)
            else:
                colarr = gen.column(i)
                if colarr.size == 0:
                    zero_cols.append(posj)
                    continue
                piv = int(colarr[0])
                owner = pivot_owner.get(piv)
                if owner is None:
                    # a zero-addition column is stored as its generator row;
                    # gen.column(row) reproduces it as a slice
                    pivot_owner[piv] = i
                    pivot_birth[piv] = posj
                    continue
                # collision: switch to the dense parity accumulator.  dense
                # holds the true column support; heap holds every position
                # ever inserted (possibly stale), so the pivot is the first
                # heap entry whose dense bit is set.  An owner addition
                # flips owner-many bits instead of merging whole arrays.
                dense[colarr] = True
                heap = colarr.tolist()
                hi = int(colarr[-1])
                while True:
                    while heap and not dense[heap[0]]:
                        heappop(heap)
                    if not heap:
                        zero_cols.append(posj)
                        break
                    piv = heap[0]
                    owner = pivot_owner.get(piv)
                    if owner is None:
                        support = np.flatnonzero(dense[piv : hi + 1]).astype(
                            np.int32
                        )
                        support += piv
                        dense[piv : hi + 1] = False
                        pivot_owner[piv] = support
                        pivot_birth[piv] = posj
                        break
                    if isinstance(owner, int):
                        owner = gen.column(owner)
                    dense[owner] ^= True
                    last = int(owner[-1])
                    if last > hi:
                        hi = last
                    for e in owner.tolist():
                        heappush(heap, e)
        for piv, bpos in pivot_birth.items():
            birth, death = float(values[bpos]), float(values[piv])
            if death > birth:
                by_degree[k].append(PersistencePair(k, birth, death))
        unpaired[k] = zero_cols
        cleared = set(pivot_birth.keys())

    _classify_unpaired(by_degree, unpaired, values, ff.w_cap)
    return _finish(n, k_max, ff.w_cap, characteristic, by_degree)


def naive_reduction_oracle(
    ff: FlagFiltration, k_max: int, characteristic: int = 2
) -> PersistenceDiagram:
    """Textbook left-to-right column reduction of the global boundary matrix.

    Same contract as compute_persistence; kept independent in code so the
    two can cross-check each other.  Only simplices of dimension
    <= k_max + 1 participate (higher ones cannot affect degrees <= k_max).
    """
    _validate(ff, k_max, characteristic)
    values = ff.values
    dims = ff.dims
    included = [i for i in range(len(values)) if dims[i] <= k_max + 1]
    oddp = characteristic if characteristic != 2 else 0

    reduced: Dict[int, object] = {}
    low_owner: Dict[int, int] = {}
    death_of: Dict[int, int] = {}
    zero_cols: List[int] = []
    for j in included:
        vs = ff.vert_tuple(j)
        d = int(dims[j])
        if oddp:
            col: Dict[int, int] = {}
            for i in range(d + 1):
                face = vs[:i] + vs[i + 1 :]
                if face:
                    facepos = ff.position_of(d - 1, _rank(face))
                    col[facepos] = 1 if i % 2 == 0 else oddp - 1
            while col:
                piv = max(col)
                owner = low_owner.get(piv)
                if owner is None:
                    low_owner[piv] = j
                    reduced[j] = col
                    death_of[piv] = j
                    break
                prev = reduced[owner]
                factor = (col[piv] * pow(prev[piv], -1, oddp)) % oddp
                for r, oc in prev.items():
                    nv = (col.get(r, 0) - factor * oc) % oddp
                    if nv:
                        col[r] = nv
                    else:
                        col.pop(r, None)
            if not col:
                zero_cols.append(j)
        else:
            colset = set()
            for i in range(d + 1):
                face = vs[:i] + vs[i + 1 :]
                if face:
                    colset.add(ff.position_of(d - 1, _rank(face)))
            while colset:
                piv = max(colset)
                owner = low_owner.get(piv)
                if owner is None:
                    low_owner[piv] = j
                    reduced[j] = colset
                    death_of[piv] = j
                    break
                colset ^= reduced[owner]
            if not colset:
                zero_cols.append(j)

    by_degree: Dict[int, List[PersistencePair]] = {d: [] for d in range(k_max + 1)}
    unpaired: Dict[int, List[int]] = {d: [] for d in range(k_max + 1)}
    for j in zero_cols:
        d = int(dims[j])
        if d > k_max:
            continue
        dj = death_of.get(j)
        if dj is None:
            unpaired[d].append(j)
        else:
            birth, death = float(values[j]), float(values[dj])
            if death > birth:
                by_degree[d].append(PersistencePair(d, birth, death))
    _classify_unpaired(by_degree, unpaired, values, ff.w_cap)
    return _finish(ff.n, k_max, ff.w_cap, characteristic, by_degree)


def _rank(vertices: Tuple[int, ...]) -> int:
    r = 0
    for i, v in enumerate(vertices):
        r += math.comb(v - 1, i + 1)
    return r


def betti_at(dg: PersistenceDiagram, k: int, t: float) -> int:
    """Number of degree-k classes alive at threshold t (birth <= t < death),
    unpaired classes counting as death = +inf.  Only valid up to the cap."""
    if not 0.0 <= t <= dg.w_cap:
        raise InvalidParameterError(
            f"threshold {t} outside [0, w_cap={dg.w_cap}]; Betti beyond the cap is unknown"
        )
    return sum(1 for p in dg.pairs(k) if p.birth <= t < p.death)


def diagram_to_csv(dg: PersistenceDiagram, path) -> None:
    """CSV export `dim,birth,death`; unpaired classes print `inf` (immortal)
    or `cap` (unknown fate beyond the cap).  Rows sorted by (dim, birth, death)."""
    rows = []
    for d in range(dg.k_max + 1):
        for p in dg.pairs(d):
            rows.append((p.dim, p.birth, p.death, p.at_cap))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    with open(path, "w", newline="\n") as fh:
        fh.write("dim,birth,death\n")
        for d, b, death, at_cap in rows:
            cell = ("cap" if at_cap else "inf") if math.isinf(death) else fmt17(death)
            fh.write(f"{d},{fmt17(b)},{cell}\n")
