"""Cross-polytope witnesses for long-lived degree-k cycles.

A (2k+2)-subset Y of the vertices is split canonically into its k+1 smallest
elements U = {u_1 < ... < u_{k+1}} and its k+1 largest V = {v_1 < ... <
v_{k+1}}, with (u_i, v_i) the antipodal pairs.  Y certifies a degree-k cycle
alive from threshold p1 to threshold p2 when

  (1) every pair inside Y except the antipodal ones has weight <= p1, so Y
      spans the boundary of a (k+1)-dimensional cross-polytope at p1;
  (2) every antipodal pair has weight > p2, so the sphere stays hollow; and
  (3) no vertex outside Y is adjacent to all of U at p2, which makes U a
      maximal face and prevents the cycle from bounding.

"Adjacent at p" means weight <= p; required non-adjacency means weight > p,
matching the right-continuous snapshot convention.  Only the canonical
sorted split is counted - the closed-form expectation below is derived for
exactly that event, and a looser detector would not match it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np

from .errors import CapInsufficientError, InvalidParameterError
from .filtration import EdgeFiltration
from .persistence import PersistenceDiagram
from .stats import RankQuery, max_persistence, rank_invariant
from .serialize import fmt17


@dataclass(frozen=True)
class CrossPolytopeWitness:
    """A certified (2k+2)-subset with its canonical antipodal split."""

    y: Tuple[int, ...]
    u: Tuple[int, ...]
    v: Tuple[int, ...]
    p1: float
    p2: float


@dataclass
class CrossPolytopeCount:
    k: int
    p1: float
    p2: float
    count: int
    witnesses: Optional[List[CrossPolytopeWitness]] = None


def _validate_pair(k: int, p1: float, p2: float) -> None:
    if k < 1:
        raise InvalidParameterError("need k >= 1")
    if p1 > p2:
        raise InvalidParameterError("need p1 <= p2")


def count_cross_polytope_cycles(
    ef: EdgeFiltration,
    k: int,
    p1: float,
    p2: float,
    collect_witnesses: bool = False,
) -> CrossPolytopeCount:
    """Exact number of witness subsets, by pruned enumeration.

    Candidate U sets are the (k+1)-cliques at p1, grown by ordered expansion.
    A valid U has no common neighbor at p2 anywhere: outside Y that violates
    condition (3) directly, and no vertex of V can be one because it misses
    its antipode by condition (2) - so U candidates with any common
    p2-neighbor are pruned before V is even chosen.  After the prune, each
    vertex x > max(U) with exactly one U-weight above p1 (and that weight
    above p2) can play exactly one antipodal role; roles are filled in
    increasing vertex order, so the sorted split of the resulting Y
    reproduces the role assignment and each Y is counted once.
    """
    _validate_pair(k, p1, p2)
    if not 0.0 < p1 <= 1.0 or p2 > 1.0:
        raise InvalidParameterError("need 0 < p1 <= p2 <= 1")
    n = ef.n
    size = 2 * k + 2
    if n < size:
        return CrossPolytopeCount(k, p1, p2, 0, [] if collect_witnesses else None)
    mat = ef.matrix()
    a1 = mat <= p1
    a2 = mat <= p2
    count = 0
    witnesses: List[CrossPolytopeWitness] = []

    for u_set in _cliques_of_size(a1, k + 1):
        # condition (3) pre-prune: no common neighbor of U at p2 anywhere
        common = a2[u_set[0]].copy()
        for y in u_set[1:]:
            common &= a2[y]
        if common.any():
            continue
        top = u_set[-1]
        roles: List[List[int]] = [[] for _ in range(k + 1)]
        feasible = True
        for x in range(top + 1, n):
            row = mat[x, list(u_set)]
            over = np.flatnonzero(row > p1)
            if over.size == 1 and row[over[0]] > p2:
                roles[int(over[0])].append(x)
        for r in roles:
            if not r:
                feasible = False
                break
        if not feasible:
            continue

        def fill(role_idx: int, chosen: Tuple[int, ...]) -> None:
            nonlocal count
            if role_idx == k + 1:
                count += 1
                if collect_witnesses:
                    y = tuple(sorted(u_set + chosen))
                    witnesses.append(
                        CrossPolytopeWitness(
                            tuple(v + 1 for v in y),
                            tuple(v + 1 for v in u_set),
                            tuple(v + 1 for v in chosen),
                            p1,
                            p2,
                        )
                    )
                return
            lo = chosen[-1] if chosen else -1
            for x in roles[role_idx]:
                if x <= lo:
                    continue
                if all(a1[x, c] for c in chosen):
                    fill(role_idx + 1, chosen + (x,))

        fill(0, ())
    return CrossPolytopeCount(
        k, p1, p2, count, witnesses if collect_witnesses else None
    )


def count_cross_polytope_cycles_bruteforce(
    ef: EdgeFiltration,
    k: int,
    p1: float,
    p2: float,
    collect_witnesses: bool = False,
) -> CrossPolytopeCount:
    """Oracle counter: scan every (2k+2)-subset and check the three
    conditions directly on bitmask adjacency rows.  Exponential in n; meant
    for n up to about 30."""
    _validate_pair(k, p1, p2)
    n = ef.n
    size = 2 * k + 2
    if n < size:
        return CrossPolytopeCount(k, p1, p2, 0, [] if collect_witnesses else None)
    mat = ef.matrix()
    m1 = [0] * n
    m2 = [0] * n
    for a in range(n):
        row = mat[a]
        b1 = 0
        b2 = 0
        for b in range(n):
            if row[b] <= p1:
                b1 |= 1 << b
            if row[b] <= p2:
                b2 |= 1 << b
        m1[a], m2[a] = b1, b2
    full = (1 << n) - 1

    # index pairs inside Y that condition (1) requires; position j = i + k+1
    # is the antipode of position i, every other pair must be a p1-edge
    required = [
        (i, j)
        for i in range(size)
        for j in range(i + 1, size)
        if j - i != k + 1
    ]
    count = 0
    witnesses: List[CrossPolytopeWitness] = []
    for y in combinations(range(n), size):
        ok = True
        for i, j in required:
            if not (m1[y[i]] >> y[j]) & 1:
                ok = False
                break
        if not ok:
            continue
        for i in range(k + 1):
            if (m2[y[i]] >> y[i + k + 1]) & 1:
                ok = False
                break
        if not ok:
            continue
        ymask = 0
        for v in y:
            ymask |= 1 << v
        common = full
        for i in range(k + 1):
            common &= m2[y[i]]
        if common & ~ymask:
            continue
        count += 1
        if collect_witnesses:
            witnesses.append(
                CrossPolytopeWitness(
                    tuple(v + 1 for v in y),
                    tuple(v + 1 for v in y[: k + 1]),
                    tuple(v + 1 for v in y[k + 1 :]),
                    p1,
                    p2,
                )
            )
    return CrossPolytopeCount(
        k, p1, p2, count, witnesses if collect_witnesses else None
    )


def expected_cross_polytope_cycles(n: int, k: int, p1: float, p2: float) -> float:
    """Closed-form expectation of the witness count:

        C(n, 2k+2) * p1^(2k(k+1)) * (1-p2)^(k+1) * (1-p2^(k+1))^(n-2k-2)

    evaluated in log space (p1^(2k(k+1)) underflows for k >= 2 at realistic
    p1; the binomial coefficient is taken exactly before the log)."""
    _validate_pair(k, p1, p2)
    if p1 < 0.0 or p2 > 1.0:
        raise InvalidParameterError("need 0 <= p1 <= p2 <= 1")
    size = 2 * k + 2
    if n < size or p1 == 0.0 or p2 == 1.0:
        return 0.0
    log_e = (
        math.log(math.comb(n, size))
        + 2 * k * (k + 1) * math.log(p1)
        + (k + 1) * math.log1p(-p2)
        + (n - size) * math.log1p(-(p2 ** (k + 1)))
    )
    return math.exp(log_e)


@dataclass
class WitnessReport:
    """Outcome of checking that witnesses really force persistent homology."""

    k: int
    p1: float
    p2: float
    count: int
    rank: Optional[int]
    required_ratio: float
    max_ratio: Optional[float]
    passed: bool
    failures: List[str]


def recheck_witness(ef: EdgeFiltration, w: CrossPolytopeWitness, k: int) -> List[str]:
    """Re-verify a witness edge by edge, independently of the counters.

    The maximality recheck is stricter than condition (3): it scans every
    vertex outside U (V included), so a common neighbor hiding inside Y
    would be surfaced rather than assumed away.
    """
    problems = []
    u, v, p1, p2 = w.u, w.v, w.p1, w.p2
    if tuple(sorted(w.u + w.v)) != w.y or len(w.y) != 2 * k + 2:
        problems.append(f"witness {w.y} is not the sorted split of U and V")
    if max(u) >= min(v):
        problems.append(f"U {u} does not precede V {v}")
    for i, a in enumerate(u):
        for j, b in enumerate(u):
            if i < j and ef.weight(a, b) > p1:
                problems.append(f"U edge ({a},{b}) missing at p1")
    for i, a in enumerate(v):
        for j, b in enumerate(v):
            if i < j and ef.weight(a, b) > p1:
                problems.append(f"V edge ({a},{b}) missing at p1")
    for i, a in enumerate(u):
        for j, b in enumerate(v):
            if i != j and ef.weight(a, b) > p1:
                problems.append(f"cross edge ({a},{b}) missing at p1")
            if i == j and ef.weight(a, b) <= p2:
                problems.append(f"antipodal pair ({a},{b}) adjacent at p2")
    for x in range(1, ef.n + 1):
        if x in u:
            continue
        if all(ef.weight(x, a) <= p2 for a in u):
            problems.append(f"vertex {x} is a common neighbor of U at p2")
    return problems


def check_witness_implies_rank(
    ef: EdgeFiltration,
    k: int,
    p1: float,
    p2: float,
    dg: PersistenceDiagram,
) -> WitnessReport:
    """Verify that a positive witness count forces the inclusion-induced map
    H_k(p1) -> H_k(p2) to be nontrivial, hence a maximal ratio >= p2/p1.

    Vacuously passing when the count is zero.  The diagram must cover p2 and
    hold no degree-k classes censored at the cap."""
    if dg.w_cap < p2:
        raise CapInsufficientError(f"diagram cap {dg.w_cap} below p2={p2}")
    if dg.has_at_cap(k):
        raise CapInsufficientError(
            f"degree {k} has classes unpaired at w_cap={dg.w_cap:g}"
        )
    res = count_cross_polytope_cycles(ef, k, p1, p2, collect_witnesses=True)
    failures: List[str] = []
    rank = None
    max_ratio = None
    required = p2 / p1
    if res.count > 0:
        for w in res.witnesses:
            for problem in recheck_witness(ef, w, k):
                failures.append(f"witness {w.y}: {problem}")
        rank = rank_invariant(dg, RankQuery(k, p1, p2))
        if rank < 1:
            failures.append(
                f"count={res.count} but rank over ({fmt17(p1)},{fmt17(p2)}) is 0"
            )
        mp = max_persistence(dg, k)
        max_ratio = mp.max_ratio
        if mp.empty or mp.max_ratio < required:
            failures.append(
                f"max ratio {max_ratio} below required {fmt17(required)}"
            )
    return WitnessReport(
        k, p1, p2, res.count, rank, required, max_ratio, not failures, failures
    )


def _cliques_of_size(adj: np.ndarray, size: int):
    """Yield every `size`-clique of a boolean adjacency matrix as a sorted
    tuple of 0-based vertices, by ordered expansion."""
    n = adj.shape[0]
    if size == 1:
        for v in range(n):
            yield (v,)
        return
    idx = np.arange(n)
    higher = [adj[v] & (idx > v) for v in range(n)]

    def grow(members: Tuple[int, ...], mask) -> object:
        if len(members) == size:
            yield members
            return
        for x in np.flatnonzero(mask):
            x = int(x)
            yield from grow(members + (x,), mask & higher[x])

    for v in range(n):
        yield from grow((v,), higher[v])


def write_counts_csv(rows, path) -> None:
    """Sweep rows `n,k,p1,p2,sample_index,N_k`."""
    with open(path, "w", newline="\n") as fh:
        fh.write("n,k,p1,p2,sample_index,N_k\n")
        for n, k, p1, p2, i, c in rows:
            fh.write(f"{n},{k},{fmt17(p1)},{fmt17(p2)},{i},{c}\n")


def write_counts_summary_csv(rows, path) -> None:
    """Summary rows `n,k,p1,p2,samples,mean_N,var_N,expected_N` (sample
    variance, ddof=1)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("n,k,p1,p2,samples,mean_N,var_N,expected_N\n")
        for n, k, p1, p2, s, mean, var, exp_n in rows:
            fh.write(
                f"{n},{k},{fmt17(p1)},{fmt17(p2)},{s},"
                f"{fmt17(mean)},{fmt17(var)},{fmt17(exp_n)}\n"
            )
