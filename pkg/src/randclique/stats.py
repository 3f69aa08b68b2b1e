"""Summary statistics of persistence diagrams.

The quantity of interest is multiplicative persistence: a degree-k class
born at x and dying at y scores y/x.  max_persistence reports the maximum
over the degree-k diagram together with two normalizations:

  * normalized  = log(max ratio) / log(n), which concentrates near
    1/(k(k+1)) for large n;
  * scale_ratio = max ratio / reference_scale(n, k), the conjectured sharp
    scale n^(1/(k(k+1))) (log n)^(1/(k+1)).

Natural logarithms throughout; `normalized` itself is base-invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import CapInsufficientError, InvalidParameterError
from .persistence import PersistenceDiagram, betti_at
from .serialize import fmt17


@dataclass(frozen=True)
class MaxPersistenceResult:
    """Maximal death/birth ratio over one degree of a diagram.

    All payload fields are None when the degree-k diagram has no finite
    pairs (reported explicitly rather than coerced to 1).
    """

    k: int
    max_ratio: Optional[float]
    witness: Optional[Tuple[float, float]]
    normalized: Optional[float]
    scale_ratio: Optional[float]

    @property
    def empty(self) -> bool:
        return self.max_ratio is None


@dataclass(frozen=True)
class RankQuery:
    """Pair of thresholds p1 <= p2 for an inclusion-induced rank question."""

    k: int
    p1: float
    p2: float

    def __post_init__(self):
        if not 0.0 <= self.p1 <= self.p2:
            raise InvalidParameterError("need 0 <= p1 <= p2")


def max_persistence(dg: PersistenceDiagram, k: int) -> MaxPersistenceResult:
    """Maximum death/birth over the finite degree-k pairs.

    Ties on the ratio break toward the smallest birth, then smallest death,
    so the witness pair is reproducible.  Raises CapInsufficientError when
    the degree holds classes censored at the cap: their true deaths are
    unknown, so the maximum is not yet determined and the caller must
    escalate the cap first.
    """
    if k < 1:
        raise InvalidParameterError("multiplicative persistence needs k >= 1")
    if dg.has_at_cap(k):
        raise CapInsufficientError(
            f"degree {k} has classes unpaired at w_cap={dg.w_cap:g}; escalate the cap"
        )
    finite = [p for p in dg.pairs(k) if p.finite]
    if not finite:
        return MaxPersistenceResult(k, None, None, None, None)
    best = min(finite, key=lambda p: (-(p.death / p.birth), p.birth, p.death))
    ratio = best.death / best.birth
    normalized = math.log(ratio) / math.log(dg.n) if dg.n >= 2 else None
    scale = reference_scale(dg.n, k) if dg.n >= 2 else None
    return MaxPersistenceResult(
        k,
        ratio,
        (best.birth, best.death),
        normalized,
        ratio / scale if scale else None,
    )


def reference_scale(n: int, k: int) -> float:
    """n^(1/(k(k+1))) * (log n)^(1/(k+1)), the conjectured scale of the
    maximal degree-k ratio (natural log)."""
    if n < 2:
        raise InvalidParameterError("need n >= 2 so log n > 0")
    if k < 1:
        raise InvalidParameterError("need k >= 1")
    return n ** (1.0 / (k * (k + 1))) * math.log(n) ** (1.0 / (k + 1))


def rank_invariant(dg: PersistenceDiagram, q: RankQuery) -> int:
    """Rank of the inclusion-induced map on degree-k homology from threshold
    p1 to p2: the number of classes born by p1 and still alive after p2
    (unpaired classes count as death = +inf)."""
    if q.p2 > dg.w_cap:
        raise InvalidParameterError(
            f"p2={q.p2} exceeds w_cap={dg.w_cap}; rank beyond the cap is unknown"
        )
    return sum(1 for p in dg.pairs(q.k) if p.birth <= q.p1 and p.death > q.p2)


def expected_betti(n: int, k: int, p: float) -> float:
    """Leading-order expected degree-k Betti number of the clique complex at
    edge probability p: C(n, k+1) * p^C(k+1, 2)."""
    if k < 1:
        raise InvalidParameterError("need k >= 1")
    if n < k + 2:
        raise InvalidParameterError("need n >= k + 2")
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("need 0 < p < 1")
    return math.comb(n, k + 1) * p ** math.comb(k + 1, 2)


def thresholds(n: int, k: int, eps: float) -> Tuple[float, float]:
    """(birth_scale, death_scale) for degree-k homology: n^(-1/k) is where
    degree-k classes start to appear, ((k/2+1+eps) log n / n)^(1/(k+1)) is
    where they are all gone.  Used to plan (p1, p2) grids inside the
    nontrivial window."""
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    if k < 1:
        raise InvalidParameterError("need k >= 1")
    birth_scale = n ** (-1.0 / k)
    death_scale = ((k / 2 + 1 + eps) * math.log(n) / n) ** (1.0 / (k + 1))
    return birth_scale, death_scale


def diagonal_rank_equals_betti(dg: PersistenceDiagram, k: int, t: float) -> bool:
    """rank_invariant(k, (t, t)) == betti_at(k, t) (diagnostic helper)."""
    return rank_invariant(dg, RankQuery(k, t, t)) == betti_at(dg, k, t)


def max_persistence_csv_row(
    sample_index: int, n: int, k: int, res: MaxPersistenceResult
) -> str:
    """One `sample_index,n,k,M_k,M_tilde,ratio_f,birth,death` row; empty
    results print nan in every value column."""
    if res.empty:
        vals = ["nan"] * 5
    else:
        vals = [
            fmt17(res.max_ratio),
            fmt17(res.normalized),
            fmt17(res.scale_ratio),
            fmt17(res.witness[0]),
            fmt17(res.witness[1]),
        ]
    return f"{sample_index},{n},{k}," + ",".join(vals)


def write_max_persistence_csv(rows: List[str], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("sample_index,n,k,M_k,M_tilde,ratio_f,birth,death\n")
        for row in rows:
            fh.write(row + "\n")
