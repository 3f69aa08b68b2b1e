"""Reproducible experiment harness.

Every sample is a pure function of (master_seed, sample_index): workers
never share state, aggregation is a deterministic fold keyed by sample
index, and all emitted CSV/JSON is byte-identical across runs regardless of
the worker count.  Execution-only settings (workers, out_dir) are therefore
kept out of the summary echo.

Experiment kinds:
  max-persistence  maximal death/birth ratios per sample (figure data)
  special-cycles   cross-polytope witness counts over a (p1, p2) grid
  rank-sweep       inclusion-induced ranks over a (p1, p2) grid
  betti-curve      Betti numbers along a threshold grid vs. expectation
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

from .crosspoly import (
    count_cross_polytope_cycles,
    expected_cross_polytope_cycles,
    write_counts_csv,
    write_counts_summary_csv,
)
from .errors import (
    CapEscalationError,
    EmptyHistogramError,
    InvalidParameterError,
)
from .filtration import EdgeFiltration, sample_filtration
from .flag import adaptive_cap, build_flag_filtration
from .persistence import PersistenceDiagram, betti_at, compute_persistence
from .serialize import fmt17, write_canonical_json
from .stats import (
    MaxPersistenceResult,
    expected_betti,
    max_persistence,
    max_persistence_csv_row,
    thresholds,
    write_max_persistence_csv,
)

KINDS = ("max-persistence", "special-cycles", "rank-sweep", "betti-curve")


@dataclass
class ExperimentConfig:
    kind: str
    n: int
    k: int
    samples: int
    master_seed: int = 0
    eps: float = 0.5
    p_grid: Optional[List[Tuple[float, float]]] = None
    cap_eps: float = 0.5
    cap_growth: float = 1.5
    cap_max_retries: int = 8
    bins: int = 30
    characteristic: int = 2
    band_low: Optional[float] = None
    band_high: Optional[float] = None
    out_dir: str = "out"
    workers: int = 1

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown kind {self.kind!r}; one of {KINDS}")
        if self.n < 1:
            raise InvalidParameterError("n must be positive")
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if self.samples < 1:
            raise InvalidParameterError("samples must be >= 1")
        if self.bins < 1:
            raise InvalidParameterError("bins must be >= 1")
        if self.workers < 1:
            raise InvalidParameterError("workers must be >= 1")
        if self.cap_growth <= 1.0:
            raise InvalidParameterError("cap_growth must exceed 1")
        if self.p_grid is not None:
            for p1, p2 in self.p_grid:
                if not 0.0 < p1 <= p2 <= 1.0:
                    raise InvalidParameterError(f"bad grid pair ({p1}, {p2})")

    # --- JSON round trip -------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        if d["p_grid"] is not None:
            d["p_grid"] = [[p1, p2] for p1, p2 in d["p_grid"]]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("p_grid") is not None:
            d["p_grid"] = [(float(a), float(b)) for a, b in d["p_grid"]]
        return cls(**d)

    def experiment_fields(self) -> dict:
        """Config echo for summaries: everything that identifies the
        experiment, nothing that only steers execution."""
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("workers")
        return d


def default_p_grid(n: int, k: int, eps: float) -> List[Tuple[float, float]]:
    """Adjacent pairs of 8 geometrically spaced thresholds spanning the
    nontrivial window [birth_scale, death_scale] (capped at 1)."""
    lo, hi = thresholds(n, k, eps)
    hi = min(hi, 1.0)
    if lo >= hi:
        raise InvalidParameterError(f"degenerate window [{lo}, {hi}] for n={n}, k={k}")
    pts = [lo * (hi / lo) ** (i / 7.0) for i in range(8)]
    return [(pts[i], pts[i + 1]) for i in range(7)]


def histogram(values: Sequence[float], bins: int) -> Tuple[List[float], List[int]]:
    """Equal-width histogram over [min, max]; bins are right-open except the
    last, which is closed.  A degenerate range (all values equal) is widened
    symmetrically by a machine-epsilon-scaled margin so all mass lands in
    one bin.  Returns (edges of length bins+1, counts of length bins)."""
    if bins < 1:
        raise InvalidParameterError("bins must be >= 1")
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyHistogramError("cannot bin an empty value list")
    lo, hi = min(vals), max(vals)
    if lo == hi:
        margin = max(abs(lo), 1.0) * 2.0**-52
        lo, hi = lo - margin, hi + margin
    width = hi - lo
    edges = [lo + i * width / bins for i in range(bins + 1)]
    counts = [0] * bins
    for v in vals:
        idx = int((v - lo) * bins / width)
        if idx >= bins:
            idx = bins - 1
        counts[idx] += 1
    return edges, counts


def compute_with_cap_policy(
    ef: EdgeFiltration,
    k_max: int,
    characteristic: int = 2,
    cap_eps: float = 0.5,
    cap_growth: float = 1.5,
    cap_max_retries: int = 8,
    min_cap: float = 0.0,
) -> Tuple[PersistenceDiagram, float, int]:
    """Weight-cap retry protocol.

    Start from the theoretical death cutoff (adaptive_cap), recompute with a
    cap_growth-times larger cap while any class of degree 1..k_max is still
    unpaired, and give up (CapEscalationError) when the retry budget is
    exhausted before reaching cap 1.  Computing the full filtration to
    weight 1 is unaffordable at experiment sizes - the final complex is the
    whole simplex - and the cutoff leaves unpaired classes only rarely, so
    escalation terminates almost immediately in practice.
    """
    cap = adaptive_cap(ef.n, k_max, cap_eps) if ef.n >= 2 else 1.0
    cap = min(1.0, max(cap, min_cap))
    retries = 0
    while True:
        ff = build_flag_filtration(ef, k_max + 1, cap)
        dg = compute_persistence(ff, k_max, characteristic)
        if not any(dg.has_at_cap(d) for d in range(1, k_max + 1)):
            return dg, cap, retries
        if cap >= 1.0:
            raise CapEscalationError("classes unpaired even at cap 1 (unexpected)")
        if retries >= cap_max_retries:
            raise CapEscalationError(
                f"cap escalation exhausted after {retries} retries (cap={cap:g})"
            )
        cap = min(1.0, cap * cap_growth)
        retries += 1


@dataclass
class SampleResult:
    """Per-sample outcome; independent of execution order and worker count.

    wall_time is a diagnostic only - it is excluded from comparisons and
    never serialized, because emitted files must be reproducible.
    """

    sample_index: int
    status: str  # "ok" | "cap-failed"
    cap_used: Optional[float] = None
    retries: int = 0
    max_by_degree: Optional[Dict[int, MaxPersistenceResult]] = None
    counts: Optional[List[Tuple[float, float, int]]] = None
    ranks: Optional[List[Tuple[float, float, int]]] = None
    betti: Optional[List[Tuple[float, int, float]]] = None
    wall_time: float = field(default=0.0, compare=False)


def _grid_for(cfg: ExperimentConfig) -> List[Tuple[float, float]]:
    if cfg.p_grid is not None:
        return cfg.p_grid
    return default_p_grid(cfg.n, cfg.k, cfg.eps)


def _run_sample(cfg: ExperimentConfig, index: int) -> SampleResult:
    start = time.perf_counter()
    ef = sample_filtration(cfg.n, cfg.master_seed, index)
    try:
        if cfg.kind == "max-persistence":
            dg, cap, retries = compute_with_cap_policy(
                ef,
                cfg.k,
                cfg.characteristic,
                cfg.cap_eps,
                cfg.cap_growth,
                cfg.cap_max_retries,
            )
            res = SampleResult(
                index,
                "ok",
                cap,
                retries,
                max_by_degree={d: max_persistence(dg, d) for d in range(1, cfg.k + 1)},
            )
        elif cfg.kind == "special-cycles":
            grid = _grid_for(cfg)
            counts = [
                (p1, p2, count_cross_polytope_cycles(ef, cfg.k, p1, p2).count)
                for p1, p2 in grid
            ]
            res = SampleResult(index, "ok", counts=counts)
        elif cfg.kind == "rank-sweep":
            grid = _grid_for(cfg)
            from .stats import RankQuery, rank_invariant

            dg, cap, retries = compute_with_cap_policy(
                ef,
                cfg.k,
                cfg.characteristic,
                cfg.cap_eps,
                cfg.cap_growth,
                cfg.cap_max_retries,
                min_cap=max(p2 for _, p2 in grid),
            )
            ranks = [
                (p1, p2, rank_invariant(dg, RankQuery(cfg.k, p1, p2)))
                for p1, p2 in grid
            ]
            res = SampleResult(index, "ok", cap, retries, ranks=ranks)
        elif cfg.kind == "betti-curve":
            lo, hi = thresholds(cfg.n, cfg.k, cfg.eps)
            hi = min(hi, 1.0)
            grid_t = [lo * (hi / lo) ** (i / 15.0) for i in range(16)]
            dg, cap, retries = compute_with_cap_policy(
                ef,
                cfg.k,
                cfg.characteristic,
                cfg.cap_eps,
                cfg.cap_growth,
                cfg.cap_max_retries,
                min_cap=hi,
            )
            curve = [
                (t, betti_at(dg, cfg.k, t), expected_betti(cfg.n, cfg.k, t))
                for t in grid_t
            ]
            res = SampleResult(index, "ok", cap, retries, betti=curve)
        else:  # pragma: no cover - validate() rejects unknown kinds
            raise InvalidParameterError(cfg.kind)
    except CapEscalationError:
        res = SampleResult(index, "cap-failed")
    res.wall_time = time.perf_counter() - start
    return res


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    results: List[SampleResult]
    aggregates: dict
    files: Dict[str, str]


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """Execute cfg.samples independent samples and write the result files.

    Outputs land in cfg.out_dir (created if needed):
      max-persistence: samples.csv, hist_mtilde.csv, hist_ratio.csv, summary.json
      special-cycles:  counts.csv, counts_summary.csv, summary.json
      rank-sweep:      ranks.csv, summary.json
      betti-curve:     betti.csv, summary.json
    """
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    run_one = partial(_run_sample, cfg)
    if cfg.workers > 1:
        chunk = max(1, cfg.samples // (cfg.workers * 8))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_one, range(cfg.samples), chunksize=chunk))
    else:
        results = [run_one(i) for i in range(cfg.samples)]
    results.sort(key=lambda r: r.sample_index)

    writers = {
        "max-persistence": _write_max_persistence,
        "special-cycles": _write_special_cycles,
        "rank-sweep": _write_rank_sweep,
        "betti-curve": _write_betti_curve,
    }
    aggregates, files = writers[cfg.kind](cfg, results)
    return ExperimentSummary(cfg, results, aggregates, files)


def _stats_block(values: List[float]) -> Optional[dict]:
    if not values:
        return None
    s = sorted(values)
    m = len(s)
    mean = sum(s) / m
    median = s[m // 2] if m % 2 else 0.5 * (s[m // 2 - 1] + s[m // 2])
    var = sum((v - mean) ** 2 for v in s) / (m - 1) if m > 1 else 0.0
    return {"count": m, "mean": mean, "median": median, "std": math.sqrt(var)}


def _hist_block(values: List[float], bins: int) -> Optional[dict]:
    if not values:
        return None
    edges, counts = histogram(values, bins)
    return {"edges": edges, "counts": counts}


def _write_hist_csv(block: Optional[dict], path: str) -> None:
    if block is None:
        return
    with open(path, "w", newline="\n") as fh:
        fh.write("bin_left,bin_right,count\n")
        for i, c in enumerate(block["counts"]):
            fh.write(
                f"{fmt17(block['edges'][i])},{fmt17(block['edges'][i + 1])},{c}\n"
            )


def _write_max_persistence(cfg, results):
    rows = []
    mtilde: List[float] = []
    ratio_f: List[float] = []
    none_tally = 0
    cap_failed = 0
    for r in results:
        if r.status != "ok":
            cap_failed += 1
            rows.append(
                max_persistence_csv_row(
                    r.sample_index,
                    cfg.n,
                    cfg.k,
                    MaxPersistenceResult(cfg.k, None, None, None, None),
                )
            )
            continue
        res = r.max_by_degree[cfg.k]
        rows.append(max_persistence_csv_row(r.sample_index, cfg.n, cfg.k, res))
        if res.empty:
            none_tally += 1
        else:
            mtilde.append(res.normalized)
            ratio_f.append(res.scale_ratio)
    samples_path = os.path.join(cfg.out_dir, "samples.csv")
    write_max_persistence_csv(rows, samples_path)
    hist_m = _hist_block(mtilde, cfg.bins)
    hist_r = _hist_block(ratio_f, cfg.bins)
    hist_m_path = os.path.join(cfg.out_dir, "hist_mtilde.csv")
    hist_r_path = os.path.join(cfg.out_dir, "hist_ratio.csv")
    _write_hist_csv(hist_m, hist_m_path)
    _write_hist_csv(hist_r, hist_r_path)
    aggregates = {
        "experiment": cfg.experiment_fields(),
        "tallies": {
            "samples": cfg.samples,
            "ok": cfg.samples - cap_failed,
            "none": none_tally,
            "cap_failed": cap_failed,
        },
        "m_tilde": _stats_block(mtilde),
        "ratio_f": _stats_block(ratio_f),
        "hist_m_tilde": hist_m,
        "hist_ratio_f": hist_r,
        "reference": {
            "normalized_limit": 1.0 / (cfg.k * (cfg.k + 1)),
            "band_low": cfg.band_low,
            "band_high": cfg.band_high,
        },
    }
    summary_path = os.path.join(cfg.out_dir, "summary.json")
    write_canonical_json(aggregates, summary_path)
    files = {
        "samples": samples_path,
        "hist_mtilde": hist_m_path,
        "hist_ratio": hist_r_path,
        "summary": summary_path,
    }
    return aggregates, files


def _write_special_cycles(cfg, results):
    grid = _grid_for(cfg)
    rows = []
    per_pair: Dict[Tuple[float, float], List[int]] = {pair: [] for pair in grid}
    for r in results:
        for p1, p2, c in r.counts:
            rows.append((cfg.n, cfg.k, p1, p2, r.sample_index, c))
            per_pair[(p1, p2)].append(c)
    counts_path = os.path.join(cfg.out_dir, "counts.csv")
    write_counts_csv(rows, counts_path)
    summary_rows = []
    pair_stats = []
    for (p1, p2), cs in per_pair.items():
        m = len(cs)
        mean = sum(cs) / m
        var = sum((c - mean) ** 2 for c in cs) / (m - 1) if m > 1 else 0.0
        expected = expected_cross_polytope_cycles(cfg.n, cfg.k, p1, p2)
        summary_rows.append((cfg.n, cfg.k, p1, p2, m, mean, var, expected))
        stderr = math.sqrt(var / m) if m else 0.0
        pair_stats.append(
            {
                "p1": p1,
                "p2": p2,
                "samples": m,
                "mean": mean,
                "var": var,
                "expected": expected,
                "stderr": stderr,
            }
        )
    summary_csv_path = os.path.join(cfg.out_dir, "counts_summary.csv")
    write_counts_summary_csv(summary_rows, summary_csv_path)
    aggregates = {
        "experiment": cfg.experiment_fields(),
        "tallies": {"samples": cfg.samples, "ok": len(results), "cap_failed": 0},
        "pairs": pair_stats,
    }
    summary_path = os.path.join(cfg.out_dir, "summary.json")
    write_canonical_json(aggregates, summary_path)
    return aggregates, {
        "counts": counts_path,
        "counts_summary": summary_csv_path,
        "summary": summary_path,
    }


def _write_rank_sweep(cfg, results):
    rows = []
    per_pair: Dict[Tuple[float, float], List[int]] = {}
    cap_failed = 0
    for r in results:
        if r.status != "ok":
            cap_failed += 1
            continue
        for p1, p2, rank in r.ranks:
            rows.append((p1, p2, r.sample_index, rank))
            per_pair.setdefault((p1, p2), []).append(rank)
    ranks_path = os.path.join(cfg.out_dir, "ranks.csv")
    with open(ranks_path, "w", newline="\n") as fh:
        fh.write("n,k,p1,p2,sample_index,rank\n")
        for p1, p2, i, rank in rows:
            fh.write(f"{cfg.n},{cfg.k},{fmt17(p1)},{fmt17(p2)},{i},{rank}\n")
    pair_stats = []
    for (p1, p2), rs in sorted(per_pair.items()):
        mean = sum(rs) / len(rs)
        pair_stats.append(
            {
                "p1": p1,
                "p2": p2,
                "samples": len(rs),
                "mean_rank": mean,
                "expected_betti_at_p1": expected_betti(cfg.n, cfg.k, p1)
                if 0 < p1 < 1
                else None,
            }
        )
    aggregates = {
        "experiment": cfg.experiment_fields(),
        "tallies": {
            "samples": cfg.samples,
            "ok": cfg.samples - cap_failed,
            "cap_failed": cap_failed,
        },
        "pairs": pair_stats,
    }
    summary_path = os.path.join(cfg.out_dir, "summary.json")
    write_canonical_json(aggregates, summary_path)
    return aggregates, {"ranks": ranks_path, "summary": summary_path}


def _write_betti_curve(cfg, results):
    rows = []
    per_t: Dict[float, List[int]] = {}
    cap_failed = 0
    for r in results:
        if r.status != "ok":
            cap_failed += 1
            continue
        for t, b, e in r.betti:
            rows.append((t, r.sample_index, b, e))
            per_t.setdefault(t, []).append(b)
    betti_path = os.path.join(cfg.out_dir, "betti.csv")
    with open(betti_path, "w", newline="\n") as fh:
        fh.write("n,k,t,sample_index,betti,expected\n")
        for t, i, b, e in rows:
            fh.write(f"{cfg.n},{cfg.k},{fmt17(t)},{i},{b},{fmt17(e)}\n")
    curve = [
        {
            "t": t,
            "mean_betti": sum(bs) / len(bs),
            "expected": expected_betti(cfg.n, cfg.k, t),
        }
        for t, bs in sorted(per_t.items())
    ]
    aggregates = {
        "experiment": cfg.experiment_fields(),
        "tallies": {
            "samples": cfg.samples,
            "ok": cfg.samples - cap_failed,
            "cap_failed": cap_failed,
        },
        "curve": curve,
    }
    summary_path = os.path.join(cfg.out_dir, "summary.json")
    write_canonical_json(aggregates, summary_path)
    return aggregates, {"betti": betti_path, "summary": summary_path}
