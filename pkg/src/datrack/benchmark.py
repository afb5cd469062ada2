"""Timing harness comparing the two candidate re-ranking paths.

The factored path folds the weighted distractor average into the query once,
then scores each candidate with a single correlation, so its per-candidate
cost should not grow with the number of distractors. The direct path scores
every candidate against every distractor. Both are timed on the same
synthetic workload; the one-off fold is timed separately.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .corr import FeatureMap
from .embed import BBox
from .proposals import Proposal
from .rerank import DistractorSet, RerankConfig, fold_query, rerank_direct, score_candidates

DEFAULT_N_VALUES = (1, 4, 16, 64)
MIN_REPS = 31


@dataclass(frozen=True)
class BenchRow:
    n_distractors: int
    fold_ms: float
    factored_ms: float
    direct_ms: float


def _random_map(rng: np.random.Generator, h: int, w: int, c: int) -> FeatureMap:
    return FeatureMap(rng.standard_normal((h, w, c)))


def _time_median_ms(fn: Callable[[], object], reps: int, min_rep_s: float = 2e-3) -> float:
    fn()  # warm-up
    t0 = time.perf_counter()
    fn()
    est = time.perf_counter() - t0
    loops = max(1, min(1000, math.ceil(min_rep_s / max(est, 1e-9))))
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        samples.append((time.perf_counter() - t0) / loops)
    return float(np.median(samples)) * 1e3


def bench_rerank(n_values: tuple[int, ...] = DEFAULT_N_VALUES, reps: int = MIN_REPS,
                 n_candidates: int = 64, channels: int = 32, seed: int = 7) -> list[BenchRow]:
    """Median wall time per scoring pass for each distractor count."""
    if reps < 1:
        raise ValueError(f"reps must be positive, got {reps}")
    rng = np.random.default_rng(seed)
    cfg = RerankConfig()
    side = 6
    exemplar = _random_map(rng, side, side, channels)
    candidates = [
        Proposal(BBox(0.0, 0.0, 64.0, 64.0), 0.0, (0, 0, 0),
                 _random_map(rng, side, side, channels))
        for _ in range(n_candidates)
    ]
    rows = []
    for n in n_values:
        dset = DistractorSet([(_random_map(rng, side, side, channels), 1.0) for _ in range(n)])
        query = fold_query(exemplar, dset, cfg.alpha_hat)
        fold_ms = _time_median_ms(lambda: fold_query(exemplar, dset, cfg.alpha_hat), reps)
        factored_ms = _time_median_ms(lambda: score_candidates(query, candidates, 0.0), reps)
        direct_ms = _time_median_ms(lambda: rerank_direct(exemplar, dset, candidates, cfg), reps)
        rows.append(BenchRow(n, fold_ms, factored_ms, direct_ms))
    return rows


def bench_table(rows: list[BenchRow]) -> str:
    header = f"{'n_distractors':>13}  {'fold_ms':>10}  {'factored_ms':>12}  {'direct_ms':>10}"
    lines = [header]
    for r in rows:
        lines.append(f"{r.n_distractors:>13d}  {r.fold_ms:>10.4f}  "
                     f"{r.factored_ms:>12.4f}  {r.direct_ms:>10.4f}")
    return "\n".join(lines)


def bench_metrics(rows: list[BenchRow]) -> dict[str, float]:
    out: dict[str, float] = {}
    for r in rows:
        out[f"fold_ms_n{r.n_distractors}"] = r.fold_ms
        out[f"factored_ms_n{r.n_distractors}"] = r.factored_ms
        out[f"direct_ms_n{r.n_distractors}"] = r.direct_ms
    return out
