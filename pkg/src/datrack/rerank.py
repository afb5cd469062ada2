"""Distractor-aware candidate re-ranking and incremental template learning.

Scoring a candidate against the exemplar minus a weighted distractor average
can be done two ways: subtract per-candidate similarity terms one distractor
at a time (direct), or fold the weighted distractor mass into a single query
template once and correlate that (factored). Correlation is linear in the
template, so both orderings agree; the factored scoring loop does constant
work per candidate regardless of how many distractors were folded.

Across frames, the query is maintained as running weighted sums (numerators
and denominators kept separately), so absorbing a frame's winner and its
distractors is O(frame's distractors), never a replay of history.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corr import FeatureMap, linear_combine, xcorr_values
from .errors import DimensionError, NoCandidatesError, UninitializedError
from .proposals import Proposal


@dataclass(frozen=True)
class RerankConfig:
    alpha_hat: float = 0.5           # weight of the pooled distractor term
    default_alpha_i: float = 1.0     # per-distractor weight
    distractor_threshold: float = 0.2  # h, applied to window-mixed scores
    eta: float = 0.01                # template learning rate
    bias: float = 0.0                # constant similarity offset

    def __post_init__(self):
        if self.alpha_hat < 0:
            raise ValueError(f"alpha_hat must be >= 0, got {self.alpha_hat}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must be in (0, 1), got {self.eta}")


@dataclass
class DistractorSet:
    """Weighted distractor embeddings collected from NMS survivors."""

    entries: list[tuple[FeatureMap, float]] = field(default_factory=list)

    def __post_init__(self):
        shapes = {fm.data.shape for fm, _ in self.entries}
        if len(shapes) > 1:
            raise DimensionError(f"distractor embeddings disagree on shape: {shapes}")
        for _, alpha in self.entries:
            if alpha < 0:
                raise ValueError(f"distractor weight must be >= 0, got {alpha}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def alpha_total(self) -> float:
        return float(sum(a for _, a in self.entries))


def _embedding(p: Proposal) -> FeatureMap:
    if p.embedding is None:
        raise ValueError(f"proposal at cell {p.cell} has no embedding")
    return p.embedding


def _pair_score(a: FeatureMap, b: FeatureMap, bias: float) -> float:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"map shapes differ: {a.data.shape} vs {b.data.shape}")
    return float(xcorr_values(a.data, b.data)[0, 0]) + bias


def _argbest(candidates: Sequence[Proposal], scores: Sequence[float]) -> Proposal:
    best = max(scores)
    contenders = [i for i, s in enumerate(scores) if s == best]
    return candidates[min(contenders, key=lambda i: candidates[i].cell)]


def select_target_and_distractors(
    survivors: Sequence[Proposal], h: float, scores: Sequence[float] | None = None
) -> tuple[Proposal, list[Proposal]]:
    """Split NMS survivors into the best-scored target and the distractors.

    The target is the survivor with the highest stored score (ties toward
    the lower cell). Distractors are every other survivor whose score is
    strictly above h; pass `scores` to run that objectness test on a
    different measure than the stored ranking score. The tracker ranks by
    the motion-weighted response but tests membership on raw appearance: a
    lookalike briefly outshining an occluded target must stay labelled as a
    distractor, because promoting it hands it the template update.
    """
    if not survivors:
        raise NoCandidatesError("no surviving proposals to select from")
    if scores is None:
        scores = [p.score for p in survivors]
    elif len(scores) != len(survivors):
        raise ValueError(f"{len(scores)} scores for {len(survivors)} survivors")
    target = _argbest(survivors, [p.score for p in survivors])
    distractors = [p for p, s in zip(survivors, scores) if p is not target and s > h]
    return target, distractors


def distractor_set_from(proposals: Sequence[Proposal], default_alpha: float = 1.0) -> DistractorSet:
    return DistractorSet([(_embedding(p), default_alpha) for p in proposals])


def rerank_direct(exemplar: FeatureMap, distractors: DistractorSet,
                  candidates: Sequence[Proposal], cfg: RerankConfig) -> tuple[Proposal, list[float]]:
    """Score candidates by per-distractor subtraction; n similarity terms each."""
    if not candidates:
        raise NoCandidatesError("rerank needs at least one candidate")
    total = distractors.alpha_total
    scores = []
    for p in candidates:
        emb = _embedding(p)
        s = _pair_score(exemplar, emb, cfg.bias)
        if len(distractors) and total > 0:
            acc = 0.0
            for dmap, alpha in distractors.entries:
                acc += alpha * _pair_score(dmap, emb, cfg.bias)
            s -= cfg.alpha_hat * acc / total
        scores.append(s)
    return _argbest(candidates, scores), scores


def fold_query(exemplar: FeatureMap, distractors: DistractorSet, alpha_hat: float) -> FeatureMap:
    """Collapse exemplar minus the weighted distractor average into one map."""
    total = distractors.alpha_total
    if not len(distractors) or total <= 0:
        return exemplar
    terms = [(exemplar, 1.0)]
    terms += [(dmap, -alpha_hat * alpha / total) for dmap, alpha in distractors.entries]
    return linear_combine(terms)


def score_candidates(query: FeatureMap, candidates: Sequence[Proposal], bias: float) -> list[float]:
    """One correlation per candidate against a prebuilt query."""
    return [_pair_score(query, _embedding(p), bias) for p in candidates]


def rerank_factored(exemplar: FeatureMap, distractors: DistractorSet,
                    candidates: Sequence[Proposal], cfg: RerankConfig) -> tuple[Proposal, list[float]]:
    """Score candidates against the folded query; constant work per candidate.

    With no distractors this reduces exactly to plain exemplar similarity
    (bias included). With distractors the bias terms of the subtracted
    average partially cancel, leaving scores offset from the direct form by
    the constant bias * (1 - alpha_hat); the ranking is identical.
    """
    if not candidates:
        raise NoCandidatesError("rerank needs at least one candidate")
    if not len(distractors) or distractors.alpha_total <= 0:
        scores = score_candidates(exemplar, candidates, cfg.bias)
    else:
        query = fold_query(exemplar, distractors, cfg.alpha_hat)
        scores = score_candidates(query, candidates, 0.0)
    return _argbest(candidates, scores), scores


def beta_weight(t: int, eta: float) -> float:
    """Accumulation weight for the t-th update: sum of (eta/(1-eta))^i, i<t."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta}")
    r = eta / (1.0 - eta)
    if r == 1.0:
        return float(t)
    return (1.0 - r ** t) / (1.0 - r)


@dataclass(frozen=True, eq=False)
class CompositeTemplates:
    """Running weighted sums for the learned query template.

    target_num / beta_sum is the weighted target average; distractor_num /
    distractor_den is the pooled, alpha_hat-scaled distractor average.
    """

    target_num: np.ndarray
    beta_sum: float
    distractor_num: np.ndarray
    distractor_den: float
    frames: int

    @classmethod
    def empty(cls, height: int, width: int, channels: int) -> "CompositeTemplates":
        shape = (height, width, channels)
        return cls(np.zeros(shape), 0.0, np.zeros(shape), 0.0, 0)


def update_templates(ct: CompositeTemplates, z_t: FeatureMap,
                     distractors: DistractorSet, cfg: RerankConfig) -> CompositeTemplates:
    """Absorb one frame's selected target and distractors into the sums."""
    if z_t.data.shape != ct.target_num.shape:
        raise DimensionError(
            f"template shape {z_t.data.shape} != accumulator {ct.target_num.shape}"
        )
    t = ct.frames + 1
    beta = beta_weight(t, cfg.eta)
    total = distractors.alpha_total
    dist_num = ct.distractor_num
    dist_den = ct.distractor_den
    if len(distractors) and total > 0:
        stacked = np.stack([dmap.data for dmap, _ in distractors.entries])
        alphas = np.array([a for _, a in distractors.entries], dtype=np.float64)
        if stacked.shape[1:] != ct.target_num.shape:
            raise DimensionError(
                f"distractor shape {stacked.shape[1:]} != accumulator {ct.target_num.shape}"
            )
        dist_num = dist_num + beta * cfg.alpha_hat * np.einsum("i,ihwc->hwc", alphas, stacked)
        dist_den = dist_den + beta * total
    return CompositeTemplates(
        target_num=ct.target_num + beta * z_t.data,
        beta_sum=ct.beta_sum + beta,
        distractor_num=dist_num,
        distractor_den=dist_den,
        frames=t,
    )


def composite_query(ct: CompositeTemplates) -> FeatureMap:
    """Learned query: target average minus the pooled distractor average."""
    if ct.frames < 1 or ct.beta_sum <= 0:
        raise UninitializedError("composite templates have absorbed no frames")
    query = ct.target_num / ct.beta_sum
    if ct.distractor_den > 0:
        query = query - ct.distractor_num / ct.distractor_den
    return FeatureMap(query)


def calibrated_score(raw: float | np.ndarray, self_sim: float, kappa: float = 4.0):
    """Squash a raw correlation onto [0, 1].

    Normalized logistic: the first-frame self-similarity maps to exactly 1.0,
    half of it to ~0.57, and zero signal to ~0.13. Values above self-similarity
    clamp at 1. Monotone, so it never reorders scores.
    """
    scale = self_sim if self_sim > 0 else 1.0
    x = np.asarray(raw, dtype=np.float64) / scale
    sig = 1.0 / (1.0 + np.exp(-kappa * (x - 0.5)))
    ref = 1.0 / (1.0 + np.exp(-kappa * 0.5))
    out = np.clip(sig / ref, 0.0, 1.0)
    return float(out) if np.isscalar(raw) or out.ndim == 0 else out
