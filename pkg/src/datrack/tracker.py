"""Per-frame tracking: response, proposals, re-ranking, template updates.

The proposal grid is kept as flat arrays until after suppression; Proposal
objects are built only for the few dozen survivors that reach selection and
re-ranking. NMS input is pre-truncated to the top windowed scores
(cfg.nms_prefilter), which cannot change the outcome for any candidate that
could reach the top-k or the distractor threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .config import TrackerConfig
from .corr import cosine_window, xcorr_values
from .embed import BBox, EmbeddingProvider, Frame, crop_and_resize
from .longterm import (Mode, TrackerState, failure_center, resolve_max_size,
                       search_size, update_mode)
from .proposals import AnchorConfig, Proposal, iou, nms_order
from .rerank import (CompositeTemplates, DistractorSet, calibrated_score,
                     composite_query, distractor_set_from, rerank_factored,
                     select_target_and_distractors, update_templates)


@dataclass(frozen=True)
class TrajectoryEntry:
    frame: int
    box: BBox | None
    score: float
    mode: str


@lru_cache(maxsize=32)
def _anchor_base(rows: int, cols: int, acfg: AnchorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Origin-centered anchor boxes plus (row, col, anchor) cell ids."""
    s = float(acfg.stride)
    shapes = np.array(acfg.shapes())
    k = len(shapes)
    boxes = np.empty((rows, cols, k, 4))
    boxes[:, :, :, 0] = ((np.arange(cols) - (cols - 1) / 2.0) * s)[None, :, None]
    boxes[:, :, :, 1] = ((np.arange(rows) - (rows - 1) / 2.0) * s)[:, None, None]
    boxes[:, :, :, 2] = shapes[:, 0][None, None, :]
    boxes[:, :, :, 3] = shapes[:, 1][None, None, :]
    cells = np.empty((rows, cols, k, 3), dtype=np.int64)
    cells[:, :, :, 0] = np.arange(rows)[:, None, None]
    cells[:, :, :, 1] = np.arange(cols)[None, :, None]
    cells[:, :, :, 2] = np.arange(k)[None, None, :]
    boxes.setflags(write=False)
    cells.setflags(write=False)
    return boxes.reshape(-1, 4), cells.reshape(-1, 3)


# peaks whose boxes overlap the provisional target above this are treated as
# the same object seen from a neighboring cell and kept out of the subtraction
_RIVAL_IOU_MAX = 0.2


@lru_cache(maxsize=16)
def _window_values(rows: int, cols: int) -> np.ndarray:
    vals = cosine_window(cols, rows).values
    vals.setflags(write=False)
    return vals


def init_state(provider: EmbeddingProvider, frame: Frame, box: BBox,
               cfg: TrackerConfig) -> TrackerState:
    """Start a sequence from a ground-truth box on its first frame."""
    exemplar = provider.embed_exemplar(frame, box)
    self_sim = float(xcorr_values(exemplar.data, exemplar.data)[0, 0])
    if self_sim <= 0:
        self_sim = 1.0
    # seed the learned query from the same crop pipeline that scores
    # candidates later, so a dead-on proposal matches it exactly
    search = provider.embed_search(frame, box.center, cfg.short_size)
    seed = _crop_embedding(search, box, box.center, search.height, cfg)
    composite = update_templates(
        CompositeTemplates.empty(exemplar.height, exemplar.width, exemplar.channels),
        seed, DistractorSet(), cfg.rerank_cfg(),
    )
    return TrackerState(
        mode=Mode.SHORT_TERM,
        center=box.center,
        failure_iters=0,
        composite=composite,
        frame_index=frame.id,
        exemplar=exemplar,
        self_sim=self_sim,
        last_box=box,
        extent=provider.frame_extent(frame),
    )


def _crop_embedding(search_data_map, box: BBox, center: tuple[float, float],
                    n: int, cfg: TrackerConfig):
    s = float(cfg.stride)
    map_box = BBox(
        (box.cx - center[0]) / s + n // 2,
        (box.cy - center[1]) / s + n // 2,
        max(box.w / s, 1e-6),
        max(box.h / s, 1e-6),
    )
    return crop_and_resize(search_data_map, map_box, cfg.exemplar_size, cfg.exemplar_size)


def track_frame(state: TrackerState, frame: Frame, provider: EmbeddingProvider,
                cfg: TrackerConfig,
                trace: Callable[[dict], None] | None = None,
                ) -> tuple[BBox, float, TrackerState]:
    """Track one frame; returns the chosen box, its detection score, and the
    advanced state.

    ``trace``, when given, receives a dict of per-frame internals (survivors,
    provisional pick, re-rank scores). Intended for tests and debugging; the
    dict layout is not a stable API.
    """
    ltcfg = cfg.longterm_cfg(
        resolve_max_size(state.extent, cfg.stride) if cfg.max_size == 0 else None
    )
    rcfg = cfg.rerank_cfg()

    size = search_size(state, ltcfg)
    center = failure_center(state, ltcfg) if state.mode is Mode.FAILURE else state.center
    search = provider.embed_search(frame, center, size)
    n = search.height

    raw = xcorr_values(state.exemplar.data, search.data) + cfg.bias
    cal = calibrated_score(raw, state.self_sim, cfg.kappa)
    rows, cols = cal.shape
    window = _window_values(rows, cols)
    mixed = (1.0 - cfg.window_weight) * cal + cfg.window_weight * window

    base_boxes, cells = _anchor_base(rows, cols, cfg.anchor_cfg())
    k = cfg.anchor_cfg().k
    flat_scores = np.repeat(mixed.ravel(), k)
    boxes = base_boxes.copy()
    boxes[:, 0] += center[0]
    boxes[:, 1] += center[1]

    keep_n = min(cfg.nms_prefilter, flat_scores.size)
    if keep_n < flat_scores.size:
        pre = np.argpartition(-flat_scores, keep_n - 1)[:keep_n]
    else:
        pre = np.arange(flat_scores.size)
    kept = nms_order(boxes[pre], flat_scores[pre], cells[pre], cfg.nms_iou)
    survivors = [
        Proposal(box=BBox(*boxes[pre[i]]), score=float(flat_scores[pre[i]]),
                 cell=tuple(int(v) for v in cells[pre[i]]))
        for i in kept
    ]

    appearance = [float(cal[p.cell[0], p.cell[1]]) for p in survivors]
    provisional, rerank_distractors = select_target_and_distractors(
        survivors, cfg.h, scores=appearance
    )
    rerank_distractors = [p for p in rerank_distractors
                          if iou(p.box, provisional.box) <= _RIVAL_IOU_MAX]
    ranked = sorted(survivors, key=lambda p: (-p.score, p.cell))
    candidates = ranked[:cfg.top_k]
    for p in {id(p): p for p in candidates + rerank_distractors}.values():
        p.embedding = _crop_embedding(search, p.box, center, n, cfg)

    query = composite_query(state.composite)
    winner, rerank_scores = rerank_factored(
        query, distractor_set_from(rerank_distractors, cfg.default_alpha_i),
        candidates, rcfg,
    )
    score = float(cal[winner.cell[0], winner.cell[1]])

    if trace is not None:
        trace({
            "frame": frame.id, "mode": state.mode.name, "size": size,
            "center": center,
            "survivors": [(p.cell, round(a, 3)) for p, a in
                          zip(survivors, appearance)],
            "provisional": provisional.cell,
            "distractors": [p.cell for p in rerank_distractors],
            "rerank": sorted(
                ((round(float(s), 3), c.cell, (round(c.box.cx), round(c.box.cy)))
                 for s, c in zip(rerank_scores, candidates)), reverse=True),
            "winner": winner.cell, "winner_score": round(score, 3),
        })

    new_state = update_mode(state, score, ltcfg) if cfg.longterm else state
    composite = state.composite
    if state.mode is Mode.SHORT_TERM and score >= ltcfg.enter_threshold:
        absorbed = [p for p, s in zip(survivors, appearance)
                    if s > cfg.h and p is not winner
                    and iou(p.box, winner.box) <= 0.0]
        for p in absorbed:
            if p.embedding is None:
                p.embedding = _crop_embedding(search, p.box, center, n, cfg)
        composite = update_templates(
            composite, winner.embedding,
            distractor_set_from(absorbed, cfg.default_alpha_i), rcfg,
        )
    updates = {"composite": composite, "frame_index": frame.id}
    if new_state.mode is Mode.SHORT_TERM:
        updates["center"] = winner.box.center
        updates["last_box"] = winner.box
    new_state = replace(new_state, **updates)
    return winner.box, score, new_state


def run_tracker(frames: Sequence[Frame], init_box: BBox,
                provider: EmbeddingProvider, cfg: TrackerConfig) -> list[TrajectoryEntry]:
    """Track a whole sequence, initialized from ground truth on frame 0."""
    if not frames:
        return []
    state = init_state(provider, frames[0], init_box, cfg)
    out = [TrajectoryEntry(frames[0].id, init_box, 1.0, state.mode.value)]
    for frame in frames[1:]:
        box, score, state = track_frame(state, frame, provider, cfg)
        out.append(TrajectoryEntry(frame.id, box, score, state.mode.value))
    return out


def make_stepper(provider: EmbeddingProvider, cfg: TrackerConfig) -> Callable:
    """Factory for incremental tracking, as used by reset-based evaluation."""

    def factory(first_frame: Frame, init_box: BBox):
        holder = {"state": init_state(provider, first_frame, init_box, cfg)}

        def step(frame: Frame) -> tuple[BBox, float]:
            box, score, holder["state"] = track_frame(holder["state"], frame, provider, cfg)
            return box, score

        return step

    return factory
