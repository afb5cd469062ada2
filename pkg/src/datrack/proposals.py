"""Anchor grids, score decoding, NMS, and proposal selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corr import FeatureMap, ResponseMap
from .embed import BBox
from .errors import DimensionError

DELTA_CLAMP = 4.0  # log-space size deltas clamp to [-4, 4] before exp


@dataclass(frozen=True)
class AnchorConfig:
    base_size: float = 64.0
    ratios: tuple[float, ...] = (1.0 / 3.0, 0.5, 1.0, 2.0, 3.0)
    scales: tuple[float, ...] = (1.0,)
    stride: int = 8

    def __post_init__(self):
        if not self.ratios or not self.scales:
            raise ValueError("anchor config needs at least one ratio and one scale")
        if self.base_size <= 0 or self.stride <= 0:
            raise ValueError("anchor base_size and stride must be positive")

    @property
    def k(self) -> int:
        return len(self.ratios) * len(self.scales)

    def shapes(self) -> list[tuple[float, float]]:
        """(w, h) per anchor; ratio is w/h at constant area, ratio-major order."""
        out = []
        for ratio in self.ratios:
            for scale in self.scales:
                side = self.base_size * scale
                out.append((side * math.sqrt(ratio), side / math.sqrt(ratio)))
        return out


@dataclass(eq=False)
class Proposal:
    """One scored candidate box. cell is (row, col, anchor) in the grid."""

    box: BBox
    score: float
    cell: tuple[int, int, int]
    embedding: FeatureMap | None = field(default=None, repr=False)


@dataclass(eq=False)
class ScoreGrid:
    """Per-cell, per-anchor scores and regression deltas."""

    scores: np.ndarray  # (rows, cols, k)
    deltas: np.ndarray  # (rows, cols, k, 4) as (dx, dy, dw, dh)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.deltas = np.asarray(self.deltas, dtype=np.float64)
        if self.scores.ndim != 3:
            raise DimensionError(f"scores must be (rows, cols, k), got {self.scores.shape}")
        if self.deltas.shape != self.scores.shape + (4,):
            raise DimensionError(
                f"deltas {self.deltas.shape} must match scores {self.scores.shape} + (4,)"
            )

    @property
    def rows(self) -> int:
        return self.scores.shape[0]

    @property
    def cols(self) -> int:
        return self.scores.shape[1]

    @property
    def k(self) -> int:
        return self.scores.shape[2]


def anchor_arrays(cfg: AnchorConfig, rows: int, cols: int,
                  region_center: tuple[float, float]) -> np.ndarray:
    """(rows*cols*k, 4) anchor boxes, row-major cells, anchors innermost."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dims must be positive, got {rows}x{cols}")
    s = float(cfg.stride)
    xs = region_center[0] + (np.arange(cols) - (cols - 1) / 2.0) * s
    ys = region_center[1] + (np.arange(rows) - (rows - 1) / 2.0) * s
    shapes = np.array(cfg.shapes())
    k = len(shapes)
    out = np.empty((rows, cols, k, 4))
    out[:, :, :, 0] = xs[None, :, None]
    out[:, :, :, 1] = ys[:, None, None]
    out[:, :, :, 2] = shapes[:, 0][None, None, :]
    out[:, :, :, 3] = shapes[:, 1][None, None, :]
    return out.reshape(-1, 4)


def generate_anchors(cfg: AnchorConfig, rows: int, cols: int,
                     region_center: tuple[float, float],
                     region_size: int | None = None) -> list[BBox]:
    """Anchor boxes on a stride-spaced grid centered on region_center.

    Index layout: (row * cols + col) * k + anchor.
    """
    arr = anchor_arrays(cfg, rows, cols, region_center)
    return [BBox(*row) for row in arr]


def decode_deltas(anchor: BBox, deltas: Sequence[float]) -> BBox:
    """Apply (dx, dy, dw, dh): shift center by dx*w, dy*h; scale size by exp."""
    dx, dy, dw, dh = (float(v) for v in deltas)
    dw = min(max(dw, -DELTA_CLAMP), DELTA_CLAMP)
    dh = min(max(dh, -DELTA_CLAMP), DELTA_CLAMP)
    return BBox(
        anchor.cx + dx * anchor.w,
        anchor.cy + dy * anchor.h,
        anchor.w * math.exp(dw),
        anchor.h * math.exp(dh),
    )


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two center-format boxes."""
    ix = min(a.cx + a.w / 2, b.cx + b.w / 2) - max(a.cx - a.w / 2, b.cx - b.w / 2)
    iy = min(a.cy + a.h / 2, b.cy + b.h / 2) - max(a.cy - a.h / 2, b.cy - b.h / 2)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    # rounding in the corner arithmetic can push the ratio a hair past 1
    return min(inter / union, 1.0) if union > 0 else 0.0


def _iou_one_vs_many(box: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    ix = (np.minimum(box[0] + box[2] / 2, boxes[:, 0] + boxes[:, 2] / 2)
          - np.maximum(box[0] - box[2] / 2, boxes[:, 0] - boxes[:, 2] / 2))
    iy = (np.minimum(box[1] + box[3] / 2, boxes[:, 1] + boxes[:, 3] / 2)
          - np.maximum(box[1] - box[3] / 2, boxes[:, 1] - boxes[:, 3] / 2))
    inter = np.clip(ix, 0, None) * np.clip(iy, 0, None)
    union = box[2] * box[3] + boxes[:, 2] * boxes[:, 3] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(union > 0, inter / union, 0.0)
    return np.minimum(vals, 1.0)


def nms_order(boxes: np.ndarray, scores: np.ndarray, cells: np.ndarray,
              iou_threshold: float) -> list[int]:
    """Greedy keep indices for array inputs; ties resolve by ascending cell."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"nms iou threshold must be in (0, 1], got {iou_threshold}")
    order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0], -scores))
    alive = np.ones(len(order), dtype=bool)
    sorted_boxes = boxes[order]
    kept: list[int] = []
    for i in range(len(order)):
        if not alive[i]:
            continue
        kept.append(int(order[i]))
        rest = np.nonzero(alive[i + 1:])[0] + i + 1
        if rest.size:
            overlaps = _iou_one_vs_many(sorted_boxes[i], sorted_boxes[rest])
            alive[rest[overlaps > iou_threshold]] = False
    return kept


def nms(proposals: Sequence[Proposal], iou_threshold: float) -> list[Proposal]:
    """Greedy non-maximum suppression.

    Proposals are visited in descending score order (equal scores break toward
    the lower (row, col, anchor) cell) and kept only if their IoU with every
    already-kept box stays at or below the threshold.
    """
    if not proposals:
        return []
    boxes = np.array([p.box.as_tuple() for p in proposals])
    scores = np.array([p.score for p in proposals], dtype=np.float64)
    cells = np.array([p.cell for p in proposals])
    return [proposals[i] for i in nms_order(boxes, scores, cells, iou_threshold)]


def score_grid_to_proposals(grid: ScoreGrid, anchors: Sequence[BBox],
                            window: ResponseMap, window_weight: float) -> list[Proposal]:
    """One proposal per (row, col, anchor): windowed score plus decoded box."""
    rows, cols, k = grid.rows, grid.cols, grid.k
    if len(anchors) != rows * cols * k:
        raise DimensionError(f"need {rows * cols * k} anchors, got {len(anchors)}")
    if window.values.shape != (rows, cols):
        raise DimensionError(f"window {window.values.shape} vs grid {(rows, cols)}")
    if not 0.0 <= window_weight <= 1.0:
        raise ValueError(f"window weight must be in [0, 1], got {window_weight}")
    mixed = (1.0 - window_weight) * grid.scores + window_weight * window.values[:, :, None]
    out = []
    idx = 0
    for r in range(rows):
        for c in range(cols):
            for a in range(k):
                box = decode_deltas(anchors[idx], grid.deltas[r, c, a])
                out.append(Proposal(box=box, score=float(mixed[r, c, a]), cell=(r, c, a)))
                idx += 1
    return out


def top_k(proposals: Sequence[Proposal], k: int) -> list[Proposal]:
    """Highest-scored k proposals; equal scores break toward the lower cell."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(proposals, key=lambda p: (-p.score, p.cell))
    return ranked[:k]
