"""Trajectory metrics and the reset-based evaluation protocol."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .embed import BBox, Frame
from .proposals import iou

SUCCESS_THRESHOLDS = np.round(np.arange(101) * 0.01, 2)
PRECISION_RADIUS_PX = 20.0
RESET_SKIP = 5  # frames between a zero-overlap failure and re-initialization


@dataclass
class EvalReport:
    success_auc: float
    precision_at_20: float
    op_at_50: float
    mean_overlap: float
    failures: int
    iou_series: list[float | None] = field(default_factory=list)


@dataclass
class ResetReport:
    accuracy: float
    failures: int
    reset_frames: list[int]
    reinit_frames: list[int]


def overlap_series(pred: Sequence[BBox | None], gt: Sequence[BBox | None]) -> list[float | None]:
    """Per-frame IoU; None where ground truth is absent (frame excluded)."""
    if len(pred) != len(gt):
        raise ValueError(f"trajectory length {len(pred)} != ground truth {len(gt)}")
    out: list[float | None] = []
    for p, g in zip(pred, gt):
        if g is None:
            out.append(None)
        elif p is None:
            out.append(0.0)
        else:
            out.append(iou(p, g))
    return out


def eval_success_precision(pred: Sequence[BBox | None], gt: Sequence[BBox | None]) -> EvalReport:
    """Success curve over 101 overlap thresholds, precision at 20 px."""
    series = overlap_series(pred, gt)
    pairs = [(p, g, s) for p, g, s in zip(pred, gt, series) if g is not None]
    if not pairs:
        return EvalReport(0.0, 0.0, 0.0, 0.0, 0, series)
    ious = np.array([s for _, _, s in pairs], dtype=np.float64)
    curve = np.array([(ious >= tau).mean() for tau in SUCCESS_THRESHOLDS])
    dists = np.array([
        math.hypot(p.cx - g.cx, p.cy - g.cy) if p is not None else math.inf
        for p, g, _ in pairs
    ])
    absent = sum(1 for p, _, _ in pairs if p is None)
    return EvalReport(
        success_auc=float(curve.mean()),
        precision_at_20=float((dists <= PRECISION_RADIUS_PX).mean()),
        op_at_50=float((ious > 0.5).mean()),
        mean_overlap=float(ious.mean()),
        failures=absent,
        iou_series=series,
    )


def eval_reset_based(frames: Sequence[Frame], gt: Sequence[BBox | None],
                     tracker_factory: Callable) -> ResetReport:
    """Supervised protocol: a zero-overlap frame on annotated ground truth is
    a failure; tracking restarts from ground truth five frames later.

    tracker_factory(first_frame, init_box) must return a step callable
    step(frame) -> (box or None, score). The failure frame, the skipped gap,
    and the re-init frame are excluded from accuracy.
    """
    if len(frames) != len(gt):
        raise ValueError(f"frame count {len(frames)} != ground truth {len(gt)}")
    n = len(frames)
    reset_frames: list[int] = []
    reinit_frames: list[int] = []
    overlaps: list[float] = []

    def next_annotated(start: int) -> int:
        i = start
        while i < n and gt[i] is None:
            i += 1
        return i

    start = next_annotated(0)
    if start >= n:
        return ResetReport(0.0, 0, [], [])
    step = tracker_factory(frames[start], gt[start])
    i = start + 1
    while i < n:
        box, _ = step(frames[i])
        if gt[i] is None:
            i += 1
            continue
        ov = iou(box, gt[i]) if box is not None else 0.0
        if ov == 0.0:
            reset_frames.append(i)
            restart = next_annotated(i + RESET_SKIP)
            if restart >= n:
                break
            reinit_frames.append(restart)
            step = tracker_factory(frames[restart], gt[restart])
            i = restart + 1
            continue
        overlaps.append(ov)
        i += 1
    accuracy = float(np.mean(overlaps)) if overlaps else 0.0
    return ResetReport(accuracy, len(reset_frames), reset_frames, reinit_frames)
