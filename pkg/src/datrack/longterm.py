"""Failure detection and local-to-global search growth.

Hysteresis: tracking drops into failure mode when the detection score falls
below the enter threshold and returns to short-term only once it climbs past
the higher leave threshold. While in failure the search window grows by a
constant step each frame, capped at max_size, and the region stays centered
on the last confident position until it covers the whole frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .corr import FeatureMap
from .embed import BBox
from .rerank import CompositeTemplates


class Mode(Enum):
    SHORT_TERM = "short"
    FAILURE = "failure"


@dataclass(frozen=True)
class LongTermConfig:
    enter_threshold: float = 0.8
    leave_threshold: float = 0.95
    short_size: int = 255
    failure_size: int = 767
    step: int = 512
    max_size: int = 2048

    def __post_init__(self):
        if self.leave_threshold < self.enter_threshold:
            raise ValueError(
                f"leave threshold {self.leave_threshold} below enter {self.enter_threshold}"
            )
        if self.failure_size <= self.short_size:
            raise ValueError(
                f"failure size {self.failure_size} must exceed short size {self.short_size}"
            )
        if self.short_size < 1 or self.step < 0 or self.max_size < self.short_size:
            raise ValueError("sizes must be positive and max_size >= short_size")


def resolve_max_size(extent: tuple[float, float], stride: int) -> int:
    """Frame diagonal rounded up to the next stride multiple."""
    diag = math.hypot(extent[0], extent[1])
    return int(math.ceil(diag / stride)) * stride


@dataclass(eq=False)
class TrackerState:
    """Per-sequence tracking state."""

    mode: Mode
    center: tuple[float, float]          # last confident position
    failure_iters: int
    composite: CompositeTemplates
    frame_index: int
    exemplar: FeatureMap = field(repr=False)
    self_sim: float = 1.0
    last_box: BBox | None = None
    extent: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.mode is Mode.SHORT_TERM and self.failure_iters != 0:
            raise ValueError("failure_iters must be 0 in short-term mode")
        if self.failure_iters < 0:
            raise ValueError("failure_iters must be >= 0")


def update_mode(state: TrackerState, best_score: float, cfg: LongTermConfig) -> TrackerState:
    """Advance the mode machine with the frame's detection score.

    Short-term drops to failure when score < enter; failure returns to
    short-term when score >= leave, otherwise the failure counter grows.
    The caller re-centers on the detected box whenever the new mode is
    short-term.
    """
    if state.mode is Mode.SHORT_TERM:
        if best_score < cfg.enter_threshold:
            return replace(state, mode=Mode.FAILURE, failure_iters=1)
        return state
    if best_score >= cfg.leave_threshold:
        return replace(state, mode=Mode.SHORT_TERM, failure_iters=0)
    return replace(state, failure_iters=state.failure_iters + 1)


def search_size(state: TrackerState, cfg: LongTermConfig) -> int:
    """Search window side for the next frame given the current state."""
    if state.mode is Mode.SHORT_TERM:
        return cfg.short_size
    grown = cfg.short_size + state.failure_iters * cfg.step
    return min(grown, cfg.max_size)


def failure_center(state: TrackerState, cfg: LongTermConfig) -> tuple[float, float]:
    """Where to center the grown window while in failure mode.

    Stays on the last confident position until the window covers the whole
    frame, then recenters on the frame itself.
    """
    size = search_size(state, cfg)
    w, h = state.extent
    if w > 0 and h > 0 and size >= w and size >= h:
        return (w / 2.0, h / 2.0)
    return state.center
