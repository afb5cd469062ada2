"""Dense cross-correlation primitives.

Feature maps are (height, width, channels) float64 arrays, row major with
channels innermost. Response maps are (height, width) score arrays. A template
slid over a search map in valid mode yields a response of
(search_h - template_h + 1) x (search_w - template_w + 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Immutable dense block of embedding values, shape (h, w, c)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise DimensionError(f"feature map needs (h, w, c) data, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"feature map dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature map contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class ResponseMap:
    """Grid of correlation scores, shape (h, w)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"response map needs (h, w) values, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"response map dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("response map contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def xcorr_values(template: np.ndarray, search: np.ndarray) -> np.ndarray:
    """Valid-mode correlation of raw arrays; returns the (h, w) response."""
    th, tw, tc = template.shape
    sh, sw, sc = search.shape
    if tc != sc:
        raise DimensionError(f"channel mismatch: template {tc} vs search {sc}")
    if th > sh or tw > sw:
        raise DimensionError(
            f"template {th}x{tw} does not fit inside search {sh}x{sw}"
        )
    if (th, tw) == (sh, sw):
        # same-size maps collapse to a single dot product
        return np.array([[float(np.vdot(template, search))]])
    windows = np.lib.stride_tricks.sliding_window_view(search, (th, tw), axis=(0, 1))
    # windows: (sh-th+1, sw-tw+1, c, th, tw)
    return np.einsum("abcij,ijc->ab", windows, template, optimize=True)


def xcorr(template: FeatureMap, search: FeatureMap, bias: float = 0.0) -> ResponseMap:
    """Correlation similarity: template slid over search, plus a constant bias."""
    return ResponseMap(xcorr_values(template.data, search.data) + float(bias))


def cosine_window(width: int, height: int) -> ResponseMap:
    """Outer product of one-dimensional Hann windows; values in [0, 1]."""
    if width < 1 or height < 1:
        raise DimensionError(f"window dims must be positive, got {width}x{height}")
    return ResponseMap(np.outer(np.hanning(height), np.hanning(width)))


def apply_window(response: ResponseMap, window: ResponseMap, weight: float) -> ResponseMap:
    """Mix a response with a window: (1 - weight) * response + weight * window."""
    if response.values.shape != window.values.shape:
        raise DimensionError(
            f"response {response.values.shape} vs window {window.values.shape}"
        )
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"window weight must be in [0, 1], got {weight}")
    return ResponseMap((1.0 - weight) * response.values + weight * window.values)


def linear_combine(terms: Sequence[tuple[FeatureMap, float]]) -> FeatureMap:
    """Elementwise weighted sum of equally shaped feature maps."""
    if not terms:
        raise ValueError("linear_combine needs at least one term")
    shape = terms[0][0].data.shape
    for fmap, _ in terms:
        if fmap.data.shape != shape:
            raise DimensionError(f"map shape {fmap.data.shape} != {shape}")
    stacked = np.stack([fmap.data for fmap, _ in terms])
    coeffs = np.array([c for _, c in terms], dtype=np.float64)
    return FeatureMap(np.einsum("i,ihwc->hwc", coeffs, stacked))
