"""Frames, boxes, and the pluggable embedding providers.

A provider turns a frame region into a FeatureMap on a fixed stride-8 grid.
Region sizes follow the 255 -> 22x22 cells -> 17x17 response convention for a
6x6 template: cells = (region_px - 127) // stride + exemplar_size.

Three providers:
  * SyntheticProvider: scene of entities carrying fixed signature vectors,
    stamped into cells by box-footprint coverage, front-to-back compositing,
    plus seeded additive noise.
  * PatchProvider: grayscale block means, zero-mean/unit-norm. Minimal, for
    wiring real images through the same pipeline; no scale handling.
  * PrecomputedProvider: dense per-frame feature maps loaded from a record
    file; windows are integer-aligned crops with zero padding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .corr import FeatureMap
from .errors import DimensionError, OutOfExtentError

REGION_OFFSET = 127  # px eaten by template context in the cells formula


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, center format (cx, cy, w, h)."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box needs positive extent, got w={self.w} h={self.h}")
        for v in (self.cx, self.cy, self.w, self.h):
            if not np.isfinite(v):
                raise ValueError("box coordinates must be finite")

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)


@dataclass(frozen=True)
class Frame:
    """One time step of a sequence. payload depends on the provider."""

    id: int
    payload: Any = None

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"frame id must be >= 0, got {self.id}")


@dataclass
class Entity:
    """Scene object: a signature vector following a per-frame box track."""

    signature: np.ndarray          # (channels,)
    boxes: np.ndarray              # (frame_count, 4) center-format rows
    visible: list[tuple[int, int]]  # half-open [start, end) frame intervals
    is_target: bool = False

    def __post_init__(self):
        self.signature = np.asarray(self.signature, dtype=np.float64)
        self.boxes = np.asarray(self.boxes, dtype=np.float64)
        if self.signature.ndim != 1:
            raise DimensionError("entity signature must be a vector")
        if self.boxes.ndim != 2 or self.boxes.shape[1] != 4:
            raise DimensionError("entity boxes must be (frame_count, 4)")

    def visible_at(self, frame_id: int) -> bool:
        return any(a <= frame_id < b for a, b in self.visible)

    def box_at(self, frame_id: int) -> BBox:
        cx, cy, w, h = self.boxes[frame_id]
        return BBox(cx, cy, w, h)


@dataclass
class SyntheticScene:
    """World description consumed by SyntheticProvider.

    Entities earlier in the list occlude later ones where footprints overlap.
    Exactly one entity must be flagged as the target.
    """

    width: int
    height: int
    frame_count: int
    entities: list[Entity] = field(default_factory=list)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.frame_count < 1:
            raise ValueError("scene extent and frame count must be positive")
        targets = [e for e in self.entities if e.is_target]
        if len(targets) != 1:
            raise ValueError(f"scene needs exactly one target entity, got {len(targets)}")
        channels = {len(e.signature) for e in self.entities}
        if len(channels) != 1:
            raise DimensionError(f"entity signatures disagree on channels: {channels}")
        for e in self.entities:
            if len(e.boxes) != self.frame_count:
                raise DimensionError("entity track length != scene frame count")

    @property
    def channels(self) -> int:
        return len(self.entities[0].signature)

    def target(self) -> Entity:
        return next(e for e in self.entities if e.is_target)

    def frames(self) -> list[Frame]:
        return [Frame(i) for i in range(self.frame_count)]

    def ground_truth(self) -> list[BBox | None]:
        tgt = self.target()
        return [tgt.box_at(i) if tgt.visible_at(i) else None for i in range(self.frame_count)]


class EmbeddingProvider:
    """Interface: exemplar and search-region embeddings on a fixed grid."""

    exemplar_size: int = 6
    stride: int = 8
    channels: int

    def cells_for_region(self, region_size: int) -> int:
        """Grid side length for a square search region of region_size px."""
        if region_size <= 0:
            raise ValueError(f"region size must be positive, got {region_size}")
        return max(self.exemplar_size, (int(region_size) - REGION_OFFSET) // self.stride + self.exemplar_size)

    def frame_extent(self, frame: Frame) -> tuple[float, float]:
        raise NotImplementedError

    def embed_exemplar(self, frame: Frame, box: BBox) -> FeatureMap:
        raise NotImplementedError

    def embed_search(self, frame: Frame, center: tuple[float, float], region_size: int) -> FeatureMap:
        raise NotImplementedError

    def _check_box(self, box: BBox, extent: tuple[float, float]) -> None:
        w, h = extent
        if box.cx + box.w / 2 <= 0 or box.cx - box.w / 2 >= w \
                or box.cy + box.h / 2 <= 0 or box.cy - box.h / 2 >= h:
            raise OutOfExtentError(f"box {box.as_tuple()} outside extent {extent}")


def _axis_coverage(lo: float, hi: float, starts: np.ndarray, stride: float) -> np.ndarray:
    """Fraction of each [start, start+stride) cell span covered by [lo, hi]."""
    overlap = np.minimum(hi, starts + stride) - np.maximum(lo, starts)
    return np.clip(overlap / stride, 0.0, 1.0)


class SyntheticProvider(EmbeddingProvider):
    """Embeds frames of a SyntheticScene. Deterministic given the scene seed."""

    def __init__(self, scene: SyntheticScene, exemplar_size: int = 6, stride: int = 8):
        self.scene = scene
        self.exemplar_size = int(exemplar_size)
        self.stride = int(stride)
        self.channels = scene.channels

    def frame_extent(self, frame: Frame) -> tuple[float, float]:
        return (float(self.scene.width), float(self.scene.height))

    def _grid(self, frame_id: int, origin: tuple[float, float], rows: int, cols: int,
              noise_key: tuple[int, ...]) -> np.ndarray:
        s = float(self.stride)
        ox, oy = origin
        # cell (r, c) centers at (ox + c*s, oy + r*s); spans are +-s/2 around that
        xs = ox + np.arange(cols) * s - s / 2
        ys = oy + np.arange(rows) * s - s / 2
        out = np.zeros((rows, cols, self.channels))
        remaining = np.ones((rows, cols))
        for ent in self.scene.entities:
            if not ent.visible_at(frame_id):
                continue
            cx, cy, w, h = ent.boxes[frame_id]
            covx = _axis_coverage(cx - w / 2, cx + w / 2, xs, s)
            covy = _axis_coverage(cy - h / 2, cy + h / 2, ys, s)
            cov = np.outer(covy, covx)
            out += (cov * remaining)[:, :, None] * ent.signature
            remaining *= 1.0 - cov
        if self.scene.noise_sigma > 0:
            # keys hold quantized coordinates that may be negative for crops
            # reaching past the frame edge; seed material must be unsigned
            seed_key = tuple(k & 0xFFFFFFFF for k in
                             (self.scene.seed, frame_id) + noise_key)
            rng = np.random.default_rng(seed_key)
            out += rng.normal(0.0, self.scene.noise_sigma, out.shape)
        # cells whose centers fall outside the frame hold the padding value 0
        cx_centers = ox + np.arange(cols) * s
        cy_centers = oy + np.arange(rows) * s
        inside = (
            ((cy_centers >= 0) & (cy_centers <= self.scene.height))[:, None]
            & ((cx_centers >= 0) & (cx_centers <= self.scene.width))[None, :]
        )
        out *= inside[:, :, None]
        return out

    def embed_exemplar(self, frame: Frame, box: BBox) -> FeatureMap:
        self._check_box(box, self.frame_extent(frame))
        e, s = self.exemplar_size, self.stride
        origin = (box.cx - (e // 2) * s, box.cy - (e // 2) * s)
        key = (0, int(round(box.cx * 16)), int(round(box.cy * 16)),
               int(round(box.w * 16)), int(round(box.h * 16)))
        return FeatureMap(self._grid(frame.id, origin, e, e, key))

    def embed_search(self, frame: Frame, center: tuple[float, float], region_size: int) -> FeatureMap:
        n = self.cells_for_region(region_size)
        s = self.stride
        origin = (center[0] - (n // 2) * s, center[1] - (n // 2) * s)
        key = (1, int(round(center[0] * 16)), int(round(center[1] * 16)), int(region_size))
        return FeatureMap(self._grid(frame.id, origin, n, n, key))


def _normalize_patch(arr: np.ndarray) -> np.ndarray:
    arr = arr - arr.mean()
    norm = np.linalg.norm(arr)
    if norm > 0:
        arr = arr / norm
    return arr


class PatchProvider(EmbeddingProvider):
    """Grayscale block-mean embeddings; Frame.payload is a 2-D intensity array."""

    channels = 1

    def __init__(self, exemplar_size: int = 6, stride: int = 8):
        self.exemplar_size = int(exemplar_size)
        self.stride = int(stride)

    def frame_extent(self, frame: Frame) -> tuple[float, float]:
        img = np.asarray(frame.payload)
        return (float(img.shape[1]), float(img.shape[0]))

    def _block_means(self, img: np.ndarray, origin: tuple[float, float],
                     rows: int, cols: int) -> np.ndarray:
        s = self.stride
        pad = float(img.mean()) if img.size else 0.0
        out = np.full((rows, cols), pad)
        for r in range(rows):
            y0 = int(round(origin[1] + r * s - s / 2))
            for c in range(cols):
                x0 = int(round(origin[0] + c * s - s / 2))
                block = img[max(y0, 0):max(y0 + s, 0), max(x0, 0):max(x0 + s, 0)]
                if block.size == s * s:
                    out[r, c] = block.mean()
        return out

    def embed_exemplar(self, frame: Frame, box: BBox) -> FeatureMap:
        img = np.asarray(frame.payload, dtype=np.float64)
        self._check_box(box, self.frame_extent(frame))
        e = self.exemplar_size
        src = FeatureMap(img[:, :, None])
        # sample the box at exemplar resolution, pixel grid acting as stride-1 cells
        patch = crop_and_resize(src, BBox(box.cx - 0.5, box.cy - 0.5, box.w, box.h), e, e)
        return FeatureMap(_normalize_patch(patch.data[:, :, 0])[:, :, None])

    def embed_search(self, frame: Frame, center: tuple[float, float], region_size: int) -> FeatureMap:
        img = np.asarray(frame.payload, dtype=np.float64)
        n = self.cells_for_region(region_size)
        origin = (center[0] - (n // 2) * self.stride, center[1] - (n // 2) * self.stride)
        return FeatureMap(_normalize_patch(self._block_means(img, origin, n, n))[:, :, None])


class PrecomputedProvider(EmbeddingProvider):
    """Serves stored dense frame maps; see storage.read_features for the format."""

    def __init__(self, records: dict[int, FeatureMap], exemplar_size: int = 6, stride: int = 8):
        if not records:
            raise ValueError("precomputed provider needs at least one record")
        self.records = dict(records)
        self.exemplar_size = int(exemplar_size)
        self.stride = int(stride)
        channels = {fm.channels for fm in self.records.values()}
        if len(channels) != 1:
            raise DimensionError(f"records disagree on channels: {channels}")
        self.channels = channels.pop()

    def _record(self, frame: Frame) -> FeatureMap:
        try:
            return self.records[frame.id]
        except KeyError:
            raise OutOfExtentError(f"no feature record for frame {frame.id}") from None

    def frame_extent(self, frame: Frame) -> tuple[float, float]:
        fm = self._record(frame)
        return (float(fm.width * self.stride), float(fm.height * self.stride))

    def _window(self, fm: FeatureMap, center: tuple[float, float], rows: int, cols: int) -> np.ndarray:
        # integer-aligned crop with zero padding outside the stored map
        s = self.stride
        col0 = int(round(center[0] / s - 0.5)) - cols // 2
        row0 = int(round(center[1] / s - 0.5)) - rows // 2
        out = np.zeros((rows, cols, fm.channels))
        r_lo, r_hi = max(row0, 0), min(row0 + rows, fm.height)
        c_lo, c_hi = max(col0, 0), min(col0 + cols, fm.width)
        if r_lo < r_hi and c_lo < c_hi:
            out[r_lo - row0:r_hi - row0, c_lo - col0:c_hi - col0] = fm.data[r_lo:r_hi, c_lo:c_hi]
        return out

    def embed_exemplar(self, frame: Frame, box: BBox) -> FeatureMap:
        fm = self._record(frame)
        self._check_box(box, self.frame_extent(frame))
        e = self.exemplar_size
        return FeatureMap(self._window(fm, box.center, e, e))

    def embed_search(self, frame: Frame, center: tuple[float, float], region_size: int) -> FeatureMap:
        fm = self._record(frame)
        n = self.cells_for_region(region_size)
        return FeatureMap(self._window(fm, center, n, n))


def crop_and_resize(fmap: FeatureMap, box: BBox, out_w: int, out_h: int) -> FeatureMap:
    """Bilinear resample of a boxed region to (out_h, out_w) cells.

    Box coordinates are in cell units: cell centers sit at integers, the map
    spans [-0.5, width - 0.5]. Sample positions follow the area convention
    (box == whole map with out dims == map dims is an identity copy). Samples
    outside the map clamp to the border.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output dims must be positive, got {out_w}x{out_h}")
    if box.cx + box.w / 2 <= -0.5 or box.cx - box.w / 2 >= fmap.width - 0.5 \
            or box.cy + box.h / 2 <= -0.5 or box.cy - box.h / 2 >= fmap.height - 0.5:
        raise OutOfExtentError(f"crop box {box.as_tuple()} outside map extent")
    xs = box.cx + ((np.arange(out_w) + 0.5) / out_w - 0.5) * box.w
    ys = box.cy + ((np.arange(out_h) + 0.5) / out_h - 0.5) * box.h
    xs = np.clip(xs, 0.0, fmap.width - 1.0)
    ys = np.clip(ys, 0.0, fmap.height - 1.0)
    x0 = np.clip(np.floor(xs).astype(int), 0, fmap.width - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, fmap.height - 1)
    x1 = np.minimum(x0 + 1, fmap.width - 1)
    y1 = np.minimum(y0 + 1, fmap.height - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]
    d = fmap.data
    top = d[y0][:, x0] * (1 - fx) + d[y0][:, x1] * fx
    bot = d[y1][:, x0] * (1 - fx) + d[y1][:, x1] * fx
    return FeatureMap(top * (1 - fy) + bot * fy)
