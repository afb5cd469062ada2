"""Request and response models for the tracking service."""

from __future__ import annotations

import base64

import numpy as np
from pydantic import BaseModel, Field

from ..corr import FeatureMap
from ..embed import BBox
from ..sampler import CorpusItem
from ..scenarios import scene_from_dict
from ..tracker import TrajectoryEntry


class Box(BaseModel):
    cx: float
    cy: float
    w: float = Field(gt=0)
    h: float = Field(gt=0)

    def to_bbox(self) -> BBox:
        return BBox(self.cx, self.cy, self.w, self.h)

    @classmethod
    def from_bbox(cls, b: BBox) -> "Box":
        return cls(cx=b.cx, cy=b.cy, w=b.w, h=b.h)


def box_or_none(b: BBox | None) -> Box | None:
    return None if b is None else Box.from_bbox(b)


class EntitySpec(BaseModel):
    signature: list[float]
    boxes: list[list[float]]
    visible: list[list[int]]
    is_target: bool = False


class SceneSpec(BaseModel):
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    frame_count: int = Field(gt=0)
    noise_sigma: float = Field(ge=0, default=0.0)
    seed: int = 0
    entities: list[EntitySpec]

    def to_scene(self):
        return scene_from_dict(self.model_dump())


class ScenarioRequest(BaseModel):
    preset: str
    seed: int = 0
    frames: int | None = Field(default=None, gt=0)


class SynthRequest(BaseModel):
    scenario: ScenarioRequest


class SynthResponse(BaseModel):
    scene: SceneSpec
    ground_truth: list[Box | None]


class TrajectoryEntryModel(BaseModel):
    frame: int
    box: Box | None
    score: float
    mode: str

    @classmethod
    def from_entry(cls, e: TrajectoryEntry) -> "TrajectoryEntryModel":
        return cls(frame=e.frame, box=box_or_none(e.box), score=e.score, mode=e.mode)

    def to_entry(self) -> TrajectoryEntry:
        box = self.box.to_bbox() if self.box is not None else None
        return TrajectoryEntry(self.frame, box, self.score, self.mode)


class TrackRequest(BaseModel):
    scenario: ScenarioRequest | None = None
    scene: SceneSpec | None = None
    init_box: Box | None = None
    config: dict[str, str] = Field(default_factory=dict)


class TrackResponse(BaseModel):
    trajectory: list[TrajectoryEntryModel]
    ground_truth: list[Box | None]


class FeatureBlob(BaseModel):
    """A dense float32 grid, base64-encoded, row-major, channel innermost."""

    rows: int = Field(gt=0)
    cols: int = Field(gt=0)
    channels: int = Field(gt=0)
    data_b64: str

    def to_map(self) -> FeatureMap:
        raw = base64.b64decode(self.data_b64)
        expected = self.rows * self.cols * self.channels * 4
        if len(raw) != expected:
            raise ValueError(f"feature blob holds {len(raw)} bytes, expected {expected}")
        arr = np.frombuffer(raw, dtype="<f4").reshape(self.rows, self.cols, self.channels)
        return FeatureMap(arr.astype(np.float64))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FeatureBlob":
        arr = np.ascontiguousarray(arr, dtype="<f4")
        return cls(rows=arr.shape[0], cols=arr.shape[1], channels=arr.shape[2],
                   data_b64=base64.b64encode(arr.tobytes()).decode("ascii"))


class FeatureFrame(BaseModel):
    frame_id: int = Field(ge=0)
    features: FeatureBlob


class FeatureTrackRequest(BaseModel):
    frames: list[FeatureFrame]
    init_box: Box
    config: dict[str, str] = Field(default_factory=dict)


class FeatureTrackResponse(BaseModel):
    trajectory: list[TrajectoryEntryModel]


class EvalRequest(BaseModel):
    trajectory: list[TrajectoryEntryModel]
    ground_truth: list[Box | None]


class EvalResponse(BaseModel):
    success_auc: float
    precision_at_20: float
    op_at_50: float
    mean_overlap: float
    failures: int


class ResetEvalRequest(BaseModel):
    scenario: ScenarioRequest | None = None
    scene: SceneSpec | None = None
    config: dict[str, str] = Field(default_factory=dict)


class ResetEvalResponse(BaseModel):
    accuracy: float
    failures: int
    reset_frames: list[int]
    reinit_frames: list[int]


class CorpusItemModel(BaseModel):
    item_id: str
    kind: str
    category: str
    video_id: str = ""
    frame_no: int = 0
    instance_id: str
    box: Box
    payload_path: str = ""

    def to_item(self) -> CorpusItem:
        return CorpusItem(self.item_id, self.kind, self.category, self.video_id,
                          self.frame_no, self.instance_id, self.box.to_bbox(),
                          self.payload_path)


class PairRequest(BaseModel):
    corpus: list[CorpusItemModel]
    count: int = Field(gt=0)
    seed: int = 0


class PairResponse(BaseModel):
    manifest: list[str]
    stats: dict[str, float]


class BenchRequest(BaseModel):
    n_values: list[int] = Field(default_factory=lambda: [1, 4, 16, 64])
    reps: int = Field(default=31, ge=1)
    n_candidates: int = Field(default=64, gt=0)
    seed: int = 7


class BenchRowModel(BaseModel):
    n_distractors: int
    fold_ms: float
    factored_ms: float
    direct_ms: float


class BenchResponse(BaseModel):
    rows: list[BenchRowModel]


class SessionCreateRequest(BaseModel):
    scenario: ScenarioRequest | None = None
    scene: SceneSpec | None = None
    exemplar: FeatureFrame | None = None
    init_box: Box | None = None
    config: dict[str, str] = Field(default_factory=dict)


class SessionCreateResponse(BaseModel):
    session_id: str
    total_frames: int | None
    entry: TrajectoryEntryModel


class SessionStepRequest(BaseModel):
    features: FeatureFrame | None = None


class SessionStepResponse(BaseModel):
    entry: TrajectoryEntryModel
    done: bool


class SessionInfo(BaseModel):
    session_id: str
    kind: str
    next_frame: int
    total_frames: int | None
    mode: str
    trajectory_length: int


class HealthResponse(BaseModel):
    status: str
    version: str
