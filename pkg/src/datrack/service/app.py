"""FastAPI service exposing the tracking engine.

Stateless endpoints cover scenario synthesis, batch tracking, evaluation,
pair sampling, and benchmarking. Stateful tracking runs through sessions:
create one from a scenario or a precomputed feature stream, then step it
frame by frame.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import TrackerConfig, config_from_flat
from ..embed import BBox, Frame, PrecomputedProvider, SyntheticProvider
from ..errors import FormatError, OutOfExtentError
from ..evaluate import eval_reset_based, eval_success_precision
from ..benchmark import bench_rerank
from ..longterm import Mode
from ..sampler import format_aug, manifest_stats, sample_pairs
from ..scenarios import gen_scenario, scene_to_dict
from ..tracker import TrajectoryEntry, init_state, make_stepper, run_tracker, track_frame
from .schemas import (
    BenchRequest, BenchResponse, BenchRowModel, Box, EvalRequest, EvalResponse,
    FeatureTrackRequest, FeatureTrackResponse, HealthResponse, PairRequest,
    PairResponse, ResetEvalRequest, ResetEvalResponse, SceneSpec, ScenarioRequest,
    SessionCreateRequest, SessionCreateResponse, SessionInfo, SessionStepRequest,
    SessionStepResponse, SynthRequest, SynthResponse, TrackRequest, TrackResponse,
    TrajectoryEntryModel, box_or_none,
)


@dataclass
class _Session:
    kind: str                      # "synthetic" or "features"
    provider: object
    cfg: TrackerConfig
    state: object
    trajectory: list[TrajectoryEntry]
    frames: list[Frame] | None     # synthetic sessions hold their frame queue
    next_frame: int
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def total_frames(self) -> int | None:
        return len(self.frames) if self.frames is not None else None


_sessions: dict[str, _Session] = {}
_registry_lock = threading.Lock()

app = FastAPI(title="datrack", version=__version__)


def _parse_config(flat: dict[str, str]) -> TrackerConfig:
    try:
        return config_from_flat(flat)
    except (ValueError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _resolve_scene(scenario: ScenarioRequest | None, scene: SceneSpec | None):
    if (scenario is None) == (scene is None):
        raise HTTPException(status_code=422,
                            detail="provide exactly one of scenario or scene")
    if scene is not None:
        try:
            return scene.to_scene()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
    try:
        return gen_scenario(scenario.preset, scenario.seed, scenario.frames)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _init_box(explicit: Box | None, gt0: BBox | None) -> BBox:
    if explicit is not None:
        return explicit.to_bbox()
    if gt0 is None:
        raise HTTPException(status_code=422,
                            detail="target absent on the first frame; supply init_box")
    return gt0


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/synth", response_model=SynthResponse)
def synth(req: SynthRequest) -> SynthResponse:
    scene = _resolve_scene(req.scenario, None)
    return SynthResponse(
        scene=SceneSpec(**scene_to_dict(scene)),
        ground_truth=[box_or_none(b) for b in scene.ground_truth()],
    )


@app.post("/track", response_model=TrackResponse)
def track(req: TrackRequest) -> TrackResponse:
    scene = _resolve_scene(req.scenario, req.scene)
    cfg = _parse_config(req.config)
    provider = SyntheticProvider(scene, cfg.exemplar_size, cfg.stride)
    gt = scene.ground_truth()
    init = _init_box(req.init_box, gt[0])
    try:
        entries = run_tracker(scene.frames(), init, provider, cfg)
    except OutOfExtentError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return TrackResponse(
        trajectory=[TrajectoryEntryModel.from_entry(e) for e in entries],
        ground_truth=[box_or_none(b) for b in gt],
    )


@app.post("/track/features", response_model=FeatureTrackResponse)
def track_features(req: FeatureTrackRequest) -> FeatureTrackResponse:
    if not req.frames:
        raise HTTPException(status_code=422, detail="no frames supplied")
    try:
        records = {f.frame_id: f.features.to_map() for f in req.frames}
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    cfg = _parse_config(req.config)
    provider = PrecomputedProvider(records, cfg.exemplar_size, cfg.stride)
    frames = [Frame(f.frame_id, None) for f in req.frames]
    try:
        entries = run_tracker(frames, req.init_box.to_bbox(), provider, cfg)
    except (OutOfExtentError, FormatError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return FeatureTrackResponse(
        trajectory=[TrajectoryEntryModel.from_entry(e) for e in entries])


@app.post("/eval", response_model=EvalResponse)
def evaluate(req: EvalRequest) -> EvalResponse:
    pred = [e.box.to_bbox() if e.box is not None else None for e in req.trajectory]
    gt = [b.to_bbox() if b is not None else None for b in req.ground_truth]
    if len(pred) != len(gt):
        raise HTTPException(status_code=422,
                            detail=f"trajectory length {len(pred)} != ground truth {len(gt)}")
    rep = eval_success_precision(pred, gt)
    return EvalResponse(success_auc=rep.success_auc, precision_at_20=rep.precision_at_20,
                        op_at_50=rep.op_at_50, mean_overlap=rep.mean_overlap,
                        failures=rep.failures)


@app.post("/eval/reset", response_model=ResetEvalResponse)
def evaluate_reset(req: ResetEvalRequest) -> ResetEvalResponse:
    scene = _resolve_scene(req.scenario, req.scene)
    cfg = _parse_config(req.config)
    provider = SyntheticProvider(scene, cfg.exemplar_size, cfg.stride)
    rep = eval_reset_based(scene.frames(), scene.ground_truth(),
                           make_stepper(provider, cfg))
    return ResetEvalResponse(accuracy=rep.accuracy, failures=rep.failures,
                             reset_frames=rep.reset_frames, reinit_frames=rep.reinit_frames)


@app.post("/sample-pairs", response_model=PairResponse)
def sample_pairs_endpoint(req: PairRequest) -> PairResponse:
    try:
        items = [m.to_item() for m in req.corpus]
        records = sample_pairs(items, req.count, req.seed)
    except (ValueError, FormatError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    lines = [
        "\t".join([
            r.label,
            f"{r.exemplar_item}:{r.exemplar_box.cx:.4f},{r.exemplar_box.cy:.4f},"
            f"{r.exemplar_box.w:.4f},{r.exemplar_box.h:.4f}",
            f"{r.search_item}:{r.search_box.cx:.4f},{r.search_box.cy:.4f},"
            f"{r.search_box.w:.4f},{r.search_box.h:.4f}",
            format_aug(r.aug),
        ])
        for r in records
    ]
    return PairResponse(manifest=lines, stats=manifest_stats(records))


@app.post("/bench", response_model=BenchResponse)
def bench(req: BenchRequest) -> BenchResponse:
    rows = bench_rerank(tuple(req.n_values), req.reps, req.n_candidates, seed=req.seed)
    return BenchResponse(rows=[BenchRowModel(**vars(r)) for r in rows])


@app.post("/sessions", response_model=SessionCreateResponse)
def create_session(req: SessionCreateRequest) -> SessionCreateResponse:
    cfg = _parse_config(req.config)
    if req.exemplar is not None:
        if req.init_box is None:
            raise HTTPException(status_code=422,
                                detail="feature sessions need an init_box")
        try:
            records = {req.exemplar.frame_id: req.exemplar.features.to_map()}
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        provider = PrecomputedProvider(records, cfg.exemplar_size, cfg.stride)
        first = Frame(req.exemplar.frame_id, None)
        init = req.init_box.to_bbox()
        kind, frames = "features", None
        next_frame = req.exemplar.frame_id + 1
    else:
        scene = _resolve_scene(req.scenario, req.scene)
        provider = SyntheticProvider(scene, cfg.exemplar_size, cfg.stride)
        frames = scene.frames()
        first = frames[0]
        init = _init_box(req.init_box, scene.ground_truth()[0])
        kind = "synthetic"
        next_frame = 1
    try:
        state = init_state(provider, first, init, cfg)
    except OutOfExtentError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    entry = TrajectoryEntry(first.id, init, 1.0, state.mode.value)
    session = _Session(kind=kind, provider=provider, cfg=cfg, state=state,
                       trajectory=[entry], frames=frames, next_frame=next_frame)
    sid = uuid.uuid4().hex
    with _registry_lock:
        _sessions[sid] = session
    return SessionCreateResponse(session_id=sid, total_frames=session.total_frames,
                                 entry=TrajectoryEntryModel.from_entry(entry))


def _get_session(session_id: str) -> _Session:
    with _registry_lock:
        session = _sessions.get(session_id)
    if session is None:
        raise HTTPException(status_code=404, detail=f"no session {session_id}")
    return session


@app.post("/sessions/{session_id}/step", response_model=SessionStepResponse)
def step_session(session_id: str, req: SessionStepRequest) -> SessionStepResponse:
    session = _get_session(session_id)
    with session.lock:
        if session.kind == "features":
            if req.features is None:
                raise HTTPException(status_code=422,
                                    detail="feature sessions need features per step")
            try:
                fmap = req.features.features.to_map()
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            session.provider.records[req.features.frame_id] = fmap
            frame = Frame(req.features.frame_id, None)
            done = False
        else:
            if session.next_frame >= len(session.frames):
                raise HTTPException(status_code=409, detail="scenario exhausted")
            frame = session.frames[session.next_frame]
            done = session.next_frame + 1 >= len(session.frames)
        try:
            box, score, session.state = track_frame(
                session.state, frame, session.provider, session.cfg)
        except (OutOfExtentError, FormatError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        entry = TrajectoryEntry(frame.id, box, score, session.state.mode.value)
        session.trajectory.append(entry)
        session.next_frame = frame.id + 1
    return SessionStepResponse(entry=TrajectoryEntryModel.from_entry(entry), done=done)


@app.get("/sessions/{session_id}", response_model=SessionInfo)
def session_info(session_id: str) -> SessionInfo:
    session = _get_session(session_id)
    with session.lock:
        return SessionInfo(
            session_id=session_id,
            kind=session.kind,
            next_frame=session.next_frame,
            total_frames=session.total_frames,
            mode=session.state.mode.value,
            trajectory_length=len(session.trajectory),
        )


@app.delete("/sessions/{session_id}")
def delete_session(session_id: str) -> dict:
    with _registry_lock:
        if session_id not in _sessions:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        del _sessions[session_id]
    return {"deleted": session_id}
