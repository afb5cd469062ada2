"""Synthetic scenario generation: presets, serialization, ground truth.

Presets build SyntheticScene worlds with one target and optional distractors
whose signatures are controlled perturbations of the target's. Distractor
entities come first in the scene list so they occlude the target when paths
cross.
"""

from __future__ import annotations

import numpy as np

from .embed import BBox, Entity, Frame, SyntheticScene

PRESETS = ("crossing", "outview", "clutter")

_PRESET_IDS = {"crossing": 1, "outview": 2, "clutter": 3}
_CHANNELS = 8
_ENTITY_SIZE = 64.0
# crossing preset: lookalike similarity to the target, how long the occluder
# rides the target as a multiple of its approach time, and the counter-moving
# lookalike's speed
_CROSSING_RHO = 0.82
_COVER_RATIO = 1.4
_COUNTER_RATE = -4.0
_DEPART_START = 6.0
_DEPART_ACCEL = 2.0
_DEPART_CAP = 12.0
_PARK_DIST = (160.0, 185.0)


def _preset_rng(preset: str, seed: int) -> np.random.Generator:
    return np.random.default_rng((_PRESET_IDS[preset], int(seed)))


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _orthonormal_to(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.normal(size=v.shape)
    u -= (u @ v) * v
    return u / np.linalg.norm(u)


def _similar_signature(v: np.ndarray, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector with cosine similarity rho to v."""
    u = _orthonormal_to(v, rng)
    return rho * v + np.sqrt(max(1.0 - rho * rho, 0.0)) * u


def _linear_track(frames: int, start: tuple[float, float], end: tuple[float, float],
                  size: float = _ENTITY_SIZE) -> np.ndarray:
    t = np.linspace(0.0, 1.0, frames)
    boxes = np.empty((frames, 4))
    boxes[:, 0] = start[0] + (end[0] - start[0]) * t
    boxes[:, 1] = start[1] + (end[1] - start[1]) * t
    boxes[:, 2] = size
    boxes[:, 3] = size
    return boxes


def preset_crossing(seed: int, frames: int = 60) -> SyntheticScene:
    """Target shadowed by a lookalike through a long occlusion, plus clutter.

    The main distractor flies in, settles exactly onto the target box, rides
    with it for roughly a third of the sequence while fully covering it, then
    peels away. A tracker whose template drifts onto the occluder during that
    stretch leaves with it; the distractor-aware query does not. Two more
    lookalikes cross near the target path as clutter without occluding it.
    """
    rng = _preset_rng("crossing", seed)
    w, h = 480, 360
    v = _unit(rng, _CHANNELS)
    rho = _CROSSING_RHO
    steps = np.arange(frames, dtype=float)

    y0 = 180.0 + float(rng.uniform(-12.0, 12.0))
    tgt_boxes = _linear_track(frames, (80.0, y0), (400.0, y0))
    target = Entity(signature=v, boxes=tgt_boxes, visible=[(0, frames)], is_target=True)

    # occluder: approach, stalk at a standoff just outside box overlap, dive
    # in over the last 3 frames, cover exactly over [merge, split), then
    # depart at depart_rate px/frame
    merge = int(rng.integers(11, 15))
    split = merge + int(round(_COVER_RATIO * merge))
    side = float(rng.choice([-1.0, 1.0]))
    approach_from = np.array([float(rng.uniform(90.0, 130.0)),
                              side * float(rng.uniform(70.0, 100.0))])
    standoff = np.array([0.0, side * 70.0])
    t_hold, t_dive = max(1, merge - 8), max(2, merge - 3)
    # depart against the target's motion at a pace a contaminated template can
    # follow, then park in frame well outside the short-term search reach
    depart_dir = np.array([-1.0, float(rng.choice([-1.0, 1.0]))])
    depart_dir += rng.uniform(-0.15, 0.15, size=2)
    depart_dir /= np.linalg.norm(depart_dir)
    park_dist = float(rng.uniform(*_PARK_DIST))
    depart_rates = np.minimum(
        _DEPART_START + _DEPART_ACCEL * steps[: frames - split], _DEPART_CAP)

    offsets = np.zeros((frames, 2))
    ramp = (1.0 - steps[:t_hold] / t_hold)[:, None]
    offsets[:t_hold] = standoff + ramp * (approach_from - standoff)
    offsets[t_hold:t_dive] = standoff
    dive = (1.0 - (steps[t_dive:merge] - t_dive + 1) / (merge - t_dive + 1))[:, None]
    offsets[t_dive:merge] = dive * standoff
    gone = np.minimum(np.cumsum(depart_rates), park_dist)
    offsets[split:] = gone[:, None] * depart_dir
    d1_boxes = tgt_boxes.copy()
    d1_boxes[:, :2] += offsets
    d1 = Entity(signature=_similar_signature(v, rho, rng), boxes=d1_boxes,
                visible=[(0, frames)])

    # vertical crosser through the path well after the split, passing ahead
    # of the target so their boxes never overlap
    t_cross = min(frames - 3, split + 13)
    d2_boxes = np.empty((frames, 4))
    d2_boxes[:, 0] = tgt_boxes[t_cross, 0] + 70.0
    d2_boxes[:, 1] = y0 + (steps - t_cross) * 12.0
    d2_boxes[:, 2] = d2_boxes[:, 3] = _ENTITY_SIZE
    d2 = Entity(signature=_similar_signature(v, rho, rng), boxes=d2_boxes,
                visible=[(0, frames)])

    # early counter-moving near-miss on a parallel line 110 px off: close
    # enough to enter the widened search after a failure, far enough to stay
    # outside the short-term reach even when the centre wanders a cell or two
    t_miss = max(2, merge - 6)
    miss_side = float(rng.choice([-1.0, 1.0]))
    d3_boxes = np.empty((frames, 4))
    d3_boxes[:, 0] = tgt_boxes[t_miss, 0] + (steps - t_miss) * _COUNTER_RATE
    d3_boxes[:, 1] = y0 + miss_side * 110.0
    d3_boxes[:, 2] = d3_boxes[:, 3] = _ENTITY_SIZE
    d3 = Entity(signature=_similar_signature(v, rho, rng), boxes=d3_boxes,
                visible=[(0, frames)])

    return SyntheticScene(
        width=w, height=h, frame_count=frames,
        entities=[d1, d2, d3, target],
        noise_sigma=0.03, seed=seed,
    )


def preset_outview(seed: int, frames: int = 100) -> SyntheticScene:
    """Target leaves the view and reappears far from its exit point."""
    rng = _preset_rng("outview", seed)
    w, h = 640, 480
    v = _unit(rng, _CHANNELS)
    gone_from, back_at = 40, 70
    boxes = np.empty((frames, 4))
    boxes[:, 2] = boxes[:, 3] = _ENTITY_SIZE
    y = 240.0 + float(rng.uniform(-20.0, 20.0))
    # drift right toward the edge, vanish, come back on the far side
    for f in range(frames):
        if f < gone_from:
            boxes[f, 0] = 450.0 + 3.5 * f
            boxes[f, 1] = y
        else:
            boxes[f, 0] = 240.0 + 1.5 * (f - back_at) + float(rng.uniform(-2.0, 2.0))
            boxes[f, 1] = y + float(rng.uniform(-4.0, 4.0))
    target = Entity(
        signature=v, boxes=boxes,
        visible=[(0, gone_from), (back_at, frames)],
        is_target=True,
    )
    return SyntheticScene(width=w, height=h, frame_count=frames,
                          entities=[target], noise_sigma=0.03, seed=seed)


def preset_clutter(seed: int, frames: int = 80) -> SyntheticScene:
    """Target among several weakly similar random walkers."""
    rng = _preset_rng("clutter", seed)
    w, h = 480, 360
    v = _unit(rng, _CHANNELS)
    target = Entity(
        signature=v,
        boxes=_linear_track(frames, (120.0, 120.0), (360.0, 240.0)),
        visible=[(0, frames)],
        is_target=True,
    )
    entities = []
    for _ in range(6):
        start = (float(rng.uniform(80, w - 80)), float(rng.uniform(80, h - 80)))
        walk = rng.normal(0.0, 4.0, size=(frames, 2)).cumsum(axis=0)
        boxes = np.empty((frames, 4))
        boxes[:, 0] = np.clip(start[0] + walk[:, 0], 40, w - 40)
        boxes[:, 1] = np.clip(start[1] + walk[:, 1], 40, h - 40)
        boxes[:, 2] = boxes[:, 3] = _ENTITY_SIZE
        entities.append(Entity(
            signature=_similar_signature(v, 0.7, rng), boxes=boxes,
            visible=[(0, frames)],
        ))
    entities.append(target)
    return SyntheticScene(width=w, height=h, frame_count=frames,
                          entities=entities, noise_sigma=0.03, seed=seed)


def gen_scenario(preset: str, seed: int, frames: int | None = None) -> SyntheticScene:
    if preset == "crossing":
        return preset_crossing(seed, frames or 60)
    if preset == "outview":
        return preset_outview(seed, frames or 100)
    if preset == "clutter":
        return preset_clutter(seed, frames or 80)
    raise ValueError(f"unknown preset {preset!r}, expected one of {PRESETS}")


def scene_to_dict(scene: SyntheticScene) -> dict:
    return {
        "width": scene.width,
        "height": scene.height,
        "frame_count": scene.frame_count,
        "noise_sigma": scene.noise_sigma,
        "seed": scene.seed,
        "entities": [
            {
                "signature": [float(x) for x in e.signature],
                "boxes": [[float(v) for v in row] for row in e.boxes],
                "visible": [[int(a), int(b)] for a, b in e.visible],
                "is_target": bool(e.is_target),
            }
            for e in scene.entities
        ],
    }


def scene_from_dict(data: dict) -> SyntheticScene:
    entities = [
        Entity(
            signature=np.array(e["signature"], dtype=np.float64),
            boxes=np.array(e["boxes"], dtype=np.float64),
            visible=[(int(a), int(b)) for a, b in e["visible"]],
            is_target=bool(e.get("is_target", False)),
        )
        for e in data["entities"]
    ]
    return SyntheticScene(
        width=int(data["width"]),
        height=int(data["height"]),
        frame_count=int(data["frame_count"]),
        entities=entities,
        noise_sigma=float(data.get("noise_sigma", 0.0)),
        seed=int(data.get("seed", 0)),
    )


def scenario_frames(scene: SyntheticScene) -> list[Frame]:
    return scene.frames()


def scenario_ground_truth(scene: SyntheticScene) -> list[BBox | None]:
    return scene.ground_truth()
