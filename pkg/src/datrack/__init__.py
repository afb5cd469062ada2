"""Distractor-aware visual tracking: correlation scoring, proposal
re-ranking against nearby lookalikes, incremental template accumulation,
and a failure-recovery search policy, plus the synthetic scenario and
evaluation tooling around them."""

__version__ = "0.1.0"

from .config import TrackerConfig, config_from_flat, config_to_flat, read_config, write_config
from .corr import FeatureMap, ResponseMap, apply_window, cosine_window, linear_combine, xcorr, xcorr_values
from .embed import (BBox, Entity, Frame, EmbeddingProvider, PatchProvider,
                    PrecomputedProvider, SyntheticProvider, SyntheticScene, crop_and_resize)
from .errors import (DimensionError, FormatError, NoCandidatesError,
                     OutOfExtentError, UninitializedError)
from .evaluate import EvalReport, ResetReport, eval_reset_based, eval_success_precision
from .longterm import LongTermConfig, Mode, TrackerState, resolve_max_size, search_size, update_mode
from .proposals import AnchorConfig, Proposal, ScoreGrid, decode_deltas, generate_anchors, iou, nms, top_k
from .rerank import (CompositeTemplates, DistractorSet, RerankConfig, beta_weight,
                     calibrated_score, composite_query, fold_query, rerank_direct,
                     rerank_factored, select_target_and_distractors, update_templates)
from .scenarios import PRESETS, gen_scenario, scene_from_dict, scene_to_dict
from .tracker import TrajectoryEntry, init_state, make_stepper, run_tracker, track_frame

__all__ = [
    "__version__",
    "AnchorConfig", "BBox", "CompositeTemplates", "DimensionError", "DistractorSet",
    "EmbeddingProvider", "Entity", "EvalReport", "FeatureMap", "FormatError", "Frame",
    "LongTermConfig", "Mode", "NoCandidatesError", "OutOfExtentError", "PRESETS",
    "PatchProvider", "PrecomputedProvider", "Proposal", "RerankConfig", "ResetReport",
    "ResponseMap", "ScoreGrid", "SyntheticProvider", "SyntheticScene", "TrackerConfig",
    "TrackerState", "TrajectoryEntry", "UninitializedError",
    "apply_window", "beta_weight", "calibrated_score", "composite_query",
    "config_from_flat", "config_to_flat", "cosine_window", "crop_and_resize",
    "decode_deltas", "eval_reset_based", "eval_success_precision", "fold_query",
    "gen_scenario", "generate_anchors", "init_state", "iou", "linear_combine",
    "make_stepper", "nms", "read_config", "rerank_direct", "rerank_factored",
    "resolve_max_size", "run_tracker", "scene_from_dict", "scene_to_dict",
    "search_size", "select_target_and_distractors", "top_k", "track_frame",
    "update_mode", "update_templates", "write_config", "xcorr", "xcorr_values",
]
