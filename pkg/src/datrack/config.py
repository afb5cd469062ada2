"""Engine configuration and the flat key=value config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .longterm import LongTermConfig
from .proposals import AnchorConfig
from .rerank import RerankConfig


@dataclass(frozen=True)
class TrackerConfig:
    """Every tunable default in one flat bundle."""

    alpha_hat: float = 0.5
    default_alpha_i: float = 1.0
    bias: float = 0.0
    h: float = 0.2
    eta: float = 0.01
    kappa: float = 4.0
    window_weight: float = 0.4
    nms_iou: float = 0.5
    nms_prefilter: int = 512
    top_k: int = 32
    enter: float = 0.8
    leave: float = 0.95
    short_size: int = 255
    failure_size: int = 767
    step: int = 512
    max_size: int = 0          # 0 resolves to the frame diagonal at init
    base_size: float = 64.0
    anchor_ratios: tuple[float, ...] = (1.0 / 3.0, 0.5, 1.0, 2.0, 3.0)
    anchor_scales: tuple[float, ...] = (1.0,)
    exemplar_size: int = 6
    stride: int = 8
    longterm: bool = True

    def rerank_cfg(self) -> RerankConfig:
        return RerankConfig(
            alpha_hat=self.alpha_hat,
            default_alpha_i=self.default_alpha_i,
            distractor_threshold=self.h,
            eta=self.eta,
            bias=self.bias,
        )

    def longterm_cfg(self, max_size: int | None = None) -> LongTermConfig:
        resolved = max_size if max_size is not None else self.max_size
        if resolved <= 0:
            resolved = max(self.failure_size, self.short_size + 4 * self.step)
        return LongTermConfig(
            enter_threshold=self.enter,
            leave_threshold=self.leave,
            short_size=self.short_size,
            failure_size=self.failure_size,
            step=self.step,
            max_size=max(resolved, self.short_size),
        )

    def anchor_cfg(self) -> AnchorConfig:
        return AnchorConfig(
            base_size=self.base_size,
            ratios=self.anchor_ratios,
            scales=self.anchor_scales,
            stride=self.stride,
        )


_FLOAT_KEYS = {"alpha_hat", "default_alpha_i", "bias", "h", "eta", "kappa",
               "window_weight", "nms_iou", "enter", "leave", "base_size"}
_INT_KEYS = {"nms_prefilter", "top_k", "short_size", "failure_size", "step",
             "max_size", "exemplar_size", "stride"}
_LIST_KEYS = {"anchor_ratios", "anchor_scales"}
_BOOL_KEYS = {"longterm"}


def config_to_flat(cfg: TrackerConfig) -> dict[str, str]:
    out: dict[str, str] = {}
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if f.name in _LIST_KEYS:
            out[f.name] = ",".join(repr(float(v)) for v in val)
        elif f.name in _BOOL_KEYS:
            out[f.name] = "1" if val else "0"
        else:
            out[f.name] = repr(val) if isinstance(val, float) else str(val)
    return out


def config_from_flat(flat: dict[str, str], base: TrackerConfig | None = None) -> TrackerConfig:
    """Overlay flat string values on top of defaults (or a given base)."""
    cfg = base if base is not None else TrackerConfig()
    updates: dict[str, object] = {}
    for key, raw in flat.items():
        raw = str(raw).strip()
        if key in _FLOAT_KEYS:
            updates[key] = float(raw)
        elif key in _INT_KEYS:
            updates[key] = int(float(raw))
        elif key in _LIST_KEYS:
            updates[key] = tuple(float(v) for v in raw.split(",") if v.strip())
        elif key in _BOOL_KEYS:
            updates[key] = raw.lower() not in ("0", "false", "no", "")
        else:
            raise ValueError(f"unknown config key: {key}")
    return dataclasses.replace(cfg, **updates)


def write_config(path: str, cfg: TrackerConfig) -> None:
    flat = config_to_flat(cfg)
    lines = [f"{k}={flat[k]}" for k in sorted(flat)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_flat(path: str) -> dict[str, str]:
    flat: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            flat[key.strip()] = value.strip()
    return flat


def read_config(path: str) -> TrackerConfig:
    return config_from_flat(read_flat(path))
