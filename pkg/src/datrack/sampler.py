"""Training-pair sampling over a mixed corpus of video and still imagery.

The corpus is a TSV with one annotated instance per line:

    item_id  kind  category  video_id  frame_no  instance_id  cx,cy,w,h  payload_path

kind is "video" or "still"; still items leave video_id empty and frame_no 0.
Sampled pairs go to a manifest TSV:

    label  exemplar_item:cx,cy,w,h  search_item:cx,cy,w,h  aug_log

with label one of positive, negative_same_category, negative_different_category,
emitted in a fixed 2:1:1 rotation. The aug_log records the search-side
augmentation as `translate=dx,dy;resize=r;grayscale=0|1;blur=len,angle|none`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import BBox
from .errors import FormatError

CORPUS_FIELDS = 8
MAX_FRAME_GAP = 100
TRANSLATE_MAX_PX = 12
RESIZE_RANGE = (0.85, 1.15)
GRAYSCALE_PROB = 0.25
BLUR_PROB = 0.2
BLUR_LENGTHS = (3, 5, 7, 9)

LABEL_POSITIVE = "positive"
LABEL_NEG_SAME = "negative_same_category"
LABEL_NEG_DIFF = "negative_different_category"
_LABEL_ROTATION = (LABEL_POSITIVE, LABEL_POSITIVE, LABEL_NEG_SAME, LABEL_NEG_DIFF)


@dataclass(frozen=True)
class CorpusItem:
    item_id: str
    kind: str
    category: str
    video_id: str
    frame_no: int
    instance_id: str
    box: BBox
    payload_path: str

    def __post_init__(self):
        if self.kind not in ("video", "still"):
            raise FormatError(f"unknown corpus kind {self.kind!r}")


@dataclass(frozen=True)
class AugSpec:
    dx: int
    dy: int
    resize: float
    grayscale: bool
    blur: tuple[int, float] | None  # (kernel length, angle in radians)


@dataclass(frozen=True)
class PairRecord:
    label: str
    exemplar_item: str
    exemplar_box: BBox
    search_item: str
    search_box: BBox
    aug: AugSpec


def _fmt_box(b: BBox) -> str:
    return f"{b.cx:.4f},{b.cy:.4f},{b.w:.4f},{b.h:.4f}"


def _parse_box(text: str) -> BBox:
    parts = text.split(",")
    if len(parts) != 4:
        raise FormatError(f"box needs 4 comma-separated values, got {text!r}")
    return BBox(*(float(p) for p in parts))


def write_corpus(path: str | Path, items: list[CorpusItem]) -> None:
    with open(path, "w") as fh:
        for it in items:
            fh.write("\t".join([
                it.item_id, it.kind, it.category, it.video_id,
                str(it.frame_no), it.instance_id, _fmt_box(it.box), it.payload_path,
            ]) + "\n")


def read_corpus(path: str | Path) -> list[CorpusItem]:
    items = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != CORPUS_FIELDS:
                raise FormatError(
                    f"line {lineno}: expected {CORPUS_FIELDS} tab-separated fields, got {len(parts)}")
            try:
                items.append(CorpusItem(parts[0], parts[1], parts[2], parts[3],
                                        int(parts[4]), parts[5], _parse_box(parts[6]), parts[7]))
            except (ValueError, FormatError) as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
    return items


def format_aug(aug: AugSpec) -> str:
    blur = f"{aug.blur[0]},{aug.blur[1]:.6f}" if aug.blur is not None else "none"
    return (f"translate={aug.dx},{aug.dy};resize={aug.resize:.6f};"
            f"grayscale={int(aug.grayscale)};blur={blur}")


def parse_aug(text: str) -> AugSpec:
    fields = {}
    for chunk in text.split(";"):
        key, _, val = chunk.partition("=")
        if not val:
            raise FormatError(f"bad aug_log chunk {chunk!r}")
        fields[key] = val
    try:
        dx, dy = (int(v) for v in fields["translate"].split(","))
        resize = float(fields["resize"])
        grayscale = fields["grayscale"] == "1"
        blur = None
        if fields["blur"] != "none":
            length, angle = fields["blur"].split(",")
            blur = (int(length), float(angle))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad aug_log {text!r}: {exc}") from exc
    return AugSpec(dx, dy, resize, grayscale, blur)


def draw_augmentation(rng: np.random.Generator) -> AugSpec:
    dx = int(rng.integers(-TRANSLATE_MAX_PX, TRANSLATE_MAX_PX + 1))
    dy = int(rng.integers(-TRANSLATE_MAX_PX, TRANSLATE_MAX_PX + 1))
    resize = float(rng.uniform(*RESIZE_RANGE))
    grayscale = bool(rng.random() < GRAYSCALE_PROB)
    blur = None
    if rng.random() < BLUR_PROB:
        length = int(BLUR_LENGTHS[rng.integers(len(BLUR_LENGTHS))])
        blur = (length, float(rng.uniform(0.0, math.pi)))
    return AugSpec(dx, dy, resize, grayscale, blur)


class _CorpusIndex:
    def __init__(self, items: list[CorpusItem]):
        if not items:
            raise ValueError("corpus is empty")
        self.items = items
        self.tracks: dict[tuple[str, str], list[int]] = {}
        self.by_category: dict[str, list[int]] = {}
        for i, it in enumerate(items):
            if it.kind == "video":
                self.tracks.setdefault((it.video_id, it.instance_id), []).append(i)
            self.by_category.setdefault(it.category, []).append(i)
        for idxs in self.tracks.values():
            idxs.sort(key=lambda i: items[i].frame_no)
        self.categories = sorted(self.by_category)

    def instance_key(self, i: int) -> tuple:
        it = self.items[i]
        if it.kind == "video":
            return ("video", it.video_id, it.instance_id)
        return ("still", it.item_id)


def _pick(rng: np.random.Generator, pool: list[int]) -> int:
    return pool[int(rng.integers(len(pool)))]


def _sample_positive(index: _CorpusIndex, rng: np.random.Generator) -> tuple[int, int]:
    i = int(rng.integers(len(index.items)))
    it = index.items[i]
    if it.kind == "video":
        track = index.tracks[(it.video_id, it.instance_id)]
        near = [j for j in track if j != i
                and abs(index.items[j].frame_no - it.frame_no) < MAX_FRAME_GAP]
        if near:
            return i, _pick(rng, near)
    return i, i


def _sample_negative(index: _CorpusIndex, rng: np.random.Generator,
                     same_category: bool) -> tuple[int, int]:
    order = rng.permutation(len(index.items))
    for i in order:
        i = int(i)
        it = index.items[i]
        if same_category:
            pool = [j for j in index.by_category[it.category]
                    if index.instance_key(j) != index.instance_key(i)]
        else:
            pool = [j for cat in index.categories if cat != it.category
                    for j in index.by_category[cat]]
        if pool:
            return i, _pick(rng, pool)
    kind = "same-category" if same_category else "cross-category"
    raise ValueError(f"corpus cannot supply a {kind} negative pair")


def sample_pairs(items: list[CorpusItem], count: int, seed: int) -> list[PairRecord]:
    """Draw `count` pairs in a positive/positive/neg-same/neg-diff rotation.

    Fully deterministic for a given corpus and seed.
    """
    index = _CorpusIndex(items)
    rng = np.random.default_rng(seed)
    records = []
    for n in range(count):
        label = _LABEL_ROTATION[n % len(_LABEL_ROTATION)]
        if label == LABEL_POSITIVE:
            a, b = _sample_positive(index, rng)
        else:
            a, b = _sample_negative(index, rng, label == LABEL_NEG_SAME)
        aug = draw_augmentation(rng)
        ex, se = items[a], items[b]
        records.append(PairRecord(label, ex.item_id, ex.box, se.item_id, se.box, aug))
    return records


def write_manifest(path: str | Path, records: list[PairRecord]) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write("\t".join([
                r.label,
                f"{r.exemplar_item}:{_fmt_box(r.exemplar_box)}",
                f"{r.search_item}:{_fmt_box(r.search_box)}",
                format_aug(r.aug),
            ]) + "\n")


def read_manifest(path: str | Path) -> list[PairRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            label, ex, se, aug_text = parts
            if label not in (LABEL_POSITIVE, LABEL_NEG_SAME, LABEL_NEG_DIFF):
                raise FormatError(f"line {lineno}: unknown label {label!r}")
            try:
                ex_item, _, ex_box = ex.partition(":")
                se_item, _, se_box = se.partition(":")
                records.append(PairRecord(label, ex_item, _parse_box(ex_box),
                                          se_item, _parse_box(se_box), parse_aug(aug_text)))
            except FormatError as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
    return records


def manifest_stats(records: list[PairRecord]) -> dict[str, float]:
    n = len(records)
    if n == 0:
        return {"count": 0}
    return {
        "count": n,
        "positive_frac": sum(r.label == LABEL_POSITIVE for r in records) / n,
        "neg_same_frac": sum(r.label == LABEL_NEG_SAME for r in records) / n,
        "neg_diff_frac": sum(r.label == LABEL_NEG_DIFF for r in records) / n,
        "grayscale_frac": sum(r.aug.grayscale for r in records) / n,
        "blur_frac": sum(r.aug.blur is not None for r in records) / n,
    }


def _motion_blur_kernel(length: int, angle: float) -> np.ndarray:
    """Normalized line kernel: `length` unit masses splatted bilinearly along
    the direction `angle` through the kernel center."""
    kern = np.zeros((length, length))
    c = (length - 1) / 2.0
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    for step in range(length):
        t = step - c
        x, y = c + t * cos_a, c + t * sin_a
        x0, y0 = int(math.floor(x)), int(math.floor(y))
        fx, fy = x - x0, y - y0
        for oy, wy in ((y0, 1 - fy), (y0 + 1, fy)):
            for ox, wx in ((x0, 1 - fx), (x0 + 1, fx)):
                if 0 <= oy < length and 0 <= ox < length and wx * wy > 0:
                    kern[oy, ox] += wx * wy
    return kern / kern.sum()


def apply_augmentation(img: np.ndarray, aug: AugSpec) -> np.ndarray:
    """Apply resize, then translate, then blur, then grayscale to an image
    array of shape (H, W) or (H, W, C). Returns float64."""
    from scipy import ndimage

    out = np.asarray(img, dtype=np.float64)
    squeeze = out.ndim == 2
    if squeeze:
        out = out[:, :, None]
    if out.ndim != 3:
        raise ValueError(f"image must be 2-D or 3-D, got {out.ndim}-D")
    if aug.resize != 1.0:
        out = ndimage.zoom(out, (aug.resize, aug.resize, 1.0), order=1)
    if aug.dx or aug.dy:
        out = ndimage.shift(out, (aug.dy, aug.dx, 0), order=1, mode="grid-constant", cval=0.0)
    if aug.blur is not None:
        kern = _motion_blur_kernel(*aug.blur)
        for ch in range(out.shape[2]):
            out[:, :, ch] = ndimage.convolve(out[:, :, ch], kern, mode="nearest")
    if aug.grayscale and out.shape[2] > 1:
        out = np.repeat(out.mean(axis=2, keepdims=True), out.shape[2], axis=2)
    return out[:, :, 0] if squeeze else out
