"""File formats: DAFM feature archives and CSV trajectories/reports.

DAFM is a little-endian binary container for per-frame feature grids:

    magic   4 bytes  b"DAFM"
    version u16      currently 1
    records, each:
        frame_id u32
        width    u16   (columns)
        height   u16   (rows)
        channels u16
        data     width*height*channels float32, row-major, channel innermost
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embed import BBox
from .errors import FormatError
from .tracker import TrajectoryEntry

DAFM_MAGIC = b"DAFM"
DAFM_VERSION = 1
_HEADER = struct.Struct("<4sH")
_RECORD = struct.Struct("<IHHH")


def write_dafm(path: str | Path, records: Iterable[tuple[int, np.ndarray]]) -> None:
    """Write (frame_id, array) pairs; arrays are (rows, cols, channels)."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DAFM_MAGIC, DAFM_VERSION))
        for frame_id, arr in records:
            arr = np.asarray(arr, dtype=np.float32)
            if arr.ndim == 2:
                arr = arr[:, :, None]
            if arr.ndim != 3:
                raise FormatError(f"feature record must be 2-D or 3-D, got {arr.ndim}-D")
            rows, cols, chans = arr.shape
            for name, val in (("width", cols), ("height", rows), ("channels", chans)):
                if not 0 < val <= 0xFFFF:
                    raise FormatError(f"{name} {val} out of range for u16")
            if not 0 <= frame_id <= 0xFFFFFFFF:
                raise FormatError(f"frame_id {frame_id} out of range for u32")
            fh.write(_RECORD.pack(frame_id, cols, rows, chans))
            fh.write(np.ascontiguousarray(arr).tobytes())


def read_dafm(path: str | Path) -> list[tuple[int, np.ndarray]]:
    """Read all records; raises FormatError with a byte offset on corruption."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"truncated header at offset 0: need {_HEADER.size} bytes, have {len(blob)}")
    magic, version = _HEADER.unpack_from(blob, 0)
    if magic != DAFM_MAGIC:
        raise FormatError(f"bad magic at offset 0: {magic!r}")
    if version != DAFM_VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    records: list[tuple[int, np.ndarray]] = []
    pos = _HEADER.size
    while pos < len(blob):
        if len(blob) - pos < _RECORD.size:
            raise FormatError(f"truncated record header at offset {pos}")
        frame_id, cols, rows, chans = _RECORD.unpack_from(blob, pos)
        pos += _RECORD.size
        if cols == 0 or rows == 0 or chans == 0:
            raise FormatError(f"zero dimension in record at offset {pos - _RECORD.size}")
        nbytes = cols * rows * chans * 4
        if len(blob) - pos < nbytes:
            raise FormatError(
                f"truncated payload at offset {pos}: need {nbytes} bytes, have {len(blob) - pos}")
        flat = np.frombuffer(blob, dtype="<f4", count=cols * rows * chans, offset=pos)
        records.append((frame_id, flat.reshape(rows, cols, chans).astype(np.float64)))
        pos += nbytes
    return records


TRAJECTORY_FIELDS = ["frame", "present", "cx", "cy", "w", "h", "score", "mode"]
GT_FIELDS = ["frame", "present", "cx", "cy", "w", "h"]


def write_trajectory(path: str | Path, entries: Sequence[TrajectoryEntry]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_FIELDS)
        for e in entries:
            if e.box is None:
                writer.writerow([e.frame, 0, "", "", "", "", f"{e.score:.6f}", e.mode])
            else:
                writer.writerow([e.frame, 1, f"{e.box.cx:.4f}", f"{e.box.cy:.4f}",
                                 f"{e.box.w:.4f}", f"{e.box.h:.4f}", f"{e.score:.6f}", e.mode])


def read_trajectory(path: str | Path) -> list[TrajectoryEntry]:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_FIELDS:
            raise FormatError(f"unexpected trajectory header: {reader.fieldnames}")
        for row in reader:
            box = None
            if row["present"] == "1":
                box = BBox(float(row["cx"]), float(row["cy"]), float(row["w"]), float(row["h"]))
            entries.append(TrajectoryEntry(int(row["frame"]), box, float(row["score"]), row["mode"]))
    return entries


def write_ground_truth(path: str | Path, boxes: Sequence[BBox | None]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GT_FIELDS)
        for i, b in enumerate(boxes):
            if b is None:
                writer.writerow([i, 0, "", "", "", ""])
            else:
                writer.writerow([i, 1, f"{b.cx:.4f}", f"{b.cy:.4f}", f"{b.w:.4f}", f"{b.h:.4f}"])


def read_ground_truth(path: str | Path) -> list[BBox | None]:
    boxes: list[BBox | None] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != GT_FIELDS:
            raise FormatError(f"unexpected ground-truth header: {reader.fieldnames}")
        for row in reader:
            if row["present"] == "1":
                boxes.append(BBox(float(row["cx"]), float(row["cy"]),
                                  float(row["w"]), float(row["h"])))
            else:
                boxes.append(None)
    return boxes


def write_report(path: str | Path, metrics: dict[str, float | int | str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key, val in metrics.items():
            writer.writerow([key, val])


def read_report(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["metric", "value"]:
            raise FormatError(f"unexpected report header: {reader.fieldnames}")
        for row in reader:
            out[row["metric"]] = row["value"]
    return out
