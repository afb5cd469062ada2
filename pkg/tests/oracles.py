"""Independent reference implementations used to cross-check the package.

Everything here is written the slow, obvious way: explicit Python loops,
no vectorization, no shared helpers from the package under test beyond
plain data containers. If a fast path and its oracle agree on random
inputs, a bug would have to exist twice.
"""

from __future__ import annotations

import numpy as np


def xcorr_ref(template: np.ndarray, search: np.ndarray) -> np.ndarray:
    """Valid-mode sliding dot product via quadruple loop."""
    th, tw, tc = template.shape
    sh, sw, sc = search.shape
    assert tc == sc
    out = np.zeros((sh - th + 1, sw - tw + 1))
    for oy in range(out.shape[0]):
        for ox in range(out.shape[1]):
            acc = 0.0
            for y in range(th):
                for x in range(tw):
                    for c in range(tc):
                        acc += template[y, x, c] * search[oy + y, ox + x, c]
            out[oy, ox] = acc
    return out


def iou_ref(a: tuple[float, float, float, float],
            b: tuple[float, float, float, float]) -> float:
    """IoU of two center-format (cx, cy, w, h) tuples."""
    ax0, ax1 = a[0] - a[2] / 2, a[0] + a[2] / 2
    ay0, ay1 = a[1] - a[3] / 2, a[1] + a[3] / 2
    bx0, bx1 = b[0] - b[2] / 2, b[0] + b[2] / 2
    by0, by1 = b[1] - b[3] / 2, b[1] + b[3] / 2
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a[2] * a[3] + b[2] * b[3] - inter
    return inter / union if union > 0 else 0.0


def nms_ref(boxes: np.ndarray, scores: np.ndarray, cells: np.ndarray,
            thr: float) -> list[int]:
    """Greedy NMS, O(n^2): highest score first, ties to the lowest cell."""
    order = sorted(range(len(scores)),
                   key=lambda i: (-scores[i], tuple(cells[i])))
    kept: list[int] = []
    for i in order:
        ok = True
        for j in kept:
            if iou_ref(tuple(boxes[i]), tuple(boxes[j])) > thr:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept


def rerank_direct_ref(exemplar: np.ndarray,
                      distractors: list[tuple[np.ndarray, float]],
                      candidates: list[np.ndarray],
                      alpha_hat: float, bias: float) -> list[float]:
    """Literal distractor-subtraction scoring with loop dot products."""

    def dot(a: np.ndarray, b: np.ndarray) -> float:
        acc = 0.0
        for y in range(a.shape[0]):
            for x in range(a.shape[1]):
                for c in range(a.shape[2]):
                    acc += a[y, x, c] * b[y, x, c]
        return acc

    total = sum(alpha for _, alpha in distractors)
    out = []
    for cand in candidates:
        s = dot(exemplar, cand) + bias
        if distractors and total > 0:
            acc = 0.0
            for dmap, alpha in distractors:
                acc += alpha * (dot(dmap, cand) + bias)
            s -= alpha_hat * acc / total
        out.append(s)
    return out


def beta_loop_ref(t: int, eta: float) -> float:
    """Accumulation weight as an explicit geometric sum."""
    r = eta / (1.0 - eta)
    acc = 0.0
    for i in range(t):
        acc += r ** i
    return acc


def composite_batch_ref(history: list[tuple[np.ndarray, list[tuple[np.ndarray, float]]]],
                        eta: float, alpha_hat: float) -> np.ndarray:
    """Recompute the learned query from the whole update history.

    history[k] holds frame k+1's selected target array and its weighted
    distractor list. Mirrors the running-sum semantics: beta_t-weighted
    target average minus the pooled alpha_hat-scaled distractor average.
    """
    t_num = None
    b_sum = 0.0
    d_num = None
    d_den = 0.0
    for k, (z, dists) in enumerate(history):
        beta = beta_loop_ref(k + 1, eta)
        t_num = beta * z if t_num is None else t_num + beta * z
        b_sum += beta
        total = sum(a for _, a in dists)
        if dists and total > 0:
            frame_sum = np.zeros_like(z)
            for dmap, alpha in dists:
                frame_sum = frame_sum + alpha * dmap
            d_num = (beta * alpha_hat * frame_sum if d_num is None
                     else d_num + beta * alpha_hat * frame_sum)
            d_den += beta * total
    query = t_num / b_sum
    if d_den > 0:
        query = query - d_num / d_den
    return query


def hann_window_ref(width: int, height: int) -> np.ndarray:
    """Outer product of 1-D Hann windows from the cosine definition."""

    def hann(n: int) -> np.ndarray:
        if n == 1:
            return np.ones(1)
        return np.array([0.5 - 0.5 * np.cos(2.0 * np.pi * i / (n - 1))
                         for i in range(n)])

    return np.outer(hann(height), hann(width))


def bilinear_crop_ref(data: np.ndarray, box: tuple[float, float, float, float],
                      out_w: int, out_h: int) -> np.ndarray:
    """Per-sample bilinear resampling with border clamping."""
    h, w, c = data.shape
    cx, cy, bw, bh = box
    out = np.zeros((out_h, out_w, c))
    for oy in range(out_h):
        sy = cy + ((oy + 0.5) / out_h - 0.5) * bh
        sy = min(max(sy, 0.0), h - 1.0)
        y0 = min(max(int(np.floor(sy)), 0), h - 1)
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for ox in range(out_w):
            sx = cx + ((ox + 0.5) / out_w - 0.5) * bw
            sx = min(max(sx, 0.0), w - 1.0)
            x0 = min(max(int(np.floor(sx)), 0), w - 1)
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            for ch in range(c):
                top = data[y0, x0, ch] * (1 - fx) + data[y0, x1, ch] * fx
                bot = data[y1, x0, ch] * (1 - fx) + data[y1, x1, ch] * fx
                out[oy, ox, ch] = top * (1 - fy) + bot * fy
    return out
