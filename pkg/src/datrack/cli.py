"""Command-line client for the tracking service.

Every subcommand talks to the HTTP API. By default the app is mounted
in-process, so no server needs to be running; pass --server to point the
same commands at a remote instance.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .config import TrackerConfig, config_from_flat, read_flat, write_config
from .embed import BBox
from .sampler import manifest_stats, read_corpus, read_manifest
from .storage import (read_ground_truth, read_trajectory, write_ground_truth,
                      write_report, write_trajectory)
from .tracker import TrajectoryEntry


def _open_client(server: str | None):
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
    from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        sys.exit(f"error: {path} returned {resp.status_code}: {detail}")
    return resp.json()


def _gather_config(args) -> dict[str, str]:
    flat: dict[str, str] = {}
    if getattr(args, "config", None):
        try:
            flat.update(read_flat(args.config))
        except (OSError, ValueError) as exc:
            sys.exit(f"error: {exc}")
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            sys.exit(f"error: --set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        flat[key.strip()] = value.strip()
    try:
        config_from_flat(flat)  # fail fast on unknown keys or bad values
    except ValueError as exc:
        sys.exit(f"error: {exc}")
    return flat


def _scenario_payload(args) -> dict:
    if getattr(args, "scene", None):
        data = json.loads(Path(args.scene).read_text())
        return {"scene": data}
    if not getattr(args, "preset", None):
        sys.exit("error: provide --preset or --scene")
    scenario = {"preset": args.preset, "seed": args.seed}
    if getattr(args, "frames", None):
        scenario["frames"] = args.frames
    return {"scenario": scenario}


def _box_from_json(d: dict | None) -> BBox | None:
    if d is None:
        return None
    return BBox(d["cx"], d["cy"], d["w"], d["h"])


def _entry_from_json(d: dict) -> TrajectoryEntry:
    return TrajectoryEntry(d["frame"], _box_from_json(d["box"]), d["score"], d["mode"])


def _entry_to_json(e: TrajectoryEntry) -> dict:
    box = None if e.box is None else {"cx": e.box.cx, "cy": e.box.cy, "w": e.box.w, "h": e.box.h}
    return {"frame": e.frame, "box": box, "score": e.score, "mode": e.mode}


def _boxes_to_json(boxes) -> list:
    return [None if b is None else {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h}
            for b in boxes]


def cmd_synth(args) -> None:
    with _open_client(args.server) as client:
        data = _post(client, "/synth", _scenario_payload(args))
    Path(args.out).write_text(json.dumps(data["scene"], indent=2) + "\n")
    print(f"wrote scene with {data['scene']['frame_count']} frames to {args.out}")
    if args.gt_out:
        write_ground_truth(args.gt_out, [_box_from_json(b) for b in data["ground_truth"]])
        print(f"wrote ground truth to {args.gt_out}")


def cmd_track(args) -> None:
    payload = _scenario_payload(args)
    payload["config"] = _gather_config(args)
    with _open_client(args.server) as client:
        data = _post(client, "/track", payload)
        entries = [_entry_from_json(e) for e in data["trajectory"]]
        write_trajectory(args.out, entries)
        print(f"wrote {len(entries)} trajectory rows to {args.out}")
        if args.gt_out:
            write_ground_truth(args.gt_out, [_box_from_json(b) for b in data["ground_truth"]])
            print(f"wrote ground truth to {args.gt_out}")
        if args.report:
            metrics = _post(client, "/eval", {
                "trajectory": data["trajectory"],
                "ground_truth": data["ground_truth"],
            })
            write_report(args.report, metrics)
            print(f"wrote metrics to {args.report}")


def cmd_eval(args) -> None:
    if args.reset:
        payload = _scenario_payload(args)
        payload["config"] = _gather_config(args)
        with _open_client(args.server) as client:
            data = _post(client, "/eval/reset", payload)
        metrics = {
            "accuracy": data["accuracy"],
            "failures": data["failures"],
            "reset_frames": ";".join(str(f) for f in data["reset_frames"]),
            "reinit_frames": ";".join(str(f) for f in data["reinit_frames"]),
        }
    else:
        if not (args.trajectory and args.gt):
            sys.exit("error: eval needs --trajectory and --gt (or --reset)")
        entries = read_trajectory(args.trajectory)
        gt = read_ground_truth(args.gt)
        with _open_client(args.server) as client:
            metrics = _post(client, "/eval", {
                "trajectory": [_entry_to_json(e) for e in entries],
                "ground_truth": _boxes_to_json(gt),
            })
    for key, val in metrics.items():
        print(f"{key}={val}")
    if args.out:
        write_report(args.out, metrics)
        print(f"wrote metrics to {args.out}")


def cmd_sample_pairs(args) -> None:
    items = read_corpus(args.corpus)
    payload = {
        "corpus": [
            {
                "item_id": it.item_id, "kind": it.kind, "category": it.category,
                "video_id": it.video_id, "frame_no": it.frame_no,
                "instance_id": it.instance_id,
                "box": {"cx": it.box.cx, "cy": it.box.cy, "w": it.box.w, "h": it.box.h},
                "payload_path": it.payload_path,
            }
            for it in items
        ],
        "count": args.count,
        "seed": args.seed,
    }
    with _open_client(args.server) as client:
        data = _post(client, "/sample-pairs", payload)
    Path(args.out).write_text("\n".join(data["manifest"]) + "\n" if data["manifest"] else "")
    print(f"wrote {len(data['manifest'])} pairs to {args.out}")
    if args.stats:
        stats = manifest_stats(read_manifest(args.out))
        for key in sorted(stats):
            print(f"{key}={stats[key]:.4f}" if isinstance(stats[key], float)
                  else f"{key}={stats[key]}")


def cmd_bench(args) -> None:
    payload = {
        "n_values": [int(v) for v in args.n.split(",") if v.strip()],
        "reps": args.reps,
        "n_candidates": args.candidates,
    }
    with _open_client(args.server) as client:
        data = _post(client, "/bench", payload)
    rows = data["rows"]
    print(f"{'n_distractors':>13}  {'fold_ms':>10}  {'factored_ms':>12}  {'direct_ms':>10}")
    for r in rows:
        print(f"{r['n_distractors']:>13d}  {r['fold_ms']:>10.4f}  "
              f"{r['factored_ms']:>12.4f}  {r['direct_ms']:>10.4f}")
    if args.out:
        metrics = {}
        for r in rows:
            n = r["n_distractors"]
            metrics[f"fold_ms_n{n}"] = r["fold_ms"]
            metrics[f"factored_ms_n{n}"] = r["factored_ms"]
            metrics[f"direct_ms_n{n}"] = r["direct_ms"]
        write_report(args.out, metrics)
        print(f"wrote timings to {args.out}")


def cmd_config(args) -> None:
    flat = _gather_config(args)
    cfg = config_from_flat(flat)
    if args.write:
        write_config(args.write, cfg)
        print(f"wrote config to {args.write}")
    else:
        for key, val in sorted(vars(cfg).items()):
            print(f"{key}={val}")


def cmd_serve(args) -> None:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", default=None,
                   help="base URL of a running service; default runs in-process")


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=["crossing", "outview", "clutter"], default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--scene", default=None, help="scene JSON produced by `synth`")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datrack",
                                     description="distractor-aware tracking tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    _add_common(p)
    _add_scenario_args(p)
    p.add_argument("--out", required=True, help="scene JSON output path")
    p.add_argument("--gt-out", default=None, help="ground-truth CSV output path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="track a scenario and write the trajectory")
    _add_common(p)
    _add_scenario_args(p)
    _add_config_args(p)
    p.add_argument("--out", required=True, help="trajectory CSV output path")
    p.add_argument("--gt-out", default=None)
    p.add_argument("--report", default=None, help="also write metrics CSV")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score a trajectory against ground truth")
    _add_common(p)
    _add_scenario_args(p)
    _add_config_args(p)
    p.add_argument("--trajectory", default=None, help="trajectory CSV")
    p.add_argument("--gt", default=None, help="ground-truth CSV")
    p.add_argument("--reset", action="store_true",
                   help="run the reset-based protocol on a scenario instead")
    p.add_argument("--out", default=None, help="metrics CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample-pairs", help="draw training pairs from a corpus TSV")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="pair manifest output path")
    p.add_argument("--stats", action="store_true", help="print label and augment rates")
    p.set_defaults(func=cmd_sample_pairs)

    p = sub.add_parser("bench", help="time the re-ranking paths")
    _add_common(p)
    p.add_argument("--n", default="1,4,16,64", help="comma-separated distractor counts")
    p.add_argument("--reps", type=int, default=31)
    p.add_argument("--candidates", type=int, default=64)
    p.add_argument("--out", default=None, help="timings CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("config", help="print or write engine configuration")
    _add_config_args(p)
    p.add_argument("--write", default=None, help="write the resolved config here")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
