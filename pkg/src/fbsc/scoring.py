"""Per-frame anomaly scores from forward and forward-backward prediction errors."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch

from . import corpus, kernels
from .labels import ScoreSeries
from .losses import pixel_error
from .model import to_tensor
from .train import LoadedModel, pack_backward

log = logging.getLogger(__name__)

MODES = ("fb", "fonly")


def local_error(f, f_hat, patch: int, stride: int, l1_weight: float = 1.0) -> np.ndarray | float:
    """Largest patch mean of the per-pixel error map.

    ``f`` and ``f_hat`` are ``(..., 3, H, W)`` tensors or arrays; leading
    dimensions are kept in the result.
    """
    f = torch.as_tensor(f)
    f_hat = torch.as_tensor(f_hat)
    err = pixel_error(f.double(), f_hat.double(), l1_weight).cpu().numpy()
    h, w = err.shape[-2:]
    if patch > min(h, w):
        raise ValueError(f"patch {patch} larger than crop {h}x{w}")
    lead = err.shape[:-2]
    out = kernels.patch_max_mean(err.reshape(-1, h, w), patch, stride).reshape(lead)
    return float(out) if out.ndim == 0 else out


def vad_score(object_errors: Iterable[float]) -> float:
    """Frame score: the largest per-object error, 0 with no objects."""
    errs = list(object_errors)
    return float(max(errs)) if errs else 0.0


def vaa_score(backward_errors, alpha: int, max_step: int = 6) -> float:
    """Anticipation score over steps ``1..alpha``.

    ``backward_errors`` is one sequence per object, entry ``i-1`` holding the
    backward error of step ``i``; a single flat sequence counts as one object.
    """
    if not 1 <= alpha <= max_step:
        raise ValueError(f"alpha={alpha} outside the forward horizon [1, {max_step}]")
    arr = np.asarray(backward_errors, dtype=np.float64)
    if arr.size == 0:
        return 0.0
    if arr.ndim == 1:
        arr = arr[None]
    if arr.shape[1] < alpha:
        raise ValueError(f"need {alpha} backward errors per object, got {arr.shape[1]}")
    return float(arr[:, :alpha].max())


@dataclass
class WindowErrors:
    """Errors of every scored window of one video (one row per window)."""

    t: np.ndarray  # (W,)
    track: np.ndarray  # (W,)
    vad: np.ndarray  # (W,)
    backward: np.ndarray  # (W, max_step): step i in column i-1
    fonly: np.ndarray  # (W, max_step)


def window_errors(lm: LoadedModel, bank: corpus.CropBank, video_id: str, batch: int = 64) -> WindowErrors:
    """Run forward and all backward steps for every complete window of a video."""
    model, cfg = lm.model, lm.config
    m = cfg.model
    n, s = m.n_inputs, cfg.stride
    steps = model.max_step
    patch, pstride, l1 = cfg.patch, cfg.patch_stride, cfg.loss.l1
    sample = cfg.inference_sampling
    gen = torch.Generator().manual_seed(0)
    wins = bank.windows(n, 1, s, video_ids=[video_id])
    ts, tracks, vad, bwd, fo = [], [], [], [], []
    device = next(model.parameters()).device
    model.eval()
    for start in range(0, len(wins), batch):
        chunk = wins[start : start + batch]
        crops, scenes = [], []
        for vid, tid, t in chunk:
            ins, tgs = corpus.window_frames(t, n, 1, s)
            c, sc = bank.gather(vid, tid, ins + tgs, scene_at=n - 1)
            crops.append(c)
            scenes.append(sc)
        frames = to_tensor(np.stack(crops)).to(device)
        inputs, current = frames[:, :n], frames[:, n]
        with torch.no_grad():
            emb = model.encode_scene(to_tensor(np.stack(scenes)).to(device))
            preds = model.forward_predict(inputs, emb, sample, gen).frames
            seq = torch.cat([inputs, current[:, None], preds[:, 1:]], dim=1)
            b_err = []
            for i in range(1, steps + 1):
                step_i = torch.full((len(chunk),), i, dtype=torch.long, device=device)
                out, _ = model.backward_net(pack_backward(seq, step_i, n), emb, sample, gen)
                b_err.append(local_error(inputs[:, i], out[:, 0], patch, pstride, l1))
            vad.append(local_error(current, preds[:, 0], patch, pstride, l1))
            fo.append(
                local_error(current[:, None].expand_as(preds[:, 1:]), preds[:, 1:], patch, pstride, l1)
            )
        bwd.append(np.stack(b_err, axis=1))
        ts.extend(t for _, _, t in chunk)
        tracks.extend(tid for _, tid, _ in chunk)
    if not wins:
        empty = np.zeros((0, steps))
        return WindowErrors(np.zeros(0, int), np.zeros(0, int), np.zeros(0), empty, empty.copy())
    return WindowErrors(
        t=np.asarray(ts, dtype=np.int64),
        track=np.asarray(tracks, dtype=np.int64),
        vad=np.concatenate(vad),
        backward=np.concatenate(bwd),
        fonly=np.concatenate(fo),
    )


def series_from_errors(
    errors: WindowErrors,
    video_id: str,
    frame_count: int,
    n: int,
    stride: int,
    alphas: Sequence[int],
    max_step: int = 6,
    normalize: bool = False,
) -> dict[str, dict[int, ScoreSeries]]:
    """Reduce window errors to per-frame series (max over objects, 0 where none).

    Returns ``{"fb": {0: vad, a: vaa...}, "fonly": {a: ...}}`` keyed by step.
    """
    start = min(n * stride, frame_count)
    per_frame_vad = np.zeros(frame_count)
    per_frame_b = np.zeros((frame_count, max_step))
    per_frame_f = np.zeros((frame_count, max_step))
    if len(errors.t):
        # cumulative max over steps gives the anticipation score for every alpha at once
        b_cum = np.maximum.accumulate(errors.backward, axis=1)
        f_cum = np.maximum.accumulate(errors.fonly, axis=1)
        np.maximum.at(per_frame_vad, errors.t, errors.vad)
        np.maximum.at(per_frame_b, errors.t, b_cum)
        np.maximum.at(per_frame_f, errors.t, f_cum)
    if frame_count <= n * stride:
        log.warning("%s: %d frames do not cover the %d-frame warm-up", video_id, frame_count, n * stride)
    out: dict[str, dict[int, ScoreSeries]] = {"fb": {}, "fonly": {}}
    vad = per_frame_vad[start:]
    out["fb"][0] = ScoreSeries(video_id, 0, start, _norm(vad) if normalize else vad, stride)
    for a in alphas:
        if not 1 <= a <= max_step:
            raise ValueError(f"alpha={a} outside the forward horizon [1, {max_step}]")
        stop = max(frame_count - a * stride, start)
        for mode, table in (("fb", per_frame_b), ("fonly", per_frame_f)):
            vals = table[start:stop, a - 1]
            out[mode][a] = ScoreSeries(video_id, a * stride, start, _norm(vals) if normalize else vals, stride)
    return out


def _norm(v: np.ndarray) -> np.ndarray:
    if v.size == 0 or v.max() == v.min():
        return np.zeros_like(v)
    return (v - v.min()) / (v.max() - v.min())


def score_video(
    clip: corpus.Clip,
    lm: LoadedModel,
    alphas: Sequence[int],
    scene: corpus.SceneImage | None = None,
    bank: corpus.CropBank | None = None,
    normalize: bool = False,
) -> dict[str, dict[int, ScoreSeries]]:
    """Detection and anticipation series of one clip from a single forward sweep."""
    cfg = lm.config
    if bank is None:
        if scene is None:
            raise KeyError(f"scene {clip.scene_id!r} not supplied")
        bank = corpus.CropBank(
            [clip], {clip.scene_id: scene}, lm.mean_color, cfg.model.crop_size, cfg.crop.margin, cfg.crop.min_side
        )
    errors = window_errors(lm, bank, clip.video_id)
    return series_from_errors(
        errors, clip.video_id, clip.frame_count, cfg.model.n_inputs, cfg.stride, alphas,
        lm.model.max_step, normalize,
    )


# --------------------------------------------------------------------------
# dumps
# --------------------------------------------------------------------------


def write_dumps(
    out_dir: str | Path,
    results: dict[str, dict[str, dict[int, ScoreSeries]]],
    checkpoint_id: str,
    stride: int,
    modes: Sequence[str] = MODES,
) -> Path:
    """Write ``<mode>/<video>/alpha_<k>.txt`` files plus ``manifest.json``.

    ``results`` maps video id to the output of :func:`score_video`.
    """
    out = Path(out_dir)
    entries = []
    for vid in sorted(results):
        for mode in modes:
            for a, series in sorted(results[vid].get(mode, {}).items()):
                rel = Path(mode) / vid / f"alpha_{a}.txt"
                path = out / rel
                path.parent.mkdir(parents=True, exist_ok=True)
                frames = np.arange(series.start_offset, series.end)
                path.write_text("".join(f"{f} {v!r}\n" for f, v in zip(frames, series.values.tolist())))
                entries.append(
                    {
                        "video_id": vid,
                        "mode": mode,
                        "alpha": a,
                        "alpha_frames": series.alpha,
                        "start_offset": series.start_offset,
                        "file": rel.as_posix(),
                    }
                )
    # the detection series is shared by both scorers
    manifest = {"checkpoint": checkpoint_id, "stride": stride, "modes": list(modes), "series": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def read_dumps(dump_dir: str | Path) -> tuple[dict, dict[str, dict[int, list[ScoreSeries]]]]:
    """``(manifest, {mode: {alpha: [ScoreSeries...]}})``; fb's alpha 0 is copied into fonly."""
    root = Path(dump_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    stride = int(manifest["stride"])
    table: dict[str, dict[int, list[ScoreSeries]]] = {}
    for e in manifest["series"]:
        path = root / e["file"]
        vals = []
        with path.open() as fh:
            for line in fh:
                if line.strip():
                    vals.append(float(line.split()[1]))
        s = ScoreSeries(e["video_id"], int(e["alpha_frames"]), int(e["start_offset"]), np.asarray(vals), stride)
        table.setdefault(e["mode"], {}).setdefault(int(e["alpha"]), []).append(s)
    if "fb" in table and 0 in table["fb"] and "fonly" in table:
        table["fonly"].setdefault(0, table["fb"][0])
    return manifest, table
