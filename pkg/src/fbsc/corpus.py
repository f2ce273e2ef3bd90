"""Dataset ingestion and object-centric clip windows.

On-disk layout::

    root/{train,test}/<video_id>/frames/%06d.png
    root/{train,test}/<video_id>/labels.txt      one 0/1 per line, test only
    root/{train,test}/<video_id>/tracks.csv      frame_index,track_id,x1,y1,x2,y2
    root/scenes/<scene_id>.png
    root/scene_map.csv                           video_id,scene_id

Box coordinates are pixels with exclusive upper corners.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)

TRACK_HEADER = ("frame_index", "track_id", "x1", "y1", "x2", "y2")


class WindowUnavailable(LookupError):
    """A track lacks a box at one of the frames a window needs."""


def read_image(path: str | Path) -> np.ndarray:
    """Load an RGB image as ``uint8 (H, W, 3)``."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_image(path: str | Path, array: np.ndarray) -> None:
    a = np.asarray(array)
    if a.dtype != np.uint8:
        a = np.clip(np.rint(a * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(a, mode="RGB").save(path, format="PNG")


@dataclass(frozen=True)
class FrameRef:
    video_id: str
    frame_index: int
    path: Path

    @property
    def image(self) -> np.ndarray:
        return read_image(self.path).astype(np.float32) / 255.0


@dataclass
class TrackTable:
    """Per-frame boxes with track identities.

    ``rows`` is an ``(N, 6)`` float array of
    ``frame_index, track_id, x1, y1, x2, y2`` in file order.
    """

    rows: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64).reshape(-1, 6)
        if rows.size:
            if not ((rows[:, 2] < rows[:, 4]).all() and (rows[:, 3] < rows[:, 5]).all()):
                raise ValueError("track boxes need x1<x2 and y1<y2")
            keys = rows[:, :2].astype(np.int64)
            if len(np.unique(keys, axis=0)) != len(keys):
                raise ValueError("duplicate (frame_index, track_id) rows")
        self.rows = rows

    def __len__(self) -> int:
        return len(self.rows)

    @cached_property
    def _index(self) -> dict[tuple[int, int], np.ndarray]:
        return {(int(r[0]), int(r[1])): r[2:] for r in self.rows}

    def track_ids(self) -> list[int]:
        return sorted({int(t) for t in self.rows[:, 1]})

    def frames_of(self, track_id: int) -> np.ndarray:
        sel = self.rows[:, 1] == track_id
        return np.sort(self.rows[sel, 0].astype(np.int64))

    def box(self, frame_index: int, track_id: int) -> np.ndarray | None:
        return self._index.get((int(frame_index), int(track_id)))

    def boxes_at(self, frame_index: int) -> np.ndarray:
        sel = self.rows[:, 0] == frame_index
        return self.rows[sel][:, 2:]

    def clamped(self, width: int, height: int) -> "TrackTable":
        rows = self.rows.copy()
        rows[:, [2, 4]] = np.clip(rows[:, [2, 4]], 0, width)
        rows[:, [3, 5]] = np.clip(rows[:, [3, 5]], 0, height)
        keep = (rows[:, 2] < rows[:, 4]) & (rows[:, 3] < rows[:, 5])
        return TrackTable(rows[keep])

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrackTable":
        path = Path(path)
        rows = []
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != TRACK_HEADER:
                raise ValueError(f"{path}: bad header {header!r}, expected {','.join(TRACK_HEADER)}")
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                try:
                    if len(rec) != 6:
                        raise ValueError(f"expected 6 fields, got {len(rec)}")
                    fi, tid = int(rec[0]), int(rec[1])
                    x1, y1, x2, y2 = (float(v) for v in rec[2:])
                    if fi < 0:
                        raise ValueError("negative frame_index")
                    if not (x1 < x2 and y1 < y2):
                        raise ValueError("box needs x1<x2 and y1<y2")
                except ValueError as exc:
                    raise ValueError(f"{path}: malformed track row {lineno}: {exc}") from None
                rows.append((fi, tid, x1, y1, x2, y2))
        return cls(np.asarray(rows, dtype=np.float64).reshape(-1, 6))

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACK_HEADER)
            for r in self.rows:
                w.writerow([int(r[0]), int(r[1])] + [_fmt_coord(v) for v in r[2:]])


def _fmt_coord(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class SceneImage:
    scene_id: str
    background: np.ndarray  # uint8 (H, W, 3)


@dataclass
class Clip:
    video_id: str
    scene_id: str
    frame_count: int
    tracks: TrackTable
    frames_dir: Path
    labels: np.ndarray | None = None
    width: int = 0
    height: int = 0

    def __post_init__(self):
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.frame_count,):
                raise ValueError(
                    f"{self.video_id}: {labels.size} labels for {self.frame_count} frames"
                )
            if not np.isin(labels, (0, 1)).all():
                raise ValueError(f"{self.video_id}: labels must be 0/1")
            self.labels = labels.astype(np.uint8)

    def frame_path(self, index: int) -> Path:
        return self.frames_dir / f"{index:06d}.png"

    def frame(self, index: int) -> np.ndarray:
        """Frame ``index`` as ``uint8 (H, W, 3)``."""
        if not 0 <= index < self.frame_count:
            raise IndexError(f"{self.video_id}: frame {index} out of range")
        return read_image(self.frame_path(index))

    def frame_ref(self, index: int) -> FrameRef:
        return FrameRef(self.video_id, index, self.frame_path(index))


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------


def read_scene_map(root: str | Path) -> dict[str, str]:
    path = Path(root) / "scene_map.csv"
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        return {row["video_id"]: row["scene_id"] for row in reader}


def load_scenes(root: str | Path) -> dict[str, SceneImage]:
    scenes = {}
    for p in sorted((Path(root) / "scenes").glob("*.png")):
        scenes[p.stem] = SceneImage(p.stem, read_image(p))
    return scenes


def read_labels(path: str | Path) -> np.ndarray:
    values = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line not in ("0", "1"):
                raise ValueError(f"{path}: line {lineno}: label must be 0 or 1, got {line!r}")
            values.append(int(line))
    return np.asarray(values, dtype=np.uint8)


def write_labels(path: str | Path, labels: Iterable[int]) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def label_files(root: str | Path, split: str) -> list[Path]:
    """Label files present under a split (existence check only, nothing is opened)."""
    return sorted(Path(root, split).glob("*/labels.txt"))


def load_dataset(root: str | Path, split: str, with_labels: bool = True) -> list[Clip]:
    """Read every video of ``split`` (``"train"`` or ``"test"``), sorted by id.

    Training clips never carry labels: a stray ``labels.txt`` in the train split
    is ignored (with a warning) and never opened. ``with_labels=False`` skips
    the test labels too, for scoring.
    """
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', not {split!r}")
    root = Path(root)
    split_dir = root / split
    if not split_dir.is_dir():
        raise FileNotFoundError(f"no {split} split under {root}")
    scene_map = read_scene_map(root)
    clips = []
    for vdir in sorted(p for p in split_dir.iterdir() if p.is_dir()):
        vid = vdir.name
        frames_dir = vdir / "frames"
        names = sorted(p.name for p in frames_dir.glob("*.png"))
        expected = [f"{i:06d}.png" for i in range(len(names))]
        if names != expected:
            raise ValueError(f"{vid}: frames must be numbered 000000.png .. contiguously")
        if not names:
            raise ValueError(f"{vid}: no frames")
        with Image.open(frames_dir / names[0]) as im:
            width, height = im.size
        tracks = TrackTable.read_csv(vdir / "tracks.csv")
        if len(tracks) and tracks.rows[:, 0].max() >= len(names):
            raise ValueError(f"{vid}: track rows reference frames beyond {len(names)}")
        tracks = tracks.clamped(width, height)
        labels_path = vdir / "labels.txt"
        labels = None
        if split == "test" and with_labels:
            if not labels_path.exists():
                raise FileNotFoundError(f"{vid}: missing label file {labels_path}")
            labels = read_labels(labels_path)
        elif split == "train" and labels_path.exists():
            log.warning("%s: ignoring labels.txt in the train split", vid)
        if vid not in scene_map:
            raise KeyError(f"{vid}: not listed in scene_map.csv")
        clips.append(
            Clip(
                video_id=vid,
                scene_id=scene_map[vid],
                frame_count=len(names),
                tracks=tracks,
                frames_dir=frames_dir,
                labels=labels,
                width=width,
                height=height,
            )
        )
    return clips


def dataset_mean_color(clips: Sequence[Clip], every: int = 10) -> np.ndarray:
    """Per-channel mean in ``[0, 1]`` over every ``every``-th frame of ``clips``."""
    total = np.zeros(3)
    count = 0
    for clip in clips:
        for i in range(0, clip.frame_count, every):
            img = clip.frame(i).astype(np.float64)
            total += img.reshape(-1, 3).sum(axis=0)
            count += img.shape[0] * img.shape[1]
    if count == 0:
        return np.full(3, 0.5)
    return total / count / 255.0


# --------------------------------------------------------------------------
# crops
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CropGeometry:
    """Square region ``[x0, x0+side) x [y0, y0+side)`` of a frame."""

    x0: int
    y0: int
    side: int


def crop_geometry(
    box: Sequence[float],
    width: int,
    height: int,
    margin: float = 1.2,
    min_side: int = 0,
) -> CropGeometry:
    """Square around the box centre, side ``max(w, h) * margin``, shifted inside the frame."""
    x1, y1, x2, y2 = (float(v) for v in box)
    side = max(max(x2 - x1, y2 - y1) * margin, float(min_side))
    side_px = int(min(max(round(side), 1), width, height))
    cx, cy = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
    x0 = int(math.floor(cx - side_px / 2.0 + 0.5))
    y0 = int(math.floor(cy - side_px / 2.0 + 0.5))
    x0 = min(max(x0, 0), width - side_px)
    y0 = min(max(y0, 0), height - side_px)
    return CropGeometry(x0, y0, side_px)


def crop_image(image: np.ndarray, geom: CropGeometry, size: int) -> np.ndarray:
    """Cut ``geom`` out of a ``uint8`` image and resize to ``size x size`` (bilinear)."""
    sub = image[geom.y0 : geom.y0 + geom.side, geom.x0 : geom.x0 + geom.side]
    if geom.side == size:
        return np.ascontiguousarray(sub)
    return np.asarray(
        Image.fromarray(np.ascontiguousarray(sub)).resize((size, size), Image.BILINEAR),
        dtype=np.uint8,
    )


def mask_boxes(
    image: np.ndarray, geom: CropGeometry, boxes: np.ndarray, fill: np.ndarray
) -> np.ndarray:
    """Copy of the ``geom`` region with every box intersecting it painted ``fill``."""
    sub = image[geom.y0 : geom.y0 + geom.side, geom.x0 : geom.x0 + geom.side].copy()
    fill_u8 = np.clip(np.rint(np.asarray(fill, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    for x1, y1, x2, y2 in np.asarray(boxes).reshape(-1, 4):
        ax1 = max(int(math.floor(x1)) - geom.x0, 0)
        ay1 = max(int(math.floor(y1)) - geom.y0, 0)
        ax2 = min(int(math.ceil(x2)) - geom.x0, geom.side)
        ay2 = min(int(math.ceil(y2)) - geom.y0, geom.side)
        if ax1 < ax2 and ay1 < ay2:
            sub[ay1:ay2, ax1:ax2] = fill_u8
    return sub


@dataclass
class WindowSample:
    """Input and target crops of one track around time ``t``.

    ``inputs`` cover frames ``t - n*stride, ..., t - stride`` and ``targets``
    cover ``t, t + stride, ...``. Crops are ``float32 (k, S, S, 3)`` in [0, 1].
    The scene crop is taken at the geometry of the last input frame.
    """

    video_id: str
    track_id: int
    t: int
    stride: int
    input_frames: tuple[int, ...]
    target_frames: tuple[int, ...]
    inputs: np.ndarray
    targets: np.ndarray
    scene_geometry: CropGeometry
    scene_boxes: np.ndarray
    scene: np.ndarray | None = None

    @property
    def frame_indices(self) -> tuple[int, ...]:
        return self.input_frames + self.target_frames


def window_frames(t: int, n: int, horizon: int, stride: int) -> tuple[list[int], list[int]]:
    inputs = [t - (n - k) * stride for k in range(n)]
    targets = [t + k * stride for k in range(horizon)]
    return inputs, targets


def extract_window(
    clip: Clip,
    track_id: int,
    t: int,
    n: int = 8,
    horizon: int = 7,
    stride: int = 12,
    crop_size: int = 256,
    margin: float = 1.2,
    min_side: int = 0,
    frame_loader=None,
) -> WindowSample:
    """Crop ``n`` observed and ``horizon`` target frames of one track.

    Every crop is registered to that frame's own box. Raises
    :class:`WindowUnavailable` when the track misses a required frame.
    """
    inputs_idx, targets_idx = window_frames(t, n, horizon, stride)
    load = frame_loader or clip.frame
    crops = []
    geoms = []
    for fi in inputs_idx + targets_idx:
        if not 0 <= fi < clip.frame_count:
            raise WindowUnavailable(f"{clip.video_id}: frame {fi} outside video")
        box = clip.tracks.box(fi, track_id)
        if box is None:
            raise WindowUnavailable(f"{clip.video_id}: track {track_id} has no box at frame {fi}")
        geom = crop_geometry(box, clip.width, clip.height, margin, min_side)
        geoms.append(geom)
        crops.append(crop_image(load(fi), geom, crop_size))
    arr = np.stack(crops).astype(np.float32) / 255.0
    last = inputs_idx[-1]
    return WindowSample(
        video_id=clip.video_id,
        track_id=track_id,
        t=t,
        stride=stride,
        input_frames=tuple(inputs_idx),
        target_frames=tuple(targets_idx),
        inputs=arr[:n],
        targets=arr[n:],
        scene_geometry=geoms[n - 1],
        scene_boxes=clip.tracks.boxes_at(last),
    )


def scene_crop(
    scene: SceneImage | None,
    window: WindowSample,
    fill: np.ndarray,
    crop_size: int | None = None,
) -> np.ndarray:
    """Background crop co-located with the window, tracked objects masked with ``fill``."""
    if scene is None:
        raise KeyError(f"unknown scene for video {window.video_id}")
    size = crop_size or window.inputs.shape[1]
    masked = mask_boxes(scene.background, window.scene_geometry, window.scene_boxes, fill)
    geom = CropGeometry(0, 0, window.scene_geometry.side)
    return crop_image(masked, geom, size).astype(np.float32) / 255.0


class CoverageLog:
    """Counts of windows produced and skipped."""

    def __init__(self):
        self.used = 0
        self.skipped: list[tuple[str, int, int, str]] = []

    def __repr__(self) -> str:
        return f"CoverageLog(used={self.used}, skipped={len(self.skipped)})"


def iter_windows(
    clip: Clip,
    ts: Iterable[int] | None = None,
    coverage: CoverageLog | None = None,
    **kwargs,
):
    """Yield every extractable window of every track; misses go to ``coverage``."""
    n = kwargs.get("n", 8)
    stride = kwargs.get("stride", 12)
    for tid in clip.tracks.track_ids():
        frames = clip.tracks.frames_of(tid)
        times = ts if ts is not None else range(int(frames.min()) + n * stride, int(frames.max()) + 1)
        for t in times:
            try:
                w = extract_window(clip, tid, t, **kwargs)
            except WindowUnavailable as exc:
                if coverage is not None:
                    coverage.skipped.append((clip.video_id, tid, t, str(exc)))
                continue
            if coverage is not None:
                coverage.used += 1
            yield w


@dataclass
class TrackCrops:
    frames: np.ndarray  # sorted frame indices with a box
    crops: np.ndarray  # uint8 (F, S, S, 3)
    scenes: np.ndarray  # uint8 (F, S, S, 3), objects masked

    def __post_init__(self):
        self._pos = {int(f): k for k, f in enumerate(self.frames)}

    def positions(self, frame_indices: Sequence[int]) -> list[int] | None:
        try:
            return [self._pos[int(f)] for f in frame_indices]
        except KeyError:
            return None


class CropBank:
    """Every track crop (and its masked scene crop) of a set of clips, held in memory.

    Each frame is decoded once. Windows then reduce to index lookups, which is
    what training and scoring iterate over.
    """

    def __init__(
        self,
        clips: Sequence[Clip],
        scenes: dict[str, SceneImage],
        fill: np.ndarray,
        crop_size: int,
        margin: float = 1.2,
        min_side: int = 0,
    ):
        self.crop_size = crop_size
        self.clips = {c.video_id: c for c in clips}
        self.tracks: dict[str, dict[int, TrackCrops]] = {}
        for clip in clips:
            if clip.scene_id not in scenes:
                raise KeyError(f"{clip.video_id}: unknown scene {clip.scene_id!r}")
            self.tracks[clip.video_id] = self._build(
                clip, scenes[clip.scene_id], fill, crop_size, margin, min_side
            )

    @staticmethod
    def _build(clip, scene, fill, size, margin, min_side):
        rows = clip.tracks.rows
        per_track: dict[int, list] = {tid: [[], [], []] for tid in clip.tracks.track_ids()}
        if not len(rows):
            return {}
        by_frame: dict[int, np.ndarray] = {}
        for fi in np.unique(rows[:, 0].astype(np.int64)):
            by_frame[int(fi)] = rows[rows[:, 0] == fi]
        for fi in sorted(by_frame):
            image = clip.frame(fi)
            frame_rows = by_frame[fi]
            boxes = frame_rows[:, 2:]
            for r in frame_rows:
                geom = crop_geometry(r[2:], clip.width, clip.height, margin, min_side)
                masked = mask_boxes(scene.background, geom, boxes, fill)
                slot = per_track[int(r[1])]
                slot[0].append(fi)
                slot[1].append(crop_image(image, geom, size))
                slot[2].append(crop_image(masked, CropGeometry(0, 0, geom.side), size))
        return {
            tid: TrackCrops(np.asarray(f, dtype=np.int64), np.stack(c), np.stack(s))
            for tid, (f, c, s) in per_track.items()
            if f
        }

    def windows(self, n: int, horizon: int, stride: int, video_ids=None):
        """All ``(video_id, track_id, t)`` with boxes on every strided frame."""
        out = []
        for vid in sorted(self.tracks if video_ids is None else video_ids):
            for tid, tc in sorted(self.tracks[vid].items()):
                have = set(int(f) for f in tc.frames)
                for t in tc.frames:
                    t = int(t)
                    ins, tgs = window_frames(t, n, horizon, stride)
                    if all(f in have for f in ins + tgs):
                        out.append((vid, tid, t))
        return out

    def gather(self, video_id: str, track_id: int, frame_indices: Sequence[int], scene_at: int = -1):
        """``(crops, scene_crop)`` as uint8 arrays; the scene crop is taken at ``frame_indices[scene_at]``."""
        tc = self.tracks[video_id][track_id]
        pos = tc.positions(frame_indices)
        if pos is None:
            raise WindowUnavailable(f"{video_id}: track {track_id} misses a frame")
        return tc.crops[pos], tc.scenes[pos[scene_at]]
