"""Deterministic multi-scene sprite videos written in the corpus layout.

Each scene has a textured background and a rule set (allowed sprite types,
speed range, optional forbidden band). Normal objects obey their scene's
rules; scheduled anomalies break exactly one rule for exactly their span:

``appearance``  an object turns into a sprite type that no scene allows
``speed``       an object moves ``factor`` times faster
``scene``       an object drawn as a type allowed elsewhere but not here
``zone``        an object curves out of its lane into the forbidden band and
                stays there; the curve is the visible precursor

Labels are the schedule; :func:`rule_labels` recomputes them from the
simulated object states as an independent check.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageFilter

from .corpus import TrackTable, write_image, write_labels


@dataclass
class SpriteType:
    shape: str  # circle | square | diamond | triangle | cross | ring
    color: tuple[float, float, float]
    radius: float = 5.0


@dataclass
class SceneRule:
    allowed: list[str]
    speed: tuple[float, float] = (0.8, 1.6)
    motion: str = "bounce"  # bounce | lanes
    lanes: list[float] = field(default_factory=list)  # lane centre rows for "lanes"
    zone: tuple[float, float] | None = None  # forbidden band [y0, y1) of centre rows


@dataclass
class Anomaly:
    video: str  # test video id
    start: int
    end: int
    kind: str  # appearance | speed | scene | zone
    obj: int = 0
    sprite: str = ""
    factor: float = 3.0


@dataclass
class ScenarioSpec:
    name: str
    scene_count: int
    frames: int
    resolution: int = 128
    train_videos: int = 4  # per scene
    test_videos: int = 4  # per scene
    objects: int = 3  # normal objects per video
    sprites: dict[str, SpriteType] = field(default_factory=dict)
    rules: list[SceneRule] = field(default_factory=list)
    anomalies: list[Anomaly] = field(default_factory=list)
    seed: int = 0
    stride: int = 2  # temporal stride the benchmark is meant to run at
    wall: float = 0.0  # extra inset of the bounce walls, keeps object crops off the frame border
    texture: float = 0.05  # background texture contrast
    zone_contrast: float = 1.0  # stripe amplitude of forbidden bands, 1 = full yellow/black

    def video_ids(self, split: str) -> list[str]:
        per = self.train_videos if split == "train" else self.test_videos
        return [f"{split}_s{s}_{k:02d}" for s in range(self.scene_count) for k in range(per)]

    @staticmethod
    def scene_of(video_id: str) -> int:
        return int(video_id.split("_")[1][1:])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        d["sprites"] = {k: SpriteType(**{**v, "color": tuple(v["color"])}) for k, v in d["sprites"].items()}
        d["rules"] = [
            SceneRule(**{**r, "speed": tuple(r["speed"]), "zone": None if r["zone"] is None else tuple(r["zone"])})
            for r in d["rules"]
        ]
        d["anomalies"] = [Anomaly(**a) for a in d["anomalies"]]
        return cls(**d)

    # ------------------------------------------------------------------
    def validate(self) -> None:
        if len(self.rules) != self.scene_count:
            raise ValueError("one rule set per scene is required")
        for r in self.rules:
            unknown = set(r.allowed) - set(self.sprites)
            if unknown:
                raise ValueError(f"rules reference unknown sprites {sorted(unknown)}")
            if r.motion == "lanes" and not r.lanes:
                raise ValueError("lane motion needs lanes")
        test_ids = set(self.video_ids("test"))
        for a in self.anomalies:
            if a.video not in test_ids:
                raise ValueError(f"anomaly scheduled on {a.video!r}, not a test video (training stays normal)")
            if not 0 <= a.start < a.end <= self.frames:
                raise ValueError(f"anomaly span [{a.start}, {a.end}) outside video length {self.frames}")
            if not 0 <= a.obj < self.objects:
                raise ValueError(f"anomaly object {a.obj} outside [0, {self.objects})")
            rule = self.rules[self.scene_of(a.video)]
            if a.kind == "appearance":
                if any(a.sprite in r.allowed for r in self.rules):
                    raise ValueError(f"appearance anomaly {a.sprite!r} is normal in some scene")
            elif a.kind == "scene":
                if a.sprite in rule.allowed:
                    raise ValueError(f"{a.sprite!r} is normal in the scene of {a.video}")
            elif a.kind == "speed":
                if a.factor * rule.speed[0] <= rule.speed[1]:
                    raise ValueError("speed factor does not leave the normal range")
            elif a.kind == "zone":
                if rule.zone is None or rule.motion != "lanes":
                    raise ValueError("zone anomalies need a lane scene with a forbidden band")
                if a.end != self.frames:
                    raise ValueError("zone anomalies last until the end of the video")
                if a.start - precursor_frames(self, a) < 1:
                    raise ValueError("zone anomaly starts before its precursor fits")
            else:
                raise ValueError(f"unknown anomaly kind {a.kind!r}")
            if a.kind in ("appearance", "scene") and a.sprite not in self.sprites:
                raise ValueError(f"unknown sprite {a.sprite!r}")


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------


def sprite_mask(sprite: SpriteType, cx: float, cy: float, height: int, width: int) -> np.ndarray:
    """Boolean mask of a sprite centred at ``(cx, cy)``; pixel centres at +0.5."""
    r = sprite.radius
    x0, x1 = max(int(math.floor(cx - r - 1)), 0), min(int(math.ceil(cx + r + 1)), width)
    y0, y1 = max(int(math.floor(cy - r - 1)), 0), min(int(math.ceil(cy + r + 1)), height)
    mask = np.zeros((height, width), dtype=bool)
    if x0 >= x1 or y0 >= y1:
        return mask
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dx = xx + 0.5 - cx
    dy = yy + 0.5 - cy
    shape = sprite.shape
    if shape == "circle":
        m = dx * dx + dy * dy <= r * r
    elif shape == "square":
        m = np.maximum(np.abs(dx), np.abs(dy)) <= r * 0.85
    elif shape == "diamond":
        m = np.abs(dx) + np.abs(dy) <= r
    elif shape == "triangle":
        m = (dy <= r * 0.8) & (np.abs(dx) <= (dy + r) * 0.6)
    elif shape == "cross":
        t = r / 3.0
        m = ((np.abs(dx) <= t) & (np.abs(dy) <= r)) | ((np.abs(dy) <= t) & (np.abs(dx) <= r))
    elif shape == "ring":
        d2 = dx * dx + dy * dy
        m = (d2 <= r * r) & (d2 >= (0.55 * r) ** 2)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    mask[y0:y1, x0:x1] = m
    return mask


def mask_box(mask: np.ndarray) -> tuple[int, int, int, int]:
    """Tight ``(x1, y1, x2, y2)`` bounds with exclusive upper corner."""
    ys, xs = np.nonzero(mask)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


HAZARD = np.array([0.95, 0.8, 0.1])
HAZARD_DARK = np.array([0.08, 0.08, 0.08])


def scene_background(spec: ScenarioSpec, scene: int) -> np.ndarray:
    """Float ``(H, W, 3)`` texture, distinct per scene."""
    res = spec.resolution
    rng = np.random.default_rng(_seed(spec.seed, "scene", scene))
    hue = scene / max(spec.scene_count, 1)
    base = 0.45 + 0.15 * np.array(
        [math.cos(2 * math.pi * hue), math.cos(2 * math.pi * (hue - 1 / 3)), math.cos(2 * math.pi * (hue - 2 / 3))]
    )
    yy, xx = np.mgrid[0:res, 0:res].astype(np.float64)
    theta = math.pi * scene / max(spec.scene_count, 1)
    period = 9.0 + 3.0 * (scene % 3)
    grating = np.sin(2 * math.pi * (xx * math.cos(theta) + yy * math.sin(theta)) / period)
    noise = rng.random((res, res))
    noise_img = Image.fromarray((noise * 255).astype(np.uint8), mode="L").filter(ImageFilter.GaussianBlur(2.0))
    smooth = np.asarray(noise_img, dtype=np.float64) / 255.0
    smooth = (smooth - smooth.mean()) / (smooth.std() + 1e-9)
    img = base[None, None, :] + spec.texture * (grating[..., None] + smooth[..., None])
    rule = spec.rules[scene]
    if rule.zone is not None:
        y0, y1 = rule.zone
        band = (yy >= y0) & (yy < y1)
        # diagonal hazard stripes, never seen in normal lane crops
        stripes = 2.0 * (np.floor((xx + yy) / 6.0) % 2)[band] - 1.0
        mid, half = (HAZARD + HAZARD_DARK) / 2, (HAZARD - HAZARD_DARK) / 2
        img[band] = mid + spec.zone_contrast * stripes[:, None] * half
    return np.clip(img, 0.0, 1.0)


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


@dataclass
class GroundTruth:
    video_id: str
    scene: int
    labels: np.ndarray  # (T,) from the schedule
    present: np.ndarray  # (T, K) bool
    pos: np.ndarray  # (T, K, 2) centre x, y
    vel: np.ndarray  # (T, K, 2) velocity applied from frame t to t+1
    kind: list[list[str]]  # (T, K) sprite type names
    precursor_start: dict[int, int] = field(default_factory=dict)  # obj -> first precursor frame


def _seed(seed: int, *parts) -> int:
    h = hashlib.sha256(":".join(str(p) for p in (seed, *parts)).encode()).digest()
    return int.from_bytes(h[:8], "little")


def _bounds(spec: ScenarioSpec, sprite: SpriteType) -> tuple[float, float]:
    margin = sprite.radius + 1.5 + spec.wall
    return margin, spec.resolution - margin


def _bounce_path(x, y, vx, vy, frames, lo, hi, lock_y=False):
    """Positions/velocities of a point bouncing inside ``[lo, hi]^2``."""
    pos = np.zeros((frames, 2))
    vel = np.zeros((frames, 2))
    for t in range(frames):
        pos[t] = (x, y)
        vel[t] = (vx, vy)
        x, y = x + vx, y + vy
        if x < lo:
            x, vx = 2 * lo - x, -vx
        elif x > hi:
            x, vx = 2 * hi - x, -vx
        if not lock_y:
            if y < lo:
                y, vy = 2 * lo - y, -vy
            elif y > hi:
                y, vy = 2 * hi - y, -vy
    return pos, vel


def precursor_frames(spec: ScenarioSpec, a: Anomaly) -> int:
    """Upper bound (frames) of the curve that leads into the forbidden band."""
    rule = spec.rules[spec.scene_of(a.video)]
    d = _zone_distance(rule)
    return int(math.ceil((math.pi / 4 + 0.5) * d / rule.speed[0])) + 1


def min_precursor_frames(spec: ScenarioSpec, a: Anomaly) -> int:
    rule = spec.rules[spec.scene_of(a.video)]
    d = _zone_distance(rule)
    return int(math.floor((math.pi / 4 + 0.5) * d / rule.speed[1]))


def _zone_distance(rule: SceneRule) -> float:
    y0, y1 = rule.zone
    return min(min(abs(l - y0), abs(l - y1)) for l in rule.lanes)


def _zone_path(spec, rule, sprite, lane, speed, direction, onset, frames, rng):
    """Lane motion, then a quarter-circle turn and a straight run into the band.

    The centre crosses the band edge half a frame before ``onset``; inside the
    band the object bounces vertically until the end of the video.
    """
    lo, hi = _bounds(spec, sprite)
    y0, y1 = rule.zone
    down = lane < y0
    edge = y0 if down else y1
    dist = abs(edge - lane)
    radius = dist / 2.0
    arc = math.pi / 2 * radius
    straight = dist - radius
    total = (arc + straight) / speed  # frames from turn start to the crossing
    t_cross = onset - 0.5
    t_turn = t_cross - total
    sy = 1.0 if down else -1.0
    # horizontal position at turn start: leave room for the arc
    x_turn = rng.uniform(lo + radius + 2, hi - radius - 2)

    def state(t: float):
        if t <= t_turn:
            return None
        s = (t - t_turn) * speed  # arc length travelled since the turn started
        if s <= arc:
            phi = s / radius
            x = x_turn + direction * radius * math.sin(phi)
            y = lane + sy * radius * (1 - math.cos(phi))
            v = (direction * speed * math.cos(phi), sy * speed * math.sin(phi))
            return x, y, v
        x = x_turn + direction * radius
        y = lane + sy * (radius + (s - arc))
        return x, y, (0.0, sy * speed)

    pos = np.zeros((frames, 2))
    vel = np.zeros((frames, 2))
    first = int(math.floor(t_turn)) + 1  # first integer frame on the curve
    # lane motion before the turn: run the bounce backwards from the turn start
    back_pos, back_vel = _bounce_path(x_turn, lane, -direction * speed, 0.0, first + 1 + 1, lo, hi, lock_y=True)
    # back_pos[k] is the state at time t_turn - k; sample integer frames
    frac = t_turn - math.floor(t_turn)
    for t in range(first):
        dt = t_turn - t  # time before the turn start (>= frac)
        k = int(math.floor(dt))
        p0, v0 = back_pos[k], back_vel[k]
        rem = dt - k
        x = p0[0] + v0[0] * rem
        # reflect within bounds if the fractional step crosses a wall
        if x < lo:
            x = 2 * lo - x
        elif x > hi:
            x = 2 * hi - x
        pos[t] = (x, lane)
        vx = -(v0[0] if lo <= p0[0] + v0[0] * rem <= hi else -v0[0])
        vel[t] = (vx, 0.0)
    for t in range(first, onset):
        x, y, v = state(float(t))
        pos[t] = (x, y)
        vel[t] = v
    # inside the band: vertical bounce in [y0 + m, y1 - m]
    m = 0.0
    blo, bhi = y0 + m, y1 - 1e-6
    y = lane + sy * dist + sy * 0.5 * speed
    vy = sy * speed
    x = x_turn + direction * radius
    for t in range(onset, frames):
        pos[t] = (x, y)
        vel[t] = (0.0, vy)
        y += vy
        if y < blo:
            y, vy = 2 * blo - y, -vy
        elif y >= bhi:
            y, vy = 2 * bhi - y, -vy
    _ = frac
    return pos, vel, first


def simulate(spec: ScenarioSpec, video_id: str) -> GroundTruth:
    scene = spec.scene_of(video_id)
    rule = spec.rules[scene]
    T = spec.frames
    rng = np.random.default_rng(_seed(spec.seed, "video", video_id))
    anomalies = [a for a in spec.anomalies if a.video == video_id]
    K = spec.objects
    present = np.zeros((T, K), dtype=bool)
    pos = np.zeros((T, K, 2))
    vel = np.zeros((T, K, 2))
    kind = [[""] * K for _ in range(T)]
    precursor: dict[int, int] = {}

    def normal_object(k, sprite_name):
        sprite = spec.sprites[sprite_name]
        lo, hi = _bounds(spec, sprite)
        speed = rng.uniform(*rule.speed)
        if rule.motion == "lanes":
            lane = rule.lanes[rng.integers(len(rule.lanes))]
            direction = 1.0 if rng.random() < 0.5 else -1.0
            x = rng.uniform(lo, hi)
            return _bounce_path(x, lane, direction * speed, 0.0, T, lo, hi, lock_y=True), (lane, direction, speed)
        ang = rng.uniform(0, 2 * math.pi)
        x, y = rng.uniform(lo, hi, size=2)
        return _bounce_path(x, y, speed * math.cos(ang), speed * math.sin(ang), T, lo, hi), None

    for k in range(spec.objects):
        name = rule.allowed[rng.integers(len(rule.allowed))]
        (p, v), lane_info = normal_object(k, name)
        for a in anomalies:
            if a.obj != k:
                continue
            if a.kind == "speed":
                p, v = _speed_path(spec, spec.sprites[name], p, v, a)
            elif a.kind == "zone":
                lane, direction, speed = lane_info
                p, v, first = _zone_path(
                    spec, rule, spec.sprites[name], lane, speed, direction, a.start, T, rng
                )
                precursor[k] = first
        pos[:, k], vel[:, k] = p, v
        present[:, k] = True
        for t in range(T):
            kind[t][k] = name
        for a in anomalies:
            if a.obj == k and a.kind in ("appearance", "scene"):
                for t in range(a.start, a.end):
                    kind[t][k] = a.sprite

    labels = np.zeros(T, dtype=np.uint8)
    for a in anomalies:
        labels[a.start : a.end] = 1
    return GroundTruth(video_id, scene, labels, present, pos, vel, kind, precursor)


def _speed_path(spec, sprite, pos, vel, a: Anomaly):
    """Replay the bounce with velocity scaled by ``factor`` on ``[start, end)``."""
    lo, hi = _bounds(spec, sprite)
    T = len(pos)
    lock_y = bool(np.all(vel[:, 1] == 0))
    out_p = pos.copy()
    out_v = vel.copy()
    x, y = pos[0]
    vx, vy = vel[0]
    for t in range(T):
        f = a.factor if a.start <= t < a.end else 1.0
        out_p[t] = (x, y)
        out_v[t] = (vx * f, vy * f)
        x, y = x + vx * f, y + vy * f
        if x < lo:
            x, vx = 2 * lo - x, -vx
        elif x > hi:
            x, vx = 2 * hi - x, -vx
        if not lock_y:
            if y < lo:
                y, vy = 2 * lo - y, -vy
            elif y > hi:
                y, vy = 2 * hi - y, -vy
    return out_p, out_v


# --------------------------------------------------------------------------
# rule engine (independent of the schedule)
# --------------------------------------------------------------------------


def rule_labels(spec: ScenarioSpec, truth: GroundTruth, tol: float = 1e-6) -> np.ndarray:
    """Recompute frame labels from object states and the scene's rules."""
    rule = spec.rules[truth.scene]
    lo, hi = rule.speed
    T, K = truth.present.shape
    out = np.zeros(T, dtype=np.uint8)
    for t in range(T):
        for k in range(K):
            if not truth.present[t, k]:
                continue
            if truth.kind[t][k] not in rule.allowed:
                out[t] = 1
            speed = float(np.hypot(*truth.vel[t, k]))
            if speed > hi + tol or speed < lo - tol:
                out[t] = 1
            if rule.zone is not None and rule.zone[0] <= truth.pos[t, k, 1] < rule.zone[1]:
                out[t] = 1
    return out


# --------------------------------------------------------------------------
# rendering + writing
# --------------------------------------------------------------------------


def render_frame(spec: ScenarioSpec, truth: GroundTruth, t: int, background: np.ndarray):
    """``(uint8 frame, [(track_id, box), ...])`` for frame ``t``."""
    img = background.copy()
    boxes = []
    res = spec.resolution
    for k in range(truth.present.shape[1]):
        if not truth.present[t, k]:
            continue
        sprite = spec.sprites[truth.kind[t][k]]
        cx, cy = truth.pos[t, k]
        mask = sprite_mask(sprite, cx, cy, res, res)
        if not mask.any():
            continue
        img[mask] = sprite.color
        boxes.append((k, mask_box(mask)))
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8), boxes


def generate(spec: ScenarioSpec, out_root: str | Path) -> dict[str, GroundTruth]:
    """Write the corpus-format dataset for ``spec`` and return the ground truth."""
    spec.validate()
    root = Path(out_root)
    (root / "scenes").mkdir(parents=True, exist_ok=True)
    backgrounds = [scene_background(spec, s) for s in range(spec.scene_count)]
    for s, bg in enumerate(backgrounds):
        write_image(root / "scenes" / f"scene{s}.png", bg)
    truths = {}
    scene_rows = []
    for split in ("train", "test"):
        for vid in spec.video_ids(split):
            truth = simulate(spec, vid)
            truths[vid] = truth
            vdir = root / split / vid
            (vdir / "frames").mkdir(parents=True, exist_ok=True)
            rows = []
            for t in range(spec.frames):
                frame, boxes = render_frame(spec, truth, t, backgrounds[truth.scene])
                Image.fromarray(frame, mode="RGB").save(vdir / "frames" / f"{t:06d}.png", format="PNG", compress_level=1)
                rows.extend((t, k, *b) for k, b in boxes)
            TrackTable(np.asarray(rows, dtype=np.float64).reshape(-1, 6)).write_csv(vdir / "tracks.csv")
            if split == "test":
                write_labels(vdir / "labels.txt", truth.labels)
            scene_rows.append((vid, f"scene{truth.scene}"))
    with (root / "scene_map.csv").open("w") as fh:
        fh.write("video_id,scene_id\n")
        for vid, sid in sorted(scene_rows):
            fh.write(f"{vid},{sid}\n")
    (root / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return truths


def tree_checksum(root: str | Path) -> str:
    """SHA-256 over relative paths and bytes of every file under ``root``."""
    root = Path(root)
    h = hashlib.sha256()
    for p in sorted(q for q in root.rglob("*") if q.is_file()):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(b"\0")
        h.update(p.read_bytes())
    return h.hexdigest()


# --------------------------------------------------------------------------
# standard benchmarks
# --------------------------------------------------------------------------

RED, BLUE, GREEN, YELLOW = (0.9, 0.15, 0.1), (0.1, 0.25, 0.95), (0.1, 0.85, 0.2), (0.95, 0.9, 0.1)
WHITE, BLACK, MAGENTA = (1.0, 1.0, 1.0), (0.02, 0.02, 0.02), (0.95, 0.1, 0.9)


def basic_spec(seed: int = 11) -> ScenarioSpec:
    sprites = {
        "red_circle": SpriteType("circle", RED, 5.0),
        "blue_square": SpriteType("square", BLUE, 5.0),
        "white_cross": SpriteType("cross", WHITE, 6.0),
        "magenta_ring": SpriteType("ring", MAGENTA, 6.0),
    }
    rules = [SceneRule(["red_circle", "blue_square"], (0.6, 1.2)) for _ in range(2)]
    spec = ScenarioSpec("basic", 2, 160, sprites=sprites, rules=rules, seed=seed,
                        train_videos=5, test_videos=4, objects=2, stride=2, wall=12.0, texture=0.1)
    spec.anomalies = [
        Anomaly("test_s0_00", 40, 100, "appearance", obj=0, sprite="white_cross"),
        Anomaly("test_s0_01", 60, 120, "speed", obj=1, factor=4.0),
        Anomaly("test_s0_02", 50, 110, "appearance", obj=1, sprite="magenta_ring"),
        Anomaly("test_s1_00", 70, 130, "speed", obj=0, factor=4.0),
        Anomaly("test_s1_01", 40, 100, "appearance", obj=0, sprite="magenta_ring"),
        Anomaly("test_s1_02", 60, 120, "appearance", obj=1, sprite="white_cross"),
    ]
    return spec


def scenedep_spec(seed: int = 12) -> ScenarioSpec:
    names = ["red_circle", "blue_square", "green_triangle", "yellow_diamond"]
    sprites = {
        "red_circle": SpriteType("circle", RED, 5.0),
        "blue_square": SpriteType("square", BLUE, 5.0),
        "green_triangle": SpriteType("triangle", GREEN, 6.0),
        "yellow_diamond": SpriteType("diamond", YELLOW, 6.0),
    }
    rules = [SceneRule([names[s], names[(s + 1) % 4]], (0.6, 1.2)) for s in range(4)]
    spec = ScenarioSpec("scenedep", 4, 160, sprites=sprites, rules=rules, seed=seed,
                        train_videos=3, test_videos=3, objects=2, stride=2, wall=12.0, texture=0.1)
    anomalies = []
    for s in range(4):
        # types normal two scenes over are anomalous here
        for k, offset in ((1, 2), (2, 3)):
            anomalies.append(Anomaly(f"test_s{s}_{k:02d}", 0, 160, "scene", sprite=names[(s + offset) % 4]))
    spec.anomalies = anomalies
    return spec


def anticipate_spec(seed: int = 13) -> ScenarioSpec:
    sprites = {
        "red_circle": SpriteType("circle", RED, 5.0),
        "blue_square": SpriteType("square", BLUE, 5.0),
    }
    rules = [
        SceneRule(["red_circle", "blue_square"], (0.8, 1.4), motion="lanes", lanes=[26.0, 102.0], zone=(52.0, 76.0))
        for _ in range(2)
    ]
    spec = ScenarioSpec("anticipate", 2, 160, sprites=sprites, rules=rules, seed=seed,
                        train_videos=5, test_videos=4, objects=3, stride=2, wall=12.0, texture=0.2,
                        zone_contrast=0.3)
    spec.anomalies = [
        Anomaly("test_s0_00", 80, 160, "zone", obj=0),
        Anomaly("test_s0_01", 100, 160, "zone", obj=1),
        Anomaly("test_s0_02", 90, 160, "zone", obj=2),
        Anomaly("test_s1_00", 95, 160, "zone", obj=1),
        Anomaly("test_s1_01", 85, 160, "zone", obj=0),
        Anomaly("test_s1_02", 105, 160, "zone", obj=2),
    ]
    return spec


def standard_benchmarks() -> list[ScenarioSpec]:
    return [basic_spec(), scenedep_spec(), anticipate_spec()]


def benchmark(name: str) -> ScenarioSpec:
    for spec in standard_benchmarks():
        if spec.name == name:
            return spec
    raise KeyError(f"unknown benchmark {name!r}; choose from basic, scenedep, anticipate")
