"""Scene-encoder pretraining, joint predictor training and checkpoints."""
from __future__ import annotations

import contextlib
import hashlib
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import corpus
from .config import RunConfig
from .losses import LossLog, LossWeights, backward_loss, frame_loss, kl_loss, total_loss
from .model import FBSCModel, to_tensor

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "fbsc-v1"


class CheckpointVersionError(RuntimeError):
    pass


class SemiSupervisedViolation(RuntimeError):
    pass


def device_from_env() -> torch.device:
    return torch.device(os.environ.get("FBSC_DEVICE", "cpu"))


def seed_for(seed: int, name: str) -> int:
    """Independent 63-bit seed for the named random stream."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def set_determinism() -> None:
    torch.use_deterministic_algorithms(True)
    torch.backends.cudnn.benchmark = False


@contextlib.contextmanager
def flush_denormals():
    """Near-zero gradients of a converged classifier otherwise crawl through denormals on CPU."""
    torch.set_flush_denormal(True)
    try:
        yield
    finally:
        torch.set_flush_denormal(False)


# --------------------------------------------------------------------------
# backward-pass input packing
# --------------------------------------------------------------------------


def backward_indices(steps: torch.Tensor, n: int) -> torch.Tensor:
    """Rows of ``seq`` positions ``n+i, n+i-1, ..., i+1`` for each step ``i``.

    ``seq`` is ``[f[t-n*s], ..., f[t-s], f[t], f[t+s], ..., f[t+(m-1)*s]]``, so
    a row selects ``i`` future frames followed by ``n-i`` observed ones, newest first.
    """
    return (n + steps)[:, None] - torch.arange(n, device=steps.device)[None, :]


def pack_backward(seq: torch.Tensor, steps: torch.Tensor, n: int) -> torch.Tensor:
    idx = backward_indices(steps, n)
    b = torch.arange(seq.shape[0], device=seq.device)[:, None]
    return seq[b, idx]


# --------------------------------------------------------------------------
# losses of one batch
# --------------------------------------------------------------------------


@dataclass
class StepLosses:
    forward: list[torch.Tensor]
    backward: torch.Tensor
    kl: list[torch.Tensor]
    total: torch.Tensor

    def scalars(self) -> tuple[float, float, float, float]:
        return (
            float(sum(x.item() for x in self.forward)),
            self.backward.item(),
            float(sum(x.item() for x in self.kl)),
            self.total.item(),
        )


def compute_losses(
    model: FBSCModel,
    inputs: torch.Tensor,
    targets: torch.Tensor,
    scene: torch.Tensor,
    steps: torch.Tensor,
    weights: LossWeights,
    sample: str = "stochastic",
    generator: torch.Generator | None = None,
    noise: dict | None = None,
) -> StepLosses:
    """All loss terms for one batch of windows.

    ``steps[b]`` picks the backward step ``i`` trained for window ``b``; the
    backward network sees the predicted and the real futures of that step.
    """
    n = model.cfg.n_inputs
    noise = noise or {}
    bundle = model.forward_predict(inputs, scene, sample, generator, noise.get("forward"))
    preds = bundle.frames
    f_losses = [frame_loss(targets[:, k], preds[:, k], weights.l1) for k in range(preds.shape[1])]

    seq_real = torch.cat([inputs, targets], dim=1)
    seq_pred = torch.cat([inputs, targets[:, :1], preds[:, 1:]], dim=1)
    packed = torch.cat([pack_backward(seq_pred, steps, n), pack_backward(seq_real, steps, n)], dim=0)
    b = torch.arange(inputs.shape[0], device=inputs.device)
    gt = inputs[b, steps]
    out, b_latents = model.backward_net(
        packed, torch.cat([scene, scene], dim=0), sample, generator, noise.get("backward")
    )
    half = inputs.shape[0]
    l_b = backward_loss(out[:half, 0], out[half:, 0], gt, weights.l1)
    kls = [kl_loss(d.mean, d.log_variance) for d in bundle.latents + b_latents]
    total = total_loss(f_losses, l_b, kls, weights)
    return StepLosses(f_losses, l_b, kls, total)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def weights_id(state_dict: dict) -> str:
    h = hashlib.sha256()
    for k in sorted(state_dict):
        h.update(k.encode())
        h.update(state_dict[k].detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()[:16]


def save_checkpoint(path: str | Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format") if isinstance(payload, dict) else None
    if version != CHECKPOINT_FORMAT:
        raise CheckpointVersionError(
            f"checkpoint {path} has format {version!r}, this build reads {CHECKPOINT_FORMAT!r}"
        )
    return payload


@dataclass
class LoadedModel:
    model: FBSCModel
    config: RunConfig
    scene_ids: list[str]
    mean_color: np.ndarray
    checkpoint_id: str

    @property
    def stride(self) -> int:
        return self.config.stride


def load_model(path: str | Path, device: torch.device | None = None) -> LoadedModel:
    payload = load_checkpoint(path)
    cfg = RunConfig.from_dict(payload["config"])
    model = FBSCModel(cfg.model)
    model.load_state_dict(payload["state_dict"])
    model.scene_encoder.freeze()
    model.eval()
    if device is not None:
        model.to(device)
    return LoadedModel(
        model=model,
        config=cfg,
        scene_ids=list(payload["scene_ids"]),
        mean_color=np.asarray(payload["mean_color"], dtype=np.float64),
        checkpoint_id=payload["checkpoint_id"],
    )


# --------------------------------------------------------------------------
# scene encoder
# --------------------------------------------------------------------------


def train_scene_encoder(
    model: FBSCModel,
    crops: np.ndarray,
    labels: np.ndarray,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 64,
) -> list[float]:
    """Fit the scene classifier on masked scene crops, then freeze it.

    Returns the mean training loss of every epoch.
    """
    enc = model.scene_encoder
    n_classes = int(labels.max()) + 1 if len(labels) else 0
    if n_classes < 2 or len(np.unique(labels)) < 2:
        log.warning("scene encoder trained on a single scene; classification is trivial")
    enc.train()
    for p in enc.parameters():
        p.requires_grad_(True)
    opt = torch.optim.Adam(enc.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    y_all = torch.as_tensor(labels, dtype=torch.long)
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(crops))
        total, count = 0.0, 0
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            x = to_tensor(crops[idx])
            loss = F.cross_entropy(enc(x), y_all[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
            count += len(idx)
        history.append(total / max(count, 1))
    enc.freeze()
    return history


def scene_accuracy(model: FBSCModel, crops: np.ndarray, labels: np.ndarray, batch: int = 256) -> float:
    hits = 0
    with torch.no_grad():
        for start in range(0, len(crops), batch):
            logits = model.scene_encoder(to_tensor(crops[start : start + batch]))
            hits += int((logits.argmax(dim=1).numpy() == labels[start : start + batch]).sum())
    return hits / max(len(crops), 1)


# --------------------------------------------------------------------------
# trainer
# --------------------------------------------------------------------------


@dataclass
class TrainData:
    bank: corpus.CropBank
    windows: list[tuple[str, int, int]]
    scene_ids: list[str]
    scene_of_video: dict[str, int]
    mean_color: np.ndarray
    embeddings: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)


def check_train_split(root: str | Path) -> None:
    found = corpus.label_files(root, "train")
    if found:
        raise SemiSupervisedViolation(
            f"refusing to train: {len(found)} label file(s) under {Path(root) / 'train'} "
            "(training uses unlabeled normal videos only)"
        )


def prepare_data(cfg: RunConfig) -> TrainData:
    check_train_split(cfg.data_root)
    clips = corpus.load_dataset(cfg.data_root, "train")
    scenes = corpus.load_scenes(cfg.data_root)
    scene_ids = sorted(scenes)
    mean_color = corpus.dataset_mean_color(clips)
    bank = corpus.CropBank(
        clips, scenes, mean_color, cfg.model.crop_size, cfg.crop.margin, cfg.crop.min_side
    )
    m = cfg.model
    windows = bank.windows(m.n_inputs, m.forward_out, cfg.stride)
    if not windows:
        raise RuntimeError("no complete training windows; check stride and track lengths")
    log.info("%d training windows from %d clips", len(windows), len(clips))
    return TrainData(
        bank=bank,
        windows=windows,
        scene_ids=scene_ids,
        scene_of_video={c.video_id: scene_ids.index(c.scene_id) for c in clips},
        mean_color=mean_color,
    )


def scene_training_set(data: TrainData, every: int = 1) -> tuple[np.ndarray, np.ndarray]:
    crops, labels = [], []
    for vid, tracks in sorted(data.bank.tracks.items()):
        for _, tc in sorted(tracks.items()):
            sel = tc.scenes[::every]
            crops.append(sel)
            labels.append(np.full(len(sel), data.scene_of_video[vid], dtype=np.int64))
    return np.concatenate(crops), np.concatenate(labels)


class Trainer:
    """Runs the two training stages and writes checkpoints plus ``losses.csv``."""

    def __init__(self, cfg: RunConfig, data: TrainData | None = None, device: torch.device | None = None):
        set_determinism()
        self.cfg = cfg
        self.device = device or device_from_env()
        self.data = data if data is not None else prepare_data(cfg)
        if cfg.model.scene_count != len(self.data.scene_ids):
            log.info("scene_count set to %d from the dataset", len(self.data.scene_ids))
            cfg.model.scene_count = len(self.data.scene_ids)
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        torch.manual_seed(seed_for(cfg.seed, "init"))
        self.model = FBSCModel(cfg.model).to(self.device)
        self.step = 0
        self.scene_history: list[float] = []
        self.rng = np.random.default_rng(seed_for(cfg.seed, "data"))
        self.noise = torch.Generator(device="cpu").manual_seed(seed_for(cfg.seed, "latent"))
        self.opt = torch.optim.Adam(self.model.predictor_parameters(), lr=cfg.optim.lr)
        total = max(cfg.optim.steps, 1)
        self.sched = torch.optim.lr_scheduler.LambdaLR(
            self.opt, lambda s: 0.5 * (1.0 + math.cos(math.pi * min(s, total) / total))
        )

    # ------------------------------------------------------------------
    def pretrain_scene_encoder(self) -> list[float]:
        crops, labels = scene_training_set(self.data)
        with flush_denormals():
            self.scene_history = train_scene_encoder(
                self.model,
                crops,
                labels,
                epochs=self.cfg.optim.scene_epochs,
                lr=self.cfg.optim.scene_lr,
                seed=seed_for(self.cfg.seed, "scene"),
            )
        log.info("scene encoder losses per epoch: %s", ["%.4f" % v for v in self.scene_history])
        self._embed_all()
        return self.scene_history

    def _embed_all(self) -> None:
        self.data.embeddings = {}
        for vid, tracks in self.data.bank.tracks.items():
            for tid, tc in tracks.items():
                embs = []
                for start in range(0, len(tc.scenes), 256):
                    x = to_tensor(tc.scenes[start : start + 256]).to(self.device)
                    embs.append(self.model.encode_scene(x).cpu().numpy())
                self.data.embeddings[(vid, tid)] = np.concatenate(embs)

    # ------------------------------------------------------------------
    def batch(self, idx: np.ndarray):
        m = self.cfg.model
        s = self.cfg.stride
        crops, embs = [], []
        for k in idx:
            vid, tid, t = self.data.windows[k]
            ins, tgs = corpus.window_frames(t, m.n_inputs, m.forward_out, s)
            tc = self.data.bank.tracks[vid][tid]
            pos = tc.positions(ins + tgs)
            crops.append(tc.crops[pos])
            embs.append(self.data.embeddings[(vid, tid)][pos[m.n_inputs - 1]])
        frames = to_tensor(np.stack(crops)).to(self.device)
        scene = torch.from_numpy(np.stack(embs)).to(self.device)
        return frames[:, : m.n_inputs], frames[:, m.n_inputs :], scene

    def train_step(self) -> tuple[float, float, float, float]:
        cfg = self.cfg
        self.model.train()
        self.model.scene_encoder.eval()
        idx = self.rng.integers(0, len(self.data.windows), cfg.optim.batch_size)
        steps = torch.as_tensor(
            self.rng.integers(1, self.model.max_step + 1, cfg.optim.batch_size), device=self.device
        )
        inputs, targets, scene = self.batch(idx)
        losses = compute_losses(
            self.model, inputs, targets, scene, steps, cfg.loss, "stochastic", self.noise
        )
        self.opt.zero_grad()
        losses.total.backward()
        self.opt.step()
        self.sched.step()
        self.step += 1
        return losses.scalars()

    def run(self, steps: int | None = None) -> Path:
        """Train up to ``steps`` (default: the configured total) and return the final checkpoint."""
        cfg = self.cfg
        target = cfg.optim.steps if steps is None else steps
        if not bool(self.model.scene_encoder.trained):
            self.pretrain_scene_encoder()
        elif not self.data.embeddings:
            self._embed_all()
        loss_log = LossLog(self.out / "losses.csv", resume=self.step > 0)
        if self.step > 0:
            _truncate_log(loss_log.path, self.step)
        with flush_denormals():
            while self.step < target:
                l_f, l_b, l_kl, total = self.train_step()
                if self.step % cfg.optim.log_every == 0 or self.step == target:
                    loss_log.write(self.step, l_f, l_b, l_kl, total)
                if self.step % 100 == 0:
                    log.info("step %d total %.5f", self.step, total)
                if cfg.optim.checkpoint_every and self.step % cfg.optim.checkpoint_every == 0:
                    self.save(self.out / f"ckpt_{self.step:07d}.pt")
        final = self.out / "model.pt"
        self.save(final)
        return final

    # ------------------------------------------------------------------
    def payload(self) -> dict:
        state = {k: v.detach().cpu() for k, v in self.model.state_dict().items()}
        return {
            "format": CHECKPOINT_FORMAT,
            "config": self.cfg.to_dict(),
            "stride": self.cfg.stride,
            "scene_ids": list(self.data.scene_ids),
            "mean_color": [float(v) for v in self.data.mean_color],
            "state_dict": state,
            "checkpoint_id": weights_id(state),
            "optimizer": self.opt.state_dict(),
            "scheduler": self.sched.state_dict(),
            "step": self.step,
            "rng_data": self.rng.bit_generator.state,
            "rng_latent": self.noise.get_state(),
            "scene_history": list(self.scene_history),
        }

    def save(self, path: str | Path) -> Path:
        save_checkpoint(path, self.payload())
        return Path(path)

    @classmethod
    def resume(cls, path: str | Path, data: TrainData | None = None, cfg: RunConfig | None = None) -> "Trainer":
        payload = load_checkpoint(path)
        cfg = cfg or RunConfig.from_dict(payload["config"])
        trainer = cls(cfg, data=data)
        trainer.model.load_state_dict(payload["state_dict"])
        trainer.model.scene_encoder.freeze()
        trainer.opt.load_state_dict(payload["optimizer"])
        trainer.sched.load_state_dict(payload["scheduler"])
        trainer.step = int(payload["step"])
        trainer.rng.bit_generator.state = payload["rng_data"]
        trainer.noise.set_state(payload["rng_latent"])
        trainer.scene_history = list(payload.get("scene_history", []))
        trainer.data.mean_color = np.asarray(payload["mean_color"])
        return trainer


def _truncate_log(path: Path, step: int) -> None:
    lines = path.read_text().splitlines(keepends=True)
    kept = [lines[0]] + [ln for ln in lines[1:] if int(ln.split(",", 1)[0]) <= step]
    path.write_text("".join(kept))


def train(cfg: RunConfig, data: TrainData | None = None) -> Path:
    """Pretrain and freeze the scene encoder, then train both predictors jointly."""
    trainer = Trainer(cfg, data=data)
    return trainer.run()
