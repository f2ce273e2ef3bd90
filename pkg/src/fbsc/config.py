"""Run configuration and its TOML round-trip."""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .losses import LossWeights


@dataclass
class ModelConfig:
    n_inputs: int = 8
    forward_out: int = 7
    backward_out: int = 1
    crop_size: int = 256
    widths: tuple[int, int, int] = (64, 128, 256)
    latent_dim: int = 64
    gamma: float = 1.0
    scene_dim: int = 128
    scene_count: int = 1
    scene_widths: tuple[int, int, int] = (16, 32, 64)

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        self.scene_widths = tuple(int(w) for w in self.scene_widths)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if len(self.widths) != 3 or len(self.scene_widths) != 3:
            raise ValueError("the U-Net and the scene encoder have exactly three levels")
        dims = (self.n_inputs, self.forward_out, self.backward_out, self.crop_size,
                self.latent_dim, self.scene_dim, self.scene_count, *self.widths, *self.scene_widths)
        if min(dims) <= 0:
            raise ValueError("all model dimensions must be positive")
        if self.crop_size % 8:
            raise ValueError("crop_size must be a multiple of 8 (three stride-2 levels)")
        if self.forward_out >= self.n_inputs + 1:
            raise ValueError("forward_out must not exceed n_inputs")


@dataclass
class OptimConfig:
    lr: float = 2e-4
    batch_size: int = 16
    steps: int = 20000
    scene_epochs: int = 10
    scene_lr: float = 1e-3
    checkpoint_every: int = 1000
    log_every: int = 1


@dataclass
class CropConfig:
    margin: float = 1.2
    min_side: int = 0
    # local-error grid; 0 means crop_size // 16 and half of that
    patch: int = 0
    patch_stride: int = 0


@dataclass
class RunConfig:
    data_root: str = "data"
    out_dir: str = "runs/default"
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    optim: OptimConfig = field(default_factory=OptimConfig)
    crop: CropConfig = field(default_factory=CropConfig)
    stride: int = 12
    alphas: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    seed: int = 0
    inference_sampling: str = "mean"

    def __post_init__(self):
        self.alphas = tuple(int(a) for a in self.alphas)
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.inference_sampling not in ("mean", "stochastic"):
            raise ValueError("inference_sampling must be 'mean' or 'stochastic'")

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("model",):
            for k, v in d[key].items():
                if isinstance(v, tuple):
                    d[key][k] = list(v)
        d["alphas"] = list(self.alphas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        nested = {"model": ModelConfig, "loss": LossWeights, "optim": OptimConfig, "crop": CropConfig}
        kwargs = {}
        for f in fields(cls):
            if f.name not in d:
                continue
            v = d.pop(f.name)
            if f.name in nested:
                sub = nested[f.name]
                names = {sf.name for sf in fields(sub)}
                unknown = set(v) - names
                if unknown:
                    raise KeyError(f"unknown [{f.name}] keys: {sorted(unknown)}")
                v = sub(**v)
            kwargs[f.name] = v
        if d:
            raise KeyError(f"unknown config keys: {sorted(d)}")
        return cls(**kwargs)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(tomllib.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.loads(Path(path).read_text())

    @property
    def patch(self) -> int:
        return self.crop.patch or max(self.model.crop_size // 16, 1)

    @property
    def patch_stride(self) -> int:
        return self.crop.patch_stride or max(self.patch // 2, 1)
