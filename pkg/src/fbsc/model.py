"""Forward/backward U-Net frame predictors with scene-conditioned CVAEs.

Tensors use ``(B, T, 3, H, W)`` for frame stacks and ``(B, 3, H, W)`` for single
frames, values in [0, 1]. Frame stacks are packed into ``3*T`` channels before
the first convolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig


class NotTrained(RuntimeError):
    pass


@dataclass
class LatentDistribution:
    mean: torch.Tensor
    log_variance: torch.Tensor

    @property
    def variance(self) -> torch.Tensor:
        return self.log_variance.exp()


@dataclass
class PredictionBundle:
    frames: torch.Tensor  # (B, forward_out, 3, H, W)
    latents: list[LatentDistribution] = field(default_factory=list)
    backward_frame: torch.Tensor | None = None
    backward_latents: list[LatentDistribution] = field(default_factory=list)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def split(self) -> list["PredictionBundle"]:
        """One bundle per batch element, in order."""
        out = []
        for b in range(len(self)):
            out.append(
                PredictionBundle(
                    frames=self.frames[b : b + 1],
                    latents=[LatentDistribution(d.mean[b : b + 1], d.log_variance[b : b + 1]) for d in self.latents],
                    backward_frame=None if self.backward_frame is None else self.backward_frame[b : b + 1],
                    backward_latents=[
                        LatentDistribution(d.mean[b : b + 1], d.log_variance[b : b + 1])
                        for d in self.backward_latents
                    ],
                )
            )
        return out


def to_tensor(frames: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    """``uint8``/float ``(..., H, W, 3)`` array -> float tensor ``(..., 3, H, W)``."""
    a = np.asarray(frames)
    t = torch.from_numpy(np.ascontiguousarray(a))
    t = t.to(dtype) / 255.0 if a.dtype == np.uint8 else t.to(dtype)
    return t.movedim(-1, -3).contiguous()


class ResBlock(nn.Module):
    def __init__(self, cin: int, cout: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, stride, 1)
        self.conv2 = nn.Conv2d(cout, cout, 3, 1, 1)
        self.skip = nn.Conv2d(cin, cout, 1, stride) if (cin != cout or stride != 1) else nn.Identity()

    def forward(self, x):
        h = self.conv2(F.silu(self.conv1(x)))
        return F.silu(h + self.skip(x))


class UpBlock(nn.Module):
    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, 1, 1)
        self.conv2 = nn.Conv2d(cout, cout, 3, 1, 1)

    def forward(self, x, skip):
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        x = torch.cat([x, skip], dim=1)
        return F.silu(self.conv2(F.silu(self.conv1(x))))


def _broadcast(vec: torch.Tensor, h: int, w: int) -> torch.Tensor:
    return vec[:, :, None, None].expand(-1, -1, h, w)


def _coords(batch: int, h: int, w: int, like: torch.Tensor) -> torch.Tensor:
    ys = torch.linspace(-1.0, 1.0, h, dtype=like.dtype, device=like.device)
    xs = torch.linspace(-1.0, 1.0, w, dtype=like.dtype, device=like.device)
    grid = torch.stack(torch.meshgrid(ys, xs, indexing="ij"))
    return grid[None].expand(batch, -1, -1, -1)


class CVAE(nn.Module):
    """Scene-conditioned VAE over one U-Net feature map.

    The posterior is a global latent vector; the decoder broadcasts
    ``[z, scene, x, y]`` over the map and returns a feature map of the input's
    shape. The caller receives ``feat + gamma * decoded``.
    """

    def __init__(self, channels: int, scene_dim: int, latent_dim: int, gamma: float):
        super().__init__()
        self.channels = channels
        self.scene_dim = scene_dim
        self.latent_dim = latent_dim
        self.gamma = gamma
        self.enc_conv = nn.Conv2d(channels + scene_dim, channels, 3, 1, 1)
        self.enc_fc = nn.Linear(channels, 2 * latent_dim)
        self.dec_conv1 = nn.Conv2d(latent_dim + scene_dim + 2, channels, 1)
        self.dec_conv2 = nn.Conv2d(channels, channels, 3, 1, 1)

    def forward(
        self,
        feat: torch.Tensor,
        scene: torch.Tensor,
        sample: str = "mean",
        generator: torch.Generator | None = None,
        noise: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, LatentDistribution]:
        b, c, h, w = feat.shape
        if c != self.channels:
            raise ValueError(f"feature map has {c} channels, CVAE expects {self.channels}")
        if scene.dim() != 2 or scene.shape != (b, self.scene_dim):
            raise ValueError(
                f"scene embedding shape {tuple(scene.shape)} does not broadcast onto ({b}, {self.scene_dim})"
            )
        s_map = _broadcast(scene, h, w)
        hidden = F.silu(self.enc_conv(torch.cat([feat, s_map], dim=1)))
        stats = self.enc_fc(hidden.mean(dim=(2, 3)))
        mu, logvar = stats.chunk(2, dim=1)
        if sample == "mean":
            z = mu
        elif sample == "stochastic":
            if noise is None:
                noise = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
            z = mu + torch.exp(0.5 * logvar) * noise
        else:
            raise ValueError(f"unknown sampling mode {sample!r}")
        dec_in = torch.cat([_broadcast(z, h, w), s_map, _coords(b, h, w, feat)], dim=1)
        decoded = self.dec_conv2(F.silu(self.dec_conv1(dec_in)))
        return feat + self.gamma * decoded, LatentDistribution(mu, logvar)


class UNetPredictor(nn.Module):
    """Three-level U-Net mapping ``in_frames`` frames to ``out_frames`` frames."""

    def __init__(self, in_frames: int, out_frames: int, cfg: ModelConfig):
        super().__init__()
        w1, w2, w3 = cfg.widths
        self.in_frames = in_frames
        self.out_frames = out_frames
        self.enc1 = ResBlock(3 * in_frames, w1, stride=2)
        self.enc2 = ResBlock(w1, w2, stride=2)
        self.enc3 = ResBlock(w2, w3, stride=2)
        self.cvae2 = CVAE(w2, cfg.scene_dim, cfg.latent_dim, cfg.gamma)
        self.cvae3 = CVAE(w3, cfg.scene_dim, cfg.latent_dim, cfg.gamma)
        self.up3 = UpBlock(w3 + w2, w2)
        self.up2 = UpBlock(w2 + w1, w1)
        self.head1 = nn.Conv2d(w1, w1, 3, 1, 1)
        self.head2 = nn.Conv2d(w1, 3 * out_frames, 3, 1, 1)

    def forward(self, frames, scene, sample="mean", generator=None, noise=None):
        b, t, c, h, w = frames.shape
        if t != self.in_frames or c != 3:
            raise ValueError(f"expected (B, {self.in_frames}, 3, H, W) input, got {tuple(frames.shape)}")
        x = frames.reshape(b, t * c, h, w)
        u1 = self.enc1(x)
        u2 = self.enc2(u1)
        u3 = self.enc3(u2)
        n2, n3 = (None, None) if noise is None else noise
        u2c, d2 = self.cvae2(u2, scene, sample, generator, n2)
        u3c, d3 = self.cvae3(u3, scene, sample, generator, n3)
        y = self.up3(u3c, u2c)
        y = self.up2(y, u1)
        y = F.interpolate(y, scale_factor=2, mode="nearest")
        y = self.head2(F.silu(self.head1(y)))
        out = torch.sigmoid(y).reshape(b, self.out_frames, 3, h, w)
        return out, [d2, d3]


class SceneEncoder(nn.Module):
    """Scene classifier; its penultimate activation is the scene embedding."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        w1, w2, w3 = cfg.scene_widths
        self.features = nn.Sequential(
            ResBlock(3, w1, stride=2), ResBlock(w1, w2, stride=2), ResBlock(w2, w3, stride=2)
        )
        self.embed = nn.Linear(w3, cfg.scene_dim)
        self.classify = nn.Linear(cfg.scene_dim, cfg.scene_count)
        self.register_buffer("trained", torch.zeros((), dtype=torch.bool))

    def embedding(self, x: torch.Tensor) -> torch.Tensor:
        return F.silu(self.embed(self.features(x).mean(dim=(2, 3))))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classify(self.embedding(x))

    def freeze(self) -> None:
        self.trained.fill_(True)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()


class FBSCModel(nn.Module):
    """Forward and backward predictors sharing one frozen scene encoder."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.forward_net = UNetPredictor(cfg.n_inputs, cfg.forward_out, cfg)
        self.backward_net = UNetPredictor(cfg.n_inputs, cfg.backward_out, cfg)
        self.scene_encoder = SceneEncoder(cfg)

    @property
    def max_step(self) -> int:
        return self.cfg.forward_out - 1

    def predictor_parameters(self):
        return list(self.forward_net.parameters()) + list(self.backward_net.parameters())

    def encode_scene(self, crops: torch.Tensor) -> torch.Tensor:
        """Embedding of ``(B, 3, H, W)`` masked scene crops."""
        if not bool(self.scene_encoder.trained):
            raise NotTrained("scene encoder has not been trained")
        with torch.no_grad():
            return self.scene_encoder.embedding(crops)

    def forward_predict(self, inputs, scene, sample="mean", generator=None, noise=None) -> PredictionBundle:
        if inputs.dim() != 5 or inputs.shape[1] != self.cfg.n_inputs:
            raise ValueError(
                f"forward prediction needs {self.cfg.n_inputs} input frames, got shape {tuple(inputs.shape)}"
            )
        frames, latents = self.forward_net(inputs, scene, sample, generator, noise)
        return PredictionBundle(frames=frames, latents=latents)

    def backward_predict(self, future, observed, scene, sample="mean", generator=None, noise=None):
        """Predict ``f[t+i-n]`` from ``i`` future and ``n-i`` observed frames.

        ``future`` holds ``f[t+i], ..., f[t+1]`` and ``observed`` holds
        ``f[t], ..., f[t+i+1-n]``, both newest first. Returns the frame
        ``(B, 3, H, W)`` and the two latent distributions.
        """
        i = future.shape[1]
        if not 1 <= i <= self.max_step:
            raise ValueError(f"backward step i={i} outside [1, {self.max_step}]")
        if observed.shape[1] != self.cfg.n_inputs - i:
            raise ValueError(
                f"step i={i} needs {self.cfg.n_inputs - i} observed frames, got {observed.shape[1]}"
            )
        packed = torch.cat([future, observed], dim=1)
        out, latents = self.backward_net(packed, scene, sample, generator, noise)
        return out[:, 0], latents
