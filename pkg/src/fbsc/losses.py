"""Training objectives.

Norms are reduced as per-element means so that the L1 and KL weights keep
their meaning at any crop size. The KL term is summed over latent dimensions
and averaged over the batch.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch


@dataclass
class LossWeights:
    l1: float = 1.0
    kl: float = 0.1

    def __post_init__(self):
        if self.l1 < 0 or self.kl < 0:
            raise ValueError("loss weights must be >= 0")


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def pixel_error(f, f_hat, l1_weight: float = 1.0, channel_dim: int = -3) -> torch.Tensor:
    """Per-pixel squared + weighted absolute error, averaged over channels."""
    f, f_hat = _as_tensor(f), _as_tensor(f_hat)
    if f.shape != f_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(f.shape)} vs {tuple(f_hat.shape)}")
    d = f - f_hat
    return (d * d + l1_weight * d.abs()).mean(dim=channel_dim)


def frame_loss(f, f_hat, l1_weight: float = 1.0) -> torch.Tensor:
    """``mean((f - f_hat)^2) + l1_weight * mean(|f - f_hat|)``."""
    f, f_hat = _as_tensor(f), _as_tensor(f_hat)
    if f.shape != f_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(f.shape)} vs {tuple(f_hat.shape)}")
    d = f - f_hat
    return (d * d).mean() + l1_weight * d.abs().mean()


def backward_loss(f_hat_pred, f_hat_real, f_gt, l1_weight: float = 1.0) -> torch.Tensor:
    """Mean of the frame losses of the two backward reconstructions.

    ``f_hat_pred`` came from predicted future frames, ``f_hat_real`` from the
    real ones; both target the same observed frame ``f_gt``.
    """
    return 0.5 * (frame_loss(f_hat_pred, f_gt, l1_weight) + frame_loss(f_hat_real, f_gt, l1_weight))


def kl_loss(mean, log_variance) -> torch.Tensor:
    """KL(N(mean, exp(log_variance)) || N(0, 1)).

    Summed over the last dimension and averaged over the leading ones.
    """
    mean, log_variance = _as_tensor(mean), _as_tensor(log_variance)
    if mean.shape != log_variance.shape:
        raise ValueError("mean and log-variance shapes differ")
    if not (torch.isfinite(mean).all() and torch.isfinite(log_variance).all()):
        raise ValueError("non-finite latent parameters")
    per_dim = -0.5 * (log_variance - mean.pow(2) - log_variance.exp() + 1.0)
    if per_dim.dim() == 0:
        return per_dim
    total = per_dim.sum(dim=-1)
    return total.mean() if total.dim() > 0 else total


def total_loss(
    forward_losses: Sequence[torch.Tensor],
    backward: torch.Tensor,
    kl_losses: Sequence[torch.Tensor],
    weights: LossWeights,
) -> torch.Tensor:
    """Sum of forward frame losses, the backward loss and weighted KL terms."""
    total = _as_tensor(backward)
    for loss in forward_losses:
        total = total + loss
    for loss in kl_losses:
        total = total + weights.kl * loss
    return total


class LossLog:
    """Append-only CSV of per-step loss components."""

    header = ("step", "L_f_sum", "L_b", "L_KL_sum", "total")

    def __init__(self, path: str | Path, resume: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not (resume and self.path.exists()):
            with self.path.open("w", newline="") as fh:
                csv.writer(fh).writerow(self.header)

    def write(self, step: int, l_f: float, l_b: float, l_kl: float, total: float) -> None:
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow([step, repr(l_f), repr(l_b), repr(l_kl), repr(total)])

    @staticmethod
    def read(path: str | Path) -> list[dict]:
        with Path(path).open(newline="") as fh:
            return [
                {k: (int(v) if k == "step" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)
            ]
