"""Object-centric video anomaly detection and anticipation with forward-backward
frame prediction conditioned on the scene."""

from .config import CropConfig, ModelConfig, OptimConfig, RunConfig
from .losses import LossWeights

__all__ = ["CropConfig", "LossWeights", "ModelConfig", "OptimConfig", "RunConfig"]
__version__ = "0.1.0"
