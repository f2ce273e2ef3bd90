"""End-to-end train / score / evaluate entry points shared by the CLI and tests."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

from . import corpus, scoring
from .config import CropConfig, ModelConfig, OptimConfig, RunConfig
from .evaluation import EvalReport, emit_plots, format_sweep, horizon_sweep
from .labels import LabelSeries, align_series, labels_for
from .train import Trainer, TrainData, device_from_env, load_model

log = logging.getLogger(__name__)

SCORER_NAMES = {"fb": "f+b", "fonly": "f-only"}


# CPU budget for the synthetic benchmarks: 32-pixel crops of 128-pixel frames
BENCHMARK_STEPS = 600


def benchmark_config(name: str, data_root: str | Path, out_dir: str | Path, seed: int = 0) -> RunConfig:
    """Pinned small-scale configuration for a generated benchmark."""
    if name not in ("basic", "scenedep", "anticipate"):
        raise KeyError(f"unknown benchmark {name!r}")
    return RunConfig(
        data_root=str(data_root),
        out_dir=str(out_dir),
        model=ModelConfig(crop_size=32, widths=(32, 64, 128), latent_dim=16, scene_dim=32),
        optim=OptimConfig(lr=1e-3, batch_size=16, steps=BENCHMARK_STEPS, scene_epochs=3, checkpoint_every=0),
        crop=CropConfig(margin=1.2, min_side=32, patch=16, patch_stride=8),
        stride=2,
        seed=seed,
    )


def run_train(cfg: RunConfig, data: TrainData | None = None) -> Path:
    """Train from scratch; the resolved config is saved next to the checkpoints."""
    trainer = Trainer(cfg, data=data)
    cfg.save(Path(cfg.out_dir) / "config.toml")
    return trainer.run()


def resume_train(ckpt: str | Path, steps: int | None = None, data: TrainData | None = None) -> Path:
    trainer = Trainer.resume(ckpt, data=data)
    return trainer.run(steps)


def score_dataset(
    ckpt: str | Path,
    data_root: str | Path,
    alphas: Sequence[int],
    out_dir: str | Path,
    modes: Sequence[str] = ("fb",),
    normalize: bool = False,
    split: str = "test",
) -> Path:
    """Score every clip of ``split`` and write per-frame dumps plus a manifest."""
    for m in modes:
        if m not in scoring.MODES:
            raise ValueError(f"unknown scoring mode {m!r}")
    lm = load_model(ckpt, device_from_env())
    cfg = lm.config
    clips = corpus.load_dataset(data_root, split, with_labels=False)
    scenes = corpus.load_scenes(data_root)
    missing = sorted({c.scene_id for c in clips} - set(lm.scene_ids))
    if missing:
        log.warning("scenes %s were not seen in training", missing)
    bank = corpus.CropBank(
        clips, scenes, lm.mean_color, cfg.model.crop_size, cfg.crop.margin, cfg.crop.min_side
    )
    results = {}
    for clip in clips:
        results[clip.video_id] = scoring.score_video(clip, lm, alphas, bank=bank, normalize=normalize)
    return scoring.write_dumps(out_dir, results, lm.checkpoint_id, cfg.stride, modes=list(modes))


def evaluate_dumps(
    dump_dir: str | Path,
    data_root: str | Path,
    out_dir: str | Path | None = None,
    dataset: str | None = None,
) -> dict[str, dict[int, EvalReport | None]]:
    """AUC per scorer and step; writes reports and plots when ``out_dir`` is given."""
    manifest, table = scoring.read_dumps(dump_dir)
    clips = {c.video_id: c for c in corpus.load_dataset(data_root, "test")}
    name = dataset or Path(data_root).name
    sweeps: dict[str, dict[int, EvalReport | None]] = {}
    for mode in manifest["modes"]:
        by_alpha = table.get(mode, {})
        pairs_by_alpha = {}
        for a, series_list in sorted(by_alpha.items()):
            pairs = []
            for s in series_list:
                clip = clips.get(s.video_id)
                if clip is None:
                    raise KeyError(f"dump references {s.video_id!r}, absent from {data_root}/test")
                g0 = LabelSeries(clip.video_id, 0, clip.labels)
                pairs.append(align_series(s, labels_for(g0, s.alpha)))
            pairs_by_alpha[a] = pairs
        sweeps[SCORER_NAMES.get(mode, mode)] = horizon_sweep(pairs_by_alpha, sorted(pairs_by_alpha), name)
    if out_dir is not None:
        reports = [r for t in sweeps.values() for r in t.values() if r is not None]
        for mode_name, t in sweeps.items():
            emit_plots([r for r in t.values() if r is not None], out_dir, tag=mode_name.replace("+", ""))
        emit_plots([], out_dir, sweeps={k: {a: r for a, r in t.items() if a > 0} for k, t in sweeps.items()})
        Path(out_dir, "sweep.txt").write_text(format_sweep(sweeps) + "\n")
        log.info("%d reports written to %s", len(reports), out_dir)
    return sweeps
