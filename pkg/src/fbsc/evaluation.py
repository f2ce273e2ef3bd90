"""Concatenated frame-level ROC/AUC, horizon sweeps, reports and plots."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .labels import AlignedPair

log = logging.getLogger(__name__)


class AUCUndefined(ValueError):
    pass


@dataclass
class EvalReport:
    dataset: str
    alpha: int
    auc: float
    n_pos: int
    n_neg: int
    excluded_frames: int
    roc: list[list[float]]
    per_video_auc: dict[str, float | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "alpha": self.alpha,
            "auc": self.auc,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "excluded_frames": self.excluded_frames,
            "roc": self.roc,
            "per_video_auc": self.per_video_auc,
        }


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise AUCUndefined("AUC undefined: labels contain a single class")
    return kernels.rank_auc(np.asarray(scores, dtype=np.float64), labels)


def roc_curve(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ROC points at every distinct threshold, from (0, 0) to (1, 1)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    tps = np.cumsum(y)
    fps = np.cumsum(~y)
    # keep the last index of every run of equal scores
    keep = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tps[keep] / max(tps[-1], 1)]
    fpr = np.r_[0.0, fps[keep] / max(fps[-1], 1)]
    return fpr, tpr


def _thin(fpr: np.ndarray, tpr: np.ndarray, max_points: int = 512) -> list[list[float]]:
    if fpr.size > max_points:
        idx = np.unique(np.linspace(0, fpr.size - 1, max_points).round().astype(int))
        fpr, tpr = fpr[idx], tpr[idx]
    return [[round(float(a), 6), round(float(b), 6)] for a, b in zip(fpr, tpr)]


def concat_auc(pairs: Sequence[AlignedPair], dataset: str = "") -> EvalReport:
    """Micro AUC over all frames of all videos, concatenated."""
    if not pairs:
        raise AUCUndefined("AUC undefined: no series")
    alphas = {p.alpha for p in pairs}
    if len(alphas) != 1:
        raise ValueError(f"pairs mix several alphas: {sorted(alphas)}")
    scores = np.concatenate([p.scores for p in pairs])
    labels = np.concatenate([p.labels for p in pairs]).astype(bool)
    auc = auc_score(scores, labels)
    fpr, tpr = roc_curve(scores, labels)
    per_video: dict[str, float | None] = {}
    for p in pairs:
        y = p.labels.astype(bool)
        per_video[p.video_id] = (
            kernels.rank_auc(p.scores, y) if 0 < y.sum() < y.size else None
        )
    return EvalReport(
        dataset=dataset,
        alpha=pairs[0].alpha,
        auc=auc,
        n_pos=int(labels.sum()),
        n_neg=int((~labels).sum()),
        excluded_frames=int(sum(p.dropped for p in pairs)),
        roc=_thin(fpr, tpr),
        per_video_auc=per_video,
    )


def horizon_sweep(
    pairs_by_alpha: Mapping[int, Sequence[AlignedPair] | None],
    alphas: Iterable[int] | None = None,
    dataset: str = "",
) -> dict[int, EvalReport | None]:
    """AUC per anticipation step; a missing step yields ``None`` rather than failing."""
    keys = sorted(pairs_by_alpha) if alphas is None else list(alphas)
    table: dict[int, EvalReport | None] = {}
    for a in keys:
        pairs = pairs_by_alpha.get(a)
        if not pairs:
            log.warning("no score dumps for alpha=%s; row marked absent", a)
            table[a] = None
            continue
        table[a] = concat_auc(pairs, dataset=dataset)
    return table


def format_sweep(tables: Mapping[str, Mapping[int, EvalReport | None]]) -> str:
    """Side-by-side text table: one row per scorer, one column per step."""
    alphas = sorted({a for t in tables.values() for a in t})
    width = max([12] + [len(n) + 2 for n in tables])
    lines = ["scorer".ljust(width) + "".join(f"a={a}".rjust(9) for a in alphas)]
    for name, table in tables.items():
        cells = []
        for a in alphas:
            rep = table.get(a)
            cells.append(("-" if rep is None else f"{100 * rep.auc:.1f}").rjust(9))
        lines.append(name.ljust(width) + "".join(cells))
    return "\n".join(lines)


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _savefig(fig, path: Path) -> None:
    # drop the software/date chunks so identical inputs give identical bytes
    fig.savefig(path, dpi=100, metadata={"Software": None})


def emit_plots(
    reports: EvalReport | Sequence[EvalReport],
    out_dir: str | Path,
    sweeps: Mapping[str, Mapping[int, EvalReport | None]] | None = None,
    tag: str = "",
) -> list[Path]:
    """Write ``report[_tag]_a<alpha>.json`` + ROC PNGs, and an AUC-vs-step plot per sweep."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(reports, EvalReport):
        reports = [reports]
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot write plots to {out}: {exc}") from exc
    prefix = f"_{tag}" if tag else ""
    written: list[Path] = []
    for rep in reports:
        jpath = out / f"report{prefix}_a{rep.alpha}.json"
        _dump_json(rep.to_dict(), jpath)
        written.append(jpath)

        fig, ax = plt.subplots(figsize=(4, 4))
        roc = np.asarray(rep.roc)
        ax.plot(roc[:, 0], roc[:, 1], lw=1.5)
        ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="grey")
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.set_title(f"{rep.dataset} alpha={rep.alpha} AUC={rep.auc:.3f}")
        fig.tight_layout()
        ppath = out / f"roc{prefix}_a{rep.alpha}.png"
        _savefig(fig, ppath)
        plt.close(fig)
        written.append(ppath)

    if sweeps:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        summary = {}
        for name, table in sweeps.items():
            xs = [a for a, r in sorted(table.items()) if r is not None]
            ys = [table[a].auc for a in xs]
            ax.plot(xs, ys, marker="o", label=name)
            summary[name] = {str(a): (None if r is None else r.auc) for a, r in sorted(table.items())}
        ax.set_xlabel("anticipation step")
        ax.set_ylabel("AUC")
        ax.legend()
        fig.tight_layout()
        ppath = out / f"auc_vs_alpha{prefix}.png"
        _savefig(fig, ppath)
        plt.close(fig)
        written.append(ppath)
        spath = out / f"sweep{prefix}.json"
        _dump_json(summary, spath)
        written.append(spath)
    return written
