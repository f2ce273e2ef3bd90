"""Hot numeric kernels with a numba path and a pure-numpy path.

The numba versions are compiled with ``@njit`` when numba is importable and
``FBSC_NUMBA`` is not set to ``0``. Both paths are always importable under
``numba_impl`` / ``numpy_impl`` so they can be cross-checked and benchmarked.
"""
from __future__ import annotations

import os
import types

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _env_wants_numba() -> bool:
    return os.environ.get("FBSC_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _env_wants_numba()
BACKEND = "numba" if USE_NUMBA else "numpy"


def patch_starts(size: int, patch: int, stride: int) -> np.ndarray:
    """Start offsets of a sliding grid along one axis.

    The last position is appended when the stride does not land on it, so the
    grid always reaches the far edge.
    """
    if patch > size:
        raise ValueError(f"patch {patch} exceeds size {size}")
    if patch < 1 or stride < 1:
        raise ValueError("patch and stride must be positive")
    starts = list(range(0, size - patch + 1, stride))
    if starts[-1] != size - patch:
        starts.append(size - patch)
    return np.asarray(starts, dtype=np.int64)


# --------------------------------------------------------------------------
# future-window max: out[t] = max(g[t+1 .. t+alpha])
# --------------------------------------------------------------------------


@njit(cache=True)
def _future_window_max_nb(g, alpha):
    n = g.shape[0] - alpha
    out = np.zeros(n, dtype=g.dtype)
    # monotone deque over indices; the window for t is [t+1, t+alpha]
    dq = np.empty(g.shape[0], dtype=np.int64)
    head = 0
    tail = 0
    for j in range(1, g.shape[0]):
        while tail > head and g[dq[tail - 1]] <= g[j]:
            tail -= 1
        dq[tail] = j
        tail += 1
        t = j - alpha
        if t >= 0:
            while dq[head] <= t:
                head += 1
            out[t] = g[dq[head]]
    return out


def _future_window_max_np(g, alpha):
    if g.shape[0] - alpha <= 0:
        return np.zeros(0, dtype=g.dtype)
    view = np.lib.stride_tricks.sliding_window_view(g[1:], alpha)
    return view.max(axis=1).astype(g.dtype, copy=False)


# --------------------------------------------------------------------------
# max over patch means of a batch of error maps
# --------------------------------------------------------------------------


@njit(cache=True)
def _patch_max_mean_nb(err, ys, xs, patch):
    n, h, w = err.shape
    out = np.empty(n, dtype=np.float64)
    integ = np.zeros((h + 1, w + 1), dtype=np.float64)
    area = float(patch * patch)
    for k in range(n):
        for i in range(h):
            row = 0.0
            for j in range(w):
                row += err[k, i, j]
                integ[i + 1, j + 1] = integ[i, j + 1] + row
        best = -np.inf
        for y in ys:
            for x in xs:
                s = (
                    integ[y + patch, x + patch]
                    - integ[y, x + patch]
                    - integ[y + patch, x]
                    + integ[y, x]
                )
                if s > best:
                    best = s
        out[k] = best / area
    return out


def _patch_max_mean_np(err, ys, xs, patch):
    n, h, w = err.shape
    integ = np.zeros((n, h + 1, w + 1), dtype=np.float64)
    integ[:, 1:, 1:] = err.cumsum(axis=1).cumsum(axis=2)
    y0 = ys[:, None]
    x0 = xs[None, :]
    sums = (
        integ[:, y0 + patch, x0 + patch]
        - integ[:, y0, x0 + patch]
        - integ[:, y0 + patch, x0]
        + integ[:, y0, x0]
    )
    return sums.reshape(n, -1).max(axis=1) / float(patch * patch)


# --------------------------------------------------------------------------
# rank-sum AUC with average ranks for ties
# --------------------------------------------------------------------------


@njit(cache=True)
def _rank_auc_nb(scores, labels):
    n = scores.shape[0]
    order = np.argsort(scores, kind="mergesort")
    pos_rank_sum = 0.0
    n_pos = 0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            if labels[order[k]]:
                pos_rank_sum += avg
                n_pos += 1
        i = j + 1
    n_neg = n - n_pos
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _rank_auc_np(scores, labels):
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    n = s.shape[0]
    # tie groups: [first, last] index of each run of equal sorted scores
    boundary = np.flatnonzero(np.diff(s) != 0)
    first = np.concatenate(([0], boundary + 1))
    last = np.concatenate((boundary, [n - 1]))
    avg = 0.5 * (first + last) + 1.0
    ranks_sorted = np.repeat(avg, last - first + 1)
    pos = labels[order]
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    return float((ranks_sorted[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


numba_impl = types.SimpleNamespace(
    future_window_max=_future_window_max_nb,
    patch_max_mean=_patch_max_mean_nb,
    rank_auc=_rank_auc_nb,
)
numpy_impl = types.SimpleNamespace(
    future_window_max=_future_window_max_np,
    patch_max_mean=_patch_max_mean_np,
    rank_auc=_rank_auc_np,
)
_impl = numba_impl if USE_NUMBA else numpy_impl


def future_window_max(g: np.ndarray, alpha: int) -> np.ndarray:
    """``out[t] = max(g[t+1:t+alpha+1])`` for ``t`` in ``[0, len(g)-alpha)``."""
    g = np.ascontiguousarray(g)
    return _impl.future_window_max(g, int(alpha))


def patch_max_mean(err: np.ndarray, patch: int, stride: int) -> np.ndarray:
    """Maximum patch mean of each map in a ``(N, H, W)`` stack."""
    err = np.ascontiguousarray(err, dtype=np.float64)
    if err.ndim == 2:
        err = err[None]
    ys = patch_starts(err.shape[1], patch, stride)
    xs = patch_starts(err.shape[2], patch, stride)
    return _impl.patch_max_mean(err, ys, xs, int(patch))


def rank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC; tied scores take their average rank."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.bool_)
    return float(_impl.rank_auc(scores, labels))
