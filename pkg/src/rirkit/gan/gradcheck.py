"""Central finite-difference verification of analytic gradients.

The relative-error convention: |analytic - numeric| / max(|analytic|,
|numeric|, floor). Checks should run on float64 networks; float32 rounding
swamps the h^2 truncation error of the central difference.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


def numeric_gradient(loss_fn: Callable[[], float], arr: np.ndarray,
                     h: float = 1e-4, indices: Sequence[int] | None = None) -> np.ndarray:
    """Central-difference gradient of loss_fn with respect to arr, computed
    in place by perturbing one element at a time. Returns the full-shape
    gradient (entries outside `indices` are zero when a subset is given)."""
    flat = arr.ravel()
    if flat.base is not arr and flat is not arr:  # ravel must alias, not copy
        raise ValueError("parameter array must be contiguous")
    out = np.zeros(arr.size)
    idxs = range(arr.size) if indices is None else indices
    for i in idxs:
        orig = flat[i]
        flat[i] = orig + h
        lp = loss_fn()
        flat[i] = orig - h
        lm = loss_fn()
        flat[i] = orig
        out[i] = (lp - lm) / (2.0 * h)
    return out.reshape(arr.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: float = 1e-6) -> float:
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def check_param_gradients(
    loss_fn: Callable[[], float],
    pairs: Iterable[tuple[np.ndarray, np.ndarray]],
    h: float = 1e-4,
    max_per_tensor: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Worst relative error over (param, analytic_grad) pairs.

    loss_fn must recompute the loss from current parameter values each call.
    max_per_tensor limits the checked entries per tensor (seeded subsample)
    for very large tensors; None checks every entry.
    """
    worst = 0.0
    for arr, grad in pairs:
        if max_per_tensor is not None and arr.size > max_per_tensor:
            r = rng if rng is not None else np.random.default_rng(0)
            indices = np.sort(r.choice(arr.size, size=max_per_tensor, replace=False))
        else:
            indices = None
        numeric = numeric_gradient(loss_fn, arr, h=h, indices=indices)
        mask = np.zeros(arr.size, dtype=bool)
        mask[np.arange(arr.size) if indices is None else indices] = True
        err = relative_error(
            np.asarray(grad).ravel()[mask], numeric.ravel()[mask]
        )
        worst = max(worst, err)
    return worst
