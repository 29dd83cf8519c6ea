from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ..errors import ShapeError
from .model import Batch, ModelParams, loss_and_grads, make_batch

# Denominator floor for the relative error; gradients below it are compared
# absolutely, which keeps round-off on near-zero entries from dominating.
REL_ERROR_FLOOR = 1e-6


def relative_error(analytic: float, numeric: float, floor: float = REL_ERROR_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    params: ModelParams,
    sample,
    epsilon: float = 1e-4,
    n_params: int = 200,
    seed: int = 0,
    grad_fn: Optional[Callable[[ModelParams, Batch], dict]] = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``sample`` is a :class:`Batch` or a ``(source_ids, target_ids)`` pair.
    ``n_params`` entries are drawn uniformly over all weights. ``grad_fn``
    replaces the analytic gradient (used to mutation-test the checker).
    """
    if isinstance(sample, Batch):
        batch = sample
    else:
        if len(sample[1]) == 0:
            raise ShapeError("gradient check needs a non-empty target")
        batch = make_batch(params.config, [sample[0]], [sample[1]])
    if grad_fn is None:
        grads = loss_and_grads(params, batch)[2]
    else:
        grads = grad_fn(params, batch)
    names = sorted(params.weights)
    sizes = np.array([params.weights[n].size for n in names])
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    rng = np.random.default_rng(seed)
    picks = rng.choice(offsets[-1], size=min(n_params, offsets[-1]), replace=False)
    worst = 0.0
    for flat in np.sort(picks):
        k = int(np.searchsorted(offsets, flat, side="right") - 1)
        w = params.weights[names[k]].reshape(-1)
        i = int(flat - offsets[k])
        original = w[i]
        w[i] = original + epsilon
        plus = loss_and_grads(params, batch, need_grads=False)[0]
        w[i] = original - epsilon
        minus = loss_and_grads(params, batch, need_grads=False)[0]
        w[i] = original
        numeric = (plus - minus) / (2 * epsilon)
        analytic = grads[names[k]].reshape(-1)[i]
        worst = max(worst, relative_error(analytic, numeric))
    return worst
