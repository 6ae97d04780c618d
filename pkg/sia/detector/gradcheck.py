"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import logging
from typing import Callable, List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

logger = logging.getLogger(__name__)


def _candidates(model: nn.Module, exclude: Sequence[str]) -> List[Tuple[str, nn.Parameter]]:
    return [
        (name, p)
        for name, p in model.named_parameters()
        if p.requires_grad and not any(name.startswith(e) for e in exclude)
    ]


def gradient_check(
    model: nn.Module,
    closure: Callable[[], torch.Tensor],
    n_params: int = 200,
    step: float = 1e-4,
    seed: int = 0,
    exclude: Sequence[str] = ("logit_scale",),
) -> float:
    """
    Compare backprop gradients with central finite differences.

    The model is converted to double precision in place. Entries are drawn
    uniformly over all trainable scalars outside ``exclude``.

    Args:
        model: Module whose parameters the closure reads
        closure: Recomputes the scalar loss from the current parameters
        n_params: Number of scalar entries to check
        step: Finite-difference step
        seed: Seed for entry selection
        exclude: Parameter-name prefixes to skip

    Returns:
        Maximum relative error ``|a - n| / max(|a|, |n|, 1e-6)``
    """
    model.double()
    params = _candidates(model, exclude)
    if not params:
        raise ValueError("no trainable parameters to check")

    model.zero_grad(set_to_none=True)
    closure().backward()
    analytic = [
        p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for _, p in params
    ]

    sizes = np.array([p.numel() for _, p in params], dtype=np.int64)
    rng = np.random.default_rng(seed)
    flat = rng.choice(int(sizes.sum()), size=min(n_params, int(sizes.sum())), replace=False)
    bounds = np.cumsum(sizes)

    worst = 0.0
    with torch.no_grad():
        for index in np.sort(flat):
            k = int(np.searchsorted(bounds, index, side="right"))
            offset = int(index - (bounds[k - 1] if k > 0 else 0))
            name, param = params[k]
            view = param.view(-1)
            original = view[offset].item()

            view[offset] = original + step
            plus = closure().item()
            view[offset] = original - step
            minus = closure().item()
            view[offset] = original

            numeric = (plus - minus) / (2 * step)
            a = analytic[k].view(-1)[offset].item()
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            if rel > worst:
                worst = rel
                logger.debug(f"{name}[{offset}]: analytic {a:.6e} numeric {numeric:.6e}")
    return worst
