"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor, backward, zero_grads
from .errors import GradCheckError

__all__ = ["grad_check"]


def grad_check(fn: Callable[[], Tensor], params: dict[str, Tensor],
               probes_per_tensor: int = 4, eps: float = 1e-5,
               rng: np.random.Generator | None = None) -> float:
    """Compare analytic gradients of a scalar `fn()` against central differences.

    `fn` must rebuild its graph from the current ``params[...].data`` on every
    call. Probes `probes_per_tensor` coordinates of each parameter (all of
    them when the tensor is smaller) and returns the maximum relative error

        |analytic - fd| / max(|analytic|, |fd|, 1e-8)

    over all probed coordinates.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    zero_grads(params.values())
    loss = fn()
    if not np.isfinite(loss.data):
        raise GradCheckError("non-finite loss at the probe point")
    backward(loss)
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        count = flat.size
        if count <= probes_per_tensor:
            coords = np.arange(count)
        else:
            coords = rng.choice(count, size=probes_per_tensor, replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            up = fn().data
            flat[c] = orig - eps
            down = fn().data
            flat[c] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise GradCheckError(
                    f"non-finite loss while probing {name}[{c}]"
                )
            fd = float((up - down) / (2.0 * eps))
            an = float(analytic[name].reshape(-1)[c])
            err = abs(an - fd) / max(abs(an), abs(fd), 1e-8)
            worst = max(worst, err)
    return worst
