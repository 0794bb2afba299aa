"""Central finite-difference gradients, used to audit the analytic backward passes.

Only ``forward`` is called here, so these numbers are independent of every
``backward`` implementation they are compared against.
"""

from __future__ import annotations

import numpy as np

__all__ = ["numerical_gradients", "relative_error", "max_relative_error"]


def _loss(network, X, y) -> float:
    out, _ = network.forward(X)
    return float(np.mean((np.asarray(y).reshape(-1) - out) ** 2))


def numerical_gradients(network, X, y, eps: float = 1e-5) -> dict:
    grads = {}
    for key, param in network.params.items():
        g = np.zeros_like(param)
        flat, gflat = param.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = _loss(network, X, y)
            flat[j] = orig - eps
            down = _loss(network, X, y)
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * eps)
        grads[key] = g
    return grads


def relative_error(analytic, numeric, floor: float = 1e-6) -> np.ndarray:
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps gradients that are zero up to finite-difference noise
    from producing spurious huge ratios.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def max_relative_error(network, X, y, eps: float = 1e-5, floor: float = 1e-6) -> float:
    _, analytic = network.loss_and_grads(X, y)
    numeric = numerical_gradients(network, X, y, eps)
    return max(float(relative_error(analytic[k], numeric[k], floor).max()) for k in network.params)
