"""Loss functions, all composed from tensor-engine primitives so a single
finite-difference harness can check every model end to end."""

from __future__ import annotations

import numpy as np

from ..errors import BatchTooSmallError, ShapeMismatchError
from . import tensor as T

VAR_FLOOR = 1e-6


def mse_loss(pred: T.Tensor, target) -> T.Tensor:
    target = np.asarray(target, dtype=np.float64)
    if pred.data.shape != target.shape:
        raise ShapeMismatchError(
            f"prediction {pred.data.shape} vs target {target.shape}")
    d = pred - T.Tensor(target, op="target")
    return T.tmean(d * d)


def bce_with_logits(logits: T.Tensor, targets) -> T.Tensor:
    """Numerically stable binary cross-entropy on raw logits.

    mean( max(z, 0) - z*y + log(1 + exp(-|z|)) ); the exp argument is always
    <= 0 so nothing overflows regardless of logit magnitude.
    """
    y = np.asarray(targets, dtype=np.float64)
    if logits.data.shape != y.shape:
        raise ShapeMismatchError(f"logits {logits.data.shape} vs targets {y.shape}")
    z = logits
    abs_z = T.maximum(z, -z)
    return T.tmean(T.maximum(z, 0.0) - z * T.Tensor(y, op="target")
                   + T.log(1.0 + T.exp(-abs_z)))


def _batch_moments(f: T.Tensor, name: str):
    if f.data.ndim != 2:
        raise ShapeMismatchError(f"{name} must be (batch, dim), got {f.data.shape}")
    if f.data.shape[0] < 2:
        raise BatchTooSmallError(f"{name} needs batch >= 2, got {f.data.shape[0]}")
    mu = T.tmean(f, axis=0)
    centered = f - mu
    var = T.maximum(T.tmean(centered * centered, axis=0), VAR_FLOOR)
    return mu, var


def gaussian_kl_alignment(features_a: T.Tensor, features_b: T.Tensor) -> T.Tensor:
    """Symmetrized KL between diagonal Gaussians fit to the two batches.

    Variances are floored at 1e-6 to keep the divergence finite for collapsed
    batches. Summed over feature dimensions; zero iff the fitted moments
    coincide. Differentiable w.r.t. both feature batches.
    """
    mu_a, var_a = _batch_moments(features_a, "features_a")
    mu_b, var_b = _batch_moments(features_b, "features_b")

    def kl(mu_p, var_p, mu_q, var_q):
        d = mu_q - mu_p
        return 0.5 * T.tsum(var_p / var_q + d * d / var_q - 1.0
                            + T.log(var_q) - T.log(var_p))

    return kl(mu_a, var_a, mu_b, var_b) + kl(mu_b, var_b, mu_a, var_a)
