"""Denoising keypoint retargeter.

A small MLP trained to reconstruct clean hand keypoint layouts from copies
corrupted with uniform noise on every point except a fixed anchor (the
wrist).  Because training only ever shows hand layouts, the map's attractor
set is hand-shaped: feeding it a gripper layout pulls the points toward
hand-like spacing, while hand layouts pass through nearly unchanged.  The
net operates on anchor-relative coordinates in normalized image units and
the anchor is copied, not predicted, so anchor preservation and translation
equivariance hold by construction rather than by training.

Frozen after fit: parameter arrays are made read-only and transform is a
pure function of them.
"""

from __future__ import annotations

import numpy as np

from . import data
from ._validate import as_float_array
from .errors import (
    InsufficientDataError,
    NotFittedError,
    SchemaMismatchError,
    WrongDimensionError,
    WrongEmbodimentError,
)
from .nn import (
    Adam,
    MlpSpec,
    Tensor,
    apply,
    forward,
    init_params,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
)
from .nn import tensor as T

CHECKPOINT_KIND = "retargeter"
MIN_TRAIN_FRAMES = 100

# Noise stream is decoupled from the init stream so changing one cannot
# silently reseed the other.
_NOISE_STREAM = 4021


class KeypointRetargeter:
    """Estimator mapping k=5 keypoint layouts toward hand-like spacing.

    fit() consumes hand keypoint frames (normalized image coordinates, the
    5-point subset); transform() then applies the frozen denoiser to any
    5-point layout regardless of embodiment tag.
    """

    def __init__(self, noise_bound: float = 0.15, anchor_index: int = 0,
                 hidden=(64, 64), epochs: int = 400,
                 learning_rate: float = 1e-3, seed: int = 0):
        self.noise_bound = noise_bound
        self.anchor_index = anchor_index
        self.hidden = tuple(hidden)
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def get_params(self) -> dict:
        return {"noise_bound": self.noise_bound,
                "anchor_index": self.anchor_index,
                "hidden": self.hidden,
                "epochs": self.epochs,
                "learning_rate": self.learning_rate,
                "seed": self.seed}

    def set_params(self, **kwargs) -> "KeypointRetargeter":
        for key, value in kwargs.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, tuple(value) if key == "hidden" else value)
        return self

    @property
    def fitted(self) -> bool:
        return getattr(self, "_params", None) is not None

    # -- training ----------------------------------------------------------

    def fit(self, frames) -> "KeypointRetargeter":
        """Train on hand keypoint frames; freezes the result.

        frames: sequence of KeypointSet2D, hand embodiment, k=5, points in
        normalized units (apply select_hand_subset + NormalizationStats
        upstream).
        """
        if not (self.noise_bound > 0):
            raise ValueError("noise_bound must be positive")
        k = data.N_TRACK_KEYPOINTS
        if not 0 <= self.anchor_index < k:
            raise ValueError(f"anchor_index must be in [0, {k})")
        frames = list(frames)
        if len(frames) < MIN_TRAIN_FRAMES:
            raise InsufficientDataError(
                f"need at least {MIN_TRAIN_FRAMES} frames, got {len(frames)}")
        for f in frames:
            if f.embodiment != data.HUMAN:
                raise WrongEmbodimentError(
                    f"retargeter trains on hand keypoints, got {f.embodiment!r}")
            if f.k != k:
                raise WrongDimensionError(
                    f"expected {k}-point frames (apply select_hand_subset), got k={f.k}")
        pts = np.stack([f.points for f in frames])  # (n, k, 2)
        n = pts.shape[0]

        spec = MlpSpec((2 * k, *self.hidden, 2 * k),
                       ("relu",) * len(self.hidden) + ("identity",),
                       name="retargeter")
        params = init_params(spec, self.seed)
        rng = np.random.default_rng([self.seed, _NOISE_STREAM])

        a = self.anchor_index
        # anchor-relative targets; anchor output dims are masked out of the
        # loss because transform() discards them
        rel_clean = (pts - pts[:, a:a + 1]).reshape(n, 2 * k)
        mask = np.ones(2 * k)
        mask[2 * a:2 * a + 2] = 0.0
        target = rel_clean * mask

        opt = Adam(self.learning_rate)
        loss_value = float("nan")
        for _ in range(self.epochs):
            noise = rng.uniform(-self.noise_bound, self.noise_bound, size=pts.shape)
            noise[:, a] = 0.0
            noisy = pts + noise
            rel_in = (noisy - noisy[:, a:a + 1]).reshape(n, 2 * k)
            x = Tensor(rel_in, op="input")
            live = {name: Tensor(v, op=name) for name, v in params.items()}
            loss = mse_loss(apply(spec, live, x) * mask, target)
            T.backward(loss)
            params = opt.step(params, {name: t.grad for name, t in live.items()})
            loss_value = float(loss.data)

        for arr in params.values():
            arr.flags.writeable = False
        self._spec = spec
        self._params = params
        self.train_loss_ = loss_value
        return self

    # -- inference ---------------------------------------------------------

    def transform(self, kps: data.KeypointSet2D) -> data.KeypointSet2D:
        """Retarget one keypoint frame; anchor point is copied verbatim."""
        if not self.fitted:
            raise NotFittedError("call fit() or load() before transform()")
        if kps.k != data.N_TRACK_KEYPOINTS:
            raise WrongDimensionError(
                f"expected k={data.N_TRACK_KEYPOINTS}, got k={kps.k}")
        a = self.anchor_index
        anchor = kps.points[a]
        rel = (kps.points - anchor).reshape(-1)
        out, _ = forward(self._spec, self._params, rel)
        result = out.reshape(-1, 2) + anchor
        result[a] = anchor
        return data.KeypointSet2D(result, kps.embodiment, kps.view_id)

    def transform_batch(self, points) -> np.ndarray:
        """Vectorized transform on raw arrays (n, k, 2) -> (n, k, 2).

        Same map as transform(); used on the policy hot path where keypoint
        frames arrive as arrays, not KeypointSet2D objects.
        """
        if not self.fitted:
            raise NotFittedError("call fit() or load() before transform_batch()")
        pts = as_float_array(points, "points", ndim=3)
        if pts.shape[1:] != (data.N_TRACK_KEYPOINTS, 2):
            raise WrongDimensionError(
                f"expected (n, {data.N_TRACK_KEYPOINTS}, 2), got {pts.shape}")
        a = self.anchor_index
        anchors = pts[:, a:a + 1]
        rel = (pts - anchors).reshape(pts.shape[0], -1)
        out, _ = forward(self._spec, self._params, rel)
        result = out.reshape(pts.shape) + anchors
        result[:, a] = pts[:, a]
        return result

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        if not self.fitted:
            raise NotFittedError("nothing to save before fit()")
        meta = dict(self.get_params())
        meta["hidden"] = list(meta["hidden"])
        save_checkpoint(path, CHECKPOINT_KIND, meta, self._params)

    @classmethod
    def load(cls, path) -> "KeypointRetargeter":
        kind, meta, arrays = load_checkpoint(path)
        if kind != CHECKPOINT_KIND:
            raise SchemaMismatchError(
                f"expected a {CHECKPOINT_KIND!r} checkpoint, got {kind!r}")
        est = cls(**{**meta, "hidden": tuple(meta["hidden"])})
        k = data.N_TRACK_KEYPOINTS
        spec = MlpSpec((2 * k, *est.hidden, 2 * k),
                       ("relu",) * len(est.hidden) + ("identity",),
                       name="retargeter")
        for arr in arrays.values():
            arr.flags.writeable = False
        est._spec = spec
        est._params = arrays
        est.train_loss_ = float("nan")
        return est
