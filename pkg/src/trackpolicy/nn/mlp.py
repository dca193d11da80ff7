"""Dense multi-layer perceptrons over the tensor engine.

A network is a pure (spec, params) pair. `forward` returns the output plus a
tape object; `backward` replays the tape for exact reverse-mode gradients.
Composite models (several MLPs sharing one loss) skip the tape surface and
call `apply` on live Tensors instead, then run tensor.backward on the loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatchError, TapeMismatchError
from . import tensor as T

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths plus one activation per weight layer.

    widths = (d_in, h1, ..., d_out); activations has len(widths) - 1 entries.
    """

    widths: tuple
    activations: tuple
    name: str = "mlp"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w <= 0 for w in self.widths):
            raise ValueError(f"widths must be positive: {self.widths}")
        if len(self.activations) != len(self.widths) - 1:
            raise ValueError(
                f"need {len(self.widths) - 1} activations, got {len(self.activations)}")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    def param_shapes(self) -> dict:
        """Parameter name -> shape, in declaration (checkpoint) order."""
        shapes = {}
        for i, (din, dout) in enumerate(zip(self.widths[:-1], self.widths[1:])):
            shapes[f"{self.name}/w{i}"] = (din, dout)
            shapes[f"{self.name}/b{i}"] = (dout,)
        return shapes


INIT_SCHEME = "uniform-fan-in"


def init_params(spec: MlpSpec, seed: int) -> dict:
    """U(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.

    Deterministic for a given seed; the caller records (scheme, seed).
    """
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in spec.param_shapes().items():
        if name.split("/")[-1].startswith("w"):
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
        else:
            params[name] = np.zeros(shape)
    return params


def check_params(spec: MlpSpec, params: dict) -> None:
    expected = spec.param_shapes()
    for name, shape in expected.items():
        if name not in params:
            raise ShapeMismatchError(f"missing parameter {name}")
        if tuple(params[name].shape) != shape:
            raise ShapeMismatchError(
                f"{name}: expected shape {shape}, got {tuple(params[name].shape)}")


_ACT_FN = {"relu": T.relu, "tanh": T.tanh, "identity": lambda x: x}


def apply(spec: MlpSpec, params: dict, x: T.Tensor) -> T.Tensor:
    """Run the network on a live Tensor batch (n, d_in) -> (n, d_out)."""
    h = x
    for i, act in enumerate(spec.activations):
        h = T.matmul(h, params[f"{spec.name}/w{i}"]) + params[f"{spec.name}/b{i}"]
        h = _ACT_FN[act](h)
    return h


@dataclass
class Tape:
    spec: MlpSpec
    x: T.Tensor
    params: dict  # name -> Tensor
    out: T.Tensor


def forward(spec: MlpSpec, params: dict, x) -> tuple:
    """(output array, tape). Input is (n, d_in) or a single (d_in,) row."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.widths[0]:
        raise ShapeMismatchError(
            f"input shape {x.shape} does not match spec width {spec.widths[0]}")
    check_params(spec, params)
    xt = T.Tensor(x, op="input")
    pt = {name: T.Tensor(np.asarray(v, dtype=np.float64), op=name) for name, v in params.items()}
    out = apply(spec, pt, xt)
    tape = Tape(spec, xt, pt, out)
    y = out.data[0] if squeeze else out.data.copy()
    return y, tape


def backward(tape: Tape, output_grad) -> tuple:
    """(parameter gradients by name, input gradient) for a recorded forward."""
    g = np.asarray(output_grad, dtype=np.float64)
    if g.ndim == 1 and tape.out.data.shape[0] == 1:
        g = g[None, :]
    if g.shape != tape.out.data.shape:
        raise TapeMismatchError(
            f"output_grad shape {g.shape} does not match tape output {tape.out.data.shape}")
    T.backward(tape.out, g)
    grads = {name: p.grad.copy() for name, p in tape.params.items()}
    return grads, tape.x.grad.copy()
