"""Feed-forward ReLU networks: JSON loading, validation and evaluation.

A network is an ordered list of :class:`Dense`, :class:`Conv2d`,
:class:`Flatten` and :class:`ReLU` layers applied to an input of shape
``(channels, height, width)``. Dense layers flatten their input implicitly.

For bound propagation every network is also available as a flat sequence
of ``("affine", W, b)`` / ``("relu",)`` operations via :func:`linearize`;
convolutions become explicit (sparse-in-spirit, dense-in-storage) matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .tensor import ShapeError, as_tensor, convolve2d, flatten


class NetworkFormatError(ValueError):
    """Malformed or structurally invalid network description."""


@dataclass(frozen=True, eq=False)
class Dense:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if w.ndim != 2:
            raise NetworkFormatError(f"dense weights must be a matrix, got shape {w.shape}")
        if w.shape[0] != b.shape[0]:
            raise NetworkFormatError(
                f"dense bias length mismatch: weights {w.shape} vs bias {b.shape}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NetworkFormatError("dense layer contains NaN or Inf")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def out_shape(self, in_shape):
        n = int(np.prod(in_shape))
        if n != self.weights.shape[1]:
            raise ShapeError(f"dense layer expects {self.weights.shape[1]} inputs, got shape {tuple(in_shape)}")
        return (self.weights.shape[0],)

    def __call__(self, x):
        return self.weights @ flatten(x) + self.bias

    def affine(self, in_shape):
        return self.weights, self.bias

    def to_json(self):
        return {"type": "dense", "weights": self.weights.tolist(), "bias": self.bias.tolist()}


@dataclass(frozen=True, eq=False)
class Conv2d:
    kernels: np.ndarray  # (out_ch, in_ch, kh, kw)
    bias: np.ndarray
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        k = np.array(self.kernels, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if k.ndim != 4 or k.shape[2] != k.shape[3]:
            raise NetworkFormatError(f"conv2d kernels must be (out, in, k, k), got shape {k.shape}")
        if k.shape[0] != b.shape[0]:
            raise NetworkFormatError(
                f"conv2d bias length mismatch: {k.shape[0]} output channels vs bias {b.shape}"
            )
        if int(self.stride) < 1 or int(self.padding) < 0:
            raise NetworkFormatError("conv2d stride must be >= 1 and padding >= 0")
        object.__setattr__(self, "kernels", k)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "stride", int(self.stride))
        object.__setattr__(self, "padding", int(self.padding))

    def out_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.kernels.shape[1]:
            raise ShapeError(
                f"conv2d expects ({self.kernels.shape[1]}, h, w) input, got {tuple(in_shape)}"
            )
        s = self.kernels.shape[2]
        h, w = (d + 2 * self.padding for d in in_shape[1:])
        if s > min(h, w):
            raise ShapeError(f"conv2d kernel {s}x{s} larger than padded input {h}x{w}")
        return (self.kernels.shape[0], (h - s) // self.stride + 1, (w - s) // self.stride + 1)

    def __call__(self, x):
        out = []
        for o in range(self.kernels.shape[0]):
            acc = sum(
                convolve2d(x[c], self.kernels[o, c], padding=self.padding, stride=self.stride)
                for c in range(self.kernels.shape[1])
            )
            out.append(acc + self.bias[o])
        return np.stack(out)

    def affine(self, in_shape):
        """Explicit matrix of the convolution acting on flattened inputs."""
        n_in = int(np.prod(in_shape))
        out_shape = self.out_shape(in_shape)
        n_out = int(np.prod(out_shape))
        w = np.zeros((n_out, n_in))
        basis = np.eye(n_in).reshape((n_in,) + tuple(in_shape))
        # Column j is the response to the j-th unit input, minus bias.
        for j in range(n_in):
            w[:, j] = flatten(self(basis[j])) - np.repeat(self.bias, n_out // len(self.bias))
        return w, np.repeat(self.bias, n_out // len(self.bias))

    def to_json(self):
        return {"type": "conv2d", "kernels": self.kernels.tolist(), "bias": self.bias.tolist(),
                "stride": self.stride, "padding": self.padding}


@dataclass(frozen=True)
class ReLU:
    def out_shape(self, in_shape):
        return tuple(in_shape)

    def __call__(self, x):
        return np.maximum(x, 0.0)

    def to_json(self):
        return {"type": "relu"}


@dataclass(frozen=True)
class Flatten:
    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def __call__(self, x):
        return flatten(x)

    def to_json(self):
        return {"type": "flatten"}


Layer = Union[Dense, Conv2d, ReLU, Flatten]


@dataclass(frozen=True, eq=False)
class Network:
    name: str
    input_shape: tuple
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers or not isinstance(self.layers[-1], Dense):
            raise NetworkFormatError("final layer must be dense (no trailing activation)")
        shape = self.input_shape
        prev = "input"
        for i, layer in enumerate(self.layers):
            try:
                shape = layer.out_shape(shape)
            except ShapeError as exc:
                raise NetworkFormatError(
                    f"layer {i} ({type(layer).__name__}) does not compose with {prev}: {exc}"
                ) from None
            prev = f"layer {i} ({type(layer).__name__}, output {shape})"

    @property
    def input_size(self) -> int:
        return int(np.prod(self.input_shape))

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weights.shape[0]

    @cached_property
    def ops(self) -> list:
        return linearize(self)

    def to_json(self) -> dict:
        return {"name": self.name, "input_shape": list(self.input_shape),
                "layers": [layer.to_json() for layer in self.layers]}


@dataclass(frozen=True, eq=False)
class AugmentedNetwork:
    """``base`` with a prepended affine layer mapping ``z`` (length m) to an image."""

    base: Network
    prefix: Dense

    def __post_init__(self):
        if self.prefix.weights.shape[0] != self.base.input_size:
            raise ShapeError(
                f"perturbation layer emits {self.prefix.weights.shape[0]} values, "
                f"network expects input shape {self.base.input_shape}"
            )

    @property
    def input_shape(self):
        return (self.prefix.weights.shape[1],)

    @property
    def input_size(self) -> int:
        return self.prefix.weights.shape[1]

    @property
    def num_classes(self) -> int:
        return self.base.num_classes

    @cached_property
    def ops(self) -> list:
        return [("affine", self.prefix.weights, self.prefix.bias)] + self.base.ops


def linearize(net: Network) -> list:
    """Flatten ``net`` into ``("affine", W, b)`` and ``("relu",)`` operations."""
    ops = []
    shape = net.input_shape
    for layer in net.layers:
        if isinstance(layer, (Dense, Conv2d)):
            w, b = layer.affine(shape)
            ops.append(("affine", w, b))
        elif isinstance(layer, ReLU):
            ops.append(("relu",))
        shape = layer.out_shape(shape)
    return ops


def forward(net, x) -> np.ndarray:
    """Concrete logits of ``net`` at a single input ``x``."""
    if isinstance(net, AugmentedNetwork):
        z = np.asarray(x, dtype=np.float64).reshape(-1)
        if z.shape != (net.input_size,):
            raise ShapeError(f"augmented network expects {net.input_size} inputs, got shape {np.shape(x)}")
        x = net.prefix(z)
        net = net.base
    x = np.asarray(x, dtype=np.float64)
    if x.size != net.input_size:
        raise ShapeError(f"network expects input shape {net.input_shape}, got shape {x.shape}")
    x = x.reshape(net.input_shape)
    for layer in net.layers:
        x = layer(x)
    return x


def forward_batch(net, xs) -> np.ndarray:
    """Logits for a batch of flattened inputs, shape ``(batch, n_in)``.

    Uses the linearised form; agrees with :func:`forward` up to rounding.
    """
    h = np.asarray(xs, dtype=np.float64)
    h = h.reshape(h.shape[0], -1)
    for op in net.ops:
        if op[0] == "affine":
            h = h @ op[1].T + op[2]
        else:
            h = np.maximum(h, 0.0)
    return h


def predicted_class(logits) -> int:
    """Index of the largest logit; ties go to the smallest index."""
    logits = np.asarray(logits)
    if logits.size == 0:
        raise ValueError("empty logits")
    return int(np.argmax(logits))


# --- JSON -----------------------------------------------------------------

def _layer_from_json(obj, i):
    if not isinstance(obj, dict) or "type" not in obj:
        raise NetworkFormatError(f"layers[{i}]: expected an object with a 'type' field")
    kind = obj["type"]
    try:
        if kind == "dense":
            return Dense(obj["weights"], obj["bias"])
        if kind == "conv2d":
            if obj.get("dilation", 1) != 1:
                raise NetworkFormatError(f"layers[{i}]: dilation is not supported")
            return Conv2d(obj["kernels"], obj["bias"], obj.get("stride", 1), obj.get("padding", 0))
        if kind == "relu":
            return ReLU()
        if kind == "flatten":
            return Flatten()
    except KeyError as exc:
        raise NetworkFormatError(f"layers[{i}] ({kind}): missing field {exc}") from None
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"layers[{i}] ({kind}): {exc}") from None
    except (TypeError, ValueError) as exc:
        raise NetworkFormatError(f"layers[{i}] ({kind}): {exc}") from None
    raise NetworkFormatError(f"layers[{i}]: unsupported layer type {kind!r} (only ReLU activations)")


def network_from_json(obj: dict) -> Network:
    for key in ("input_shape", "layers"):
        if key not in obj:
            raise NetworkFormatError(f"missing top-level field {key!r}")
    shape = obj["input_shape"]
    if not isinstance(shape, list) or len(shape) != 3:
        raise NetworkFormatError(f"input_shape must be [c, h, w], got {shape!r}")
    layers = [_layer_from_json(layer, i) for i, layer in enumerate(obj["layers"])]
    return Network(obj.get("name", ""), shape, layers)


def load_network(path) -> Network:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return network_from_json(obj)


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(net.to_json()))
