"""Dense float64 tensors and direct 2-D cross-correlation.

Tensors are plain numpy arrays; this module only adds the shape checks and
the sliding-window convolution used everywhere else. Convolution follows the
machine-learning convention: the kernel is *not* flipped.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PaddingSpec = Union[str, int]


class ShapeError(ValueError):
    """Raised when tensor shapes do not fit together."""


def as_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Return ``data`` as a finite float64 array of rank 1-3.

    If ``shape`` is given the data is reshaped to it (element counts must
    agree).
    """
    arr = np.array(data, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(d) for d in shape)
        if int(np.prod(shape)) != arr.size:
            raise ShapeError(f"cannot view {arr.size} values as shape {shape}")
        arr = arr.reshape(shape)
    if not 1 <= arr.ndim <= 3:
        raise ShapeError(f"tensor rank must be 1-3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return arr


def flatten(t: np.ndarray) -> np.ndarray:
    """Channel-major, row-major flattening."""
    return np.ascontiguousarray(t).reshape(-1)


def reshape(t: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    shape = tuple(int(d) for d in shape)
    if int(np.prod(shape)) != t.size:
        raise ShapeError(f"cannot reshape tensor of shape {t.shape} to {shape}")
    return np.ascontiguousarray(t).reshape(shape)


def same_padding(size: int) -> tuple[int, int]:
    """Zero padding (before, after) that keeps spatial shape for a kernel side.

    Odd sizes pad ``size // 2`` on both sides. Even sizes cannot be centred;
    the extra row/column goes after, so the 2x2 centre block of the kernel
    covers pixels (i, j)..(i+1, j+1).
    """
    if size < 1:
        raise ShapeError(f"kernel size must be positive, got {size}")
    total = size - 1
    return total // 2, total - total // 2


def _pad_amounts(padding: PaddingSpec, size: int) -> tuple[int, int]:
    if padding in ("same", "zero-same"):
        return same_padding(size)
    if padding in ("none", "valid", None):
        return 0, 0
    if isinstance(padding, (int, np.integer)) and padding >= 0:
        return int(padding), int(padding)
    raise ValueError(f"unknown padding {padding!r}")


def convolve2d(
    image: np.ndarray,
    kernel: np.ndarray,
    padding: PaddingSpec = "same",
    stride: int = 1,
) -> np.ndarray:
    """Cross-correlate ``image`` with a square ``kernel``.

    ``out[i, j] = sum_{k,l} I[i*stride + k, j*stride + l] * K[k, l]`` on the
    zero-padded image. Rank-3 inputs (channels, h, w) are convolved channel by
    channel with the same kernel.

    ``padding`` is ``"same"`` (zero padding keeping the spatial shape at
    stride 1), ``"none"``, or an explicit per-side integer.
    """
    image = np.asarray(image, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ShapeError(f"kernel must be square rank-2, got shape {kernel.shape}")
    if image.ndim not in (2, 3):
        raise ShapeError(f"image must be rank 2 or 3, got shape {image.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    s = kernel.shape[0]
    before, after = _pad_amounts(padding, s)
    h, w = image.shape[-2:]
    if s > min(h, w) + before + after:
        raise ShapeError(
            f"kernel of shape {kernel.shape} does not fit image of shape "
            f"{image.shape} with padding ({before}, {after})"
        )
    squeeze = image.ndim == 2
    if squeeze:
        image = image[None]
    # A zero buffer plus slice assignment is much cheaper than np.pad here.
    padded = np.zeros((image.shape[0], h + before + after, w + before + after))
    padded[:, before:before + h, before:before + w] = image
    windows = sliding_window_view(padded, (s, s), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    out = np.tensordot(windows, kernel, axes=2)
    return out[0] if squeeze else out


def identity_kernel(size: int) -> np.ndarray:
    """Odd-size identity kernel (single 1 at the centre)."""
    if size % 2 == 0:
        raise ValueError("identity kernel is only defined for odd sizes")
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return k
