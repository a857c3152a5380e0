"""Per-pixel neighbourhood bounds used as the ablation baseline.

Each pixel may take any value between the minimum and maximum of its k x k
neighbourhood (cells outside the image are ignored, not zero-padded). Every
bound is attained by some 0/1 kernel, which :func:`attainability_kernel`
constructs explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True, eq=False)
class PixelBox:
    lower: np.ndarray
    upper: np.ndarray


def _check_k(k: int):
    if k < 3 or k % 2 == 0:
        raise ValueError(f"neighbourhood size must be odd and >= 3, got {k}")


def neighborhood_bounds(image, k: int) -> PixelBox:
    """Per-channel min/max over the k x k window centred on each pixel."""
    _check_k(k)
    image = np.asarray(image, dtype=np.float64)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[None]
    r = k // 2
    pad = ((0, 0), (r, r), (r, r))
    # +/-inf padding makes out-of-image cells irrelevant to min/max.
    lo_src = np.pad(image, pad, constant_values=np.inf)
    hi_src = np.pad(image, pad, constant_values=-np.inf)
    lower = sliding_window_view(lo_src, (k, k), axis=(1, 2)).min(axis=(-2, -1))
    upper = sliding_window_view(hi_src, (k, k), axis=(1, 2)).max(axis=(-2, -1))
    if squeeze:
        lower, upper = lower[0], upper[0]
    return PixelBox(lower, upper)


def attainability_kernel(image, k: int, position, which: str = "min") -> np.ndarray:
    """0/1 k x k kernel with its single 1 on the neighbourhood extremum.

    ``position`` is ``(i, j)`` for 2-D images or ``(c, i, j)`` for 3-D ones.
    The kernel's offset convention matches :func:`kernelverify.tensor.convolve2d`
    with same padding: entry ``(a, b)`` weights pixel ``(i + a - k//2, j + b - k//2)``.
    """
    _check_k(k)
    if which not in ("min", "max"):
        raise ValueError(f"which must be 'min' or 'max', got {which!r}")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        c, i, j = position
        plane = image[c]
    else:
        i, j = position
        plane = image
    h, w = plane.shape
    if not (0 <= i < h and 0 <= j < w):
        raise IndexError(f"position {position} outside image of shape {image.shape}")
    r = k // 2
    i0, i1 = max(i - r, 0), min(i + r + 1, h)
    j0, j1 = max(j - r, 0), min(j + r + 1, w)
    window = plane[i0:i1, j0:j1]
    flat = np.argmin(window) if which == "min" else np.argmax(window)
    a, b = np.unravel_index(flat, window.shape)
    kernel = np.zeros((k, k))
    kernel[a + i0 - i + r, b + j0 - j + r] = 1.0
    return kernel


def kernel_value_at(image, kernel: np.ndarray, position) -> float:
    """Convolution of ``kernel`` with the (zero-padded) image at one pixel."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        c, i, j = position
        plane = image[c]
    else:
        i, j = position
        plane = image
    k = kernel.shape[0]
    r = k // 2
    padded = np.pad(plane, r)
    return float(np.sum(padded[i:i + k, j:j + k] * kernel))
