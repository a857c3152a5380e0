"""Encode a parameterised-kernel perturbation of one image as an affine layer.

Convolution is linear in the kernel, so ``I * P(z) = sum_i (I * A_i) z_i +
I * B``. Convolving the image once per coefficient matrix and once with the
bias matrix gives a layer ``z -> R_A z + r_B`` whose output is the perturbed
image, flattened. Prepending it to a classifier yields a network over the
low-dimensional kernel variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import ParamKernel
from .network import AugmentedNetwork, Dense, Network
from .tensor import ShapeError, convolve2d, flatten


@dataclass(frozen=True, eq=False)
class EncodedPerturbation:
    r_coeffs: np.ndarray  # (m, n) one row per kernel variable
    r_bias: np.ndarray  # (n,)
    image: np.ndarray
    kernel: ParamKernel

    @property
    def matrix(self) -> np.ndarray:
        """Prefix weight matrix, shape ``(n, m)``."""
        return self.r_coeffs.T

    def perturbed(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        return self.r_coeffs.T @ z + self.r_bias


def _as_chw(image) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[None]
    if image.ndim != 3:
        raise ShapeError(f"image must be (c, h, w), got shape {image.shape}")
    return image


def separate_convolution(image, pk: ParamKernel) -> EncodedPerturbation:
    image = _as_chw(image)
    r_coeffs = np.stack([flatten(convolve2d(image, a, "same")) for a in pk.coeffs])
    r_bias = flatten(convolve2d(image, pk.bias, "same"))
    return EncodedPerturbation(r_coeffs, r_bias, image, pk)


def direct_perturbation(image, pk: ParamKernel, z) -> np.ndarray:
    """Reference path: build ``P(z)`` first, then convolve."""
    return flatten(convolve2d(_as_chw(image), pk.evaluate(z), "same"))


def build_augmented(net: Network, ep: EncodedPerturbation) -> AugmentedNetwork:
    if ep.r_bias.shape[0] != net.input_size:
        raise ShapeError(
            f"image of shape {ep.image.shape} does not match network input {net.input_shape}"
        )
    return AugmentedNetwork(net, Dense(ep.matrix, ep.r_bias))


def augment(net: Network, image, pk: ParamKernel) -> AugmentedNetwork:
    return build_augmented(net, separate_convolution(image, pk))
