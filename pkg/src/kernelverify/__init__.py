"""Robustness verification of ReLU networks against convolutional perturbations
(motion blur, box blur, sharpen) encoded as linearly parameterised kernels."""

from .encode import EncodedPerturbation, augment, build_augmented, separate_convolution
from .kernels import KernelFamily, ParamKernel, all_families, make_kernel
from .network import AugmentedNetwork, Network, forward, load_network, predicted_class
from .verifier import (
    StrengthDomain,
    Verdict,
    VerificationQuery,
    VerifierConfig,
    verify,
    verify_baseline,
)

__version__ = "0.1.0"
