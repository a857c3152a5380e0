"""Linearly parameterised perturbation kernels ``P(z) = sum_i A_i z_i + B``.

Each built-in family interpolates affinely between a "no perturbation" kernel
at ``z = 0`` (the identity for odd sizes) and the full perturbation kernel at
``z = 1``. Every family has a single variable (``m = 1``); :class:`ParamKernel`
itself supports any ``m``.

Even sizes have no identity kernel. They start from a 2x2 box around the true
centre instead and must be requested explicitly with ``allow_even=True``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MOTION_ANGLES = (0, 45, 90, 135)
FAMILY_TAGS = ("motion-blur", "box-blur", "sharpen")

EVEN_WARNING = "even-size kernel: z=0 is a 2x2 box blur, not the identity"


class KernelConstructionError(ValueError):
    """Raised for unsupported families/sizes or failed self-checks."""


@dataclass(frozen=True)
class KernelFamily:
    tag: str
    angle: Optional[int] = None

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise KernelConstructionError(f"unknown kernel family {self.tag!r}")
        if self.tag == "motion-blur":
            if self.angle not in MOTION_ANGLES:
                raise KernelConstructionError(
                    f"motion blur angle must be one of {MOTION_ANGLES}, got {self.angle!r}"
                )
        elif self.angle is not None:
            raise KernelConstructionError(f"{self.tag} takes no angle")

    @property
    def label(self) -> str:
        """Short name used in CSV rows and manifests, e.g. ``motion-blur-45``."""
        return f"{self.tag}-{self.angle}" if self.angle is not None else self.tag

    @classmethod
    def from_label(cls, label: str) -> "KernelFamily":
        if label.startswith("motion-blur"):
            rest = label[len("motion-blur"):].lstrip("-")
            try:
                angle = int(rest)
            except ValueError:
                raise KernelConstructionError(f"bad motion blur label {label!r}") from None
            return cls("motion-blur", angle)
        return cls(label)


@dataclass(frozen=True, eq=False)
class ParamKernel:
    """Kernel ``sum_i coeffs[i] * z[i] + bias`` with family metadata."""

    size: int
    coeffs: np.ndarray  # (m, size, size)
    bias: np.ndarray  # (size, size)
    family: Optional[KernelFamily] = None
    parity: str = "odd"
    warnings: tuple = field(default_factory=tuple)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        s = self.size
        if coeffs.ndim != 3 or coeffs.shape[1:] != (s, s) or bias.shape != (s, s):
            raise KernelConstructionError(
                f"coefficient shape {coeffs.shape} / bias shape {bias.shape} "
                f"do not match kernel size {s}"
            )
        # Sum-to-one for every z follows from these two conditions.
        if abs(bias.sum() - 1.0) > 1e-12 or np.any(np.abs(coeffs.sum(axis=(1, 2))) > 1e-12):
            raise KernelConstructionError(
                "kernel is not normalised: bias must sum to 1 and each coefficient matrix to 0"
            )
        coeffs.flags.writeable = False
        bias.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "bias", bias)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        if z.shape != (self.m,):
            raise ValueError(f"expected {self.m} kernel variable(s), got shape {z.shape}")
        return np.tensordot(z, self.coeffs, axes=1) + self.bias

    def to_json(self) -> dict:
        out = {}
        if self.family is not None:
            out["family"] = self.family.tag
            if self.family.angle is not None:
                out["angle"] = self.family.angle
        out["size"] = self.size
        out["m"] = self.m
        out["coeffs"] = self.coeffs.tolist()
        out["bias"] = self.bias.tolist()
        return out


def evaluate(pk: ParamKernel, z) -> np.ndarray:
    return pk.evaluate(z)


# --- entry classification -------------------------------------------------

def _centre_distance(size: int) -> np.ndarray:
    """Per-index distance to the nearest centre row/column (1 or 2 of them)."""
    idx = np.arange(size)
    if size % 2:
        return np.abs(idx - size // 2)
    h = size // 2
    return np.where(idx < h, h - 1 - idx, idx - h)


def _centre_mask(size: int) -> np.ndarray:
    d = _centre_distance(size)
    return (d[:, None] == 0) & (d[None, :] == 0)


def _sharpen_zero_mask(size: int) -> np.ndarray:
    """Zero entries by the row rule: row ``r`` has ``d(r)`` zeros at each end.

    ``d(r)`` counts rows away from the nearest centre row, so the first row of
    a 5x5 kernel has two leading and two trailing zeros.
    """
    zero = np.zeros((size, size), dtype=bool)
    for r, d in enumerate(_centre_distance(size)):
        if d:
            zero[r, :d] = True
            zero[r, size - d:] = True
    return zero


def _sharpen_negative_count(size: int) -> int:
    if size % 2:
        half = (size - 1) // 2
        return size * size - 2 * half * (half + 1) - 1
    half = size // 2
    return size * size - 2 * (half - 1) * half - 4


def _trail_mask(size: int, angle: int) -> np.ndarray:
    """Cells on the blur trail: 0 deg is the centre column, 90 deg the centre
    row, 45 deg the antidiagonal and 135 deg the main diagonal. For even sizes
    the two columns/rows nearest the centre are both on the trail."""
    d = _centre_distance(size)
    idx = np.arange(size)
    if angle == 0:
        return np.broadcast_to(d[None, :] == 0, (size, size)).copy()
    if angle == 90:
        return np.broadcast_to(d[:, None] == 0, (size, size)).copy()
    if angle == 45:
        return idx[:, None] + idx[None, :] == size - 1
    if angle == 135:
        return idx[:, None] == idx[None, :]
    raise KernelConstructionError(f"unsupported motion blur angle {angle!r}")


# --- odd sizes ------------------------------------------------------------
# Slopes such as 1/s - 1 are written as a single division, -(s - 1)/s, so
# each coefficient is the correctly rounded value of its rational.

def _check_odd(size: int):
    if not isinstance(size, (int, np.integer)) or size < 3:
        raise KernelConstructionError(f"kernel size must be an integer >= 3, got {size!r}")
    if size % 2 == 0:
        raise KernelConstructionError(
            f"size {size} is even; use even_param(..., allow_even=True)"
        )


def _odd_kernel(family: KernelFamily, size: int, coeff: np.ndarray) -> ParamKernel:
    bias = np.zeros((size, size))
    bias[size // 2, size // 2] = 1.0
    return ParamKernel(size, coeff[None], bias, family, "odd")


def motion_blur_param(size: int, angle: int) -> ParamKernel:
    """Motion blur of length ``size`` along ``angle``: trail entries ``z/s``,
    centre ``(1/s - 1) z + 1``."""
    _check_odd(size)
    family = KernelFamily("motion-blur", angle)
    coeff = np.where(_trail_mask(size, angle), 1.0 / size, 0.0)
    c = size // 2
    coeff[c, c] = -(size - 1) / size
    return _odd_kernel(family, size, coeff)


def box_blur_param(size: int) -> ParamKernel:
    _check_odd(size)
    coeff = np.full((size, size), 1.0 / size**2)
    c = size // 2
    coeff[c, c] = -(size**2 - 1) / size**2
    return _odd_kernel(KernelFamily("box-blur"), size, coeff)


def _sharpen_coeff(size: int, centre_value: float) -> np.ndarray:
    centre = _centre_mask(size)
    zero = _sharpen_zero_mask(size)
    negative = ~(centre | zero)
    q_n = _sharpen_negative_count(size)
    if q_n == 0:
        raise KernelConstructionError(f"sharpen needs room for negative entries; size {size} has none")
    if int(negative.sum()) != q_n:
        raise KernelConstructionError(
            f"sharpen {size}x{size}: closed-form negative count {q_n} != "
            f"classified count {int(negative.sum())}"
        )
    coeff = np.where(negative, -1.0 / q_n, 0.0)
    coeff[centre] = centre_value
    return coeff


def sharpen_param(size: int) -> ParamKernel:
    """Sharpen: centre ``z + 1``, a diamond of ``-z/q_n`` entries, zero corners."""
    _check_odd(size)
    return _odd_kernel(KernelFamily("sharpen"), size, _sharpen_coeff(size, 1.0))


# --- even sizes -----------------------------------------------------------

def even_param(family: KernelFamily, size: int, allow_even: bool = False) -> ParamKernel:
    """Even-size parameterisation starting from a 2x2 box at ``z = 0``."""
    if not allow_even:
        raise KernelConstructionError("even kernel sizes require allow_even=True")
    if not isinstance(size, (int, np.integer)) or size < 2 or size % 2:
        raise KernelConstructionError(f"even_param needs an even size >= 2, got {size!r}")
    centre = _centre_mask(size)
    bias = np.where(centre, 0.25, 0.0)
    s = float(size)

    if family.tag == "box-blur":
        coeff = np.full((size, size), 1.0 / s**2)
        coeff[centre] = (4 - s**2) / (4 * s**2)
    elif family.tag == "sharpen":
        coeff = _sharpen_coeff(size, 0.25)
    elif family.angle in (0, 90):
        trail = _trail_mask(size, family.angle)
        coeff = np.where(trail, 1.0 / (2 * s), 0.0)
        coeff[centre] = (2 - s) / (4 * s)
    else:
        trail = _trail_mask(size, family.angle)
        coeff = np.where(trail, 1.0 / s, 0.0)
        coeff[centre & trail] = (4 - s) / (4 * s)
        coeff[centre & ~trail] = -0.25
    return ParamKernel(size, coeff[None], bias, family, "even-approx", (EVEN_WARNING,))


# --- dispatch -------------------------------------------------------------

def make_kernel(family, size: int, angle: Optional[int] = None,
                allow_even: bool = False) -> ParamKernel:
    """Build a built-in kernel from a family tag/label or :class:`KernelFamily`."""
    if isinstance(family, str):
        family = KernelFamily.from_label(family) if angle is None else KernelFamily(family, angle)
    if size % 2 == 0:
        return even_param(family, size, allow_even=allow_even)
    if family.tag == "motion-blur":
        return motion_blur_param(size, family.angle)
    if family.tag == "box-blur":
        return box_blur_param(size)
    return sharpen_param(size)


def all_families() -> list[KernelFamily]:
    """Box blur, sharpen and the four motion-blur angles."""
    return [KernelFamily("box-blur"), KernelFamily("sharpen")] + [
        KernelFamily("motion-blur", a) for a in MOTION_ANGLES
    ]
