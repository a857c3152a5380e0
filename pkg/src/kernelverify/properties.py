"""Property files: one robustness query per JSON document.

Format::

    {"image": [floats], "image_shape": [c, h, w], "label": int,
     "kernel": {"family": str, "size": int, "angle": int?, "allow_even": bool?},
     "strength": [lo, hi], "timeout_s": float}
"""

from __future__ import annotations

import json
from pathlib import Path

from .kernels import KernelFamily, make_kernel
from .network import Network
from .tensor import as_tensor
from .verifier import StrengthDomain, VerificationQuery


class PropertyFormatError(ValueError):
    pass


def parse_property(obj: dict) -> dict:
    for key in ("image", "image_shape", "label", "kernel", "strength"):
        if key not in obj:
            raise PropertyFormatError(f"property is missing field {key!r}")
    try:
        image = as_tensor(obj["image"], obj["image_shape"])
    except ValueError as exc:
        raise PropertyFormatError(f"image: {exc}") from None
    if image.ndim != 3:
        raise PropertyFormatError(f"image_shape must be [c, h, w], got {obj['image_shape']}")
    kernel = obj["kernel"]
    if not isinstance(kernel, dict) or "family" not in kernel or "size" not in kernel:
        raise PropertyFormatError("kernel must be an object with 'family' and 'size'")
    strength = obj["strength"]
    if not isinstance(strength, list) or len(strength) != 2:
        raise PropertyFormatError(f"strength must be [lo, hi], got {strength!r}")
    return {
        "image": image,
        "label": int(obj["label"]),
        "kernel": kernel,
        "strength": (float(strength[0]), float(strength[1])),
        "timeout_s": float(obj.get("timeout_s", 60.0)),
    }


def load_property(path) -> dict:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PropertyFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_property(obj)


def kernel_from_spec(spec: dict):
    family = KernelFamily(spec["family"], spec.get("angle"))
    return make_kernel(family, int(spec["size"]), allow_even=bool(spec.get("allow_even", False)))


def build_query(net: Network, prop: dict, method: str = "param", timeout=None,
                kernel=None, strength=None) -> VerificationQuery:
    """Query from a parsed property; ``kernel``/``strength`` override the file."""
    kernel = kernel if kernel is not None else kernel_from_spec(prop["kernel"])
    lo, hi = prop["strength"] if strength is None else (0.0, float(strength))
    domain = StrengthDomain((lo,) * kernel.m, (hi,) * kernel.m)
    return VerificationQuery(
        network=net,
        image=prop["image"],
        label=prop["label"],
        kernel=kernel,
        domain=domain,
        timeout=prop["timeout_s"] if timeout is None else float(timeout),
        method=method,
    )

