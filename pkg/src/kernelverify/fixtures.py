"""Deterministic synthetic networks and robustness properties.

Three construction modes:

``random``
    A small ReLU network with Gaussian (He-scaled) weights and an image drawn
    from one of several styles; the label is whatever the network predicts
    on the clean image.
``flip``
    A network/image/kernel triple whose predicted class changes exactly
    when the kernel strength crosses ``z0``. The logit difference is an
    affine function of one perturbed pixel, aimed so that it vanishes at
    ``z0``; a ReLU unit with a large offset keeps the function affine over
    the whole pixel range.
``template``
    A prototype-matching classifier: each class owns a zero-mean template
    of a blob image, hidden units correlate the input with the templates,
    and an extra "reject" class fires at a fixed fraction of the clean
    image's score. The image is its class prototype plus a little noise.
    Blurring erodes the correlation, sharpening mostly reinforces it, which
    mirrors how trained image classifiers react to these perturbations.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .encode import separate_convolution
from .kernels import KernelFamily, all_families, make_kernel
from .network import Conv2d, Dense, Flatten, Network, ReLU, forward, predicted_class

SEED_ENV = "KERNELVERIFY_SEED"
IMAGE_STYLES = ("blob", "noise", "high-contrast")


class FixtureError(ValueError):
    """Infeasible fixture specification."""


@dataclass(frozen=True)
class FixtureSpec:
    input_shape: tuple = (1, 8, 8)
    widths: tuple = (16,)
    classes: int = 3
    mode: str = "random"
    image: str = "blob"
    conv: bool = False
    family: str = "box-blur"
    size: int = 3
    strength: float = 1.0
    z0: float = 0.5
    timeout_s: float = 60.0


def resolve_seed(seed: Optional[int]) -> int:
    """``KERNELVERIFY_SEED`` overrides the given seed when set."""
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        return int(env)
    if seed is None:
        raise FixtureError(f"no seed given and {SEED_ENV} is unset")
    return int(seed)


def make_image(rng: np.random.Generator, shape, style: str) -> np.ndarray:
    c, h, w = shape
    if style == "noise":
        return rng.random(shape)
    if style == "high-contrast":
        # Binary pixels with both values guaranteed in every 3x3 window.
        checker = (np.add.outer(np.arange(h), np.arange(w)) % 2).astype(float)
        flips = rng.random(shape) < 0.15
        img = np.where(flips, 1.0 - checker, checker)
        return np.where(rng.random((c, 1, 1)) < 0.5, img, 1.0 - img)
    if style == "blob":
        # A few bright Gaussian strokes on a dark background.
        yy, xx = np.mgrid[0:h, 0:w]
        img = np.zeros(shape)
        for ch in range(c):
            for _ in range(rng.integers(2, 4)):
                cy, cx = rng.uniform(1.5, h - 2.5), rng.uniform(1.5, w - 2.5)
                sy, sx = rng.uniform(0.7, 1.8, size=2)
                img[ch] += np.exp(-((yy - cy) ** 2 / (2 * sy**2) + (xx - cx) ** 2 / (2 * sx**2)))
        return np.clip(img, 0.0, 1.0)
    raise FixtureError(f"unknown image style {style!r}; choose from {IMAGE_STYLES}")


def _random_layers(rng, spec: FixtureSpec):
    c, h, w = spec.input_shape
    layers = []
    n_in = c * h * w
    if spec.conv:
        out_ch = 2
        k = rng.normal(0.0, np.sqrt(2.0 / (9 * c)), size=(out_ch, c, 3, 3))
        layers += [Conv2d(k, rng.normal(0.0, 0.05, out_ch), stride=2, padding=1), ReLU(), Flatten()]
        n_in = out_ch * ((h + 1) // 2) * ((w + 1) // 2)
    for width in spec.widths:
        wgt = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(width, n_in))
        layers += [Dense(wgt, rng.normal(0.0, 0.05, width)), ReLU()]
        n_in = width
    wgt = rng.normal(0.0, np.sqrt(1.0 / n_in), size=(spec.classes, n_in))
    layers.append(Dense(wgt, np.zeros(spec.classes)))
    return layers


def _check_spec(spec: FixtureSpec):
    if len(spec.input_shape) != 3 or min(spec.input_shape) < 1:
        raise FixtureError(f"input_shape must be (c, h, w), got {spec.input_shape}")
    if spec.classes < 2:
        raise FixtureError("need at least two classes")
    if len(spec.widths) > 2 or any(w < 1 or w > 64 for w in spec.widths):
        raise FixtureError("hidden widths must be at most two layers of 1-64 neurons")
    if spec.mode not in ("random", "flip", "template"):
        raise FixtureError(f"unknown mode {spec.mode!r}")
    if spec.mode == "flip" and not 0.0 < spec.z0 < 1.0:
        raise FixtureError(f"flip point z0 must lie in (0, 1), got {spec.z0}")


def _property(image, label, spec: FixtureSpec) -> dict:
    family = KernelFamily.from_label(spec.family)
    kernel = {"family": family.tag, "size": spec.size}
    if family.angle is not None:
        kernel["angle"] = family.angle
    return {
        "image": image.reshape(-1).tolist(),
        "image_shape": list(image.shape),
        "label": int(label),
        "kernel": kernel,
        "strength": [0.0, float(spec.strength)],
        "timeout_s": float(spec.timeout_s),
    }


def _flip_fixture(rng, spec: FixtureSpec, name: str):
    image = make_image(rng, spec.input_shape, spec.image)
    pk = make_kernel(spec.family, spec.size)
    ep = separate_convolution(image, pk)
    slope, offset = ep.r_coeffs[0], ep.r_bias
    pixel = int(np.argmax(np.abs(slope)))
    if abs(slope[pixel]) < 1e-3:
        raise FixtureError("perturbation leaves the image (almost) unchanged; no flip possible")
    n = image.size
    # d(z) = a * pixel(z) + c crosses zero at z0 and grows with z.
    a = np.sign(slope[pixel]) / abs(slope[pixel])
    c = -a * (slope[pixel] * spec.z0 + offset[pixel])
    lift = abs(a) * (np.abs(offset).max() + np.abs(slope).max()) + abs(c) + 1.0

    width = spec.widths[0] if spec.widths else 8
    w1 = np.zeros((width, n))
    b1 = np.zeros(width)
    w1[0, pixel] = a
    b1[0] = c + lift
    # Distractor units feed both logits equally, so they cancel in the margin.
    w1[1:] = rng.normal(0.0, np.sqrt(2.0 / n), size=(width - 1, n))
    b1[1:] = rng.normal(0.0, 0.05, width - 1)
    shared = rng.normal(0.0, 0.3, width - 1)
    w2 = np.zeros((spec.classes, width))
    w2[:, 1:] = shared
    w2[1, 0] = 1.0
    b2 = np.zeros(spec.classes)
    b2[1] = -lift
    # Remaining classes stay far below.
    b2[2:] = -10.0 * (lift + 1.0)
    net = Network(name, spec.input_shape, [Dense(w1, b1), ReLU(), Dense(w2, b2)])
    return net, image, 0


def _template_fixture(rng, spec: FixtureSpec, name: str):
    n_proto = spec.classes - 1
    if n_proto < 1:
        raise FixtureError("template mode needs at least two classes (one is reject)")
    width = spec.widths[0] if spec.widths else 16
    if width < n_proto:
        raise FixtureError(f"template mode needs width >= {n_proto}")
    protos = [make_image(rng, spec.input_shape, "blob") for _ in range(n_proto)]
    label = int(rng.integers(n_proto))
    image = np.clip(protos[label] + rng.normal(0.0, 0.03, spec.input_shape), 0.0, 1.0)
    n = image.size
    w1 = np.zeros((width, n))
    for k, p in enumerate(protos):
        t = p.reshape(-1) - p.mean()
        w1[k] = t / np.linalg.norm(t)
    w1[n_proto:] = rng.normal(0.0, 0.1 / np.sqrt(n), size=(width - n_proto, n))
    b1 = np.zeros(width)
    w2 = np.zeros((spec.classes, width))
    w2[:n_proto, :n_proto] = np.eye(n_proto)
    w2[:n_proto, n_proto:] = rng.normal(0.0, 0.05, size=(n_proto, width - n_proto))
    h = np.maximum(w1 @ image.reshape(-1), 0.0)
    score = (w2 @ h)[label]
    b2 = np.zeros(spec.classes)
    b2[-1] = rng.uniform(0.3, 0.9) * score
    net = Network(name, spec.input_shape, [Dense(w1, b1), ReLU(), Dense(w2, b2)])
    if predicted_class(forward(net, image)) != label:
        raise FixtureError("template fixture does not classify its own prototype; try another seed")
    return net, image, label


def gen_fixture(seed: int, spec: FixtureSpec = FixtureSpec(), name: Optional[str] = None):
    """Return ``(network, property_dict)`` generated deterministically from ``seed``."""
    _check_spec(spec)
    rng = np.random.default_rng(seed)
    name = name or f"fixture-{spec.mode}-{seed}"
    if spec.mode == "flip":
        net, image, label = _flip_fixture(rng, spec, name)
    elif spec.mode == "template":
        net, image, label = _template_fixture(rng, spec, name)
    else:
        net = Network(name, spec.input_shape, _random_layers(rng, spec))
        image = make_image(rng, spec.input_shape, spec.image)
        label = predicted_class(forward(net, image))
    return net, _property(image, label, spec)


def write_fixture(out_dir, seed: int, spec: FixtureSpec = FixtureSpec(), name: Optional[str] = None):
    """Write ``<name>.net.json`` and ``<name>.prop.json``; return both paths."""
    net, prop = gen_fixture(seed, spec, name)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net_path = out / f"{net.name}.net.json"
    prop_path = out / f"{net.name}.prop.json"
    net_path.write_text(json.dumps(net.to_json()))
    prop_path.write_text(json.dumps(prop))
    return net_path, prop_path


# --- benchmark suites -----------------------------------------------------

SUITES = ("soundness", "high-contrast", "trend")


def suite_specs(name: str) -> list:
    """``(seed, FixtureSpec)`` pairs making up a named fixture suite.

    ``soundness``: random dense and conv nets (at most three affine layers
    and 64 hidden neurons) over all image styles, one and three channels.
    ``high-contrast``: random nets on near-binary images, where neighbourhood
    boxes span the full pixel range. ``trend``: template classifiers.
    """
    if name == "soundness":
        archs = [dict(widths=(16,)), dict(widths=(32, 16)), dict(widths=(24,), conv=True)]
        specs = []
        seed = 0
        for arch in archs:
            for style in IMAGE_STYLES:
                for channels in (1, 3):
                    specs.append((seed, FixtureSpec(input_shape=(channels, 8, 8), image=style, **arch)))
                    seed += 1
        return specs
    if name == "high-contrast":
        return [(100 + i, FixtureSpec(image="high-contrast", widths=(16,))) for i in range(8)]
    if name == "trend":
        return [(200 + i, FixtureSpec(mode="template", classes=4, widths=(16,))) for i in range(20)]
    raise FixtureError(f"unknown suite {name!r}; choose from {SUITES}")


SUITE_GRIDS = {
    "soundness": dict(sizes=[3, 5], strengths=[0.3, 1.0]),
    "high-contrast": dict(sizes=[3, 5], strengths=[0.2, 0.5, 1.0]),
    "trend": dict(sizes=[3, 5, 7, 9], strengths=[0.2, 0.4, 0.6, 0.8, 1.0]),
}


def write_suite(out_dir, name: str, method: str = "param", timeout_s: float = 60.0) -> Path:
    """Write a suite's fixtures plus a manifest; return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    queries = []
    for seed, spec in suite_specs(name):
        net_path, prop_path = write_fixture(out, seed, spec, name=f"{name}-{seed}")
        queries.append({"network": net_path.name, "property": prop_path.name})
    manifest = {
        "queries": queries,
        "families": [f.label for f in all_families()],
        **SUITE_GRIDS[name],
        "timeout_s": timeout_s,
        "method": method,
    }
    path = out / f"manifest-{method}.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path
