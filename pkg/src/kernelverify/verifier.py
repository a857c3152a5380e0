"""Robustness queries over kernel-strength domains.

:func:`verify` runs input-splitting branch and bound on the augmented
network: each subproblem is a box over the kernel variables, bounded with
:func:`~kernelverify.bounds.symbolic_propagate`, attacked by sampling, and
bisected along its widest side when neither succeeds.

Subproblems are processed in waves of a fixed size taken widest-first from
the queue. A wave may be spread over worker threads, but its contents and
the order in which results are merged never depend on the thread count, so
verdicts, witnesses and subproblem counts are reproducible.
"""

from __future__ import annotations

import heapq
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baseline import neighborhood_bounds
from .bounds import Bounds, symbolic_propagate
from .encode import augment
from .kernels import ParamKernel
from .network import AugmentedNetwork, Network, forward, forward_batch, predicted_class
from .tensor import flatten

SAFE, UNSAFE, UNDECIDED = "safe", "unsafe", "undecided"


@dataclass(frozen=True)
class StrengthDomain:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("strength bounds differ in length")
        for a, b in zip(lo, hi):
            if not 0.0 <= a <= b <= 1.0:
                raise ValueError(f"strength interval [{a}, {b}] is not a sub-interval of [0, 1]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def up_to(cls, strength: float, m: int = 1) -> "StrengthDomain":
        return cls((0.0,) * m, (float(strength),) * m)

    def contains(self, z) -> bool:
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        return z.shape == (len(self.lower),) and bool(
            np.all(z >= self.lower) and np.all(z <= self.upper)
        )


@dataclass
class VerificationQuery:
    network: Network
    image: np.ndarray  # (c, h, w)
    label: int
    kernel: ParamKernel
    domain: StrengthDomain
    timeout: float = 60.0
    method: str = "param"

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float64).reshape(self.network.input_shape)
        if not 0 <= self.label < self.network.num_classes:
            raise ValueError(f"label {self.label} outside [0, {self.network.num_classes})")
        if len(self.domain.lower) != self.kernel.m:
            raise ValueError(f"domain has {len(self.domain.lower)} variables, kernel has {self.kernel.m}")
        if self.method not in ("param", "baseline"):
            raise ValueError(f"unknown method {self.method!r}")

    def check_correctly_classified(self):
        pred = predicted_class(forward(self.network, self.image))
        if pred != self.label:
            raise ValueError(f"image is classified as {pred}, not as label {self.label}")


@dataclass
class Verdict:
    status: str
    witness: Optional[list] = None
    reason: Optional[str] = None
    subproblems: int = 0
    max_depth: int = 0
    time_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": self.witness,
            "reason": self.reason,
            "subproblems": self.subproblems,
            "time_s": self.time_s,
        }


@dataclass(frozen=True)
class VerifierConfig:
    min_width: float = 1e-6
    attack_budget: int = 16
    wave_size: int = 8
    workers: int = 1
    baseline_samples: int = 64
    seed: int = 0


def check_output_spec(bounds: Bounds, label: int) -> str:
    """``"certified"`` iff ``y[label] > y[j]`` for all ``j != label`` is proven."""
    if bounds.margin_lower is not None and bounds.label == label:
        return "certified" if bool(np.all(bounds.margin_lower > 0)) else "unknown"
    lo, hi = bounds.output_lower, bounds.output_upper
    others = np.delete(hi, label)
    return "certified" if bool(np.all(lo[label] > others)) else "unknown"


def is_misclassified(net, x, label: int) -> bool:
    return predicted_class(forward(net, x)) != label


def _attack_points(lo: np.ndarray, hi: np.ndarray, budget: int) -> np.ndarray:
    """Endpoints, midpoint, then a uniform grid (diagonal for m > 1)."""
    m = lo.shape[0]
    pts = [lo, hi, (lo + hi) / 2]
    if m > 1:
        for corner in itertools.islice(itertools.product((0, 1), repeat=m), budget):
            pts.append(np.where(np.array(corner) == 1, hi, lo))
    for t in np.linspace(0.0, 1.0, budget):
        pts.append(lo + t * (hi - lo))
    return np.array(pts)


def attack(aug, domain, label: int, budget: int = 16) -> Optional[np.ndarray]:
    """First sampled ``z`` in ``domain`` that changes the predicted class.

    ``domain`` is a :class:`StrengthDomain` or a ``(lower, upper)`` pair.
    Candidates are re-checked with the exact per-input forward pass.
    """
    if budget < 2:
        raise ValueError("attack budget must be >= 2")
    if isinstance(domain, StrengthDomain):
        lo, hi = np.array(domain.lower), np.array(domain.upper)
    else:
        lo, hi = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in domain)
    pts = _attack_points(lo, hi, budget)
    preds = np.argmax(forward_batch(aug, pts), axis=1)
    for idx in np.flatnonzero(preds != label):
        z = pts[idx]
        if is_misclassified(aug, z, label):
            return z
    return None


@dataclass(order=True)
class _Node:
    key: tuple
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    depth: int = field(compare=False)


def _node(lo, hi, depth, counter) -> _Node:
    # Widest first; ties by position so the order is reproducible.
    return _Node((-float(np.max(hi - lo)), tuple(lo), next(counter)), lo, hi, depth)


def _process(aug, label, cfg, node: _Node):
    bounds = symbolic_propagate(aug, node.lower, node.upper, label)
    if check_output_spec(bounds, label) == "certified":
        return "certified", None
    z = attack(aug, (node.lower, node.upper), label, cfg.attack_budget)
    if z is not None:
        return "witness", z
    if np.max(node.upper - node.lower) < cfg.min_width:
        return "leaf", None
    return "split", None


def _split(node: _Node, counter):
    lo, hi = node.lower, node.upper
    d = int(np.argmax(hi - lo))
    mid = (lo[d] + hi[d]) / 2
    left_hi = hi.copy()
    left_hi[d] = mid
    right_lo = lo.copy()
    right_lo[d] = mid
    return _node(lo, left_hi, node.depth + 1, counter), _node(right_lo, hi, node.depth + 1, counter)


def _valid_witness(aug, domain: StrengthDomain, label, z) -> bool:
    return domain.contains(z) and is_misclassified(aug, z, label)


def verify(query: VerificationQuery, config: VerifierConfig = VerifierConfig(),
           hints: Sequence = ()) -> Verdict:
    """Decide a parameterised-kernel query by input-splitting branch and bound.

    ``hints`` are candidate witnesses (e.g. from a weaker strength of the same
    query); any that lies in the domain and misclassifies settles the query.
    """
    start = time.perf_counter()
    query.check_correctly_classified()
    aug = augment(query.network, query.image, query.kernel)
    domain, label = query.domain, query.label

    def done(status, witness=None, reason=None, count=0, depth=0):
        if witness is not None:
            witness = [float(v) for v in witness]
        return Verdict(status, witness, reason, count, depth, time.perf_counter() - start)

    for z in hints:
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        if _valid_witness(aug, domain, label, z):
            return done(UNSAFE, z, "hint")

    counter = itertools.count()
    queue = [_node(np.array(domain.lower), np.array(domain.upper), 0, counter)]
    count = max_depth = 0
    leaves_undecided = 0
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        while queue:
            if time.perf_counter() - start > query.timeout:
                return done(UNDECIDED, reason="timeout", count=count, depth=max_depth)
            wave = [heapq.heappop(queue) for _ in range(min(config.wave_size, len(queue)))]
            if pool is None:
                results = [_process(aug, label, config, n) for n in wave]
            else:
                results = list(pool.map(lambda n: _process(aug, label, config, n), wave))
            count += len(wave)
            max_depth = max(max_depth, max(n.depth for n in wave))
            witnesses = [z for outcome, z in results if outcome == "witness"]
            if witnesses:
                z = min(witnesses, key=tuple)
                if _valid_witness(aug, domain, label, z):
                    return done(UNSAFE, z, count=count, depth=max_depth)
            for node, (outcome, _) in zip(wave, results):
                if outcome == "split":
                    for child in _split(node, counter):
                        heapq.heappush(queue, child)
                elif outcome == "leaf":
                    leaves_undecided += 1
    finally:
        if pool is not None:
            pool.shutdown()
    if leaves_undecided:
        return done(UNDECIDED, reason=f"{leaves_undecided} leaf interval(s) below minimum width",
                    count=count, depth=max_depth)
    return done(SAFE, count=count, depth=max_depth)


def verify_baseline(query: VerificationQuery, config: VerifierConfig = VerifierConfig()) -> Verdict:
    """Certify against every kernel of the query's size with entries in [0, 1].

    The perturbation set is the per-pixel neighbourhood box; it is bounded
    once (no splitting) and attacked at box vertices and random points.
    A witness here is a perturbed image, not a kernel parameter.
    """
    start = time.perf_counter()
    query.check_correctly_classified()
    net, label = query.network, query.label
    box = neighborhood_bounds(query.image, query.kernel.size)
    lo, hi = flatten(box.lower), flatten(box.upper)

    def done(status, witness=None, reason=None):
        if witness is not None:
            witness = [float(v) for v in witness]
        return Verdict(status, witness, reason, 1, 0, time.perf_counter() - start)

    bounds = symbolic_propagate(net, lo, hi, label)
    if check_output_spec(bounds, label) == "certified":
        return done(SAFE)

    rng = np.random.default_rng(config.seed)
    lam, _ = bounds.margin_form
    # Vertices that minimise each margin's linear lower bound come first.
    guided = np.where(lam > 0, lo, hi)
    n = config.baseline_samples
    vertices = np.where(rng.random((n, lo.size)) < 0.5, lo, hi)
    uniform = lo + rng.random((n, lo.size)) * (hi - lo)
    pts = np.vstack([guided, lo[None], hi[None], ((lo + hi) / 2)[None], vertices, uniform])
    preds = np.argmax(forward_batch(net, pts), axis=1)
    for idx in np.flatnonzero(preds != label):
        if is_misclassified(net, pts[idx], label):
            return done(UNSAFE, pts[idx])
    return done(UNDECIDED, reason="baseline bounds inconclusive")


def run_query(query: VerificationQuery, config: VerifierConfig = VerifierConfig(),
              hints: Sequence = ()) -> Verdict:
    if query.method == "baseline":
        return verify_baseline(query, config)
    return verify(query, config, hints)
