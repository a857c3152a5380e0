"""Bound propagation over linearised ReLU networks.

Two domains are provided:

* :func:`interval_propagate` - plain interval arithmetic.
* :func:`symbolic_propagate` - linear bounds back-substituted to the input
  box, with the triangle relaxation for unstable ReLUs. Every neuron's bound
  is intersected with the interval step computed from the already-tightened
  previous layer, so it is never looser than interval arithmetic.

Bounds are sound in exact arithmetic; no directed rounding is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class Bounds:
    """Per-operation concrete bounds (``lower[k]`` is the output of op ``k``).

    ``margin_lower`` holds lower bounds of ``y[label] - y[j]`` for every
    ``j != label`` when a label was supplied to :func:`symbolic_propagate`.
    ``symbolic`` holds the output's affine bounding forms
    ``(coef_lo, const_lo, coef_hi, const_hi)`` over the input variables, and
    ``margin_form`` the affine lower bounds of the margins.
    """

    input_lower: np.ndarray
    input_upper: np.ndarray
    lower: list
    upper: list
    label: Optional[int] = None
    margin_lower: Optional[np.ndarray] = None
    symbolic: Optional[tuple] = None
    margin_form: Optional[tuple] = None

    @property
    def output_lower(self) -> np.ndarray:
        return self.lower[-1]

    @property
    def output_upper(self) -> np.ndarray:
        return self.upper[-1]


def _interval_affine(w, b, lo, hi):
    wp = np.maximum(w, 0.0)
    wn = np.minimum(w, 0.0)
    return wp @ lo + wn @ hi + b, wp @ hi + wn @ lo + b


def _box(net, lower, upper):
    lo = np.asarray(lower, dtype=np.float64).reshape(-1)
    hi = np.asarray(upper, dtype=np.float64).reshape(-1)
    if lo.shape != (net.input_size,) or hi.shape != lo.shape:
        raise ValueError(f"input box of shape {lo.shape}/{hi.shape} does not match {net.input_size} inputs")
    if np.any(lo > hi):
        raise ValueError("input box has lower > upper")
    return lo, hi


def interval_propagate(net, lower, upper) -> Bounds:
    lo, hi = _box(net, lower, upper)
    in_lo, in_hi = lo, hi
    los, his = [], []
    for op in net.ops:
        if op[0] == "affine":
            lo, hi = _interval_affine(op[1], op[2], lo, hi)
        else:
            lo, hi = np.maximum(lo, 0.0), np.maximum(hi, 0.0)
        los.append(lo)
        his.append(hi)
    return Bounds(in_lo, in_hi, los, his)


def relu_relaxation(lo, hi):
    """Linear bounds ``a_lo * x <= relu(x) <= a_hi * x + b_hi`` on ``[lo, hi]``.

    Unstable neurons use the chord through ``(lo, 0)`` and ``(hi, hi)`` above,
    and ``x`` or ``0`` below, whichever leaves the smaller area.
    """
    active = lo >= 0
    unstable = (lo < 0) & (hi > 0)
    width = np.where(unstable, hi - lo, 1.0)
    a_hi = np.where(active, 1.0, np.where(unstable, hi / width, 0.0))
    b_hi = np.where(unstable, -hi * lo / width, 0.0)
    a_lo = np.where(active, 1.0, np.where(unstable & (hi >= -lo), 1.0, 0.0))
    return a_lo, a_hi, b_hi


def _backsub_lower(ops, relax, last, lam, const, in_lo, in_hi):
    """Lower bound of ``lam @ out(op last) + const`` over the input box.

    Returns the concrete bound and the input-space affine form ``(lam, const)``.
    """
    for k in range(last, -1, -1):
        op = ops[k]
        if op[0] == "affine":
            const = const + lam @ op[2]
            lam = lam @ op[1]
        else:
            a_lo, a_hi, b_hi = relax[k]
            pos = np.maximum(lam, 0.0)
            neg = np.minimum(lam, 0.0)
            const = const + neg @ b_hi
            lam = pos * a_lo + neg * a_hi
    value = const + np.maximum(lam, 0.0) @ in_lo + np.minimum(lam, 0.0) @ in_hi
    return value, lam, const


def margin_matrix(num_classes: int, label: int) -> np.ndarray:
    """Rows ``e_label - e_j`` for every ``j != label``."""
    others = [j for j in range(num_classes) if j != label]
    c = np.zeros((len(others), num_classes))
    c[:, label] = 1.0
    c[np.arange(len(others)), others] = -1.0
    return c


def symbolic_propagate(net, lower, upper, label: Optional[int] = None) -> Bounds:
    in_lo, in_hi = _box(net, lower, upper)
    ops = net.ops
    relax = {}
    los, his = [], []
    lo, hi = in_lo, in_hi
    for k, op in enumerate(ops):
        if op[0] == "affine":
            n = op[1].shape[0]
            eye = np.eye(n)
            sym_lo, _, _ = _backsub_lower(ops, relax, k, eye, np.zeros(n), in_lo, in_hi)
            neg_hi, _, _ = _backsub_lower(ops, relax, k, -eye, np.zeros(n), in_lo, in_hi)
            int_lo, int_hi = _interval_affine(op[1], op[2], lo, hi)
            lo = np.maximum(sym_lo, int_lo)
            hi = np.minimum(-neg_hi, int_hi)
            # Rounding can cross the two bounds on (near-)constant neurons.
            hi = np.maximum(hi, lo)
        else:
            relax[k] = relu_relaxation(lo, hi)
            lo, hi = np.maximum(lo, 0.0), np.maximum(hi, 0.0)
        los.append(lo)
        his.append(hi)

    last = len(ops) - 1
    c = los[-1].shape[0]
    out_lo_form = _backsub_lower(ops, relax, last, np.eye(c), np.zeros(c), in_lo, in_hi)
    out_hi_form = _backsub_lower(ops, relax, last, -np.eye(c), np.zeros(c), in_lo, in_hi)
    symbolic = (out_lo_form[1], out_lo_form[2], -out_hi_form[1], -out_hi_form[2])

    margin = margin_form = None
    if label is not None:
        cm = margin_matrix(c, label)
        margin, m_lam, m_const = _backsub_lower(ops, relax, last, cm, np.zeros(len(cm)), in_lo, in_hi)
        margin_form = (m_lam, m_const)
        # Concrete fallback can only help.
        others = [j for j in range(c) if j != label]
        margin = np.maximum(margin, los[-1][label] - his[-1][others])
    return Bounds(in_lo, in_hi, los, his, label, margin, symbolic, margin_form)
