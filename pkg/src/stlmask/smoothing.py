"""Smooth min/max reductions, the differentiable window mask, and annealing.

The log-sum-exp reduction is composition-stable: applying it recursively over
a sequence equals applying it once over all values.  The softmax-average
reduction is not, which is why the recurrent engine drifts from the masked
engine in softmax mode.  All exponentials factor out the window maximum
first, so temperatures up to 1e3 stay inside float64 range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmptyWindowError, Hard, LogSumExp, Mode, SmoothInterval, SoftMax

__all__ = [
    "smooth_max",
    "smooth_min",
    "sigmoid",
    "smooth_time_mask",
    "smooth_mask_weights",
    "AnnealSchedule",
    "anneal",
]


def _prepare(values, weights):
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise EmptyWindowError("reduction over an empty window")
    if weights is None:
        return x, None
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape != x.shape:
        raise EmptyWindowError(f"weights length {w.size} != values length {x.size}")
    if not np.any(w > 0):
        raise EmptyWindowError("all reduction weights are zero")
    return x, w


def smooth_max(values, mode: Mode = Hard(), weights=None) -> float:
    """Reduce a window to its (smooth) maximum.

    ``weights`` in [0, 1] scale each entry's participation; zero excludes an
    entry entirely.  In hard mode only the set of entries with positive weight
    matters.
    """
    x, w = _prepare(values, weights)
    if isinstance(mode, Hard):
        kept = x if w is None else x[w > 0]
        return float(np.max(kept))
    tau = mode.temp
    m = float(np.max(x if w is None else x[w > 0]))
    e = np.exp(tau * (x - m))
    if w is not None:
        e = w * e
    if isinstance(mode, LogSumExp):
        return float(np.log(np.sum(e)) / tau + m)
    if isinstance(mode, SoftMax):
        return float(np.sum(x * e) / np.sum(e))
    raise TypeError(f"unsupported mode: {mode!r}")


def smooth_min(values, mode: Mode = Hard(), weights=None) -> float:
    """Dual of :func:`smooth_max`: ``-smooth_max(-values)``."""
    x, w = _prepare(values, weights)
    return -smooth_max(-x, mode, w)


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def smooth_time_mask(i, si: SmoothInterval, length: int):
    """Differentiable window indicator at time index ``i``.

    ``max(sigmoid(c*(i - a*L)) - sigmoid(c*(i - b*L)) - eps, 0)`` where ``L``
    is the signal sample count.  Scalar in, scalar out; arrays broadcast.
    """
    i = np.asarray(i, dtype=np.float64)
    lo = sigmoid(si.c * (i - si.a * length))
    hi = sigmoid(si.c * (i - si.b * length))
    w = np.maximum(lo - hi - si.eps, 0.0)
    if w.ndim == 0:
        return float(w)
    return w


def smooth_mask_weights(si: SmoothInterval, length: int) -> np.ndarray:
    """Window weights for every index ``0..length-1``.

    Raises :class:`EmptyWindowError` when the interval collapsed below the
    tolerance and every weight is zero.
    """
    w = smooth_time_mask(np.arange(length), si, length)
    if not np.any(w > 0):
        raise EmptyWindowError("smooth interval produced an all-zero weight vector")
    return w


@dataclass(frozen=True)
class AnnealSchedule:
    """Scheduled parameter value over an optimization run.

    The sigmoid shape is rescaled so the endpoints hit ``start`` and ``end``
    exactly; its midpoint slope uses a fixed constant of 12.
    """

    kind: str  # "constant" | "linear" | "sigmoid"
    start: float
    end: float
    total: int = 1

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "sigmoid"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.total < 1:
            raise ValueError("total steps must be >= 1")
        if not (self.start > 0 and self.end > 0):
            raise ValueError("schedule values must stay positive")

    @classmethod
    def constant(cls, value: float) -> "AnnealSchedule":
        return cls("constant", value, value, 1)

    @classmethod
    def linear(cls, start: float, end: float, total: int) -> "AnnealSchedule":
        return cls("linear", start, end, total)

    @classmethod
    def sigmoid(cls, start: float, end: float, total: int) -> "AnnealSchedule":
        return cls("sigmoid", start, end, total)

    def value(self, step: int) -> float:
        if self.kind == "constant":
            return self.start
        if not 0 <= step <= self.total:
            raise ValueError(f"step {step} outside [0, {self.total}]")
        p = step / self.total
        if self.kind == "linear":
            return self.start + (self.end - self.start) * p
        lo, hi = sigmoid(-6.0), sigmoid(6.0)
        frac = (sigmoid(12.0 * (p - 0.5)) - lo) / (hi - lo)
        return self.start + (self.end - self.start) * frac


def anneal(schedule: AnnealSchedule, step: int) -> float:
    """Value of the schedule at ``step``."""
    return schedule.value(step)
