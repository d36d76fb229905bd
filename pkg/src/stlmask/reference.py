"""Direct, loop-based Boolean and quantitative semantics.

This module is the correctness oracle: plain structural recursion with
explicit window loops, no masks, no vectorization.  ``robustness_ref``
recurses pointwise (exponential in formula depth, fine for an oracle);
``trace_ref`` composes child traces per timestep, which is the same
definition evaluated bottom-up and is what the equivalence suites run.

Boolean evaluation clips windows at the signal end.  Quantitative evaluation
treats windows past the end via the padding policy: an entry whose window
overruns the final sample evaluates to the padding-derived constant (for
until, the hard min of the two child padding values), while windows that fit
reduce over real samples only.  Untimed windows clip instead.  Smooth modes
use the same single-application reductions per window as the masking engine.
"""

from __future__ import annotations

import numpy as np

from .core import NamedSignals, SemanticsConfig, SmoothInterval, ValidationError
from .formula import (
    Always,
    And,
    Eventually,
    Formula,
    Not,
    Or,
    Pred,
    TrueFormula,
    Until,
    validate_against,
)
from .smoothing import smooth_max, smooth_min, smooth_mask_weights

__all__ = ["eval_bool", "robustness_ref", "trace_ref"]


def _check_start(t: int, length: int):
    if not 0 <= t < length:
        raise IndexError(f"start index {t} outside signal of length {length}")


def eval_bool(f: Formula, signals: NamedSignals, t: int = 0) -> bool:
    """Boolean satisfaction of the subsignal starting at ``t``.

    Window indices past the final sample are dropped (no padding notion in
    the Boolean semantics).  ``x < c`` evaluates as ``not (x > c)``; ``>=``
    and ``<=`` behave like their strict versions.
    """
    length = signals.length
    _check_start(t, length)
    if isinstance(f, TrueFormula):
        return True
    if isinstance(f, Pred):
        above = signals[f.var].values[t] > f.threshold
        return bool(above) if f.cmp in (">", ">=") else bool(not above)
    if isinstance(f, Not):
        return not eval_bool(f.arg, signals, t)
    if isinstance(f, And):
        return eval_bool(f.left, signals, t) and eval_bool(f.right, signals, t)
    if isinstance(f, Or):
        return eval_bool(f.left, signals, t) or eval_bool(f.right, signals, t)
    if isinstance(f, (Eventually, Always, Until)):
        iv = f.interval
        if isinstance(iv, SmoothInterval):
            raise TypeError("Boolean semantics are defined for discrete intervals only")
        lo = 0 if iv is None else iv.a
        hi = length - 1 - t if iv is None else iv.b
        offsets = [i for i in range(lo, hi + 1) if t + i <= length - 1]
        if isinstance(f, Eventually):
            return any(eval_bool(f.arg, signals, t + i) for i in offsets)
        if isinstance(f, Always):
            return all(eval_bool(f.arg, signals, t + i) for i in offsets)
        return any(
            eval_bool(f.right, signals, t + i)
            and all(eval_bool(f.left, signals, t + tau) for tau in range(0, i + 1))
            for i in offsets
        )
    raise TypeError(f"not a Formula node: {f!r}")


def robustness_ref(f: Formula, signals: NamedSignals, t: int = 0,
                   cfg: SemanticsConfig = SemanticsConfig()) -> float:
    """Quantitative semantics at start index ``t`` by naive recursion."""
    length = signals.length
    _check_start(t, length)
    mode = cfg.mode

    def pad_value(g: Formula) -> float:
        # the assumed robustness of the region past the signal end
        if cfg.padding.kind == "last":
            return robustness_ref(g, signals, length - 1, cfg)
        return cfg.padding.value

    if isinstance(f, TrueFormula):
        return cfg.top_value
    if isinstance(f, Pred):
        v = float(signals[f.var].values[t])
        return v - f.threshold if f.cmp in (">", ">=") else f.threshold - v
    if isinstance(f, Not):
        return -robustness_ref(f.arg, signals, t, cfg)
    if isinstance(f, And):
        return smooth_min([robustness_ref(f.left, signals, t, cfg),
                           robustness_ref(f.right, signals, t, cfg)], mode)
    if isinstance(f, Or):
        return smooth_max([robustness_ref(f.left, signals, t, cfg),
                           robustness_ref(f.right, signals, t, cfg)], mode)
    if isinstance(f, (Eventually, Always)):
        iv = f.interval
        reduce = smooth_max if isinstance(f, Eventually) else smooth_min
        if isinstance(iv, SmoothInterval):
            weights = smooth_mask_weights(iv, length)
            pv = pad_value(f.arg)
            vals = [robustness_ref(f.arg, signals, t + i, cfg) if t + i <= length - 1 else pv
                    for i in range(length)]
            return reduce(vals, mode, weights)
        if iv is None:
            vals = [robustness_ref(f.arg, signals, u, cfg) for u in range(t, length)]
            return reduce(vals, mode)
        if t + iv.b > length - 1:
            return pad_value(f.arg)
        vals = [robustness_ref(f.arg, signals, t + i, cfg) for i in range(iv.a, iv.b + 1)]
        return reduce(vals, mode)
    if isinstance(f, Until):
        iv = f.interval
        if iv is None:
            offsets = range(0, length - t)
        else:
            if t + iv.b > length - 1:
                return min(pad_value(f.left), pad_value(f.right))
            offsets = range(iv.a, iv.b + 1)
        terms = []
        for i in offsets:
            prefix = [robustness_ref(f.left, signals, t + tau, cfg) for tau in range(0, i + 1)]
            pm = smooth_min(prefix, mode)
            terms.append(smooth_min([pm, robustness_ref(f.right, signals, t + i, cfg)], mode))
        return smooth_max(terms, mode)
    raise TypeError(f"not a Formula node: {f!r}")


def trace_ref(f: Formula, signals: NamedSignals,
              cfg: SemanticsConfig = SemanticsConfig()) -> np.ndarray:
    """Robustness at every start index, composed bottom-up from child traces."""
    missing = validate_against(f, signals)
    if missing:
        raise ValidationError(missing)
    return np.asarray(_trace(f, signals, cfg), dtype=np.float64)


def _pad_of(trace: list[float], cfg: SemanticsConfig) -> float:
    return trace[-1] if cfg.padding.kind == "last" else cfg.padding.value


def _trace(f: Formula, signals: NamedSignals, cfg: SemanticsConfig) -> list[float]:
    length = signals.length
    mode = cfg.mode
    if isinstance(f, TrueFormula):
        return [cfg.top_value] * length
    if isinstance(f, Pred):
        vals = signals[f.var].values
        if f.cmp in (">", ">="):
            return [float(v) - f.threshold for v in vals]
        return [f.threshold - float(v) for v in vals]
    if isinstance(f, Not):
        return [-v for v in _trace(f.arg, signals, cfg)]
    if isinstance(f, (And, Or)):
        left = _trace(f.left, signals, cfg)
        right = _trace(f.right, signals, cfg)
        reduce = smooth_min if isinstance(f, And) else smooth_max
        return [reduce([l, r], mode) for l, r in zip(left, right)]
    if isinstance(f, (Eventually, Always)):
        child = _trace(f.arg, signals, cfg)
        reduce = smooth_max if isinstance(f, Eventually) else smooth_min
        iv = f.interval
        if isinstance(iv, SmoothInterval):
            weights = smooth_mask_weights(iv, length)
            padded = child + [_pad_of(child, cfg)] * (length - 1)
            return [reduce(padded[t:t + length], mode, weights) for t in range(length)]
        if iv is None:
            return [reduce(child[t:], mode) for t in range(length)]
        pv = _pad_of(child, cfg)
        return [reduce(child[t + iv.a:t + iv.b + 1], mode) if t + iv.b <= length - 1 else pv
                for t in range(length)]
    if isinstance(f, Until):
        left = _trace(f.left, signals, cfg)
        right = _trace(f.right, signals, cfg)
        iv = f.interval
        pv = None if iv is None else min(_pad_of(left, cfg), _pad_of(right, cfg))
        out = []
        for t in range(length):
            if iv is not None and t + iv.b > length - 1:
                out.append(pv)
                continue
            offsets = range(0, length - t) if iv is None else range(iv.a, iv.b + 1)
            terms = []
            for i in offsets:
                pm = smooth_min(left[t:t + i + 1], mode)
                terms.append(smooth_min([pm, right[t + i]], mode))
            out.append(smooth_max(terms, mode))
        return out
    raise TypeError(f"not a Formula node: {f!r}")
