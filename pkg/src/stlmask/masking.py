"""Simultaneous robustness-trace computation via masked window reductions.

Every trace entry is computed at once: the child trace is padded, unrolled so
that column ``t`` holds the subsignal starting at ``t``, and a boolean mask
selects the window entries, which a single min/max (or smooth) reduction then
collapses column-wise.  Until unrolls one extra dimension: for each window
offset ``i`` the prefix of the left trace and the single right value are
reduced separately, paired, and the results max-reduced across offsets.

The implementation streams columns and window slices instead of materializing
the full unrolled arrays; tests check it against materialized mask reductions.
Two shortcuts keep the streaming path cheap without changing results:

* untimed eventually/always in hard and log-sum-exp mode use suffix scans
  (exact for hard; log-sum-exp flattens recursive application by identity),
* until prefix reductions in hard and log-sum-exp mode grow incrementally
  across slices by the same identity.

Softmax mode has no such identity, so it always reduces each window in a
single application.

Padding rule: a trace entry whose window overruns the signal end is replaced
by the padding-derived constant (for until, the hard min of the two child
padding values) — past the end only the assumed padding region is visible,
and every operator reduces a constant region to that constant.  Windows that
fit reduce over real samples only; untimed windows clip at the end instead.

By default reductions run over kept entries only.  With
``SemanticsConfig.masked_fill`` the masked-out entries are instead replaced
by ``+/- sentinel``, the padding rows join the columns as samples, and the
reduction runs over the full column: that reproduces fill-style masking
arithmetic bit for bit (hard mode only makes sense there; the sentinel leaks
into smooth reductions).  The two modes differ exactly on windows that
overrun the end.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .core import (
    EmptyWindowError,
    NamedSignals,
    PaddingPolicy,
    SemanticsConfig,
    ShapeError,
    SmoothInterval,
    SoftMax,
    StepInterval,
    ValidationError,
    window_size,
)
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
from .smoothing import smooth_mask_weights
from .tape import Var

__all__ = [
    "Mask2D",
    "build_subsignal_mask",
    "build_time_mask",
    "combine_masks",
    "build_unrolled",
    "build_until_masks",
    "eventually_trace",
    "always_trace",
    "until_trace",
    "robustness_trace",
    "robustness",
    "trace_var",
    "smooth_weights_var",
]

#: Boolean keep-mask of shape (rows, L); entry (r, t) == True keeps row r in
#: column t's reduction.
Mask2D = np.ndarray


# ---------------------------------------------------------------------------
# Mask construction
# ---------------------------------------------------------------------------

def build_subsignal_mask(length: int, rows: int) -> Mask2D:
    """Keep entry (r, t) iff ``r >= t``: column t starts at its own timestep."""
    if not (rows >= length >= 1):
        raise ShapeError(f"need rows >= length >= 1, got rows={rows}, length={length}")
    r = np.arange(rows)[:, None]
    t = np.arange(length)[None, :]
    return r >= t


def build_time_mask(length: int, iv: StepInterval) -> Mask2D:
    """Keep entry (r, t) iff ``t + a <= r <= t + b``; rows = length + b."""
    rows = length + iv.b
    r = np.arange(rows)[:, None]
    t = np.arange(length)[None, :]
    return (r >= t + iv.a) & (r <= t + iv.b)


def combine_masks(subsig: Mask2D, time: Mask2D) -> Mask2D:
    """Intersection of the kept regions."""
    if subsig.shape != time.shape:
        raise ShapeError(f"mask shapes differ: {subsig.shape} vs {time.shape}")
    return subsig & time


def build_unrolled(values: np.ndarray, rows: int, padding: PaddingPolicy) -> np.ndarray:
    """(rows, L) array whose every column is the padded input."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    length = values.shape[0]
    if rows < length:
        raise ShapeError(f"rows {rows} < signal length {length}")
    pad_value = values[-1] if padding.kind == "last" else padding.value
    padded = np.concatenate([values, np.full(rows - length, pad_value)])
    return np.repeat(padded[:, None], length, axis=1)


def build_until_masks(length: int, iv: StepInterval | None):
    """3D keep-masks for the until construction, shape (rows, L, K).

    Slice k of the left mask keeps, in column t, rows ``t .. t+a+k``; slice k
    of the right mask keeps only row ``t+a+k``.  Without an interval the
    window spans the remaining signal (a=0, K=L, no padding rows) and slices
    reaching past the signal end keep nothing in that column.
    """
    if iv is None:
        a, count, rows = 0, length, length
    else:
        a, count, rows = iv.a, window_size(iv), length + iv.b
    r = np.arange(rows)[:, None, None]
    t = np.arange(length)[None, :, None]
    k = np.arange(count)[None, None, :]
    end = t + a + k
    valid = end <= rows - 1
    left = (r >= t) & (r <= end) & valid
    right = (r == end) & valid
    return left, right


# ---------------------------------------------------------------------------
# Window helpers on tape variables (reductions run along the last axis)
# ---------------------------------------------------------------------------

def _pad_var(x: Var, count: int, length: int, cfg: SemanticsConfig) -> Var:
    if count == 0:
        return x
    if cfg.padding.kind == "last":
        return tape.concat_last([x, tape.take_last(x, np.full(count, length - 1, dtype=np.intp))])
    fill = np.full(x.data.shape[:-1] + (count,), cfg.padding.value)
    return tape.concat_last([x, Var(fill)])


def _reduce(x, kind: str, cfg: SemanticsConfig, weights=None) -> Var:
    if kind == "max":
        return tape.smooth_max(x, cfg.mode, weights)
    return tape.smooth_min(x, cfg.mode, weights)


def _pad_value_var(child: Var, length: int, cfg: SemanticsConfig) -> Var:
    if cfg.padding.kind == "last":
        return tape.index_last(child, length - 1)
    return Var(np.full(child.data.shape[:-1], cfg.padding.value))


def _hard_min_pair(x: Var, y: Var) -> Var:
    return tape.neg(tape.hard_max(tape.stack_last([tape.neg(x), tape.neg(y)])))


def _replace_overrun(out: Var, length: int, upper: int, pad_value: Var) -> Var:
    """Overwrite entries whose window overruns the signal end by ``pad_value``.

    Entry t is valid iff ``t + upper <= length - 1``; the rest read only the
    assumed padding region, whose reduction is the padding value itself.
    """
    if upper == 0:
        return out
    keep = np.arange(length) < length - upper
    replacement = tape.mul(tape.unsqueeze_last(pad_value), np.ones(length))
    if not keep.any():
        return replacement
    return tape.mask_fill(out, keep, 0.0) + tape.mask_fill(replacement, ~keep, 0.0)


def _fill_reduce_columns(padded: Var, keep: np.ndarray, kind: str, cfg: SemanticsConfig) -> Var:
    # keep is a (rows, L) mask; reduce full columns after sentinel fill
    rows = padded.data.shape[-1]
    length = keep.shape[1]
    idx = np.broadcast_to(np.arange(rows), (length, rows))
    cols = tape.take_last(padded, idx)  # (..., L, rows)
    fill = -cfg.sentinel if kind == "max" else cfg.sentinel
    return _reduce(tape.mask_fill(cols, keep.T, fill), kind, cfg)


def _ev_always_var(child: Var, length: int, iv, cfg: SemanticsConfig, kind: str,
                   smooth_weights=None) -> Var:
    if isinstance(iv, SmoothInterval):
        padded = _pad_var(child, length - 1, length, cfg)
        idx = np.arange(length)[:, None] + np.arange(length)[None, :]
        win = tape.take_last(padded, idx)
        w = smooth_weights if smooth_weights is not None else smooth_mask_weights(iv, length)
        w_data = w.data if isinstance(w, Var) else w
        if not np.any(w_data > 0):
            raise EmptyWindowError("smooth interval produced an all-zero weight vector")
        return _reduce(win, kind, cfg, weights=w)

    if iv is None:
        if cfg.masked_fill:
            return _fill_reduce_columns(child, build_subsignal_mask(length, length), kind, cfg)
        if isinstance(cfg.mode, SoftMax):
            pos = np.arange(length)[:, None] + np.arange(length)[None, :]
            keep = pos <= length - 1
            win = tape.take_last(child, np.minimum(pos, length - 1))
            return _reduce(win, kind, cfg, weights=keep.astype(np.float64))
        if kind == "max":
            return tape.suffix_smooth_max(child, cfg.mode)
        return tape.suffix_smooth_min(child, cfg.mode)

    padded = _pad_var(child, iv.b, length, cfg)
    if cfg.masked_fill:
        keep = combine_masks(build_subsignal_mask(length, length + iv.b), build_time_mask(length, iv))
        return _fill_reduce_columns(padded, keep, kind, cfg)
    idx = np.arange(length)[:, None] + iv.a + np.arange(window_size(iv))[None, :]
    out = _reduce(tape.take_last(padded, idx), kind, cfg)
    return _replace_overrun(out, length, iv.b, _pad_value_var(child, length, cfg))


def _until_var(left: Var, right: Var, length: int, iv, cfg: SemanticsConfig) -> Var:
    if isinstance(iv, SmoothInterval):
        raise TypeError("until does not support smooth intervals")
    if iv is None:
        a, count = 0, length
        outer_keep = (np.arange(length)[:, None] + np.arange(count)[None, :]) <= length - 1
        lp, rp = left, right
    else:
        a, count = iv.a, window_size(iv)
        outer_keep = None
        lp = _pad_var(left, iv.b, length, cfg)
        rp = _pad_var(right, iv.b, length, cfg)

    t = np.arange(length)
    last = lp.data.shape[-1] - 1

    if cfg.masked_fill:
        keep_left, keep_right = build_until_masks(length, iv)
        terms = []
        for k in range(count):
            pm = _fill_reduce_columns(lp, keep_left[:, :, k], "min", cfg)
            rv = _fill_reduce_columns(rp, keep_right[:, :, k], "min", cfg)
            terms.append(_reduce(tape.stack_last([pm, rv]), "min", cfg))
        stacked = tape.stack_last(terms)
        if outer_keep is not None:
            stacked = tape.mask_fill(stacked, outer_keep, -cfg.sentinel)
        return _reduce(stacked, "max", cfg)

    incremental = not isinstance(cfg.mode, SoftMax)
    terms = []
    pm = None
    for k in range(count):
        end = np.minimum(t + a + k, last)
        if incremental:
            lv = tape.take_last(lp, end)
            if pm is None:
                if a == 0:
                    pm = lv
                else:
                    idx = np.minimum(t[:, None] + np.arange(a + 1)[None, :], last)
                    pm = _reduce(tape.take_last(lp, idx), "min", cfg)
            else:
                pm = _reduce(tape.stack_last([pm, lv]), "min", cfg)
        else:
            idx = np.minimum(t[:, None] + np.arange(a + k + 1)[None, :], last)
            pm = _reduce(tape.take_last(lp, idx), "min", cfg)
        rv = tape.take_last(rp, end)
        terms.append(_reduce(tape.stack_last([pm, rv]), "min", cfg))
    stacked = tape.stack_last(terms)
    weights = outer_keep.astype(np.float64) if outer_keep is not None else None
    out = _reduce(stacked, "max", cfg, weights=weights)
    if iv is None:
        return out
    pad_value = _hard_min_pair(_pad_value_var(left, length, cfg),
                               _pad_value_var(right, length, cfg))
    return _replace_overrun(out, length, iv.b, pad_value)


# ---------------------------------------------------------------------------
# Formula evaluation
# ---------------------------------------------------------------------------

def smooth_weights_var(a, b, c, eps: float, length: int) -> Var:
    """Differentiable window weights from (possibly taped) interval params."""
    i = Var(np.arange(length, dtype=np.float64))
    lo = tape.sigmoid((i - tape.as_var(a) * float(length)) * c)
    hi = tape.sigmoid((i - tape.as_var(b) * float(length)) * c)
    return tape.relu(lo - hi - eps)


def trace_var(f: Formula, channels: dict[str, Var], length: int, cfg: SemanticsConfig,
              smooth_binding=None) -> Var:
    """Robustness trace as a tape variable; shape ``(..., length)``.

    ``channels`` may carry leading batch axes.  ``smooth_binding``, when
    given, is an ``(a, b, c)`` triple (floats or :class:`Var`) substituted for
    the parameters of every smooth-interval node in ``f``.
    """
    if isinstance(f, TrueFormula):
        batch = next(iter(channels.values())).data.shape[:-1] if channels else ()
        return Var(np.full(batch + (length,), cfg.top_value))
    if isinstance(f, Pred):
        x = channels[f.var]
        if f.cmp in (">", ">="):
            return x - f.threshold
        return tape.neg(x) + f.threshold
    if isinstance(f, Not):
        return tape.neg(trace_var(f.arg, channels, length, cfg, smooth_binding))
    if isinstance(f, (And, Or)):
        left = trace_var(f.left, channels, length, cfg, smooth_binding)
        right = trace_var(f.right, channels, length, cfg, smooth_binding)
        kind = "min" if isinstance(f, And) else "max"
        return _reduce(tape.stack_last([left, right]), kind, cfg)
    if isinstance(f, (Eventually, Always)):
        child = trace_var(f.arg, channels, length, cfg, smooth_binding)
        kind = "max" if isinstance(f, Eventually) else "min"
        weights = None
        if isinstance(f.interval, SmoothInterval) and smooth_binding is not None:
            a, b, c = smooth_binding
            weights = smooth_weights_var(a, b, c, f.interval.eps, length)
        return _ev_always_var(child, length, f.interval, cfg, kind, smooth_weights=weights)
    if isinstance(f, Until):
        left = trace_var(f.left, channels, length, cfg, smooth_binding)
        right = trace_var(f.right, channels, length, cfg, smooth_binding)
        return _until_var(left, right, length, f.interval, cfg)
    raise TypeError(f"not a Formula node: {f!r}")


def _channel_vars(signals: NamedSignals) -> dict[str, Var]:
    return {name: Var(signals[name].values) for name in signals.names()}


def robustness_trace(f: Formula, signals: NamedSignals,
                     cfg: SemanticsConfig = SemanticsConfig()) -> np.ndarray:
    """Robustness of every suffix subsignal, computed by masked reductions."""
    missing = validate_against(f, signals)
    if missing:
        raise ValidationError(missing)
    out = trace_var(f, _channel_vars(signals), signals.length, cfg)
    return np.array(out.data, copy=True)


def robustness(f: Formula, signals: NamedSignals,
               cfg: SemanticsConfig = SemanticsConfig()) -> float:
    """Robustness of the whole signal: entry 0 of the trace."""
    return float(robustness_trace(f, signals, cfg)[0])


# ---------------------------------------------------------------------------
# Trace-level operations (ndarray in / ndarray out)
# ---------------------------------------------------------------------------

def _as_trace(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ShapeError(f"{name} trace must be non-empty")
    return arr


def eventually_trace(inner, iv: StepInterval | SmoothInterval | None,
                     cfg: SemanticsConfig = SemanticsConfig()) -> np.ndarray:
    """Windowed max over the inner trace, one entry per start timestep."""
    arr = _as_trace(inner, "inner")
    out = _ev_always_var(Var(arr), arr.size, iv, cfg, "max")
    return np.array(out.data, copy=True)


def always_trace(inner, iv: StepInterval | SmoothInterval | None,
                 cfg: SemanticsConfig = SemanticsConfig()) -> np.ndarray:
    """Windowed min over the inner trace, one entry per start timestep."""
    arr = _as_trace(inner, "inner")
    out = _ev_always_var(Var(arr), arr.size, iv, cfg, "min")
    return np.array(out.data, copy=True)


def until_trace(left, right, iv: StepInterval | None,
                cfg: SemanticsConfig = SemanticsConfig()) -> np.ndarray:
    """Until combination of two child traces."""
    l_arr = _as_trace(left, "left")
    r_arr = _as_trace(right, "right")
    if l_arr.size != r_arr.size:
        raise ShapeError(f"trace lengths differ: {l_arr.size} vs {r_arr.size}")
    out = _until_var(Var(l_arr), Var(r_arr), l_arr.size, iv, cfg)
    return np.array(out.data, copy=True)
