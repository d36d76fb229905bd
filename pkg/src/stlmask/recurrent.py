"""Recurrent (dynamic-programming) robustness traces, backward in time.

Each temporal node walks the child trace from the last timestep to the first
and keeps a hidden state: a single running value for untimed eventually and
always, or a sliding buffer of the most recent child values for windowed
operators.  Until keeps growing (untimed) or window-sized (timed) buffers of
both child traces and rebuilds its prefix reduction incrementally.

In hard mode and log-sum-exp mode the results equal the reference semantics
(log-sum-exp flattens nested applications into a single one).  In softmax
mode the nested reductions are *not* equivalent to one flat application:
values entering the recurrence earlier (later in time) get softened on every
subsequent step, so untimed softmax traces intentionally drift away from the
masked engine.  New elements always enter a pairwise reduction as the later
operand.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import tape
from .core import NamedSignals, SemanticsConfig, SmoothInterval, ValidationError, window_size
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
from .tape import Var

__all__ = ["HiddenState", "trace_recurrent", "trace_var_recurrent"]


@dataclass
class HiddenState:
    """Sliding buffer of recent child-trace values, earliest timestep first."""

    capacity: int
    values: deque = field(default_factory=deque)

    def push_front(self, v):
        self.values.appendleft(v)
        if len(self.values) > self.capacity:
            self.values.pop()

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _reduce(values, kind: str, cfg: SemanticsConfig) -> Var:
    values = list(values)
    if len(values) == 2:
        # one node instead of a stack+reduce composite; the recurrences call
        # this once or twice per timestep
        pair = tape.pair_smooth_max if kind == "max" else tape.pair_smooth_min
        return pair(values[0], values[1], cfg.mode)
    stacked = tape.stack_last(values)
    if kind == "max":
        return tape.smooth_max(stacked, cfg.mode)
    return tape.smooth_min(stacked, cfg.mode)


def _pad_value(child: Var, length: int, cfg: SemanticsConfig) -> Var:
    if cfg.padding.kind == "last":
        return tape.index_last(child, length - 1)
    return Var(np.full(child.data.shape[:-1], cfg.padding.value))


def _hard_min_pair(x: Var, y: Var) -> Var:
    return tape.neg(tape.hard_max(tape.stack_last([tape.neg(x), tape.neg(y)])))


def _ev_always_rec(child: Var, length: int, iv, cfg: SemanticsConfig, kind: str) -> Var:
    out: list = [None] * length
    if iv is None:
        running = tape.index_last(child, length - 1)
        out[length - 1] = running
        for t in range(length - 2, -1, -1):
            running = _reduce([running, tape.index_last(child, t)], kind, cfg)
            out[t] = running
        return tape.stack_last(out)
    # entries whose window overruns the end take the padding value; for the
    # rest the buffer holds real samples only
    pad = _pad_value(child, length, cfg)
    state = HiddenState(window_size(iv))
    for t in range(length - 1, -1, -1):
        if t + iv.b > length - 1:
            out[t] = pad
            continue
        if len(state) == 0:
            for k in range(iv.b, iv.a - 1, -1):
                state.push_front(tape.index_last(child, t + k))
        else:
            state.push_front(tape.index_last(child, t + iv.a))
        out[t] = _reduce(state.values, kind, cfg)
    return tape.stack_last(out)


def _until_rec(left: Var, right: Var, length: int, iv, cfg: SemanticsConfig) -> Var:
    out: list = [None] * length
    if iv is None:
        phi = HiddenState(length)
        psi = HiddenState(length)
        for t in range(length - 1, -1, -1):
            phi.push_front(tape.index_last(left, t))
            psi.push_front(tape.index_last(right, t))
            pm = None
            terms = []
            # iterate rather than index: deque access by position is O(i)
            for i, (phi_i, psi_i) in enumerate(zip(phi.values, psi.values)):
                pm = phi_i if i == 0 else _reduce([pm, phi_i], "min", cfg)
                terms.append(_reduce([pm, psi_i], "min", cfg))
            out[t] = _reduce(terms, "max", cfg) if len(terms) > 1 else terms[0]
        return tape.stack_last(out)

    count = window_size(iv)
    pad = _hard_min_pair(_pad_value(left, length, cfg), _pad_value(right, length, cfg))
    phi = HiddenState(iv.b + 1)   # times t .. t+b
    psi = HiddenState(count)      # times t+a .. t+b
    for t in range(length - 1, -1, -1):
        if t + iv.b > length - 1:
            out[t] = pad
            continue
        if len(phi) == 0:
            for k in range(iv.b, -1, -1):
                phi.push_front(tape.index_last(left, t + k))
                if k >= iv.a:
                    psi.push_front(tape.index_last(right, t + k))
        else:
            phi.push_front(tape.index_last(left, t))
            psi.push_front(tape.index_last(right, t + iv.a))
        phi_vals = list(phi.values)
        psi_vals = list(psi.values)
        pm = phi_vals[0]
        for tau in range(1, iv.a + 1):
            pm = _reduce([pm, phi_vals[tau]], "min", cfg)
        terms = []
        for k in range(count):
            if k > 0:
                pm = _reduce([pm, phi_vals[iv.a + k]], "min", cfg)
            terms.append(_reduce([pm, psi_vals[k]], "min", cfg))
        out[t] = _reduce(terms, "max", cfg) if len(terms) > 1 else terms[0]
    return tape.stack_last(out)


def trace_var_recurrent(f: Formula, channels: dict[str, Var], length: int,
                        cfg: SemanticsConfig) -> Var:
    """Recurrent robustness trace as a tape variable; shape ``(..., length)``."""
    if isinstance(f, TrueFormula):
        batch = next(iter(channels.values())).data.shape[:-1] if channels else ()
        return Var(np.full(batch + (length,), cfg.top_value))
    if isinstance(f, Pred):
        x = channels[f.var]
        if f.cmp in (">", ">="):
            return x - f.threshold
        return tape.neg(x) + f.threshold
    if isinstance(f, Not):
        return tape.neg(trace_var_recurrent(f.arg, channels, length, cfg))
    if isinstance(f, (And, Or)):
        left = trace_var_recurrent(f.left, channels, length, cfg)
        right = trace_var_recurrent(f.right, channels, length, cfg)
        kind = "min" if isinstance(f, And) else "max"
        return _reduce([left, right], kind, cfg)
    if isinstance(f, (Eventually, Always)):
        if isinstance(f.interval, SmoothInterval):
            raise TypeError("the recurrent engine does not support smooth intervals")
        child = trace_var_recurrent(f.arg, channels, length, cfg)
        kind = "max" if isinstance(f, Eventually) else "min"
        return _ev_always_rec(child, length, f.interval, cfg, kind)
    if isinstance(f, Until):
        left = trace_var_recurrent(f.left, channels, length, cfg)
        right = trace_var_recurrent(f.right, channels, length, cfg)
        return _until_rec(left, right, length, f.interval, cfg)
    raise TypeError(f"not a Formula node: {f!r}")


def trace_recurrent(f: Formula, signals: NamedSignals,
                    cfg: SemanticsConfig = SemanticsConfig()) -> np.ndarray:
    """Robustness trace computed by the backward recurrences."""
    missing = validate_against(f, signals)
    if missing:
        raise ValidationError(missing)
    channels = {name: Var(signals[name].values) for name in signals.names()}
    out = trace_var_recurrent(f, channels, signals.length, cfg)
    return np.array(out.data, copy=True)
