"""Reverse-mode automatic differentiation over float64 numpy arrays.

A :class:`Var` wraps an array together with the closure that routes incoming
cotangents to its parents.  Graphs are built eagerly by the engine code and
differentiated with :func:`backward`, which walks an iterative topological
order (formula graphs can reach hundreds of thousands of nodes, so no
recursion).  Reductions always run along the last axis; leading axes act as
batch dimensions.

Hard max/min route the full subgradient to the first extremal entry in
ascending index order.  The smooth reductions factor out a detached maximum
before exponentiation, so large temperatures cannot overflow.
"""

from __future__ import annotations

import numpy as np

from .core import EmptyWindowError, Hard, LogSumExp, Mode, SoftMax

__all__ = [
    "Var",
    "as_var",
    "backward",
    "exp",
    "log",
    "sigmoid",
    "relu",
    "sqrt",
    "square",
    "vsum",
    "cumsum0",
    "stack_last",
    "concat_last",
    "take_last",
    "index_last",
    "unsqueeze_last",
    "mask_fill",
    "stop_grad",
    "hard_max",
    "smooth_max",
    "smooth_min",
    "pair_smooth_max",
    "pair_smooth_min",
    "suffix_smooth_max",
    "suffix_smooth_min",
]


class Var:
    """Node in the computation graph: an array plus a backward closure."""

    __slots__ = ("data", "grad", "_parents", "_vjp")

    def __init__(self, data, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Var(shape={self.data.shape}, leaf={self._vjp is None})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, neg(as_var(other)))

    def __rsub__(self, other):
        return add(as_var(other), neg(self))

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_var(other), self)

    def __neg__(self):
        return neg(self)


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _accum(node: Var, g: np.ndarray):
    node.grad = g if node.grad is None else node.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def backward(out: Var, seed=None):
    """Accumulate gradients of ``out`` into every reachable leaf's ``.grad``."""
    topo = []
    seen = set()
    stack = [(out, False)]
    while stack:
        node, ready = stack.pop()
        if ready:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    out.grad = np.ones_like(out.data) if seed is None else np.asarray(seed, dtype=np.float64)
    for node in reversed(topo):
        if node._vjp is not None and node.grad is not None:
            node._vjp(node.grad)


# ---------------------------------------------------------------------------
# Elementwise primitives
# ---------------------------------------------------------------------------

def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.data + b.data, (a, b))
    def vjp(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))
    out._vjp = vjp
    return out


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.data * b.data, (a, b))
    def vjp(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))
    out._vjp = vjp
    return out


def div(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.data / b.data, (a, b))
    def vjp(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))
    out._vjp = vjp
    return out


def neg(a) -> Var:
    a = as_var(a)
    out = Var(-a.data, (a,))
    out._vjp = lambda g: _accum(a, -g)
    return out


def exp(a) -> Var:
    a = as_var(a)
    data = np.exp(a.data)
    out = Var(data, (a,))
    out._vjp = lambda g: _accum(a, g * data)
    return out


def log(a) -> Var:
    a = as_var(a)
    out = Var(np.log(a.data), (a,))
    out._vjp = lambda g: _accum(a, g / a.data)
    return out


def sigmoid(a) -> Var:
    a = as_var(a)
    z = a.data
    s = np.empty_like(z)
    pos = z >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    s[~pos] = ez / (1.0 + ez)
    out = Var(s, (a,))
    out._vjp = lambda g: _accum(a, g * s * (1.0 - s))
    return out


def relu(a) -> Var:
    a = as_var(a)
    mask = a.data > 0
    out = Var(np.where(mask, a.data, 0.0), (a,))
    out._vjp = lambda g: _accum(a, g * mask)
    return out


def sqrt(a) -> Var:
    a = as_var(a)
    data = np.sqrt(a.data)
    out = Var(data, (a,))
    out._vjp = lambda g: _accum(a, g * 0.5 / data)
    return out


def square(a) -> Var:
    a = as_var(a)
    out = Var(a.data * a.data, (a,))
    out._vjp = lambda g: _accum(a, g * 2.0 * a.data)
    return out


def mask_fill(a, keep: np.ndarray, fill: float) -> Var:
    """Replace entries where ``keep`` is False by ``fill``; their grad is cut."""
    a = as_var(a)
    out = Var(np.where(keep, a.data, fill), (a,))
    out._vjp = lambda g: _accum(a, _unbroadcast(g * keep, a.data.shape))
    return out


def stop_grad(a) -> Var:
    return Var(as_var(a).data)


# ---------------------------------------------------------------------------
# Shape / gather primitives
# ---------------------------------------------------------------------------

def vsum(a, axis=None) -> Var:
    a = as_var(a)
    out = Var(np.sum(a.data, axis=axis), (a,))
    def vjp(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())
    out._vjp = vjp
    return out


def cumsum0(a) -> Var:
    a = as_var(a)
    out = Var(np.cumsum(a.data, axis=0), (a,))
    out._vjp = lambda g: _accum(a, np.flip(np.cumsum(np.flip(g, axis=0), axis=0), axis=0))
    return out


def stack_last(vs) -> Var:
    vs = [as_var(v) for v in vs]
    out = Var(np.stack([v.data for v in vs], axis=-1), tuple(vs))
    def vjp(g):
        for i, v in enumerate(vs):
            _accum(v, g[..., i])
    out._vjp = vjp
    return out


def concat_last(vs) -> Var:
    vs = [as_var(v) for v in vs]
    sizes = [v.data.shape[-1] for v in vs]
    out = Var(np.concatenate([v.data for v in vs], axis=-1), tuple(vs))
    def vjp(g):
        start = 0
        for v, n in zip(vs, sizes):
            _accum(v, g[..., start:start + n])
            start += n
    out._vjp = vjp
    return out


def unsqueeze_last(a) -> Var:
    a = as_var(a)
    out = Var(a.data[..., None], (a,))
    out._vjp = lambda g: _accum(a, _unbroadcast(g, a.data[..., None].shape).reshape(a.data.shape))
    return out


def index_last(a, i: int) -> Var:
    a = as_var(a)
    out = Var(a.data[..., i], (a,))
    def vjp(g):
        acc = np.zeros_like(a.data)
        acc[..., i] = g
        _accum(a, acc)
    out._vjp = vjp
    return out


def take_last(a, idx: np.ndarray) -> Var:
    """Gather along the last axis: ``out[..., *k] = a[..., idx[*k]]``."""
    a = as_var(a)
    idx = np.asarray(idx, dtype=np.intp)
    out = Var(np.take(a.data, idx, axis=-1), (a,))
    def vjp(g):
        width = a.data.shape[-1]
        rows = int(np.prod(a.data.shape[:-1], dtype=np.intp)) if a.data.ndim > 1 else 1
        gflat = g.reshape(rows, idx.size)
        if idx.size * width <= 1_000_000:
            # scatter-add as a matmul; much faster than np.add.at for the
            # small dense index sets the engines produce
            scatter = np.zeros((idx.size, width))
            scatter[np.arange(idx.size), idx.ravel()] = 1.0
            acc = gflat @ scatter
        else:
            acc = np.zeros((rows, width))
            np.add.at(acc, (np.arange(rows)[:, None], idx.ravel()[None, :]), gflat)
        _accum(a, acc.reshape(a.data.shape))
    out._vjp = vjp
    return out


# ---------------------------------------------------------------------------
# Reductions (always along the last axis)
# ---------------------------------------------------------------------------

def _weight_data(weights):
    if weights is None:
        return None
    return weights.data if isinstance(weights, Var) else np.asarray(weights, dtype=np.float64)


def hard_max(a, weights=None) -> Var:
    """Exact max over kept entries; one-hot subgradient at the first argmax.

    ``weights`` only select which entries participate (``> 0`` keeps); they
    receive no gradient in hard mode.
    """
    a = as_var(a)
    w = _weight_data(weights)
    masked = a.data if w is None else np.where(w > 0, a.data, -np.inf)
    sel = np.argmax(masked, axis=-1)
    data = np.take_along_axis(masked, sel[..., None], axis=-1)[..., 0]
    if not np.all(np.isfinite(data)):
        raise EmptyWindowError("hard reduction over a window with no kept entries")
    out = Var(data, (a,))
    def vjp(g):
        acc = np.zeros_like(a.data)
        np.put_along_axis(acc, sel[..., None], g[..., None], axis=-1)
        _accum(a, acc)
    out._vjp = vjp
    return out


def smooth_max(a, mode: Mode, weights=None) -> Var:
    """Max-reduction along the last axis under the configured semantics."""
    a = as_var(a)
    if isinstance(mode, Hard):
        return hard_max(a, weights)
    tau = mode.temp
    m = stop_grad(hard_max(a, weights))
    z = (a - unsqueeze_last(m)) * tau
    if weights is not None:
        w = _weight_data(weights)
        # entries outside the kept set may exceed the kept max; silence them
        # before exponentiation so 0 * exp(huge) cannot produce NaN
        z = mask_fill(z, w > 0, -np.inf)
        e = mul(as_var(weights), exp(z))
    else:
        e = exp(z)
    if isinstance(mode, LogSumExp):
        s = vsum(e, axis=-1)
        if not np.all(s.data > 0):
            raise EmptyWindowError("log-sum-exp reduction over an all-zero-weight window")
        return log(s) * (1.0 / tau) + m
    if isinstance(mode, SoftMax):
        den = vsum(e, axis=-1)
        if not np.all(den.data > 0):
            raise EmptyWindowError("softmax reduction over an all-zero-weight window")
        num = vsum(mul(a, e), axis=-1)
        return div(num, den)
    raise TypeError(f"unsupported mode: {mode!r}")


def smooth_min(a, mode: Mode, weights=None) -> Var:
    return neg(smooth_max(neg(as_var(a)), mode, weights))


def pair_smooth_max(a, b, mode: Mode) -> Var:
    """Elementwise two-operand reduction; equal to stacking then reducing.

    Kept as a single node because the recurrent engine calls it once per
    timestep; ties in hard mode go to the first operand.
    """
    a, b = as_var(a), as_var(b)
    if isinstance(mode, Hard):
        first = a.data >= b.data
        out = Var(np.where(first, a.data, b.data), (a, b))
        def vjp_hard(g):
            _accum(a, _unbroadcast(g * first, a.data.shape))
            _accum(b, _unbroadcast(g * ~first, b.data.shape))
        out._vjp = vjp_hard
        return out
    tau = mode.temp
    if isinstance(mode, LogSumExp):
        data = np.logaddexp(tau * a.data, tau * b.data) / tau
        wa = np.exp(tau * (a.data - data))
        wb = np.exp(tau * (b.data - data))
        out = Var(data, (a, b))
        def vjp_lse(g):
            _accum(a, _unbroadcast(g * wa, a.data.shape))
            _accum(b, _unbroadcast(g * wb, b.data.shape))
        out._vjp = vjp_lse
        return out
    if isinstance(mode, SoftMax):
        m = np.maximum(a.data, b.data)
        ea = np.exp(tau * (a.data - m))
        eb = np.exp(tau * (b.data - m))
        den = ea + eb
        data = (a.data * ea + b.data * eb) / den
        out = Var(data, (a, b))
        def vjp_soft(g):
            ga = g * (ea / den) * (1.0 + tau * (a.data - data))
            gb = g * (eb / den) * (1.0 + tau * (b.data - data))
            _accum(a, _unbroadcast(ga, a.data.shape))
            _accum(b, _unbroadcast(gb, b.data.shape))
        out._vjp = vjp_soft
        return out
    raise TypeError(f"unsupported mode: {mode!r}")


def pair_smooth_min(a, b, mode: Mode) -> Var:
    a, b = as_var(a), as_var(b)
    if isinstance(mode, Hard):
        first = a.data <= b.data
        out = Var(np.where(first, a.data, b.data), (a, b))
        def vjp_hard(g):
            _accum(a, _unbroadcast(g * first, a.data.shape))
            _accum(b, _unbroadcast(g * ~first, b.data.shape))
        out._vjp = vjp_hard
        return out
    tau = mode.temp
    if isinstance(mode, LogSumExp):
        data = -np.logaddexp(-tau * a.data, -tau * b.data) / tau
        wa = np.exp(tau * (data - a.data))
        wb = np.exp(tau * (data - b.data))
        out = Var(data, (a, b))
        def vjp_lse(g):
            _accum(a, _unbroadcast(g * wa, a.data.shape))
            _accum(b, _unbroadcast(g * wb, b.data.shape))
        out._vjp = vjp_lse
        return out
    if isinstance(mode, SoftMax):
        m = np.minimum(a.data, b.data)
        ea = np.exp(-tau * (a.data - m))
        eb = np.exp(-tau * (b.data - m))
        den = ea + eb
        data = (a.data * ea + b.data * eb) / den
        out = Var(data, (a, b))
        def vjp_soft(g):
            ga = g * (ea / den) * (1.0 - tau * (a.data - data))
            gb = g * (eb / den) * (1.0 - tau * (b.data - data))
            _accum(a, _unbroadcast(ga, a.data.shape))
            _accum(b, _unbroadcast(gb, b.data.shape))
        out._vjp = vjp_soft
        return out
    raise TypeError(f"unsupported mode: {mode!r}")


def _suffix_hard_max(a: Var) -> Var:
    x = a.data
    data = np.flip(np.maximum.accumulate(np.flip(x, axis=-1), axis=-1), axis=-1)
    length = x.shape[-1]
    out = Var(data, (a,))
    def vjp(g):
        # selected index per suffix, first occurrence in ascending order;
        # computed here so value-only evaluation skips the scan
        sel = np.empty(x.shape, dtype=np.intp)
        sel[..., -1] = length - 1
        best_idx = np.full(x.shape[:-1], length - 1, dtype=np.intp)
        best_val = x[..., -1].copy()
        for t in range(length - 2, -1, -1):
            upd = x[..., t] >= best_val
            best_val = np.where(upd, x[..., t], best_val)
            best_idx = np.where(upd, t, best_idx)
            sel[..., t] = best_idx
        rows = int(np.prod(x.shape[:-1], dtype=np.intp)) if x.ndim > 1 else 1
        acc = np.zeros((rows, length))
        np.add.at(acc, (np.arange(rows)[:, None], sel.reshape(rows, length)), g.reshape(rows, length))
        _accum(a, acc.reshape(x.shape))
    out._vjp = vjp
    return out


def _suffix_lse_max(a: Var, tau: float) -> Var:
    x = a.data
    scaled = np.flip(tau * x, axis=-1)
    data = np.flip(np.logaddexp.accumulate(scaled, axis=-1), axis=-1) / tau
    out = Var(data, (a,))
    def vjp(g):
        # d out_t / d x_j = exp(tau*(x_j - out_t)) for j >= t; accumulate the
        # prefix sums with ratios exp(tau*(out_j - out_{j-1})) <= 1 for stability
        length = x.shape[-1]
        grad = np.empty_like(x)
        acc = g[..., 0].copy()
        grad[..., 0] = np.exp(tau * (x[..., 0] - data[..., 0])) * acc
        for j in range(1, length):
            acc = g[..., j] + np.exp(tau * (data[..., j] - data[..., j - 1])) * acc
            grad[..., j] = np.exp(tau * (x[..., j] - data[..., j])) * acc
        _accum(a, grad)
    out._vjp = vjp
    return out


def suffix_smooth_max(a, mode: Mode) -> Var:
    """``out[..., t] = reduce-max(a[..., t:])`` for hard and log-sum-exp modes.

    Softmax has no flattening identity, so callers must materialize windows
    instead of using this shortcut.
    """
    a = as_var(a)
    if isinstance(mode, Hard):
        return _suffix_hard_max(a)
    if isinstance(mode, LogSumExp):
        return _suffix_lse_max(a, mode.temp)
    raise TypeError("suffix reductions are only defined for hard and log-sum-exp modes")


def suffix_smooth_min(a, mode: Mode) -> Var:
    return neg(suffix_smooth_max(neg(as_var(a)), mode))
