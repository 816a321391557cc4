"""Minimal reverse-mode differentiation engine.

A dynamic graph of :class:`Var` nodes is built per forward pass and freed
after :func:`backward`; there is no persistent tape.  Only the primitives the
denoising loop needs are provided: broadcast-aware elementwise arithmetic,
tanh/abs, reshape/sum, mode-k tensor contraction, zero-padded 3x3
convolution over the (frequency, time) plane, Frobenius distance and
softmax entropy.  Values and gradients are float64 throughout.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from . import tensor as tn

Array = np.ndarray


class Var:
    """A value in the computation graph.

    ``value`` is a float64 ndarray or a python float; ``grad`` accumulates
    d(loss)/d(value) with the same shape once :func:`backward` runs.  A node
    with ``requires_grad=False`` and no parents blocks propagation, which is
    how :func:`stop_gradient` works.
    """

    __slots__ = ("value", "grad", "parents", "requires_grad", "_backward")

    def __init__(self, value, parents=(), backward=None, requires_grad=False):
        self.value = value
        self.grad = None
        self.parents = tuple(parents)
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in self.parents)

    @staticmethod
    def param(value) -> "Var":
        """Leaf that receives a gradient."""
        return Var(np.asarray(value, dtype=np.float64), requires_grad=True)

    @staticmethod
    def const(value) -> "Var":
        """Leaf treated as a constant."""
        if np.isscalar(value):
            return Var(float(value))
        return Var(np.asarray(value, dtype=np.float64))

    @property
    def shape(self):
        return np.shape(self.value)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Var(shape={self.shape}, requires_grad={self.requires_grad})"


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var.const(x)


def _accum(node: Var, g) -> None:
    node.grad = g if node.grad is None else node.grad + g


def _unbroadcast(g, shape) -> Array | float:
    """Sum ``g`` down to ``shape`` (the adjoint of numpy broadcasting)."""
    if shape == ():
        return float(np.sum(g))
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, (gd, sd) in enumerate(zip(g.shape, shape)):
        if sd == 1 and gd != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def backward(loss: Var) -> None:
    """Reverse-accumulate gradients of a scalar ``loss`` through the graph."""
    if np.shape(loss.value) != ():
        raise ValueError("backward expects a scalar-valued loss")
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    loss.grad = 1.0
    for node in reversed(order):
        if node._backward is not None and node.grad is not None and node.requires_grad:
            node._backward(node.grad)


def gradients(loss: Var, leaves: Mapping[str, Var]) -> dict[str, Array]:
    """Run backward and return d(loss)/d(leaf) per named leaf (zeros if unreached)."""
    backward(loss)
    out = {}
    for name, leaf in leaves.items():
        if leaf.grad is None:
            out[name] = np.zeros_like(np.asarray(leaf.value, dtype=np.float64))
        else:
            out[name] = np.asarray(leaf.grad, dtype=np.float64)
    return out


def stop_gradient(x: Var) -> Var:
    """Same value, detached: nothing propagates through it."""
    x = _as_var(x)
    return Var(x.value)


def add(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    val = a.value + b.value

    def _bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.shape))

    return Var(val, (a, b), _bw)


def sub(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    val = a.value - b.value

    def _bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(np.negative(g), b.shape))

    return Var(val, (a, b), _bw)


def mul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    val = a.value * b.value

    def _bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.value, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.value, b.shape))

    return Var(val, (a, b), _bw)


def div(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    val = a.value / b.value

    def _bw(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g / b.value, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g * val / b.value, b.shape))

    return Var(val, (a, b), _bw)


def scale(a, k: float) -> Var:
    a = _as_var(a)
    k = float(k)

    def _bw(g):
        if a.requires_grad:
            _accum(a, g * k)

    return Var(a.value * k, (a,), _bw)


def add_scalar(a, c: float) -> Var:
    a = _as_var(a)

    def _bw(g):
        if a.requires_grad:
            _accum(a, g)

    return Var(a.value + float(c), (a,), _bw)


def absolute(a) -> Var:
    a = _as_var(a)
    sgn = np.sign(a.value)

    def _bw(g):
        if a.requires_grad:
            _accum(a, g * sgn)

    return Var(np.abs(a.value), (a,), _bw)


def tanh(a) -> Var:
    a = _as_var(a)
    y = np.tanh(a.value)

    def _bw(g):
        if a.requires_grad:
            _accum(a, g * (1.0 - y * y))

    return Var(y, (a,), _bw)


def reshape(a, shape) -> Var:
    a = _as_var(a)
    old = np.shape(a.value)

    def _bw(g):
        if a.requires_grad:
            _accum(a, np.reshape(g, old))

    return Var(np.reshape(a.value, shape), (a,), _bw)


def total(a) -> Var:
    """Sum of all entries as a scalar node."""
    a = _as_var(a)

    def _bw(g):
        if a.requires_grad:
            _accum(a, np.full(a.shape, g))

    return Var(float(np.sum(a.value)), (a,), _bw)


def frobenius_distance(a, b) -> Var:
    """sqrt(sum((a - b)^2)) as a scalar node; gradient is 0 at coincidence."""
    a, b = _as_var(a), _as_var(b)
    diff = a.value - b.value
    nrm = float(np.sqrt(np.sum(diff * diff)))

    def _bw(g):
        if nrm == 0.0:
            return
        d = (g / nrm) * diff
        if a.requires_grad:
            _accum(a, d)
        if b.requires_grad:
            _accum(b, -d)

    return Var(nrm, (a, b), _bw)


def softmax_entropy(a) -> Var:
    """Shannon entropy of softmax(a) for a 1-D input, as a scalar node."""
    a = _as_var(a)
    x = np.asarray(a.value, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("softmax_entropy expects a non-empty 1-D input")
    logp = x - x.max()
    logp -= np.log(np.sum(np.exp(logp)))
    p = np.exp(logp)
    h = float(-np.sum(p * logp))

    def _bw(g):
        if a.requires_grad:
            _accum(a, g * (-p * (logp + h)))

    return Var(h, (a,), _bw)


def mode_multiply(t, a, mode: int) -> Var:
    """Mode-``mode`` contraction of tensor node ``t`` with matrix node ``a``."""
    t, a = _as_var(t), _as_var(a)
    tv = np.asarray(t.value)
    av = np.asarray(a.value)
    val = tn.mode_multiply(tv, av, mode)

    def _bw(g):
        if t.requires_grad:
            _accum(t, tn.mode_multiply(g, av.T, mode))
        if a.requires_grad:
            _accum(a, tn.unfold(g, mode) @ tn.unfold(tv, mode).T)

    return Var(val, (t, a), _bw)


def conv3x3(x, w, b) -> Var:
    """Zero-padded 3x3 convolution over (frequency, time) with full channel mixing.

    ``x`` is (C_in, F, T); ``w`` is (C_out, C_in, 3, 3); ``b`` is (C_out,).
    Output is (C_out, F, T); no activation.
    """
    x, w, b = _as_var(x), _as_var(w), _as_var(b)
    xv, wv, bv = x.value, w.value, b.value
    if np.ndim(xv) != 3:
        raise ValueError(f"expected a (C, F, T) input, got shape {np.shape(xv)}")
    if np.ndim(wv) != 4 or wv.shape[2:] != (3, 3):
        raise ValueError(f"expected (C_out, C_in, 3, 3) weights, got {np.shape(wv)}")
    c_in, f_dim, t_dim = xv.shape
    c_out = wv.shape[0]
    if wv.shape[1] != c_in:
        raise ValueError(f"weight expects {wv.shape[1]} input channels, input has {c_in}")
    if np.shape(bv) != (c_out,):
        raise ValueError(f"bias shape {np.shape(bv)} != ({c_out},)")

    xp = np.zeros((c_in, f_dim + 2, t_dim + 2))
    xp[:, 1:-1, 1:-1] = xv
    acc = np.zeros((c_out, f_dim * t_dim))
    for i in range(3):
        for j in range(3):
            tap = np.ascontiguousarray(xp[:, i:i + f_dim, j:j + t_dim]).reshape(c_in, -1)
            acc += wv[:, :, i, j] @ tap
    val = acc.reshape(c_out, f_dim, t_dim) + bv[:, None, None]

    def _bw(g):
        gflat = np.ascontiguousarray(g).reshape(c_out, -1)
        if b.requires_grad:
            _accum(b, g.sum(axis=(1, 2)))
        if w.requires_grad:
            gw = np.empty_like(wv)
            for i in range(3):
                for j in range(3):
                    tap = np.ascontiguousarray(
                        xp[:, i:i + f_dim, j:j + t_dim]).reshape(c_in, -1)
                    gw[:, :, i, j] = gflat @ tap.T
            _accum(w, gw)
        if x.requires_grad:
            gxp = np.zeros((c_in, f_dim + 2, t_dim + 2))
            for i in range(3):
                for j in range(3):
                    gxp[:, i:i + f_dim, j:j + t_dim] += (
                        wv[:, :, i, j].T @ gflat).reshape(c_in, f_dim, t_dim)
            _accum(x, np.ascontiguousarray(gxp[:, 1:-1, 1:-1]))

    return Var(val, (x, w, b), _bw)


def finite_diff_check(f: Callable[[dict[str, Var]], Var],
                      params: Mapping[str, Array],
                      step: float = 1e-5) -> float:
    """Max relative mismatch between analytic and central-difference gradients.

    ``f`` maps named leaf Vars to a scalar Var.  For every coordinate of every
    parameter the central difference ``(f(x+h) - f(x-h)) / 2h`` is compared
    against the analytic gradient; the returned figure is
    ``max |analytic - fd| / max(1e-8, |fd|)``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    base = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
    leaves = {k: Var.param(v) for k, v in base.items()}
    analytic = gradients(f(leaves), leaves)

    def value_at(arrs: dict[str, Array]) -> float:
        return float(f({k: Var.const(v) for k, v in arrs.items()}).value)

    worst = 0.0
    for name, arr in base.items():
        for idx in np.ndindex(arr.shape):
            up = dict(base)
            hi = arr.copy()
            hi[idx] += step
            up[name] = hi
            down = dict(base)
            lo = arr.copy()
            lo[idx] -= step
            down[name] = lo
            fd = (value_at(up) - value_at(down)) / (2.0 * step)
            rel = abs(float(analytic[name][idx]) - fd) / max(1e-8, abs(fd))
            worst = max(worst, rel)
    return worst
