"""Model pieces of the denoiser: projector, predictor, losses, initialization.

Every operation here works on either plain float64 arrays or graph
:class:`~dasdenoise.grad.Var` nodes; an ndarray is returned when all inputs
are ndarrays, a Var otherwise, so the same code path serves both direct
evaluation and differentiable use inside the optimization loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grad
from .grad import Var
from .tensor import TuckerFactors, as_tensor3, hosvd

# Division guard added to |gamma| in the projector.  Fixed to the 64-bit
# machine epsilon.
EPSILON = float(np.finfo(np.float64).eps)


@dataclass
class ModelParams:
    """Every optimizable parameter plus the input normalization factor."""

    tucker: TuckerFactors
    beta: np.ndarray
    gamma: np.ndarray
    conv_weight: np.ndarray
    conv_bias: np.ndarray
    norm_scale: float
    epsilon: float = EPSILON

    def __post_init__(self):
        channels = self.tucker.factors[0].shape[0]
        for name in ("beta", "gamma", "conv_bias"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (channels,):
                raise ValueError(f"{name} must have length {channels}, got {arr.shape}")
            setattr(self, name, arr)
        w = np.asarray(self.conv_weight, dtype=np.float64)
        if w.shape != (channels, channels, 3, 3):
            raise ValueError(f"conv_weight must be ({channels}, {channels}, 3, 3), got {w.shape}")
        self.conv_weight = w
        if not self.norm_scale > 0:
            raise ValueError("norm_scale must be positive")

    @property
    def channels(self) -> int:
        return self.tucker.factors[0].shape[0]


def _any_var(*xs) -> bool:
    return any(isinstance(x, Var) for x in xs)


def _maybe_value(node: Var, as_var: bool):
    return node if as_var else node.value


def projector(t, beta, gamma):
    """Channel-wise subtract-and-scale map: tanh((t - beta_c) / (|gamma_c| + eps)).

    Output entries lie strictly inside (-1, 1).
    """
    as_var = _any_var(t, beta, gamma)
    tv, bv, gv = grad._as_var(t), grad._as_var(beta), grad._as_var(gamma)
    channels = np.shape(tv.value)[0]
    if np.shape(bv.value) != (channels,) or np.shape(gv.value) != (channels,):
        raise ValueError(
            f"beta/gamma must have length {channels}, got "
            f"{np.shape(bv.value)}/{np.shape(gv.value)}")
    num = grad.sub(tv, grad.reshape(bv, (channels, 1, 1)))
    den = grad.reshape(grad.add_scalar(grad.absolute(gv), EPSILON), (channels, 1, 1))
    return _maybe_value(grad.tanh(grad.div(num, den)), as_var)


def predictor(z, weight, bias):
    """Single 3x3 convolution layer mixing all channels; no activation."""
    as_var = _any_var(z, weight, bias)
    return _maybe_value(grad.conv3x3(z, weight, bias), as_var)


def loss_f(t_pred, z_prime_sg, t_prime_pred, z_sg):
    """Mean of the two cross-branch Frobenius distances.

    The second argument of each pair is expected to be a detached
    (stop-gradient) value; detaching is the caller's responsibility.
    """
    as_var = _any_var(t_pred, z_prime_sg, t_prime_pred, z_sg)
    args = [grad._as_var(x) for x in (t_pred, z_prime_sg, t_prime_pred, z_sg)]
    shapes = {np.shape(a.value) for a in args}
    if len(shapes) != 1:
        raise ValueError(f"all loss_f arguments must share one shape, got {shapes}")
    a = grad.frobenius_distance(args[0], args[1])
    b = grad.frobenius_distance(args[2], args[3])
    return _maybe_value(grad.scale(grad.add(a, b), 0.5), as_var)


def loss_chent(beta, gamma):
    """Mean softmax entropy of beta and gamma; in [0, log C].

    Minimizing this term sharpens the per-channel weight distributions, which
    amplifies differences between channel sensitivities.
    """
    as_var = _any_var(beta, gamma)
    bv, gv = grad._as_var(beta), grad._as_var(gamma)
    if np.shape(bv.value) != np.shape(gv.value) or np.ndim(bv.value) != 1:
        raise ValueError("beta and gamma must be 1-D and equally long")
    h = grad.add(grad.softmax_entropy(bv), grad.softmax_entropy(gv))
    return _maybe_value(grad.scale(h, 0.5), as_var)


def total_loss(t_pred, z_prime_sg, t_prime_pred, z_sg, beta, gamma):
    """Unweighted sum of the Frobenius pair loss and the channel-entropy loss."""
    as_var = _any_var(t_pred, z_prime_sg, t_prime_pred, z_sg, beta, gamma)
    out = grad.add(loss_f(*(grad._as_var(x) for x in (t_pred, z_prime_sg, t_prime_pred, z_sg))),
                   loss_chent(grad._as_var(beta), grad._as_var(gamma)))
    return _maybe_value(out, as_var)


def init_params(t, ranks, seed: int) -> ModelParams:
    """Initial parameters for a raw (unnormalized) amplitude tensor.

    The tensor is scaled by its maximum entry before the Tucker
    initialization; beta starts at zero, gamma at one, convolution weights
    are drawn from a seeded uniform on [-k, k] with k = 1/sqrt(C*3*3) and the
    bias starts at zero.
    """
    t = as_tensor3(t)
    peak = float(t.max())
    norm_scale = peak if peak > 0 else 1.0
    tucker = hosvd(t / norm_scale, ranks)
    channels = t.shape[0]
    rng = np.random.default_rng(seed)
    k = 1.0 / math.sqrt(channels * 3 * 3)
    return ModelParams(
        tucker=tucker,
        beta=np.zeros(channels),
        gamma=np.ones(channels),
        conv_weight=rng.uniform(-k, k, size=(channels, channels, 3, 3)),
        conv_bias=np.zeros(channels),
        norm_scale=norm_scale,
    )
