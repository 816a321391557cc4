"""End-to-end iterative denoising of an amplitude-spectrogram tensor.

Each iteration rebuilds the graph from scratch: the low-rank branch expands
the Tucker factors, both branches pass through the projector, the predictor
maps each projection, and the loss compares every predictor output with the
detached projection of the other branch, plus the channel-entropy term.  All
parameters are updated with Adam.  The observed tensor itself is never
modified; after the final iteration the denoised amplitude is the clipped
mean of the two predictor outputs, rescaled back to the input's range.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import grad, model
from .errors import NumericError
from .grad import Var
from .tensor import TuckerFactors, as_tensor3

OUTPUT_MODES = ("predictor", "reconstruction")


@dataclass(frozen=True)
class DenoiseConfig:
    """Hyperparameters of one denoising run."""

    ranks: tuple[int, int, int]
    iterations: int = 1500
    learning_rate: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    output_mode: str = "predictor"

    def __post_init__(self):
        if len(self.ranks) != 3:
            raise ValueError(f"ranks must be a triple, got {self.ranks}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be positive")
        if self.output_mode not in OUTPUT_MODES:
            raise ValueError(f"output_mode must be one of {OUTPUT_MODES}")


@dataclass
class DenoiseReport:
    """Observable outcome of a run."""

    loss_trace: list[float]
    beta: np.ndarray
    gamma: np.ndarray
    denoised: np.ndarray
    wall_time_s: float = 0.0


def adam_step(params: dict[str, np.ndarray],
              grads: dict[str, np.ndarray],
              state: dict | None,
              lr: float,
              beta1: float = 0.9,
              beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[dict[str, np.ndarray], dict]:
    """One bias-corrected Adam update; returns new params and new state.

    ``state`` is ``None`` on the first call; afterwards it carries first and
    second moment estimates per parameter plus the step count.
    """
    if state is None:
        state = {
            "m": {k: np.zeros_like(v) for k, v in params.items()},
            "v": {k: np.zeros_like(v) for k, v in params.items()},
            "t": 0,
        }
    if set(params) != set(grads) or set(params) != set(state["m"]):
        raise ValueError("params, grads and state must share the same keys")
    for k in params:
        if np.shape(params[k]) != np.shape(grads[k]):
            raise ValueError(f"gradient shape mismatch for '{k}'")

    t = state["t"] + 1
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        m = beta1 * state["m"][k] + (1.0 - beta1) * g
        v = beta2 * state["v"][k] + (1.0 - beta2) * (g * g)
        new_params[k] = p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        new_m[k] = m
        new_v[k] = v
    return new_params, {"m": new_m, "v": new_v, "t": t}


def _params_dict(mp: model.ModelParams) -> dict[str, np.ndarray]:
    return {
        "core": mp.tucker.core,
        "factor_c": mp.tucker.factors[0],
        "factor_f": mp.tucker.factors[1],
        "factor_t": mp.tucker.factors[2],
        "beta": mp.beta,
        "gamma": mp.gamma,
        "conv_weight": mp.conv_weight,
        "conv_bias": mp.conv_bias,
    }


def _reconstruct_graph(leaves: dict[str, Var], dims, ranks) -> Var:
    factors = [leaves["factor_c"], leaves["factor_f"], leaves["factor_t"]]
    order = sorted(range(3), key=lambda m: dims[m] / ranks[m])
    out = leaves["core"]
    for m in order:
        out = grad.mode_multiply(out, factors[m], m + 1)
    return out


def denoise(t_raw: np.ndarray, cfg: DenoiseConfig,
            progress: Callable[[int, float], None] | None = None) -> DenoiseReport:
    """Run the full optimization on a raw (non-negative) amplitude tensor.

    Raises NumericError (with the iteration index) if the loss turns
    non-finite.  Equal configs and seeds give bit-identical reports.
    """
    t_raw = as_tensor3(t_raw)
    if float(t_raw.min()) < 0.0:
        raise ValueError("amplitude tensor must be non-negative")
    dims = t_raw.shape
    mp = model.init_params(t_raw, cfg.ranks, cfg.seed)
    ranks = mp.tucker.ranks
    t_obs = t_raw / mp.norm_scale

    params = _params_dict(mp)
    state = None
    trace: list[float] = []
    out_pair = None
    started = time.perf_counter()

    for it in range(cfg.iterations):
        leaves = {k: Var.param(v) for k, v in params.items()}
        t_obs_node = Var.const(t_obs)

        recon = _reconstruct_graph(leaves, dims, ranks)
        z_prime = model.projector(recon, leaves["beta"], leaves["gamma"])
        z = model.projector(t_obs_node, leaves["beta"], leaves["gamma"])
        t_pred = model.predictor(z, leaves["conv_weight"], leaves["conv_bias"])
        t_prime_pred = model.predictor(z_prime, leaves["conv_weight"], leaves["conv_bias"])
        loss = grad.add(
            model.loss_f(t_pred, grad.stop_gradient(z_prime),
                         t_prime_pred, grad.stop_gradient(z)),
            model.loss_chent(leaves["beta"], leaves["gamma"]),
        )

        loss_value = float(loss.value)
        if not np.isfinite(loss_value):
            raise NumericError(
                f"loss became non-finite at iteration {it}", iteration=it)
        trace.append(loss_value)
        if progress is not None:
            progress(it, loss_value)

        if cfg.output_mode == "predictor":
            out_pair = (t_pred.value, t_prime_pred.value)
        else:
            out_pair = (t_obs, recon.value)

        g = grad.gradients(loss, leaves)
        params, state = adam_step(params, g, state, cfg.learning_rate,
                                  cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    denoised = np.maximum(0.0, 0.5 * (out_pair[0] + out_pair[1])) * mp.norm_scale
    return DenoiseReport(
        loss_trace=trace,
        beta=params["beta"],
        gamma=params["gamma"],
        denoised=denoised,
        wall_time_s=time.perf_counter() - started,
    )


def final_tucker(params: dict[str, np.ndarray]) -> TuckerFactors:
    """Assemble Tucker factors from a raw parameter dict (for snapshots)."""
    return TuckerFactors(core=params["core"],
                         factors=(params["factor_c"], params["factor_f"], params["factor_t"]))
