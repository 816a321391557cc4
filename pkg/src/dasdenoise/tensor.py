"""Dense 3rd-order tensor algebra.

Tensors are plain float64 ndarrays of shape ``(channel, frequency, time)``.
Modes are numbered 1..3.  Unfoldings follow the standard convention where
the lower-numbered remaining mode varies fastest along columns, which for a
C-ordered array means Fortran-order flattening of the remaining axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .svd import leading_left_singular_vectors, truncated_svd  # noqa: F401  (re-export)

Dims = tuple[int, int, int]


def as_tensor3(t) -> np.ndarray:
    """Validate and return ``t`` as a float64 array of order 3."""
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"expected a 3rd-order tensor, got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"all dims must be >= 1, got {arr.shape}")
    return arr


def _axis(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    return mode - 1


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding: shape ``(I_mode, product of other dims)``."""
    t = as_tensor3(t)
    ax = _axis(mode)
    return np.reshape(np.moveaxis(t, ax, 0), (t.shape[ax], -1), order="F")


def fold(m: np.ndarray, mode: int, dims: Dims) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    ax = _axis(mode)
    m = np.asarray(m, dtype=np.float64)
    others = [d for i, d in enumerate(dims) if i != ax]
    if m.shape != (dims[ax], others[0] * others[1]):
        raise ValueError(
            f"matrix shape {m.shape} does not match mode-{mode} unfolding of {dims}")
    stacked = np.reshape(m, (dims[ax], others[0], others[1]), order="F")
    return np.ascontiguousarray(np.moveaxis(stacked, 0, ax))


def mode_multiply(t: np.ndarray, a: np.ndarray, mode: int) -> np.ndarray:
    """Contract mode ``mode`` of ``t`` with the columns of matrix ``a``.

    ``a`` has shape ``(new_dim, t.shape[mode-1])``; the result replaces that
    mode's extent with ``new_dim``.
    """
    t = as_tensor3(t)
    a = np.asarray(a, dtype=np.float64)
    ax = _axis(mode)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if a.shape[1] != t.shape[ax]:
        raise ValueError(
            f"matrix has {a.shape[1]} columns but mode {mode} has extent {t.shape[ax]}")
    new_dims = list(t.shape)
    new_dims[ax] = a.shape[0]
    return fold(a @ unfold(t, mode), mode, tuple(new_dims))


def frobenius_norm(t: np.ndarray) -> float:
    """sqrt of the sum of squared entries."""
    t = np.asarray(t, dtype=np.float64)
    return float(np.sqrt(np.sum(t * t)))


@dataclass(frozen=True)
class TuckerFactors:
    """Core tensor plus one orthonormal-column factor matrix per mode."""

    core: np.ndarray
    factors: tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        core = as_tensor3(self.core)
        if len(self.factors) != 3:
            raise ValueError("expected exactly three factor matrices")
        for m, f in enumerate(self.factors):
            f = np.asarray(f)
            if f.ndim != 2 or f.shape[1] != core.shape[m]:
                raise ValueError(
                    f"factor {m + 1} shape {f.shape} inconsistent with core {core.shape}")

    @property
    def ranks(self) -> Dims:
        return self.core.shape

    @property
    def dims(self) -> Dims:
        return tuple(f.shape[0] for f in self.factors)


def _validate_ranks(dims: Dims, ranks: Dims) -> tuple[int, int, int]:
    if len(ranks) != 3:
        raise ValueError(f"expected three ranks, got {ranks}")
    out = []
    for m, (r, d) in enumerate(zip(ranks, dims)):
        r = int(r)
        if not 1 <= r <= d:
            raise ValueError(f"rank {r} out of range [1, {d}] for mode {m + 1}")
        out.append(r)
    return tuple(out)


def hosvd(t: np.ndarray, ranks: Dims) -> TuckerFactors:
    """Truncated higher-order SVD.

    Factor ``m`` holds the leading ``ranks[m]`` left singular vectors of the
    mode-``m`` unfolding; the core is the tensor contracted with the factor
    transposes.
    """
    t = as_tensor3(t)
    ranks = _validate_ranks(t.shape, ranks)
    factors = tuple(
        leading_left_singular_vectors(unfold(t, m + 1), ranks[m]) for m in range(3))
    core = t
    for m, f in enumerate(factors):
        core = mode_multiply(core, f.T, m + 1)
    return TuckerFactors(core=core, factors=factors)


def reconstruct(f: TuckerFactors) -> np.ndarray:
    """Expand Tucker factors back to a full tensor (core x_1 U1 x_2 U2 x_3 U3).

    Modes are applied cheapest-expansion-first, which changes nothing
    mathematically but keeps intermediates small for thin factors.
    """
    core = as_tensor3(f.core)
    order = sorted(range(3), key=lambda m: f.factors[m].shape[0] / core.shape[m])
    out = core
    for m in order:
        out = mode_multiply(out, f.factors[m], m + 1)
    return out
