"""Truncated SVD built on an in-repo Jacobi eigensolver.

No LAPACK-backed factorization is used anywhere in the package; the only
dense kernel required is matrix multiplication.  Singular vectors of an
``m x n`` matrix are obtained from a cyclic Jacobi eigendecomposition of the
smaller Gram matrix (``A A^T`` or ``A^T A``), which is algebraically the
one-sided Jacobi iteration with explicit Gram bookkeeping.  This is accurate
for the leading part of the spectrum at desk scale; singular values near
``sqrt(machine eps) * s_max`` lose relative accuracy, which the callers here
(rank truncation, subspace projection) do not depend on.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12


def jacobi_eigh(sym: np.ndarray, max_sweeps: int = MAX_SWEEPS,
                tol: float = OFFDIAG_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a symmetric matrix with cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` sorted descending and
    orthonormal eigenvector columns ``v``.  Rotations are applied one
    round-robin round at a time, so every round touches pairwise-disjoint
    index pairs and can be executed as a single vectorized update.

    Raises NumericError if the off-diagonal mass has not dropped below
    ``tol`` times the initial Frobenius norm after ``max_sweeps`` sweeps.
    """
    a = np.array(sym, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v

    total = float(np.sqrt(np.sum(a * a)))
    if total == 0.0:
        return np.zeros(n), v

    # Round-robin schedule (circle method); index n is a bye for odd n.
    players = list(range(n)) + ([n] if n % 2 else [])
    half = len(players) // 2

    for _sweep in range(max_sweeps):
        off = np.sum(a * a) - np.sum(np.diagonal(a) ** 2)
        if np.sqrt(max(off, 0.0)) <= tol * total:
            w = a.diagonal().copy()
            order = np.argsort(-w, kind="stable")
            return w[order], v[:, order]

        sched = list(players)
        for _round in range(len(players) - 1):
            p = np.array(sched[:half])
            q = np.array(sched[half:][::-1])
            keep = (p < n) & (q < n)
            p, q = p[keep], q[keep]

            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]

            # Stable rotation zeroing a[p, q]; tau = 0 means a 45-degree turn.
            c = np.ones_like(apq)
            s = np.zeros_like(apq)
            act = apq != 0.0
            if np.any(act):
                tau = (aqq[act] - app[act]) / (2.0 * apq[act])
                sign = np.where(tau >= 0.0, 1.0, -1.0)
                t = sign / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                c[act] = 1.0 / np.sqrt(1.0 + t * t)
                s[act] = t * c[act]

            rp = a[p, :].copy()
            rq = a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq

            cp = a[:, p].copy()
            cq = a[:, q].copy()
            a[:, p] = cp * c[None, :] - cq * s[None, :]
            a[:, q] = cp * s[None, :] + cq * c[None, :]

            vp = v[:, p].copy()
            vq = v[:, q].copy()
            v[:, p] = vp * c[None, :] - vq * s[None, :]
            v[:, q] = vp * s[None, :] + vq * c[None, :]

            sched = [sched[0]] + [sched[-1]] + sched[1:-1]

    raise NumericError(
        f"Jacobi eigensolver did not converge within {max_sweeps} sweeps")


def _orthonormal_completion(existing: np.ndarray, dim: int) -> np.ndarray:
    """First canonical basis vector with a non-trivial component outside
    the span of ``existing`` columns, orthonormalized against them."""
    for k in range(dim):
        cand = np.zeros(dim)
        cand[k] = 1.0
        for j in range(existing.shape[1]):
            cand -= (existing[:, j] @ cand) * existing[:, j]
        nrm = float(np.sqrt(cand @ cand))
        if nrm > 0.5:
            return cand / nrm
    raise NumericError("could not complete an orthonormal basis")


def _paired_singular_vectors(mapped: np.ndarray, vecs: np.ndarray,
                             s: np.ndarray) -> np.ndarray:
    """Singular vectors of the opposite side: columns ``mapped @ vecs[:, i] / s_i``,
    re-orthonormalized by modified Gram-Schmidt for near-degenerate values."""
    dim = mapped.shape[0]
    r = vecs.shape[1]
    floor = (s[0] if r else 0.0) * max(mapped.shape) * np.finfo(np.float64).eps
    out = np.zeros((dim, r))
    for i in range(r):
        y = mapped @ vecs[:, i]
        if s[i] > floor:
            y = y / s[i]
        for j in range(i):
            y -= (out[:, j] @ y) * out[:, j]
        nrm = float(np.sqrt(y @ y))
        if nrm > 1e-8:
            out[:, i] = y / nrm
        else:
            out[:, i] = _orthonormal_completion(out[:, :i], dim)
    return out


def _fix_signs(u: np.ndarray, v: np.ndarray | None) -> None:
    """Make each left singular vector's largest-magnitude entry non-negative."""
    for k in range(u.shape[1]):
        j = int(np.argmax(np.abs(u[:, k])))
        if u[j, k] < 0.0:
            u[:, k] = -u[:, k]
            if v is not None:
                v[:, k] = -v[:, k]


def truncated_svd(m: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best rank-``r`` factorization ``(U, s, V)`` with ``U diag(s) V^T ~= m``.

    ``s`` is sorted descending and non-negative; ``U`` and ``V`` carry ``r``
    orthonormal columns each.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    rows, cols = a.shape
    if not 1 <= r <= min(rows, cols):
        raise ValueError(f"rank {r} out of range for a {rows}x{cols} matrix")

    if rows <= cols:
        w, u_full = jacobi_eigh(a @ a.T)
        s = np.sqrt(np.clip(w, 0.0, None))[:r]
        u = u_full[:, :r].copy()
        v = _paired_singular_vectors(a.T, u, s)
    else:
        w, v_full = jacobi_eigh(a.T @ a)
        s = np.sqrt(np.clip(w, 0.0, None))[:r]
        v = v_full[:, :r].copy()
        u = _paired_singular_vectors(a, v, s)

    _fix_signs(u, v)
    return u, s, v


def leading_left_singular_vectors(m: np.ndarray, r: int) -> np.ndarray:
    """Leading ``r`` left singular vectors, skipping the right-side work."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    rows, cols = a.shape
    if not 1 <= r <= min(rows, cols):
        raise ValueError(f"rank {r} out of range for a {rows}x{cols} matrix")

    if rows <= cols:
        _, u_full = jacobi_eigh(a @ a.T)
        u = u_full[:, :r].copy()
    else:
        w, v_full = jacobi_eigh(a.T @ a)
        s = np.sqrt(np.clip(w, 0.0, None))[:r]
        u = _paired_singular_vectors(a, v_full[:, :r], s)
    _fix_signs(u, None)
    return u
