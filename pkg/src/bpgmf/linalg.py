"""Small dense linear algebra: one-sided Jacobi SVD and power-iteration spectral norm."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .rng import uniform


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap."""


def jacobi_svd(m: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Thin SVD ``m = u @ diag(s) @ vt`` by one-sided (Hestenes) Jacobi rotations.

    Rotations are applied to the columns of whichever of ``m`` / ``m.T`` has
    fewer columns, i.e. on the smaller Gram side. Singular values are returned
    in non-increasing order; left vectors of zero singular values are zero.

    Raises:
        ConvergenceError: if off-diagonal mass is still above ``tol`` after
            ``max_sweeps`` sweeps.
    """
    m = np.asarray(m, dtype=np.float64)
    transposed = m.shape[0] < m.shape[1]
    # unit max-entry scaling keeps the Gram entries clear of under/overflow
    scale = float(np.max(np.abs(m), initial=0.0)) or 1.0
    w = (m.T if transposed else m).copy(order="F") / scale
    n = w.shape[1]
    # pairs this close to orthogonal move the singular values by < eps * ||m||
    negligible = (np.finfo(np.float64).eps * float(np.linalg.norm(w))) ** 2
    v = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp, wq = w[:, p], w[:, q]
                alpha = float(wp @ wp)
                beta = float(wq @ wq)
                gamma = float(wp @ wq)
                if abs(gamma) <= max(tol * math.sqrt(alpha * beta), negligible):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * wp - s * wq
                w[:, q] = s * wp + c * wq
                w[:, p] = new_p
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            break
    else:
        raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
    sv = np.linalg.norm(w, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv, w, v = sv[order], w[:, order], v[:, order]
    left = np.zeros_like(w)
    nz = sv > 0
    left[:, nz] = w[:, nz] / sv[nz]
    sv = sv * scale
    if transposed:
        return v, sv, left.T
    return left, sv, v.T


def singular_values(m: np.ndarray) -> np.ndarray:
    return jacobi_svd(m)[1]


@dataclass(frozen=True)
class PowerResult:
    value: float
    iterations: int
    converged: bool


def power_iteration(m: np.ndarray, rtol: float = 1e-8, max_iter: int = 1000) -> PowerResult:
    """Largest singular value of ``m`` by power iteration on its smaller Gram matrix.

    Stops when ``||G v - mu v|| <= rtol * mu`` with ``mu = v' G v``. The start
    vector is drawn from a fixed SplitMix64 stream, so results are
    deterministic.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return PowerResult(0.0, 0, True)
    g = m @ m.T if m.shape[0] < m.shape[1] else m.T @ m
    v = uniform(0x5EED, g.shape[0], -1.0, 1.0)
    v /= np.linalg.norm(v)
    best = 0.0
    for it in range(1, max_iter + 1):
        w = g @ v
        mu = float(v @ w)
        best = max(best, mu)
        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            return PowerResult(math.sqrt(best), it, True)
        if np.linalg.norm(w - mu * v) <= rtol * mu:
            return PowerResult(math.sqrt(max(mu, 0.0)), it, True)
        v = w / wn
    return PowerResult(math.sqrt(best), max_iter, False)


def spectral_norm(m: np.ndarray, rtol: float = 1e-8, max_iter: int = 1000) -> float:
    """Largest singular value of ``m``; warns if the iteration cap was hit."""
    res = power_iteration(m, rtol, max_iter)
    if not res.converged:
        warnings.warn(
            f"spectral_norm: no convergence after {max_iter} iterations, returning best estimate",
            RuntimeWarning,
            stacklevel=2,
        )
    return res.value
