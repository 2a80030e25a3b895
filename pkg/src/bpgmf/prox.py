"""Closed-form Bregman proximal maps for the factorization subproblem.

The subproblem at step ``lam`` is::

    min_{U,Z}  lam * f(U, Z) + <P, U> + <Q, Z> + h(U, Z)

For every supported regularizer the minimizer has the form
``U = su * D_U``, ``Z = sz * D_Z`` where ``D_U`` (``D_Z``) applies the block's
nonsmooth operator to ``-P`` (``-Q``) and the scales come from a scalar root.
With per-block quadratic coefficients ``alpha_u = c2 + aug_u + lam * l2_u`` and
``alpha_z`` likewise, the block norms ``t_u, t_z`` satisfy::

    ||D_U|| = t_u * (c1 (t_u^2 + t_z^2) + alpha_u)
    ||D_Z|| = t_z * (c1 (t_u^2 + t_z^2) + alpha_z)

Equal alphas give a cubic in the common scale; unequal alphas give a quintic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import KernelSpec, kernel_grad
from .linalg import jacobi_svd
from .matrix import FactorPair
from .problems import BlockReg, ProblemSpec, smooth_grad

_BISECT_RTOL = 1e-3
_NEWTON_MAX = 100


class DegenerateKernelError(ValueError):
    """The subproblem has no unique minimizer (``c1 * s = c2eff = 0``)."""


def _monotone_root(fn: Callable[[float], float], dfn: Callable[[float], float],
                   lo: float, hi: float, tol: float, increasing: bool) -> float:
    """Root of a strictly monotone ``fn`` bracketed by ``[lo, hi]``.

    Bisection until the bracket is within 1e-3 relative, then Newton steps
    kept inside the bracket until ``|fn| <= tol`` plus two polishing steps.
    The best iterate seen is returned.
    """
    # the orientation is known analytically; reading it off fn(lo) fails
    # when the root sits within rounding of an endpoint
    sign_lo = not increasing
    while hi - lo > _BISECT_RTOL * max(abs(hi), abs(lo)):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == sign_lo:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    best_r, best_f = r, abs(fn(r))
    extra = 0
    for _ in range(_NEWTON_MAX):
        fr = fn(r)
        if abs(fr) < best_f:
            best_r, best_f = r, abs(fr)
        if fr == 0.0:
            return r
        if abs(fr) <= tol:
            # a couple of extra steps take the root to full precision
            extra += 1
            if extra > 2:
                break
        if (fr > 0) == sign_lo:
            lo = r
        else:
            hi = r
        d = dfn(r)
        step = r - fr / d if d != 0 else 0.5 * (lo + hi)
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if step == r:
            break
        r = step
    return best_r


def solve_cubic_scale(s: float, c1: float, c2eff: float) -> float:
    """Nonnegative root of ``c1 * s * r^3 + c2eff * r - 1 = 0``.

    Raises:
        DegenerateKernelError: if ``c1 * s == c2eff == 0``.
    """
    if s < 0 or c1 < 0 or c2eff < 0:
        raise ValueError("solve_cubic_scale expects nonnegative coefficients")
    a = c1 * s
    if a == 0.0 and c2eff == 0.0:
        raise DegenerateKernelError("cubic c1*s*r^3 + c2eff*r - 1 has no root (c1*s = c2eff = 0)")
    if a == 0.0:
        return 1.0 / c2eff
    hi = (1.0 / a) ** (1.0 / 3.0)
    if c2eff > 0:
        hi = min(hi, 1.0 / c2eff)
    return _monotone_root(
        lambda r: a * r * r * r + c2eff * r - 1.0,
        lambda r: 3.0 * a * r * r + c2eff,
        0.0, hi, 1e-15, increasing=True,
    )


def quintic_residual(r1: float, c1: float, c2: float, lam0: float, pnorm: float, qnorm: float) -> float:
    """``psi(r1) = c1 (p^2/(r1+lam0)^2 + q^2/r1^2) + c2 - r1``."""
    return c1 * (pnorm * pnorm / (r1 + lam0) ** 2 + qnorm * qnorm / (r1 * r1)) + c2 - r1


def solve_r1_quintic(c1: float, c2: float, lam0: float, pnorm: float, qnorm: float) -> float:
    """Root ``r1 > 0`` of the strictly decreasing ``psi`` (see :func:`quintic_residual`).

    Clearing denominators gives the degree-5 polynomial
    ``c1 (p^2 r1^2 + q^2 (r1+lam0)^2) + c2 r1^2 (r1+lam0)^2 - r1^3 (r1+lam0)^2``.

    Raises:
        ValueError: if ``qnorm == 0`` (the caller must use a one-block cubic).
    """
    if qnorm <= 0:
        raise ValueError("solve_r1_quintic requires qnorm > 0")
    if min(c1, c2, lam0, pnorm) < 0:
        raise ValueError("solve_r1_quintic expects nonnegative coefficients")
    x = c1 * (pnorm * pnorm + qnorm * qnorm)
    spread = x ** (1.0 / 3.0)
    if c2 > 0:
        spread = min(spread, c1 * (pnorm * pnorm / (c2 + lam0) ** 2 + qnorm * qnorm / (c2 * c2)))
    lo, hi = c2, c2 + spread
    if lo == 0.0:
        if c1 == 0.0:
            raise DegenerateKernelError("quintic with c1 = c2 = 0 has no positive root")
        # psi(r1) = 0 forces r1^3 >= c1 q^2
        lo = (c1 * qnorm * qnorm) ** (1.0 / 3.0)
    if hi <= lo:
        return hi

    def psi(r):
        return quintic_residual(r, c1, c2, lam0, pnorm, qnorm)

    def dpsi(r):
        return -2.0 * c1 * (pnorm * pnorm / (r + lam0) ** 3 + qnorm * qnorm / (r * r * r)) - 1.0

    return _monotone_root(psi, dpsi, lo, hi, 1e-15 * hi, increasing=False)


def soft_threshold(m: np.ndarray, theta: float) -> np.ndarray:
    if theta < 0:
        raise ValueError("threshold must be >= 0")
    return np.sign(m) * np.maximum(np.abs(m) - theta, 0.0)


def hard_threshold(m: np.ndarray, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries; ties keep the earlier row-major index."""
    if s < 1:
        raise ValueError("sparsity budget must be >= 1")
    flat = np.asarray(m, dtype=np.float64).ravel()
    if s >= flat.size:
        return np.array(m, dtype=np.float64)
    keep = np.argsort(-np.abs(flat), kind="stable")[:s]
    out = np.zeros_like(flat)
    out[keep] = flat[keep]
    return out.reshape(np.shape(m))


def nonneg_project(m: np.ndarray) -> np.ndarray:
    return np.maximum(m, 0.0)


def svd_shrink(m: np.ndarray, t: float) -> np.ndarray:
    """Singular value shrinkage ``U diag(max(s - t, 0)) V'``."""
    if t < 0:
        raise ValueError("shrinkage must be >= 0")
    u, s, vt = jacobi_svd(m)
    return (u * np.maximum(s - t, 0.0)) @ vt


def block_direction(reg: BlockReg, neg_lin: np.ndarray, step: float) -> np.ndarray:
    """Direction of the block minimizer: the block operator applied to ``-P``."""
    if reg.l1 > 0:
        if reg.nonneg:
            return nonneg_project(neg_lin - step * reg.l1)
        return soft_threshold(neg_lin, step * reg.l1)
    if reg.nuclear > 0:
        return svd_shrink(neg_lin, step * reg.nuclear)
    d = nonneg_project(neg_lin) if reg.nonneg else neg_lin
    if reg.sparsity is not None:
        d = hard_threshold(d, reg.sparsity)
    return d


def block_scales(c1: float, alpha_u: float, alpha_z: float, a: float, b: float,
                 force_quintic: bool = False) -> tuple[float, float]:
    """Scales ``(su, sz)`` with ``U = su * D_U``, ``Z = sz * D_Z``.

    ``a``, ``b`` are the direction norms. Equal alphas use the cubic; otherwise
    the quintic is solved with the smaller alpha as ``c2`` and the gap as
    ``lam0`` (blocks swapped when ``alpha_u < alpha_z``). ``force_quintic``
    routes equal alphas through the quintic too.
    """
    if a == 0.0 and b == 0.0:
        if c1 == 0.0 and min(alpha_u, alpha_z) == 0.0:
            raise DegenerateKernelError("subproblem is unbounded or non-unique")
        return 0.0, 0.0
    if b == 0.0:
        return solve_cubic_scale(a * a, c1, alpha_u), 0.0
    if a == 0.0:
        return 0.0, solve_cubic_scale(b * b, c1, alpha_z)
    if alpha_u == alpha_z and not force_quintic:
        r = solve_cubic_scale(a * a + b * b, c1, alpha_u)
        return r, r
    if alpha_u >= alpha_z:
        gap = alpha_u - alpha_z
        r1 = solve_r1_quintic(c1, alpha_z, gap, a, b)
        return 1.0 / (r1 + gap), 1.0 / r1
    gap = alpha_z - alpha_u
    r1 = solve_r1_quintic(c1, alpha_u, gap, b, a)
    return 1.0 / r1, 1.0 / (r1 + gap)


@dataclass(frozen=True)
class ProxInput:
    """Data of one subproblem: linear terms ``P``, ``Q``, kernel, step and block regularizers."""

    p_mat: np.ndarray
    q_mat: np.ndarray
    kernel: KernelSpec
    step: float
    reg_u: BlockReg
    reg_z: BlockReg

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.p_mat.ndim != 2 or self.q_mat.ndim != 2 or self.p_mat.shape[1] != self.q_mat.shape[0]:
            raise ValueError(f"P {self.p_mat.shape} and Q {self.q_mat.shape} are not conformable")

    @property
    def alphas(self) -> tuple[float, float]:
        k = self.kernel
        return (k.c2 + k.aug_u + self.step * self.reg_u.l2,
                k.c2 + k.aug_z + self.step * self.reg_z.l2)

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        return (block_direction(self.reg_u, -self.p_mat, self.step),
                block_direction(self.reg_z, -self.q_mat, self.step))


def bpg_prox(inp: ProxInput, force_quintic: bool = False) -> FactorPair:
    """Minimizer of ``step * f + <P, U> + <Q, Z> + h``."""
    du, dz = inp.directions()
    a = float(np.sqrt(np.sum(du * du)))
    b = float(np.sqrt(np.sum(dz * dz)))
    alpha_u, alpha_z = inp.alphas
    su, sz = block_scales(inp.kernel.c1, alpha_u, alpha_z, a, b, force_quintic)
    return FactorPair(su * du, sz * dz)


def linearize(p: ProblemSpec, k: KernelSpec, x: FactorPair, step: float) -> ProxInput:
    """Subproblem at ``x``: ``P = step * grad_U g(x) - grad_U h(x)`` and likewise ``Q``."""
    g = smooth_grad(p, x)
    gh = kernel_grad(k, x)
    reg_u, reg_z = p.prox_regs
    return ProxInput(step * g.u - gh.u, step * g.z - gh.z, k, step, reg_u, reg_z)
