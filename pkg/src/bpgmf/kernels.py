"""Kernel generating distances built from h1, h2 and per-block quadratics.

With ``n(x) = ||U||^2 + ||Z||^2``::

    h1(x) = (n(x) / 2) ** 2
    h2(x) = n(x) / 2
    h(x)  = c1 h1 + c2 h2 + aug_u ||U||^2 / 2 + aug_z ||Z||^2 / 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import FactorPair


@dataclass(frozen=True)
class KernelSpec:
    c1: float
    c2: float
    aug_u: float = 0.0
    aug_z: float = 0.0

    def __post_init__(self):
        for name in ("c1", "c2", "aug_u", "aug_z"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"kernel coefficient {name} must be finite and >= 0, got {v}")

    @property
    def sigma(self) -> float:
        """Strong convexity modulus of h."""
        return self.c2 + min(self.aug_u, self.aug_z)


def kernel_value(k: KernelSpec, x: FactorPair) -> float:
    nu = float(np.sum(x.u * x.u))
    nz = float(np.sum(x.z * x.z))
    half = 0.5 * (nu + nz)
    return k.c1 * half * half + k.c2 * half + 0.5 * (k.aug_u * nu + k.aug_z * nz)


def kernel_grad(k: KernelSpec, x: FactorPair) -> FactorPair:
    n = x.norm_sq()
    base = k.c1 * n + k.c2
    return FactorPair((base + k.aug_u) * x.u, (base + k.aug_z) * x.z)


def bregman_distance(k: KernelSpec, x: FactorPair, y: FactorPair) -> float:
    """``D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>``.

    Evaluated in the expanded form ``c1 (|y|^2 |d|^2 / 2 + (2<y,d> + |d|^2)^2 / 4)
    + c2 |d|^2 / 2 + aug terms`` with ``d = x - y``, which is algebraically
    identical but free of cancellation, so it stays accurate (and >= 0) when
    ``x`` is close to ``y``.
    """
    if x.u.shape != y.u.shape or x.z.shape != y.z.shape:
        raise ValueError("bregman_distance: operands are not conformable")
    du, dz = x.u - y.u, x.z - y.z
    ddu, ddz = float(np.sum(du * du)), float(np.sum(dz * dz))
    dd = ddu + ddz
    cross = float(np.sum(y.u * du) + np.sum(y.z * dz))
    dn = 2.0 * cross + dd
    quartic = 0.5 * y.norm_sq() * dd + 0.25 * dn * dn
    return k.c1 * quartic + 0.5 * (k.c2 * dd + k.aug_u * ddu + k.aug_z * ddz)


def kernel_for_problem(p) -> KernelSpec:
    """Kernel for which the smooth part of ``p`` is 1-smad.

    ``c1 = 3`` always. ``c2`` depends on the data term:

    * Full: ``||A||_F``
    * Masked: ``||P_Omega(A)||_F``
    * GraphReg: ``||A||_F + mu0 ||Lap||_F``
    * SymPenalty: ``||A||_F + 2 lam0``

    When exactly one block carries an L2 weight, the other block receives the
    same weight as a quadratic augmentation so that the subproblem stays a
    cubic at unit step. When ``p.l2_in_smooth`` is set the L2 terms are part
    of g and their largest weight is added to ``c2`` instead.
    """
    from .problems import Full, GraphReg, Masked, SymPenalty

    d = p.data
    if isinstance(d, Full):
        c2 = d.norm_a
    elif isinstance(d, Masked):
        c2 = d.a.norm()
    elif isinstance(d, GraphReg):
        c2 = d.norm_a + d.mu0 * float(np.linalg.norm(d.lap))
    elif isinstance(d, SymPenalty):
        c2 = d.norm_a + 2.0 * d.lam0
    else:
        raise TypeError(f"unknown data term {type(d).__name__}")
    l2u, l2z = p.reg_u.l2, p.reg_z.l2
    if p.l2_in_smooth:
        return KernelSpec(3.0, c2 + max(l2u, l2z))
    aug_u = aug_z = 0.0
    if l2u > 0 and l2z == 0:
        aug_z = l2u
    elif l2z > 0 and l2u == 0:
        aug_u = l2z
    return KernelSpec(3.0, c2, aug_u, aug_z)
