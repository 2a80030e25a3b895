"""Objectives ``Psi = g + f`` for the factorization problems.

``g`` is the smooth data term, ``f`` the block-separable regularizer. L2
weights normally belong to ``f``; a problem built with ``l2_in_smooth=True``
moves them into ``g`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .linalg import singular_values
from .matrix import FactorPair, MaskedMatrix, dense, fro_norm


@dataclass(frozen=True)
class Full:
    """``g = 1/2 ||A - UZ||_F^2``."""

    a: np.ndarray
    norm_a: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", dense(self.a))
        object.__setattr__(self, "norm_a", fro_norm(self.a))

    @property
    def shape(self):
        return self.a.shape


@dataclass(frozen=True)
class Masked:
    """``g = 1/2 ||P_Omega(A - UZ)||_F^2`` over the observed entries only."""

    a: MaskedMatrix

    @property
    def shape(self):
        return self.a.shape


@dataclass(frozen=True)
class GraphReg:
    """Full term plus ``mu0/2 tr(U' Lap U)``."""

    a: np.ndarray
    lap: np.ndarray
    mu0: float
    norm_a: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", dense(self.a))
        object.__setattr__(self, "lap", dense(self.lap))
        object.__setattr__(self, "norm_a", fro_norm(self.a))
        m = self.a.shape[0]
        if self.lap.shape != (m, m):
            raise ValueError(f"graph Laplacian must be {m}x{m}, got {self.lap.shape}")
        if not self.mu0 > 0:
            raise ValueError("mu0 must be > 0")

    @property
    def shape(self):
        return self.a.shape


@dataclass(frozen=True)
class SymPenalty:
    """Full term plus ``lam0/2 ||U - Z'||_F^2`` (square ``A``)."""

    a: np.ndarray
    lam0: float
    norm_a: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", dense(self.a))
        object.__setattr__(self, "norm_a", fro_norm(self.a))
        if self.a.shape[0] != self.a.shape[1]:
            raise ValueError(f"symmetric penalty needs a square matrix, got {self.a.shape}")
        if not self.lam0 > 0:
            raise ValueError("lam0 must be > 0")

    @property
    def shape(self):
        return self.a.shape


DataTerm = Union[Full, Masked, GraphReg, SymPenalty]


@dataclass(frozen=True)
class BlockReg:
    """Regularizer of one factor block.

    Supported: an optional L2 weight combined with at most one of L1,
    nuclear norm or a sparsity budget; ``nonneg`` combines with L1 or
    sparsity but not with the nuclear norm.
    """

    l2: float = 0.0
    l1: float = 0.0
    nuclear: float = 0.0
    nonneg: bool = False
    sparsity: Optional[int] = None

    def __post_init__(self):
        for name in ("l2", "l1", "nuclear"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} weight must be finite and >= 0, got {v}")
        if self.sparsity is not None and self.sparsity < 1:
            raise ValueError("sparsity budget must be >= 1")
        active = (self.l1 > 0) + (self.nuclear > 0) + (self.sparsity is not None)
        if active > 1:
            raise ValueError("at most one of l1, nuclear, sparsity per block")
        if self.nonneg and self.nuclear > 0:
            raise ValueError("nuclear norm cannot be combined with nonnegativity")

    @property
    def kind(self) -> str:
        base = "nonneg" if self.nonneg else ""
        if self.l1 > 0:
            return "nonneg-l1" if self.nonneg else "l1"
        if self.nuclear > 0:
            return "nuclear"
        if self.sparsity is not None:
            return "nonneg-sparsity" if self.nonneg else "sparsity"
        return base or "none"


@dataclass(frozen=True)
class ProblemSpec:
    data: DataTerm
    reg_u: BlockReg
    reg_z: BlockReg
    dims: tuple[int, int, int]
    l2_in_smooth: bool = False

    def __post_init__(self):
        m, n, k = self.dims
        if k < 1:
            raise ValueError("rank K must be >= 1")
        if tuple(self.data.shape) != (m, n):
            raise ValueError(f"dims {(m, n)} do not match data shape {tuple(self.data.shape)}")

    @classmethod
    def build(cls, data: DataTerm, k: int, reg_u: BlockReg | None = None,
              reg_z: BlockReg | None = None, l2_in_smooth: bool = False) -> "ProblemSpec":
        m, n = data.shape
        return cls(data, reg_u or BlockReg(), reg_z or BlockReg(), (m, n, k), l2_in_smooth)

    def check_point(self, x: FactorPair) -> None:
        m, n, k = self.dims
        if x.u.shape != (m, k) or x.z.shape != (k, n):
            raise ValueError(f"iterate shapes {x.u.shape}, {x.z.shape} do not match dims {self.dims}")

    @property
    def prox_regs(self) -> tuple[BlockReg, BlockReg]:
        """Block regularizers as seen by the prox (L2 removed when it lives in g)."""
        if not self.l2_in_smooth:
            return self.reg_u, self.reg_z
        return replace(self.reg_u, l2=0.0), replace(self.reg_z, l2=0.0)


def _residual_full(a: np.ndarray, x: FactorPair) -> np.ndarray:
    return a - x.u @ x.z


def smooth_value(p: ProblemSpec, x: FactorPair) -> float:
    d = p.data
    if isinstance(d, Masked):
        r = d.a.vals - d.a.predict(x.u, x.z)
        val = 0.5 * float(r @ r)
    else:
        r = _residual_full(d.a, x)
        val = 0.5 * float(np.sum(r * r))
        if isinstance(d, GraphReg):
            val += 0.5 * d.mu0 * float(np.sum((d.lap @ x.u) * x.u))
        elif isinstance(d, SymPenalty):
            e = x.u - x.z.T
            val += 0.5 * d.lam0 * float(np.sum(e * e))
    if p.l2_in_smooth:
        val += 0.5 * (p.reg_u.l2 * float(np.sum(x.u * x.u)) + p.reg_z.l2 * float(np.sum(x.z * x.z)))
    return val


def _masked_grad(mm: MaskedMatrix, x: FactorPair) -> FactorPair:
    # streaming over Omega, one column of K at a time
    m, n = mm.shape
    r = mm.vals - mm.predict(x.u, x.z)
    k = x.rank
    gu = np.empty((m, k))
    gz = np.empty((k, n))
    for j in range(k):
        gu[:, j] = -np.bincount(mm.rows, weights=r * x.z[j, mm.cols], minlength=m)
        gz[j, :] = -np.bincount(mm.cols, weights=r * x.u[mm.rows, j], minlength=n)
    return FactorPair(gu, gz)


def smooth_grad(p: ProblemSpec, x: FactorPair) -> FactorPair:
    d = p.data
    if isinstance(d, Masked):
        g = _masked_grad(d.a, x)
        gu, gz = g.u, g.z
    else:
        r = _residual_full(d.a, x)
        gu = -(r @ x.z.T)
        gz = -(x.u.T @ r)
        if isinstance(d, GraphReg):
            gu = gu + 0.5 * d.mu0 * (d.lap @ x.u + d.lap.T @ x.u)
        elif isinstance(d, SymPenalty):
            e = x.u - x.z.T
            gu = gu + d.lam0 * e
            gz = gz - d.lam0 * e.T
    if p.l2_in_smooth:
        gu = gu + p.reg_u.l2 * x.u
        gz = gz + p.reg_z.l2 * x.z
    return FactorPair(gu, gz)


def block_reg_value(reg: BlockReg, m: np.ndarray, include_l2: bool = True) -> float:
    if reg.nonneg and np.any(m < 0):
        return math.inf
    if reg.sparsity is not None and np.count_nonzero(m) > reg.sparsity:
        return math.inf
    val = 0.0
    if include_l2 and reg.l2 > 0:
        val += 0.5 * reg.l2 * float(np.sum(m * m))
    if reg.l1 > 0:
        val += reg.l1 * float(np.sum(np.abs(m)))
    if reg.nuclear > 0:
        val += reg.nuclear * float(np.sum(singular_values(m)))
    return val


def nonsmooth_value(p: ProblemSpec, x: FactorPair) -> float:
    inc = not p.l2_in_smooth
    return block_reg_value(p.reg_u, x.u, inc) + block_reg_value(p.reg_z, x.z, inc)


def objective(p: ProblemSpec, x: FactorPair) -> float:
    f = nonsmooth_value(p, x)
    if math.isinf(f):
        return f
    return smooth_value(p, x) + f


def dg_bregman(p: ProblemSpec, x: FactorPair, y: FactorPair) -> float:
    """``D_g(x, y) = g(x) - g(y) - <grad g(y), x - y>``; may be negative.

    With ``d = x - y``, ``R = A - U_y Z_y`` and
    ``E = dU Z_x + U_y dZ`` (so that ``U_x Z_x = U_y Z_y + E``), the data term
    contributes ``|E|^2 / 2 - <R, dU dZ>``; the quadratic extras contribute their
    own quadratic forms in ``d``. This is the definition expanded, and unlike
    the three-term difference it does not lose accuracy for nearby points.
    """
    du, dz = x.u - y.u, x.z - y.z
    d = p.data
    if isinstance(d, Masked):
        mm = d.a
        r = mm.vals - mm.predict(y.u, y.z)
        e = mm.predict(du, x.z) + mm.predict(y.u, dz)
        val = 0.5 * float(e @ e) - float(r @ mm.predict(du, dz))
    else:
        r = _residual_full(d.a, y)
        e = du @ x.z + y.u @ dz
        val = 0.5 * float(np.sum(e * e)) - float(np.sum(r * (du @ dz)))
        if isinstance(d, GraphReg):
            val += 0.5 * d.mu0 * float(np.sum((d.lap @ du) * du))
        elif isinstance(d, SymPenalty):
            w = du - dz.T
            val += 0.5 * d.lam0 * float(np.sum(w * w))
    if p.l2_in_smooth:
        val += 0.5 * (p.reg_u.l2 * float(np.sum(du * du)) + p.reg_z.l2 * float(np.sum(dz * dz)))
    return val


def semiconvexity(p: ProblemSpec) -> Optional[float]:
    """Semi-convexity modulus of f: 0 for convex regularizers, ``None`` when a
    sparsity budget makes it unavailable."""
    if p.reg_u.sparsity is not None or p.reg_z.sparsity is not None:
        return None
    return 0.0
