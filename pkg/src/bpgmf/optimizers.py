"""BPG-MF, BPG-MF-WB, CoCaIn BPG-MF and the PALM / iPALM baselines."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .data import init_factors
from .kernels import KernelSpec, bregman_distance, kernel_for_problem
from .linalg import power_iteration
from .matrix import FactorPair
from .problems import (
    BlockReg,
    GraphReg,
    ProblemSpec,
    SymPenalty,
    dg_bregman,
    objective,
    semiconvexity,
    smooth_grad,
)
from .prox import bpg_prox, hard_threshold, linearize, nonneg_project, soft_threshold, svd_shrink

LIPSCHITZ_FLOOR = 1e-12


class BacktrackingError(RuntimeError):
    """Upper-bound backtracking exceeded its doubling cap."""


@dataclass(frozen=True)
class BpgConfig:
    lam: float = 0.99
    max_iters: int = 1000
    seed: int = 0
    init_range: tuple[float, float] = (0.0, 0.1)
    tol: Optional[float] = None  # stop when ||x+ - x|| / step < tol

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class CoCaInConfig:
    delta: float = 0.99
    eps: float = 1e-4
    lbar0: float = 1e-3
    nu: float = 2.0
    lbar_min: float = 1e-6
    gamma_shrink: float = 0.5
    max_gamma_tries: int = 30
    max_backtracks: int = 60
    max_iters: int = 1000
    seed: int = 0
    init_range: tuple[float, float] = (0.0, 0.1)
    tol: Optional[float] = None
    inertia: bool = True

    def __post_init__(self):
        if not 1 > self.delta > self.eps > 0:
            raise ValueError("need 1 > delta > eps > 0")
        if not self.nu > 1:
            raise ValueError("nu must be > 1")
        if not self.lbar0 > 0 or not self.lbar_min > 0:
            raise ValueError("lbar0 and lbar_min must be > 0")
        if not 0 < self.gamma_shrink < 1:
            raise ValueError("gamma_shrink must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class PalmConfig:
    beta: float = 0.0
    max_iters: int = 1000
    seed: int = 0
    init_range: tuple[float, float] = (0.0, 0.1)

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class TraceRecord:
    iter: int
    elapsed_sec: float
    objective: float
    step: Optional[float] = None
    inertia: Optional[float] = None
    lbar: Optional[float] = None
    lunder: Optional[float] = None
    test_rmse: Optional[float] = None


@dataclass
class Trace:
    algo: str
    records: list = field(default_factory=list)
    x_init: Optional[FactorPair] = None
    x_final: Optional[FactorPair] = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def final_objective(self) -> float:
        return self.records[-1].objective


Callback = Callable[[dict], None]


def _start(p: ProblemSpec, seed: int, init_range, x0: Optional[FactorPair]) -> FactorPair:
    if x0 is not None:
        p.check_point(x0)
        return x0
    m, n, k = p.dims
    x = init_factors(m, n, k, seed, *init_range)
    return x


# ---------------------------------------------------------------- BPG-MF


def bpg_step(p: ProblemSpec, k: KernelSpec, lam: float, x: FactorPair) -> FactorPair:
    return bpg_prox(linearize(p, k, x, lam))


def simple_bpg_step(a: np.ndarray, x: FactorPair, lam: float) -> FactorPair:
    """One BPG step for the unregularized full problem in its gradient-step form.

    ``t = 3 (|U|^2 + |Z|^2) + |A|``, gradient steps ``P = U - lam/t grad_U g`` and
    ``Q = Z - lam/t grad_Z g``, then ``(U+, Z+) = r t (P, Q)`` with ``r`` the
    root of ``3 t^2 (|P|^2 + |Q|^2) r^3 + |A| r - 1 = 0``.
    """
    from .prox import solve_cubic_scale

    u, z = x.u, x.z
    na = float(np.linalg.norm(a))
    t = 3.0 * (float(np.sum(u * u)) + float(np.sum(z * z))) + na
    r_mat = u @ z - a
    pm = u - (lam / t) * (r_mat @ z.T)
    qm = z - (lam / t) * (u.T @ r_mat)
    s = float(np.sum(pm * pm)) + float(np.sum(qm * qm))
    r = solve_cubic_scale(t * t * s, 3.0, na)
    return FactorPair(r * t * pm, r * t * qm)


def run_bpg(p: ProblemSpec, cfg: BpgConfig = BpgConfig(), x0: Optional[FactorPair] = None,
            kernel: Optional[KernelSpec] = None, callback: Optional[Callback] = None,
            eval_fn: Optional[Callable[[FactorPair], float]] = None) -> Trace:
    """BPG-MF with constant step ``cfg.lam``."""
    k = kernel or kernel_for_problem(p)
    if k.sigma == 0:
        warnings.warn("kernel is not strongly convex (sigma = 0); BPG runs without that guarantee",
                      RuntimeWarning, stacklevel=2)
    x = _start(p, cfg.seed, cfg.init_range, x0)
    trace = Trace("bpg", x_init=x)
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        xn = bpg_step(p, k, cfg.lam, x)
        rec = TraceRecord(it, time.perf_counter() - t0, objective(p, xn), cfg.lam, 0.0)
        if eval_fn is not None:
            rec.test_rmse = eval_fn(xn)
        trace.records.append(rec)
        if callback is not None:
            callback({"iter": it, "x": x, "x_next": xn, "step": cfg.lam})
        done = cfg.tol is not None and (xn - x).norm() / cfg.lam < cfg.tol
        x = xn
        if done:
            break
    trace.x_final = x
    return trace


# ---------------------------------------------------------------- CoCaIn BPG-MF


@dataclass(frozen=True)
class CoCaInState:
    x: FactorPair
    x_prev: FactorPair
    tau_prev: float
    lbar_prev: float
    lunder_prev: float = 0.0


@dataclass(frozen=True)
class CoCaInStep:
    """One accepted CoCaIn iteration with everything needed to recheck it."""

    state: CoCaInState
    y: FactorPair
    x_next: FactorPair
    gamma: float
    lunder: float
    lbar: float
    tau: float
    backtracks: int


def _lower_constant(p: ProblemSpec, k: KernelSpec, x: FactorPair, y: FactorPair) -> float:
    dh = bregman_distance(k, x, y)
    if dh <= 0:
        return 0.0
    return max(0.0, -dg_bregman(p, x, y) / dh)


# relative slack on the inertia test, only absorbs the sqrt/square round trip
_INERTIA_RTOL = 1e-14


def _inertia_search(p, k, cfg, st, tau, start):
    """Largest tried ``gamma`` whose extrapolation passes the inertia test at step ``tau``.

    The test is ``(1/tau + L_k) D_h(x, y) <= (delta - eps) / tau_prev D_h(x_prev, x)``;
    with ``tau = tau_prev`` it is exactly the published condition, and for
    ``tau < tau_prev`` it is stronger. Returns ``(gamma, y, lunder)``; gamma = 0
    always passes.
    """
    x, xp = st.x, st.x_prev
    rhs = (cfg.delta - cfg.eps) * bregman_distance(k, xp, x) * (tau / st.tau_prev)
    diff = x - xp
    cand = start
    for attempt in range(cfg.max_gamma_tries):
        yc = x + cand * diff
        lc = _lower_constant(p, k, x, yc)
        if rhs * (1.0 + _INERTIA_RTOL) >= (1.0 + lc * tau) * bregman_distance(k, x, yc):
            return cand, yc, lc
        # first retry re-seeds the bound with the lower constant just found
        nxt = _gamma_bound(cfg, st, tau, lc)
        cand = nxt if attempt == 0 and nxt < cand else cand * cfg.gamma_shrink
    return 0.0, x, 0.0


def _gamma_bound(cfg, st, tau, lunder):
    # Euclidean closed form of the inertia test
    return math.sqrt((cfg.delta - cfg.eps) * (tau / st.tau_prev) / (1.0 + tau * lunder))


def cocain_step(p: ProblemSpec, k: KernelSpec, cfg: CoCaInConfig, st: CoCaInState) -> CoCaInStep:
    """One CoCaIn BPG-MF iteration: inertia search, then upper backtracking.

    The inertia parameter is seeded with ``sqrt((delta - eps) / (1 + tau L))``
    and shrunk until the inertia test holds; ``L`` (the lower constant) is
    the smallest value with ``D_g(x, y) >= -L D_h(x, y)``. The upper constant
    then grows by ``nu`` until ``D_g(x+, y) <= Lbar D_h(x+, y)``. If that
    shrinks the step below ``tau_prev``, the inertia test is re-run at the
    new step so that the accepted triple stays consistent.

    Raises:
        BacktrackingError: if the upper constant needs more than
            ``cfg.max_backtracks`` increases.
    """
    x = st.x
    moving = cfg.inertia and not x.same_as(st.x_prev)
    lbar = max(st.lbar_prev, cfg.lbar_min)
    tau = min(st.tau_prev, 1.0 / lbar)
    gamma, y, lunder = 0.0, x, 0.0
    if moving:
        gamma, y, lunder = _inertia_search(p, k, cfg, st, tau, _gamma_bound(cfg, st, tau, st.lunder_prev))
    for n_back in range(cfg.max_backtracks + 1):
        xn = bpg_prox(linearize(p, k, y, tau))
        if dg_bregman(p, xn, y) <= lbar * bregman_distance(k, xn, y):
            return CoCaInStep(st, y, xn, gamma, lunder, lbar, tau, n_back)
        lbar *= cfg.nu
        new_tau = min(st.tau_prev, 1.0 / lbar)
        if gamma > 0 and new_tau < tau:
            gamma, y, lunder = _inertia_search(p, k, cfg, st, new_tau, gamma)
        tau = new_tau
    raise BacktrackingError(f"upper constant exceeded {cfg.max_backtracks} increases (lbar={lbar:.3e})")


def run_cocain(p: ProblemSpec, cfg: CoCaInConfig = CoCaInConfig(), x0: Optional[FactorPair] = None,
               kernel: Optional[KernelSpec] = None, callback: Optional[Callback] = None,
               eval_fn: Optional[Callable[[FactorPair], float]] = None,
               algo: str = "cocain") -> Trace:
    """CoCaIn BPG-MF (``cfg.inertia=False`` gives BPG-MF-WB).

    Raises:
        ValueError: if the kernel is not strongly convex or f has no
            semi-convexity modulus (sparsity budgets).
    """
    k = kernel or kernel_for_problem(p)
    if not k.sigma > 0:
        raise ValueError("CoCaIn needs a strongly convex kernel (sigma > 0); got sigma = 0")
    alpha = semiconvexity(p)
    if alpha is None:
        raise ValueError("CoCaIn needs a semi-convex f; sparsity constraints have no modulus")
    if not cfg.lbar0 > -alpha / ((1 - cfg.delta) * k.sigma):
        raise ValueError("lbar0 violates the lower bound -alpha / ((1 - delta) sigma)")
    x = _start(p, cfg.seed, cfg.init_range, x0)
    trace = Trace(algo, x_init=x)
    st = CoCaInState(x, x, 1.0 / cfg.lbar0, cfg.lbar0)
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        step = cocain_step(p, k, cfg, st)
        xn = step.x_next
        rec = TraceRecord(it, time.perf_counter() - t0, objective(p, xn), step.tau, step.gamma,
                          step.lbar, step.lunder)
        if eval_fn is not None:
            rec.test_rmse = eval_fn(xn)
        trace.records.append(rec)
        if callback is not None:
            callback({"iter": it, "step": step, "x": st.x, "x_next": xn, "tau": step.tau})
        done = cfg.tol is not None and (xn - st.x).norm() / step.tau < cfg.tol
        st = CoCaInState(xn, st.x, step.tau, step.lbar, step.lunder)
        if done:
            break
    trace.x_final = st.x
    return trace


def run_bpg_wb(p: ProblemSpec, cfg: CoCaInConfig = CoCaInConfig(), **kw) -> Trace:
    """BPG-MF-WB: CoCaIn with the inertia pinned to zero."""
    return run_cocain(p, replace(cfg, inertia=False), algo="bpg-wb", **kw)


# ---------------------------------------------------------------- PALM / iPALM


def euclidean_block_prox(reg: BlockReg, v: np.ndarray, t: float) -> np.ndarray:
    """Prox of ``t * (l2/2 |.|^2 + r)`` for a block regularizer ``r``."""
    if reg.l2 > 0:
        shrink = 1.0 + t * reg.l2
        v = v / shrink
        t = t / shrink
    if reg.l1 > 0:
        if reg.nonneg:
            return nonneg_project(v - t * reg.l1)
        return soft_threshold(v, t * reg.l1)
    if reg.nuclear > 0:
        return svd_shrink(v, t * reg.nuclear)
    if reg.nonneg:
        v = nonneg_project(v)
    if reg.sparsity is not None:
        v = hard_threshold(v, reg.sparsity)
    return v


def _gram_norm(m: np.ndarray) -> float:
    return power_iteration(m).value ** 2


def block_lipschitz(p: ProblemSpec, x: FactorPair, block: str) -> float:
    """Lipschitz constant of the block gradient of g (floored at 1e-12)."""
    d = p.data
    extra = p.reg_u.l2 if block == "u" else p.reg_z.l2
    extra = extra if p.l2_in_smooth else 0.0
    if block == "u":
        lip = _gram_norm(x.z.T)
        if isinstance(d, GraphReg):
            lip += d.mu0 * power_iteration(0.5 * (d.lap + d.lap.T)).value
    else:
        lip = _gram_norm(x.u)
    if isinstance(d, SymPenalty):
        lip += d.lam0
    return max(lip + extra, LIPSCHITZ_FLOOR)


def palm_step(p: ProblemSpec, x: FactorPair, x_prev: FactorPair, beta: float = 0.0) -> FactorPair:
    """One alternating sweep: U block, then Z block, each extrapolated by ``beta``."""
    reg_u, reg_z = p.prox_regs
    yu = x.u if beta == 0 else x.u + beta * (x.u - x_prev.u)
    cur = FactorPair(yu, x.z)
    lu = block_lipschitz(p, cur, "u")
    u_new = euclidean_block_prox(reg_u, yu - smooth_grad(p, cur).u / lu, 1.0 / lu)
    yz = x.z if beta == 0 else x.z + beta * (x.z - x_prev.z)
    cur = FactorPair(u_new, yz)
    lz = block_lipschitz(p, cur, "z")
    z_new = euclidean_block_prox(reg_z, yz - smooth_grad(p, cur).z / lz, 1.0 / lz)
    return FactorPair(u_new, z_new)


def run_ipalm(p: ProblemSpec, cfg: PalmConfig = PalmConfig(), x0: Optional[FactorPair] = None,
              callback: Optional[Callback] = None,
              eval_fn: Optional[Callable[[FactorPair], float]] = None) -> Trace:
    x = _start(p, cfg.seed, cfg.init_range, x0)
    trace = Trace("palm" if cfg.beta == 0 else f"ipalm-{cfg.beta:g}", x_init=x)
    xp = x
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        xn = palm_step(p, x, xp, cfg.beta)
        rec = TraceRecord(it, time.perf_counter() - t0, objective(p, xn), None, cfg.beta)
        if eval_fn is not None:
            rec.test_rmse = eval_fn(xn)
        trace.records.append(rec)
        if callback is not None:
            callback({"iter": it, "x": x, "x_next": xn})
        xp, x = x, xn
    trace.x_final = x
    return trace


def run_palm(p: ProblemSpec, cfg: PalmConfig = PalmConfig(), **kw) -> Trace:
    return run_ipalm(p, replace(cfg, beta=0.0), **kw)
