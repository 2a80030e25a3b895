"""Independent oracles for the closed forms and inequalities used by the solvers.

Nothing here calls the closed-form prox or the root solvers. Directions are
recomputed with numpy's LAPACK SVD and Python sorting, the scalar problem is
solved on a grid and polished by Newton's method, and derivatives come from
finite differences of the objective values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec
from .matrix import FactorPair, MaskedMatrix
from .problems import (
    BlockReg,
    Full,
    GraphReg,
    Masked,
    ProblemSpec,
    SymPenalty,
    smooth_grad,
    smooth_value,
)
from .prox import ProxInput

MAX_ORACLE_SIZE = 200
GRID = 400
NEWTON_ITERS = 50


@dataclass
class CheckReport:
    name: str
    samples: int
    worst_violation: float
    passed: bool
    details: str = ""
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: samples={self.samples} worst={self.worst_violation:.3e} {self.details}"


# ---------------------------------------------------------------- subproblem


def _h(k: KernelSpec, u: np.ndarray, z: np.ndarray) -> float:
    nu, nz = float(np.sum(u * u)), float(np.sum(z * z))
    return k.c1 * ((nu + nz) / 2) ** 2 + k.c2 * (nu + nz) / 2 + k.aug_u * nu / 2 + k.aug_z * nz / 2


def _reg(reg: BlockReg, m: np.ndarray) -> float:
    if reg.nonneg and (m < 0).any():
        return math.inf
    if reg.sparsity is not None and int((m != 0).sum()) > reg.sparsity:
        return math.inf
    val = reg.l2 * float(np.sum(m * m)) / 2 + reg.l1 * float(np.abs(m).sum())
    if reg.nuclear > 0:
        val += reg.nuclear * float(np.linalg.svd(m, compute_uv=False).sum())
    return val


def subproblem_objective(inp: ProxInput, x: FactorPair) -> float:
    """``step * f(x) + <P, U> + <Q, Z> + h(x)`` evaluated directly."""
    f = _reg(inp.reg_u, x.u) + _reg(inp.reg_z, x.z)
    if math.isinf(f):
        return math.inf
    lin = float(np.sum(inp.p_mat * x.u) + np.sum(inp.q_mat * x.z))
    return inp.step * f + lin + _h(inp.kernel, x.u, x.z)


def _direction(reg: BlockReg, neg: np.ndarray, step: float) -> np.ndarray:
    """Maximizer direction of ``<-P, X> - step * r(X)`` over a sphere."""
    if reg.l1 > 0:
        th = step * reg.l1
        if reg.nonneg:
            return np.where(neg > th, neg - th, 0.0)
        return np.where(neg > th, neg - th, np.where(neg < -th, neg + th, 0.0))
    if reg.nuclear > 0:
        u, s, vt = np.linalg.svd(neg, full_matrices=False)
        return u @ np.diag(np.clip(s - step * reg.nuclear, 0, None)) @ vt
    d = np.where(neg > 0, neg, 0.0) if reg.nonneg else neg.copy()
    if reg.sparsity is not None and reg.sparsity < d.size:
        flat = d.ravel()
        ranked = sorted(range(flat.size), key=lambda i: (-abs(flat[i]), i))
        out = np.zeros_like(flat)
        for i in ranked[: reg.sparsity]:
            out[i] = flat[i]
        d = out.reshape(d.shape)
    return d


def _newton_2d(c1, al_u, al_z, a, b, t):
    active = [a > 0, b > 0]
    t = np.where(active, t, 0.0)
    norms = np.array([a, b])
    alphas = np.array([al_u, al_z])
    for _ in range(NEWTON_ITERS):
        rho = float(t @ t)
        f = t * (c1 * rho + alphas) - norms
        jac = np.diag(c1 * rho + alphas) + 2 * c1 * np.outer(t, t)
        idx = [i for i in range(2) if active[i]]
        if not idx or np.all(f[idx] == 0):
            break
        step = np.zeros(2)
        step[idx] = np.linalg.solve(jac[np.ix_(idx, idx)], f[idx])
        new = np.maximum(t - step, 0.0)
        if np.array_equal(new, t):
            break
        t = new
    return t


def scalar_problem(c1, al_u, al_z, a, b):
    """Minimize ``-a t1 - b t2 + c1/4 (t1^2+t2^2)^2 + al_u t1^2/2 + al_z t2^2/2`` over t >= 0."""

    def bound(norm, alpha):
        cands = []
        if alpha > 0:
            cands.append(norm / alpha)
        if c1 > 0:
            cands.append((norm / c1) ** (1.0 / 3.0))
        if not cands:
            raise ValueError("scalar problem unbounded (c1 = alpha = 0)")
        return min(cands)

    r = 1.05 * max(bound(a, al_u) if a > 0 else 0.0, bound(b, al_z) if b > 0 else 0.0)
    if r == 0.0:
        return np.zeros(2)
    g = np.linspace(0.0, r, GRID)
    t1, t2 = np.meshgrid(g, g, indexing="ij")
    rho = t1 * t1 + t2 * t2
    phi = -a * t1 - b * t2 + c1 * rho * rho / 4 + al_u * t1 * t1 / 2 + al_z * t2 * t2 / 2
    i, j = np.unravel_index(int(np.argmin(phi)), phi.shape)
    return _newton_2d(c1, al_u, al_z, a, b, np.array([g[i], g[j]]))


def subproblem_oracle(inp: ProxInput) -> FactorPair:
    """Minimizer of the subproblem via directions, a 2-D grid search and Newton polish.

    Raises:
        ValueError: if the instance exceeds ``M*K + K*N = 200`` unknowns.
    """
    if inp.p_mat.size + inp.q_mat.size > MAX_ORACLE_SIZE:
        raise ValueError("instance too large for the brute-force oracle")
    du = _direction(inp.reg_u, -inp.p_mat, inp.step)
    dz = _direction(inp.reg_z, -inp.q_mat, inp.step)
    a, b = float(np.linalg.norm(du)), float(np.linalg.norm(dz))
    k = inp.kernel
    al_u = k.c2 + k.aug_u + inp.step * inp.reg_u.l2
    al_z = k.c2 + k.aug_z + inp.step * inp.reg_z.l2
    t = scalar_problem(k.c1, al_u, al_z, a, b)
    u = du * (t[0] / a) if a > 0 else np.zeros_like(du)
    z = dz * (t[1] / b) if b > 0 else np.zeros_like(dz)
    return FactorPair(u, z)


def _euclid_prox(reg: BlockReg, v: np.ndarray, t: float) -> np.ndarray:
    """Euclidean prox of ``t * r`` for the convex block regularizers (L2 handled by the caller)."""
    if reg.sparsity is not None:
        raise ValueError("projected gradient oracle covers convex regularizers only")
    if reg.l1 > 0:
        th = t * reg.l1
        v = np.sign(v) * np.clip(np.abs(v) - th, 0, None) if not reg.nonneg else v - th
    if reg.nuclear > 0:
        u, s, vt = np.linalg.svd(v, full_matrices=False)
        v = u @ np.diag(np.clip(s - t * reg.nuclear, 0, None)) @ vt
    if reg.nonneg:
        v = np.clip(v, 0, None)
    return v


def prox_gradient_oracle(inp: ProxInput, x0: FactorPair | None = None, iters: int = 20000,
                         tol: float = 1e-15) -> FactorPair:
    """Accelerated proximal gradient with backtracking on the raw subproblem.

    The smooth part is ``<P,U> + <Q,Z> + h + step * l2 terms``; the prox handles
    ``step * (l1 | nuclear | nonneg)``. A third, iterative route for convex kinds.
    """
    k = inp.kernel
    lu, lz = inp.step * inp.reg_u.l2, inp.step * inp.reg_z.l2
    nonsmooth_u = BlockReg(l1=inp.reg_u.l1, nuclear=inp.reg_u.nuclear, nonneg=inp.reg_u.nonneg,
                           sparsity=inp.reg_u.sparsity)
    nonsmooth_z = BlockReg(l1=inp.reg_z.l1, nuclear=inp.reg_z.nuclear, nonneg=inp.reg_z.nonneg,
                           sparsity=inp.reg_z.sparsity)

    def smooth(u, z):
        return float(np.sum(inp.p_mat * u) + np.sum(inp.q_mat * z)) + _h(k, u, z) \
            + lu * float(np.sum(u * u)) / 2 + lz * float(np.sum(z * z)) / 2

    def grad(u, z):
        base = k.c1 * (float(np.sum(u * u)) + float(np.sum(z * z))) + k.c2
        return inp.p_mat + (base + k.aug_u + lu) * u, inp.q_mat + (base + k.aug_z + lz) * z

    if x0 is None:
        u = np.zeros_like(inp.p_mat)
        z = np.zeros_like(inp.q_mat)
    else:
        u, z = x0.u.copy(), x0.z.copy()
    yu, yz, tk, lip = u, z, 1.0, 1.0
    for _ in range(iters):
        gu, gz = grad(yu, yz)
        fy = smooth(yu, yz)
        while True:
            nu = _euclid_prox(nonsmooth_u, yu - gu / lip, inp.step / lip)
            nz = _euclid_prox(nonsmooth_z, yz - gz / lip, inp.step / lip)
            du_, dz_ = nu - yu, nz - yz
            quad = fy + float(np.sum(gu * du_) + np.sum(gz * dz_)) \
                + lip / 2 * float(np.sum(du_ * du_) + np.sum(dz_ * dz_))
            if smooth(nu, nz) <= quad + 1e-15 * (1 + abs(fy)):
                break
            lip *= 2
        move = float(np.sum((nu - u) ** 2) + np.sum((nz - z) ** 2))
        tn = (1 + math.sqrt(1 + 4 * tk * tk)) / 2
        yu = nu + (tk - 1) / tn * (nu - u)
        yz = nz + (tk - 1) / tn * (nz - z)
        u, z, tk = nu, nz, tn
        if move <= tol * (1 + float(np.sum(u * u) + np.sum(z * z))):
            break
    return FactorPair(u, z)


# ---------------------------------------------------------------- random instances

PROX_KINDS = ("none", "l2", "l1", "nonneg", "nonneg-l1", "nuclear", "sparsity",
              "nonneg-sparsity", "graph-reg", "symmetric", "mixed-e1")


def random_laplacian(m: int, rng: np.random.Generator) -> np.ndarray:
    w = rng.uniform(0, 1, (m, m)) * (rng.uniform(0, 1, (m, m)) < 0.5)
    w = np.triu(w, 1)
    w = w + w.T
    return np.diag(w.sum(axis=1)) - w


def random_problem(variant: str, rng: np.random.Generator, m: int, n: int, k: int,
                   reg_u: BlockReg | None = None, reg_z: BlockReg | None = None) -> ProblemSpec:
    """A random problem with data term ``full``, ``masked``, ``graph`` or ``sym``."""
    a = rng.uniform(0, 1, (m, n)) * rng.uniform(0.5, 3)
    if variant == "full":
        data = Full(a)
    elif variant == "masked":
        mask = rng.uniform(0, 1, (m, n)) < 0.5
        mask.flat[rng.integers(mask.size)] = True
        data = Masked(MaskedMatrix.from_dense(a, mask))
    elif variant == "graph":
        data = GraphReg(a, random_laplacian(m, rng), float(rng.uniform(0.1, 2)))
    elif variant == "sym":
        a = rng.uniform(0, 1, (m, m))
        data = SymPenalty((a + a.T) / 2, float(rng.uniform(0.1, 2)))
    else:
        raise ValueError(f"unknown data term variant {variant!r}")
    return ProblemSpec.build(data, k, reg_u, reg_z)


def random_point(p: ProblemSpec, rng: np.random.Generator, nonneg: bool = False) -> FactorPair:
    m, n, k = p.dims
    scale = 10 ** rng.uniform(-1, 0.5)
    u = rng.standard_normal((m, k)) * scale
    z = rng.standard_normal((k, n)) * scale
    if nonneg:
        u, z = np.abs(u), np.abs(z)
    return FactorPair(u, z)


def random_prox_instance(kind: str, rng: np.random.Generator, index: int = 0) -> ProxInput:
    """A subproblem of the given regularizer kind, linearized at a random point.

    Sizes are at most 8x6 with K <= 5. The ``mixed-e1`` kind alternates between
    the augmented kernel and the plain one so both the cubic and the quintic
    routes are exercised.
    """
    from .kernels import kernel_for_problem
    from .prox import linearize

    m, n, k = int(rng.integers(1, 9)), int(rng.integers(1, 7)), int(rng.integers(1, 6))
    w = float(10 ** rng.uniform(-2, 0.3))
    variant = "full"
    reg_u = reg_z = BlockReg()
    if kind == "l2":
        reg_u = reg_z = BlockReg(l2=w)
    elif kind == "l1":
        reg_u = reg_z = BlockReg(l1=w)
    elif kind == "nonneg":
        reg_u = reg_z = BlockReg(nonneg=True)
    elif kind == "nonneg-l1":
        reg_u = reg_z = BlockReg(l1=w, nonneg=True)
    elif kind == "nuclear":
        reg_u = reg_z = BlockReg(nuclear=w)
    elif kind == "sparsity":
        reg_u, reg_z = BlockReg(sparsity=int(rng.integers(1, m * k + 1))), BlockReg(sparsity=int(rng.integers(1, k * n + 1)))
    elif kind == "nonneg-sparsity":
        reg_u = BlockReg(nonneg=True, sparsity=int(rng.integers(1, m * k + 1)))
        reg_z = BlockReg(nonneg=True, sparsity=int(rng.integers(1, k * n + 1)))
    elif kind == "graph-reg":
        variant = "graph"
        reg_u = reg_z = BlockReg(l2=w, nonneg=bool(index % 2))
    elif kind == "symmetric":
        variant = "sym"
        n = min(m, 6)
        m = n
        reg_u = reg_z = BlockReg(nonneg=bool(index % 2))
    elif kind == "mixed-e1":
        reg_u, reg_z = BlockReg(l2=w), BlockReg(l1=float(10 ** rng.uniform(-2, 0)))
    elif kind != "none":
        raise ValueError(f"unknown prox kind {kind!r}")
    p = random_problem(variant, rng, m, n, k, reg_u, reg_z)
    kern = kernel_for_problem(p)
    if kind == "mixed-e1" and index % 2:
        kern = KernelSpec(kern.c1, kern.c2)
    x = random_point(p, rng, nonneg=reg_u.nonneg)
    step = float(rng.uniform(0.05, 1.0)) if index % 3 else 0.99
    return linearize(p, kern, x, step)


# ---------------------------------------------------------------- finite-difference checks


def _unflatten(p: ProblemSpec, v: np.ndarray) -> FactorPair:
    m, n, k = p.dims
    return FactorPair(v[: m * k].reshape(m, k), v[m * k:].reshape(k, n))


def _flatten(x: FactorPair) -> np.ndarray:
    return np.concatenate([x.u.ravel(), x.z.ravel()])


def grad_check(p: ProblemSpec, n: int, seed: int, tol: float = 1e-5) -> CheckReport:
    """Central differences of ``smooth_value`` against ``smooth_grad``.

    Error per point: ``max |fd - grad| / (1 + max |grad|)``.
    """
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for i in range(n):
        x = random_point(p, rng)
        v = _flatten(x)
        h = 1e-5 * (1 + float(np.linalg.norm(v)))
        fd = np.empty_like(v)
        for j in range(v.size):
            e = np.zeros_like(v)
            e[j] = h
            fd[j] = (smooth_value(p, _unflatten(p, v + e)) - smooth_value(p, _unflatten(p, v - e))) / (2 * h)
        g = _flatten(smooth_grad(p, x))
        err = float(np.max(np.abs(fd - g)) / (1 + np.max(np.abs(g))))
        if err > worst:
            worst, where = err, f"sample {i}"
    return CheckReport(f"grad-{type(p.data).__name__}", n, worst, worst <= tol, where)


def second_directional(fn, x: FactorPair, d: FactorPair, eps: float) -> float:
    """Second derivative of ``t -> fn(x + t d)`` at 0 by the 5-point central rule.

    The rule is exact for polynomials up to degree 5, so on the quartic
    objectives here only rounding error remains.
    """
    f = [fn(x + eps * j * d) for j in (-2, -1, 0, 1, 2)]
    return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * eps * eps)


def _unit_direction(p: ProblemSpec, rng) -> FactorPair:
    m, n, k = p.dims
    d = FactorPair(rng.standard_normal((m, k)), rng.standard_normal((k, n)))
    return d * (1.0 / d.norm())


def lsmad_check(p: ProblemSpec, k: KernelSpec, L: float, n: int, seed: int,
                tol: float = 1e-6) -> CheckReport:
    """Sampled convexity of ``L h - g`` and ``L h + g`` along random unit directions.

    The violation of a sample is ``-min(curvature) / scale`` with
    ``scale = 1 + L h'' + |g''|``; the check passes when every violation is
    at most ``tol``.
    """
    from .kernels import kernel_value

    rng = np.random.default_rng(seed)
    worst, where = -math.inf, ""
    for i in range(n):
        x = random_point(p, rng)
        if i % 10 == 0:
            x = x * 1e-3
        d = _unit_direction(p, rng)
        eps = 0.1 * (1 + x.norm())
        hd = second_directional(lambda y: kernel_value(k, y), x, d, eps)
        gd = second_directional(lambda y: smooth_value(p, y), x, d, eps)
        scale = 1 + L * abs(hd) + abs(gd)
        viol = -min(L * hd - gd, L * hd + gd) / scale
        if viol > worst:
            worst, where = viol, f"sample {i}: Lh''={L * hd:.4g} g''={gd:.4g}"
    return CheckReport(f"lsmad-{type(p.data).__name__}-L{L:g}", n, worst, worst <= tol, where)


def hessian_bound(p: ProblemSpec, x: FactorPair, d: FactorPair) -> float:
    """``(3||Z||^2 + c) ||H1||^2 + (3||U||^2 + c) ||H2||^2`` plus the extra smooth terms.

    ``c`` is ``||A||_F`` (``||P_Omega A||_F`` for completion); the graph term adds
    ``mu0 ||Lap||_F ||H1||^2`` and the symmetric penalty ``2 lam0 ||H||^2``.
    """
    data = p.data
    h1, h2 = float(np.sum(d.u * d.u)), float(np.sum(d.z * d.z))
    c = data.a.norm() if isinstance(data, Masked) else float(np.linalg.norm(data.a))
    bound = (3 * float(np.sum(x.z * x.z)) + c) * h1 + (3 * float(np.sum(x.u * x.u)) + c) * h2
    if isinstance(data, GraphReg):
        bound += data.mu0 * float(np.linalg.norm(data.lap)) * h1
    elif isinstance(data, SymPenalty):
        bound += 2 * data.lam0 * (h1 + h2)
    if p.l2_in_smooth:
        bound += p.reg_u.l2 * h1 + p.reg_z.l2 * h2
    return bound


def hessian_bound_check(p: ProblemSpec, n: int, seed: int, tol: float = 1e-6) -> CheckReport:
    """Second directional derivative of g against the AM-GM upper bound."""
    rng = np.random.default_rng(seed)
    worst, where = -math.inf, ""
    for i in range(n):
        x = random_point(p, rng)
        m_, n_, k_ = p.dims
        d = FactorPair(rng.standard_normal((m_, k_)), rng.standard_normal((k_, n_))) * float(10 ** rng.uniform(-1, 1))
        eps = 0.1 * (1 + x.norm()) / (1 + d.norm())
        lhs = second_directional(lambda y: smooth_value(p, y), x, d, eps)
        rhs = hessian_bound(p, x, d)
        viol = (lhs - rhs) / (1 + abs(rhs))
        if viol > worst:
            worst, where = viol, f"sample {i}: lhs={lhs:.4g} rhs={rhs:.4g}"
    return CheckReport(f"hessian-bound-{type(p.data).__name__}", n, worst, worst <= tol, where)


# ---------------------------------------------------------------- CoCaIn certificates


def cocain_certificate_check(p: ProblemSpec, cfg, kernel: KernelSpec | None = None,
                             x0: FactorPair | None = None, slack_tol: float = 1e-10,
                             lyap_tol: float = 1e-8) -> CheckReport:
    """Run CoCaIn and re-check every accepted iteration (see :func:`check_cocain_steps`)."""
    from .kernels import kernel_for_problem
    from .optimizers import run_cocain

    k = kernel or kernel_for_problem(p)
    steps = []
    run_cocain(p, cfg, x0=x0, kernel=k, callback=lambda info: steps.append(info["step"]))
    return check_cocain_steps(p, k, cfg, steps, slack_tol, lyap_tol)


def check_cocain_steps(p: ProblemSpec, k: KernelSpec, cfg, steps, slack_tol: float = 1e-10,
                       lyap_tol: float = 1e-8) -> CheckReport:
    """Re-evaluate recorded CoCaIn iterations from their stored iterates.

    Checked per iteration: the inertia inequality
    ``(delta - eps) D_h(x_prev, x) >= (1 + L tau_prev) D_h(x, y)``, the lower
    bound ``D_g(x, y) >= -L D_h(x, y)`` and the upper bound
    ``D_g(x+, y) <= Lbar D_h(x+, y)``, each with slack >= -slack_tol; step
    sizes non-increasing and upper constants non-decreasing; and the Lyapunov
    quantity ``Psi(x+) + delta D_h(x, x+) / tau`` non-increasing within
    ``lyap_tol * (1 + |value|)``.
    """
    from .kernels import bregman_distance
    from .problems import dg_bregman, objective

    worst = {"inertia": math.inf, "lower": math.inf, "upper": math.inf}
    mono_tau = mono_lbar = True
    lyap_worst = -math.inf
    prev = None
    prev_lyap = None
    for s in steps:
        st = s.state
        dh_y = bregman_distance(k, st.x, s.y)
        worst["inertia"] = min(worst["inertia"], (cfg.delta - cfg.eps) * bregman_distance(k, st.x_prev, st.x)
                               - (1 + s.lunder * st.tau_prev) * dh_y)
        worst["lower"] = min(worst["lower"], dg_bregman(p, st.x, s.y) + s.lunder * dh_y)
        worst["upper"] = min(worst["upper"], s.lbar * bregman_distance(k, s.x_next, s.y)
                             - dg_bregman(p, s.x_next, s.y))
        if prev is not None:
            mono_tau &= s.tau <= prev.tau
            mono_lbar &= s.lbar >= prev.lbar
        psi = objective(p, s.x_next)
        lyap = psi + cfg.delta * bregman_distance(k, st.x, s.x_next) / s.tau
        if prev_lyap is not None:
            lyap_worst = max(lyap_worst, (lyap - prev_lyap) / (1 + abs(prev_lyap)))
        prev, prev_lyap = s, lyap
    worst_slack = min(worst.values())
    passed = worst_slack >= -slack_tol and mono_tau and mono_lbar and lyap_worst <= lyap_tol
    details = (f"inertia={worst['inertia']:.2e} lower={worst['lower']:.2e} upper={worst['upper']:.2e} "
               f"tau_monotone={mono_tau} lbar_monotone={mono_lbar} lyapunov_rise={lyap_worst:.2e}")
    extra = dict(worst, tau_monotone=mono_tau, lbar_monotone=mono_lbar, lyapunov_rise=lyap_worst,
                 iterations=len(steps))
    return CheckReport("cocain-certs", len(steps), max(0.0, -worst_slack), passed, details, extra)


# ---------------------------------------------------------------- suites shared by the CLI and the tests


def _draw_coeff(rng, zero_prob: float = 0.0) -> float:
    if zero_prob and rng.uniform() < zero_prob:
        return 0.0
    return float(10 ** rng.uniform(-6, 6))


def cubic_residual_check(n: int, seed: int, tol: float = 1e-12) -> CheckReport:
    """Residual ``|c1 s r^3 + c2 r - 1|`` of the cubic root over random coefficients."""
    from .prox import solve_cubic_scale

    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for i in range(n):
        s, c1, c2 = _draw_coeff(rng), _draw_coeff(rng, 0.05), _draw_coeff(rng, 0.2)
        if c1 == 0 and c2 == 0:
            c2 = 1.0
        r = solve_cubic_scale(s, c1, c2)
        res = abs(c1 * s * r ** 3 + c2 * r - 1.0)
        if not r >= 0 or res > worst:
            worst, where = (math.inf if not r >= 0 else res), f"s={s:.3g} c1={c1:.3g} c2={c2:.3g}"
    return CheckReport("cubic", n, worst, worst <= tol, where)


def quintic_residual_check(n: int, seed: int, tol: float = 1e-10) -> CheckReport:
    """Residual of the quintic root relative to the sum of the magnitudes of its terms."""
    from .prox import quintic_residual, solve_r1_quintic

    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for i in range(n):
        c1, c2, lam0 = _draw_coeff(rng, 0.05), _draw_coeff(rng, 0.2), _draw_coeff(rng, 0.1)
        p, q = _draw_coeff(rng, 0.1), _draw_coeff(rng)
        if c1 == 0 and c2 == 0:
            c1 = 1.0
        r = solve_r1_quintic(c1, c2, lam0, p, q)
        mag = r + c2 + c1 * (p * p / (r + lam0) ** 2 + q * q / (r * r))
        res = abs(quintic_residual(r, c1, c2, lam0, p, q)) / mag
        if not r > 0 or res > worst:
            worst, where = (math.inf if not r > 0 else res), f"c1={c1:.3g} c2={c2:.3g} lam0={lam0:.3g} p={p:.3g} q={q:.3g}"
    return CheckReport("quintic", n, worst, worst <= tol, where)


def quintic_parity_check(n: int, seed: int, tol: float = 1e-8) -> CheckReport:
    """Mixed L2/L1 instances solved two ways.

    With the augmented kernel and unit step both block coefficients coincide,
    so the cubic route and the quintic route (zero gap) must agree; with the
    plain kernel the quintic route must match the brute-force oracle value.
    Error: ``max |a - b| / (1 + max |a|)`` over the iterate entries and the
    relative objective gap.
    """
    from dataclasses import replace

    from .prox import bpg_prox

    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for i in range(n):
        inp = random_prox_instance("mixed-e1", rng, 0)
        inp = replace(inp, step=1.0)
        x_cubic, x_quint = bpg_prox(inp), bpg_prox(inp, force_quintic=True)
        err = max(float(np.max(np.abs(x_cubic.u - x_quint.u), initial=0.0)),
                  float(np.max(np.abs(x_cubic.z - x_quint.z), initial=0.0)))
        err /= 1 + max(float(np.max(np.abs(x_cubic.u), initial=0.0)), float(np.max(np.abs(x_cubic.z), initial=0.0)))
        plain = replace(inp, kernel=KernelSpec(inp.kernel.c1, inp.kernel.c2))
        a = subproblem_objective(plain, bpg_prox(plain))
        b = subproblem_objective(plain, subproblem_oracle(plain))
        err = max(err, abs(a - b) / (1 + abs(a)))
        if err > worst:
            worst, where = err, f"sample {i}"
    return CheckReport("quintic-parity", n, worst, worst <= tol, where)


def prox_oracle_check(kind: str, n: int, seed: int, tol: float = 1e-8) -> CheckReport:
    """``|obj(bpg_prox) - obj(oracle)| <= tol (1 + |obj|)`` on ``n`` random instances of ``kind``."""
    from .prox import bpg_prox

    rng = np.random.default_rng([seed, PROX_KINDS.index(kind)])
    worst, where = 0.0, ""
    for i in range(n):
        inp = random_prox_instance(kind, rng, i)
        a = subproblem_objective(inp, bpg_prox(inp))
        b = subproblem_objective(inp, subproblem_oracle(inp))
        err = abs(a - b) / (1 + abs(a)) if math.isfinite(a) else math.inf
        if err > worst:
            worst, where = err, f"sample {i}: prox={a:.12g} oracle={b:.12g}"
    return CheckReport(f"prox-{kind}", n, worst, worst <= tol, where)


def matched_problems(seed: int, m: int = 6, n: int = 5, k: int = 3) -> dict[str, ProblemSpec]:
    """One small random problem per data term variant, keyed by variant name."""
    rng = np.random.default_rng(seed)
    return {v: random_problem(v, rng, m, n, k) for v in ("full", "masked", "graph", "sym")}
