"""Non-alternating Bregman proximal gradient methods for matrix factorization."""

from .kernels import KernelSpec, bregman_distance, kernel_for_problem, kernel_grad, kernel_value
from .matrix import FactorPair, MaskedMatrix, fro_inner, fro_norm, gemm
from .optimizers import (
    BpgConfig,
    CoCaInConfig,
    PalmConfig,
    Trace,
    run_bpg,
    run_bpg_wb,
    run_cocain,
    run_ipalm,
    run_palm,
)
from .problems import (
    BlockReg,
    Full,
    GraphReg,
    Masked,
    ProblemSpec,
    SymPenalty,
    dg_bregman,
    nonsmooth_value,
    objective,
    smooth_grad,
    smooth_value,
)
from .prox import ProxInput, bpg_prox, solve_cubic_scale, solve_r1_quintic

__version__ = "0.1.0"

__all__ = [
    "BlockReg", "BpgConfig", "CoCaInConfig", "FactorPair", "Full", "GraphReg", "KernelSpec",
    "Masked", "MaskedMatrix", "PalmConfig", "ProblemSpec", "ProxInput", "SymPenalty", "Trace",
    "bpg_prox", "bregman_distance", "dg_bregman", "fro_inner", "fro_norm", "gemm",
    "kernel_for_problem", "kernel_grad", "kernel_value", "nonsmooth_value", "objective",
    "run_bpg", "run_bpg_wb", "run_cocain", "run_ipalm", "run_palm", "smooth_grad",
    "smooth_value", "solve_cubic_scale", "solve_r1_quintic",
]
