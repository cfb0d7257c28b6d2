"""Jacobian-free nonlinear solvers on an opaque residual ``F: R^n -> R^n``.

Every solver has the signature ``solve(F, x0, cfg) -> (x, SolveStats)``
and counts each call of ``F`` in ``SolveStats.residual_evals``.
"""
from .anderson import solve_anderson
from .base import check_convergence, jvp_fd
from .config import (METHOD_NAMES, AndersonParams, JfmConfig, Method,
                     NewtonParams, NgmresParams, Outcome, SolveStats)
from .fixed_point import solve_fixed_point
from .gmres import gmres
from .newton import solve_newton_ls
from .ngmres import solve_ngmres

__all__ = ["solve", "check_convergence", "jvp_fd", "gmres", "solve_fixed_point",
           "solve_newton_ls", "solve_anderson", "solve_ngmres", "JfmConfig",
           "Method", "Outcome", "SolveStats", "NewtonParams", "AndersonParams",
           "NgmresParams", "METHOD_NAMES"]

_SOLVERS = {
    Method.FIXED_POINT: solve_fixed_point,
    Method.NEWTON_LS: solve_newton_ls,
    Method.ANDERSON: solve_anderson,
    Method.NGMRES: solve_ngmres,
    Method.NGMRES_LS: solve_ngmres,
}


def solve(F, x0, cfg):
    """Run the solver selected by ``cfg.method``."""
    return _SOLVERS[cfg.method](F, x0, cfg)
