"""Pieces shared by the nonlinear solvers."""
import numpy as np

from ..errors import EvaluationFailure, LengthMismatch, ZeroDirection
from .config import Outcome, SolveStats

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


def check_convergence(residual, x, eps_abs, eps_rel):
    """Componentwise test ``|r_i| < |x_i| * eps_rel + eps_abs`` for all ``i``."""
    residual = np.asarray(residual, dtype=float)
    x = np.asarray(x, dtype=float)
    if residual.shape != x.shape:
        raise LengthMismatch(
            f"residual has shape {residual.shape}, iterate {x.shape}")
    return bool(np.all(np.abs(residual) < np.abs(x) * eps_rel + eps_abs))


class ResidualFailure(Exception):
    """Internal signal: the residual could not be evaluated or is not finite."""


class CountedResidual:
    """Wraps a residual function, counting evaluations into ``stats``."""

    def __init__(self, fun, stats):
        self.fun = fun
        self.stats = stats

    def __call__(self, x):
        self.stats.residual_evals += 1
        try:
            r = np.array(self.fun(np.array(x, dtype=float)), dtype=float)
        except EvaluationFailure as exc:
            raise ResidualFailure(str(exc)) from exc
        if not np.all(np.isfinite(r)):
            raise ResidualFailure("non-finite residual")
        return r


def jvp_fd(F, x, v, Fx, h_scale=1.0):
    """Forward-difference Jacobian-vector product ``J(x) v``.

    Costs one evaluation of ``F``.
    """
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        raise ZeroDirection("cannot differentiate along a zero direction")
    h = h_scale * _SQRT_EPS * (1.0 + float(np.linalg.norm(x))) / vnorm
    return (F(x + h * v) - Fx) / h


def lstsq_drop_oldest(A, b, rcond=1e-12):
    """Least-squares solve of ``A c = b`` by QR, dropping the oldest
    (leftmost) columns while ``A`` is numerically rank deficient.

    Returns the coefficients for the kept columns and the number dropped.
    """
    dropped = max(0, A.shape[1] - A.shape[0])
    A = A[:, dropped:]
    while A.shape[1]:
        q, r = np.linalg.qr(A)
        diag = np.abs(np.diag(r))
        if diag.min() > rcond * max(diag.max(), np.finfo(float).tiny):
            return np.linalg.solve(r, q.T @ b), dropped
        A = A[:, 1:]
        dropped += 1
    return np.zeros(0), dropped


class Monitor:
    """Bookkeeping of one solve: counts, history, and the stopping tests."""

    def __init__(self, fun, cfg):
        self.cfg = cfg
        self.stats = SolveStats()
        self.F = CountedResidual(fun, self.stats)
        self.f0 = None

    def record(self, r):
        norm = float(np.linalg.norm(r))
        self.stats.residual_history.append(norm)
        self.stats.final_residual_norm = norm
        if self.f0 is None:
            self.f0 = norm
        return norm

    def converged(self, r, x):
        return check_convergence(r, x, self.cfg.eps_abs, self.cfg.eps_rel)

    def diverging(self, norm):
        return self.f0 is not None and self.f0 > 0 and norm >= self.cfg.div_tol * self.f0

    def finish(self, x, outcome, message=""):
        self.stats.outcome = outcome
        self.stats.message = message
        return np.array(x, dtype=float), self.stats

    def fail_evaluation(self, x, exc):
        return self.finish(x, Outcome.DIVERGED, f"residual evaluation failed: {exc}")
