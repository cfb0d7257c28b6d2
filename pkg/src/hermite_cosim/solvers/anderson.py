import numpy as np

from .base import Monitor, ResidualFailure, lstsq_drop_oldest
from .config import Outcome


def solve_anderson(F, x0, cfg):
    """Anderson mixing on the fixed-point map ``x - F(x)``.

    With depth ``mk = min(m, k)`` the next iterate is the mixed update
    ``sum_j theta_j (x_j - beta F_j)`` whose weights (summing to one)
    minimize ``||sum_j theta_j F_j||``.  It is computed in the equivalent
    difference form, with rank-deficient histories handled by dropping
    the oldest columns.
    """
    p = cfg.anderson
    mon = Monitor(F, cfg)
    x = np.array(x0, dtype=float)
    xs, rs = [], []
    try:
        r = mon.F(x)
        norm = mon.record(r)
        while not mon.converged(r, x):
            if mon.stats.iterations >= cfg.max_it:
                return mon.finish(x, Outcome.MAX_ITERATIONS)
            it = mon.stats.iterations
            if p.restart_type == "periodic" and it and it % p.restart == 0:
                xs, rs = [], []
            xs.append(x)
            rs.append(r)
            xs, rs = xs[-(p.m + 1):], rs[-(p.m + 1):]
            x_next = x - p.beta * r
            if len(xs) > 1:
                dX = np.diff(np.array(xs).T, axis=1)
                dF = np.diff(np.array(rs).T, axis=1)
                coef, dropped = lstsq_drop_oldest(dF, r)
                if dropped:
                    xs, rs = xs[dropped:], rs[dropped:]
                    dX, dF = dX[:, dropped:], dF[:, dropped:]
                x_next = x_next - (dX - p.beta * dF) @ coef
            x = x_next
            mon.stats.iterations += 1
            r = mon.F(x)
            norm = mon.record(r)
            if mon.diverging(norm):
                return mon.finish(x, Outcome.DIVERGED, "residual growth")
    except ResidualFailure as exc:
        return mon.fail_evaluation(x, exc)
    return mon.finish(x, Outcome.CONVERGED)
