import numpy as np

from .base import Monitor, ResidualFailure
from .config import Outcome


def solve_fixed_point(F, x0, cfg):
    """Plain fixed-point iteration ``x <- x - F(x)``.

    One residual evaluation per iteration plus the initial one.  Reports
    ``DIVERGED`` once the residual norm has grown by ``cfg.div_tol``.
    """
    mon = Monitor(F, cfg)
    x = np.array(x0, dtype=float)
    try:
        r = mon.F(x)
        norm = mon.record(r)
        while not mon.converged(r, x):
            if mon.stats.iterations >= cfg.max_it:
                return mon.finish(x, Outcome.MAX_ITERATIONS)
            x = x - r
            mon.stats.iterations += 1
            r = mon.F(x)
            norm = mon.record(r)
            if mon.diverging(norm):
                return mon.finish(x, Outcome.DIVERGED, "residual growth")
    except ResidualFailure as exc:
        return mon.fail_evaluation(x, exc)
    return mon.finish(x, Outcome.CONVERGED)
