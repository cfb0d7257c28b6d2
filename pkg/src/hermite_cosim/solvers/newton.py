"""Matrix-free Newton with a backtracking (quadratic/cubic) line search."""
import numpy as np

from .base import Monitor, ResidualFailure, jvp_fd
from .config import Outcome
from .gmres import gmres


def backtrack(F, x, step, fnorm, initslope, p):
    """Backtracking on the merit ``0.5 * ||F||^2`` along ``x + lam * step``.

    ``initslope`` is the directional derivative of the merit at ``lam=0``.
    The first backtrack fits a quadratic, later ones a cubic (when
    ``p.ls_order == 3``); each new ``lam`` is kept in ``[0.1, 0.5]`` times
    the previous one.  Returns ``(lam, x_new, F_new, gnorm)`` or ``None``
    when ``lam`` falls below ``p.min_lambda`` or trials run out.
    """
    snorm = float(np.linalg.norm(step))
    if snorm > p.max_step:
        step = step * (p.max_step / snorm)
        initslope *= p.max_step / snorm
    if initslope > 0.0:
        initslope = -initslope
    if initslope == 0.0:
        initslope = -1.0

    lam = p.damping
    f2 = fnorm * fnorm

    def sufficient(gn, lam):
        return 0.5 * gn * gn <= 0.5 * f2 + lam * p.alpha * initslope

    x_new = x + lam * step
    g = F(x_new)
    gnorm = float(np.linalg.norm(g))
    if sufficient(gnorm, lam):
        return lam, x_new, g, gnorm

    # quadratic fit through the merit at 0 (value, slope) and at lam
    lam_prev, gnorm_prev = lam, gnorm
    lam_t = -initslope / (gnorm * gnorm - f2 - 2.0 * lam * initslope)
    lam = min(lam_t, 0.5 * lam) if lam_t > 0.1 * lam else 0.1 * lam
    for _ in range(p.ls_max_it):
        if lam < p.min_lambda:
            return None
        x_new = x + lam * step
        g = F(x_new)
        gnorm = float(np.linalg.norm(g))
        if sufficient(gnorm, lam):
            return lam, x_new, g, gnorm
        if p.ls_order == 3:
            t1 = 0.5 * (gnorm * gnorm - f2) - lam * initslope
            t2 = 0.5 * (gnorm_prev * gnorm_prev - f2) - lam_prev * initslope
            a = (t1 / lam**2 - t2 / lam_prev**2) / (lam - lam_prev)
            b = (-lam_prev * t1 / lam**2 + lam * t2 / lam_prev**2) / (lam - lam_prev)
            disc = max(b * b - 3.0 * a * initslope, 0.0)
            if a == 0.0:
                lam_t = -initslope / (2.0 * b)
            else:
                lam_t = (-b + np.sqrt(disc)) / (3.0 * a)
        else:
            lam_t = -initslope * lam**2 / (2.0 * (gnorm * gnorm * 0.5 - 0.5 * f2
                                                 - lam * initslope))
        lam_prev, gnorm_prev = lam, gnorm
        if not np.isfinite(lam_t):
            lam_t = 0.5 * lam
        lam = min(max(lam_t, 0.1 * lam), 0.5 * lam)
    return None


def solve_newton_ls(F, x0, cfg):
    """Inexact Newton: GMRES on finite-difference Jacobian products,
    globalized by :func:`backtrack`."""
    p = cfg.newton
    mon = Monitor(F, cfg)
    x = np.array(x0, dtype=float)
    try:
        r = mon.F(x)
        fnorm = mon.record(r)
        while not mon.converged(r, x):
            if mon.stats.iterations >= cfg.max_it:
                return mon.finish(x, Outcome.MAX_ITERATIONS)
            x_base, r_base = x, r

            def matvec(v):
                return jvp_fd(mon.F, x_base, v, r_base, p.fd_h_scale)

            lin = gmres(matvec, -r, restart=p.gmres_restart, rtol=p.gmres_rtol,
                        max_it=p.gmres_max_it)
            if not lin.converged:
                return mon.finish(x, Outcome.LINEAR_SOLVE_FAILURE,
                                  "singular Jacobian" if lin.singular
                                  else "GMRES iteration limit")
            # slope of 0.5*||F||^2 along the step: F . (J step)
            initslope = float(r @ lin.Ax)
            found = backtrack(mon.F, x, lin.x, fnorm, initslope, p)
            mon.stats.iterations += 1
            if found is None:
                return mon.finish(x, Outcome.LINE_SEARCH_FAILURE)
            _, x, r, fnorm = found
            mon.record(r)
    except ResidualFailure as exc:
        return mon.fail_evaluation(x, exc)
    return mon.finish(x, Outcome.CONVERGED)
