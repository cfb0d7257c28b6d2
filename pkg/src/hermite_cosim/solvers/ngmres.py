"""Nonlinear GMRES (Oosterlee-Washio) without a nonlinear preconditioner.

Each iteration takes a candidate ``x_M = x - F(x)``, forms the combination
``x_A`` of ``x_M`` and the stored iterates whose linearized residual is
smallest, and then either selects between the two by difference criteria
or line-searches on the segment joining them.
"""
import numpy as np

from .base import Monitor, ResidualFailure, lstsq_drop_oldest
from .config import Outcome


def _combine(x_M, F_M, xs, fs):
    if not xs:
        return x_M
    X = np.array(xs).T - x_M[:, None]
    D = np.array(fs).T - F_M[:, None]
    beta, dropped = lstsq_drop_oldest(D, -F_M)
    return x_M + X[:, dropped:] @ beta


def _segment_search(F, x_M, F_M, fM, x_A, F_A, fA, p):
    """Quadratic-fit search on ``||F||^2`` along ``x_M + lam (x_A - x_M)``.

    Samples ``lam`` at 0, lam/2 and lam (starting from the damping), moves
    ``lam`` to the minimizer of the fitted parabola, ``ls_max_it`` times.
    Returns the final point and its residual.
    """
    d = x_A - x_M
    cache = {0.0: (F_M, fM * fM)}
    if p.ls_damping == 1.0:
        cache[1.0] = (F_A, fA * fA)

    def merit(lam):
        if lam not in cache:
            r = F(x_M + lam * d)
            cache[lam] = (r, float(r @ r))
        return cache[lam][1]

    lam_old, lam = 0.0, p.ls_damping
    for _ in range(p.ls_max_it):
        f_old, f_mid, f_new = merit(lam_old), merit(0.5 * (lam + lam_old)), merit(lam)
        delta = lam - lam_old
        slope = (3.0 * f_new - 4.0 * f_mid + f_old) / delta
        curv = (f_new - 2.0 * f_mid + f_old) / (0.5 * delta) ** 2
        if curv > 0.0 and np.isfinite(slope):
            lam_new = lam - slope / curv
        else:
            lam_new = min((lam_old, 0.5 * (lam + lam_old), lam), key=merit)
        if lam_new < p.ls_min_lambda:
            lam_new = 0.5 * (lam + lam_old)
        lam_new = min(lam_new, p.ls_max_step)
        lam_old, lam = lam, lam_new
    merit(lam)
    r = cache[lam][0]
    return x_M + lam * d, r


def solve_ngmres(F, x0, cfg):
    p = cfg.ngmres
    mon = Monitor(F, cfg)
    x = np.array(x0, dtype=float)
    try:
        r = mon.F(x)
        fnorm = mon.record(r)
        xs, fs = [x], [r]
        fmin = fnorm
        restart_count = 0
        while not mon.converged(r, x):
            if mon.stats.iterations >= cfg.max_it:
                return mon.finish(x, Outcome.MAX_ITERATIONS)
            x_M = x - r
            F_M = mon.F(x_M)
            fM = float(np.linalg.norm(F_M))
            x_A = _combine(x_M, F_M, xs, fs)
            F_A = mon.F(x_A)
            fA = float(np.linalg.norm(F_A))
            fmin = min(fmin, fM)

            dnorm = float(np.linalg.norm(x_A - x_M))
            dmin = min(float(np.linalg.norm(x_A - xi)) for xi in xs)
            if p.select_type == "linesearch":
                x, r = _segment_search(mon.F, x_M, F_M, fM, x_A, F_A, fA, p)
            elif fA < p.gammaA * fmin and (p.epsilonB * dnorm < dmin
                                           or fA < p.deltaB * fmin):
                x, r = x_A, F_A
            else:
                x, r = x_M, F_M
            fnorm = mon.record(r)
            mon.stats.iterations += 1
            if mon.diverging(fnorm):
                return mon.finish(x, Outcome.DIVERGED, "residual growth")

            restart = False
            if p.restart_type == "difference":
                restart = ((p.epsilonB * dnorm > dmin and fA > p.deltaB * fmin)
                           or fA > p.gammaC * fmin)
                restart_count = restart_count + 1 if restart else 0
                restart = p.restart_it > 0 and restart_count >= p.restart_it
            elif p.restart_type == "periodic":
                restart = mon.stats.iterations % max(p.restart_it, 1) == 0
            if restart:
                restart_count = 0
                xs, fs = [x_M], [F_M]
            else:
                xs.append(x)
                fs.append(r)
                xs, fs = xs[-p.m:], fs[-p.m:]
            fmin = min(fmin, fnorm)
    except ResidualFailure as exc:
        return mon.fail_evaluation(x, exc)
    return mon.finish(x, Outcome.CONVERGED)
