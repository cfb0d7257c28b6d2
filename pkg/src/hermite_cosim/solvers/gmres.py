"""Restarted GMRES on an abstract matrix-vector product."""
from typing import NamedTuple

import numpy as np


class GmresResult(NamedTuple):
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    Ax: np.ndarray      # operator applied to x, from the Arnoldi relation
    singular: bool


def gmres(matvec, rhs, restart=30, rtol=1e-4, max_it=100, x0=None):
    """Solve ``A x = rhs`` with restarted GMRES(``restart``).

    ``matvec`` is called once per inner iteration and never for residual
    recomputation: ``A x`` is tracked through the Arnoldi relation
    ``A V_k = V_{k+1} H_k``, which keeps the cost of a matrix-free operator
    at one application per Krylov vector.

    Stops when ``||rhs - A x|| <= rtol * ||rhs||`` or after ``max_it``
    inner iterations.  A breakdown with an unresolved residual flags the
    operator as singular.
    """
    b = np.asarray(rhs, dtype=float)
    n = b.size
    bnorm = float(np.linalg.norm(b))
    if not np.isfinite(bnorm):
        raise ValueError("right-hand side is not finite")
    if x0 is None:
        x = np.zeros(n)
        Ax = np.zeros(n)
    else:
        x = np.array(x0, dtype=float)
        Ax = np.asarray(matvec(x), dtype=float)
    target = rtol * bnorm
    r = b - Ax
    rnorm = float(np.linalg.norm(r))
    total = 0
    if rnorm <= target or bnorm == 0.0:
        return GmresResult(x, True, 0, rnorm, Ax, False)

    m = max(1, min(restart, n))
    while total < max_it:
        V = np.zeros((n, m + 1))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = rnorm
        V[:, 0] = r / rnorm
        k = 0
        breakdown = False
        while k < m and total < max_it:
            w = np.asarray(matvec(V[:, k]), dtype=float)
            total += 1
            for i in range(k + 1):  # modified Gram-Schmidt
                H[i, k] = w @ V[:, i]
                w = w - H[i, k] * V[:, i]
            H[k + 1, k] = np.linalg.norm(w)
            breakdown = H[k + 1, k] <= 1e-14 * max(1.0, np.abs(H[: k + 1, k]).max())
            if not breakdown:
                V[:, k + 1] = w / H[k + 1, k]
            for i in range(k):
                hik = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = hik
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                cs[k], sn[k] = 1.0, 0.0
            else:
                cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k += 1
            if abs(g[k]) <= target or breakdown:
                break
        R = np.triu(H[:k, :k])
        if np.any(np.abs(np.diag(R)) <= 1e-14 * max(1.0, np.abs(R).max())):
            return GmresResult(x, False, total, rnorm, Ax, True)
        y = np.linalg.solve(R, g[:k])
        dx = V[:, :k] @ y
        x = x + dx
        # A V_k y = b_cycle - r_new; the residual after the cycle is known
        # from the rotated least-squares system.
        r_new = _cycle_residual(V, g, cs, sn, k)
        Ax = Ax + (r - r_new)
        r = r_new
        rnorm = abs(g[k])
        if rnorm <= target:
            return GmresResult(x, True, total, rnorm, Ax, False)
        if breakdown:
            return GmresResult(x, False, total, rnorm, Ax, True)
    return GmresResult(x, False, total, rnorm, Ax, False)


def _cycle_residual(V, g, cs, sn, k):
    """Residual vector ``V_{k+1} Q_k^T (0, ..., 0, g_k)`` of a GMRES cycle."""
    e = np.zeros(k + 1)
    e[k] = g[k]
    for i in range(k - 1, -1, -1):
        a, b = e[i], e[i + 1]
        e[i] = cs[i] * a - sn[i] * b
        e[i + 1] = sn[i] * a + cs[i] * b
    return V[:, : k + 1] @ e
