"""Two-system mass-spring-damper benchmark.

System 1 is a mass ``M_L`` pushed by the force ``f_L(t)`` and tied through
a spring-damper (``K_SD``, ``D_SD``) to a coupling point; it receives the
point's velocity and position and returns the spring-damper force ``f_C``.
System 2 is a damper ``D_D`` that receives ``f_C`` and returns the point's
velocity and position.  Both outputs feed straight through their inputs,
so the coupling is algebraic and the contraction factor of plain
fixed-point iteration is ``sqrt(D_SD / D_D)``.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .coupling import CouplingGraph, SystemLayout, dispatch
from .errors import EmptyTrajectory, NonPositiveParameter, ZeroReferenceNorm
from .orchestrator import CosimRun, gamma_eval, run_cosimulation
from .slave import IntegratorConfig, OdeSpec, SlaveSystem
from .solvers import JfmConfig

__all__ = ["MsdParams", "f_L", "build_s1", "build_s2", "msd_graph", "make_msd_run",
           "monolithic_reference", "spectral_radius", "error_metric",
           "estimate_rho_numeric", "RhoEstimate", "by_design_zero_mask",
           "coupling_mismatch"]


@dataclass(frozen=True)
class MsdParams:
    M_L: float = 1.0
    K_SD: float = 1.0
    D_SD: float = 1.0
    D_D: float = 1.0
    x_L0: float = 0.0
    v_L0: float = 0.0
    x_D0: float = 0.0
    t_init: float = 0.0
    t_end: float = 10.0

    def __post_init__(self):
        for name in ("M_L", "K_SD", "D_SD", "D_D"):
            if not getattr(self, name) > 0:
                raise NonPositiveParameter(f"{name} must be positive")
        if not self.t_end > self.t_init:
            raise ValueError("t_end must be greater than t_init")


_F0 = 5.0 * math.e


def f_L(t):
    """Applied force: a smooth bump starting at 5 N and vanishing from 2 s on."""
    if np.ndim(t) == 0:
        t = float(t)
        return _F0 * math.exp(1.0 / ((0.5 * t) ** 2 - 1.0)) if t < 2.0 else 0.0
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t < 2.0
    out[m] = _F0 * np.exp(1.0 / ((0.5 * t[m]) ** 2 - 1.0))
    return out


def build_s1(p):
    """Mass with spring-damper: states (v_L, x_L), inputs (v_C, x_C), output f_C."""
    M, K, D = p.M_L, p.K_SD, p.D_SD

    def force(x, u):
        return D * (x[0] - u[0]) + K * (x[1] - u[1])

    def rhs(t, x, u):
        return np.array([(f_L(t) - force(x, u)) / M, x[0]])

    def out(t, x, u):
        return np.array([force(x, u)])

    def out_derivative(t, x, dx, u, du):
        return np.array([D * (dx[0] - du[0]) + K * (dx[1] - du[1])])

    return OdeSpec(2, 2, 1, rhs, out, np.array([p.v_L0, p.x_L0]),
                   out_derivative, name="S1")


def build_s2(p):
    """Damper: state x_D, input f_C, outputs (v_C, x_C)."""
    inv = 1.0 / p.D_D

    def rhs(t, x, u):
        return np.array([inv * u[0]])

    def out(t, x, u):
        return np.array([inv * u[0], x[0]])

    def out_derivative(t, x, dx, u, du):
        return np.array([inv * du[0], dx[0]])

    return OdeSpec(1, 1, 2, rhs, out, np.array([p.x_D0]), out_derivative, name="S2")


def msd_graph():
    """Global inputs (v_C, x_C | f_C), outputs (f_C | v_C, x_C)."""
    layout = SystemLayout((2, 1), (1, 2))
    return CouplingGraph(layout, ((1, 0), (2, 1), (0, 2)))


def make_msd_run(p=None, solver=None, dt_ref=0.1, integrator=None, executor=None,
                 t_end=None):
    """A ready-to-run :class:`CosimRun` of the benchmark."""
    p = p or MsdParams()
    cfg = integrator or IntegratorConfig()
    slaves = [SlaveSystem(build_s1(p), p.t_init, cfg), SlaveSystem(build_s2(p), p.t_init, cfg)]
    return CosimRun(msd_graph(), slaves, solver or JfmConfig(), p.t_init,
                    p.t_end if t_end is None else t_end, dt_ref, executor=executor)


def _monolithic_rhs(p):
    M, K, D, DD = p.M_L, p.K_SD, p.D_SD, p.D_D
    shrink = 1.0 + D / DD

    def rhs(t, s):
        v_L, x_L, x_D = s
        f_C = (D * v_L + K * (x_L - x_D)) / shrink
        return [(f_L(t) - f_C) / M, v_L, f_C / DD]

    return rhs


def monolithic_reference(p, grid, rtol=1e-10, atol=1e-12):
    """Uncoupled model with the interface force eliminated, sampled on ``grid``.

    Returns an array of shape ``(len(grid), 3)`` with columns (v_L, x_L, x_D).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyTrajectory("empty sample grid")
    t0 = min(p.t_init, float(grid[0]))
    x0 = [p.v_L0, p.x_L0, p.x_D0]
    if float(grid[-1]) == t0:
        return np.tile(x0, (grid.size, 1))
    sol = solve_ivp(_monolithic_rhs(p), (t0, float(grid[-1])),
                    x0, method="RK45", t_eval=grid,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y.T


def coupling_mismatch(p, t, states):
    """Residual of the interface equations along a monolithic trajectory.

    Recomputes ``f_C`` from both systems' output rows with the eliminated
    force and returns the largest absolute mismatch of (f_C, v_C, x_C).
    """
    states = np.atleast_2d(states)
    v_L, x_L, x_D = states.T
    f_C = (p.D_SD * v_L + p.K_SD * (x_L - x_D)) / (1.0 + p.D_SD / p.D_D)
    v_C, x_C = f_C / p.D_D, x_D
    r1 = p.D_SD * (v_L - v_C) + p.K_SD * (x_L - x_C) - f_C
    # the derivative of x_D must equal the velocity the damper reports
    rhs = _monolithic_rhs(p)
    xdot = np.array([rhs(ti, si)[2] for ti, si in zip(np.atleast_1d(t), states)])
    r2 = xdot - v_C
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def spectral_radius(D_SD, D_D):
    """Contraction factor ``sqrt(D_SD / D_D)`` of the fixed-point map."""
    if not (D_SD > 0 and D_D > 0):
        raise NonPositiveParameter("damper ratings must be positive")
    return math.sqrt(D_SD / D_D)


def error_metric(cosim, reference):
    """Mean over state variables of ``||s - s_ref||_2 / ||s_ref||_2``.

    Both arguments are ``(n_samples, n_vars)`` arrays on the same grid.
    """
    c = np.atleast_2d(np.asarray(cosim, dtype=float))
    r = np.atleast_2d(np.asarray(reference, dtype=float))
    if c.size == 0 or r.size == 0:
        raise EmptyTrajectory("nothing to compare")
    if c.shape != r.shape:
        raise ValueError(f"shapes differ: {c.shape} vs {r.shape}")
    ref_norm = np.linalg.norm(r, axis=0)
    if np.any(ref_norm == 0.0):
        raise ZeroReferenceNorm(
            f"reference variable(s) {np.flatnonzero(ref_norm == 0.0).tolist()} are identically zero")
    return float(np.mean(np.linalg.norm(c - r, axis=0) / ref_norm))


@dataclass
class RhoEstimate:
    rho: float
    jacobian: np.ndarray      # of the fixed-point map, in global stacked order
    eigenvalues: np.ndarray
    zero_mask: np.ndarray     # True where the entry vanishes by construction

    def max_structural_entry(self):
        return float(np.max(np.abs(self.jacobian[self.zero_mask]), initial=0.0))


def by_design_zero_mask(graph):
    """Entries of the fixed-point Jacobian that vanish by construction.

    Row ``j`` is the dispatched output feeding input ``j``; it cannot depend
    on an input owned by a different system than the one producing it.
    Applies alike to the value and derivative blocks.
    """
    layout = graph.layout
    src = graph.source_of_inputs()
    row_sys = np.array([layout.output_owner(int(i)) for i in src])
    col_sys = np.array([layout.input_owner(j) for j in range(layout.n_in)])
    block = row_sys[:, None] != col_sys[None, :]
    return np.block([[block, block], [block, block]])


def estimate_rho_numeric(p=None, tau_size=1e-3, base_point=None, h=1e-6):
    """Spectral radius of the finite-difference Jacobian of the fixed-point map.

    The Jacobian is taken on the first macro-step ``[t_init, t_init + tau_size)``
    of the benchmark, at ``base_point`` (default: the image of the priming
    call).  Columns are central differences of the coupling residual.
    """
    p = p or MsdParams()
    run = make_msd_run(p, dt_ref=tau_size)
    tau = (p.t_init, p.t_init + tau_size)
    n = 2 * run.layout.n_in
    prime = -gamma_eval(run, tau, np.zeros(n))
    x0 = prime if base_point is None else np.asarray(base_point, dtype=float)

    def psi(x):
        return x - gamma_eval(run, tau, x)

    J = np.empty((n, n))
    for j in range(n):
        step = h * max(1.0, abs(x0[j]))
        e = np.zeros(n)
        e[j] = step
        J[:, j] = (psi(x0 + e) - psi(x0 - e)) / (2.0 * step)
    eig = np.linalg.eigvals(J)
    return RhoEstimate(float(np.max(np.abs(eig))), J, eig, by_design_zero_mask(run.graph))
