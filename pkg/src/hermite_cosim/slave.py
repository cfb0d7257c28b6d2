"""Black-box ODE systems driven over macro-steps.

A slave hides its state behind three calls: ``integrate`` over a step with
polynomial inputs (returning outputs and output derivatives at the step
end), ``commit`` and ``rollback``.  Integration never touches the committed
snapshot, so any number of replays of a step start from the same state.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import IntegrationFailure, LengthMismatch, TimeMismatch

__all__ = ["OdeSpec", "SlaveState", "IntegratorConfig", "SlaveSystem",
           "integrate_extended", "commit", "rollback", "output_derivative_fd",
           "rk4_integrate", "rk45_integrate"]


@dataclass(frozen=True)
class OdeSpec:
    """``dx/dt = rhs(t, x, u)``, ``y = out(t, x, u)``.

    ``out_derivative(t, x, dx, u, du)`` returns ``dy/dt``; when absent a
    backward difference is used.
    """
    n_states: int
    n_inputs: int
    n_outputs: int
    rhs: Callable
    out: Callable
    x_init: np.ndarray
    out_derivative: Optional[Callable] = None
    name: str = "system"

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x_init, dtype=float))
        if self.n_states == 0:
            x0 = np.zeros(0)
        if x0.size != self.n_states:
            raise LengthMismatch(
                f"x_init has {x0.size} entries for {self.n_states} states")
        object.__setattr__(self, "x_init", x0)


@dataclass
class SlaveState:
    t: float
    x: np.ndarray
    committed: tuple = field(init=False)

    def __post_init__(self):
        self.x = np.array(self.x, dtype=float)
        self.committed = (self.t, self.x.copy())

    @classmethod
    def initial(cls, spec, t_init):
        return cls(float(t_init), spec.x_init.copy())

    def commit(self):
        self.committed = (self.t, self.x.copy())

    def rollback(self):
        t, x = self.committed
        self.t = t
        self.x = x.copy()


def commit(state):
    state.commit()


def rollback(state):
    state.rollback()


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"
    micro_step: float = 1e-2
    rel_tol: float = 1e-8
    abs_tol: float = 1e-8
    fd_derivative_dt: Optional[float] = None
    max_steps: int = 100_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.micro_step <= 0:
            raise ValueError("micro_step must be positive")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.fd_derivative_dt is not None and self.fd_derivative_dt <= 0:
            raise ValueError("fd_derivative_dt must be positive")


def rk4_integrate(f, t0, t1, x0, h):
    """Classical RK4 with equal steps no larger than ``h``."""
    n = max(1, int(np.ceil((t1 - t0) / h - 1e-12)))
    h = (t1 - t0) / n
    x = np.array(x0, dtype=float)
    for i in range(n):
        t = t0 + i * h
        k1 = f(t, x)
        k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def rk45_integrate(f, t0, t1, x0, h0, rtol, atol, max_steps=100_000):
    """Adaptive Dormand-Prince integration of ``dx/dt = f(t, x)`` to ``t1``.

    The initial step is ``min(h0, t1 - t0)`` on every call, so the result
    depends only on the arguments.

    Raises
    ------
    IntegrationFailure
        On step-size underflow, non-finite values or too many steps.
    """
    span = t1 - t0
    t = t0
    x = np.array(x0, dtype=float)
    h = min(h0, span)
    k1 = f(t, x)
    for _ in range(max_steps):
        remaining = t1 - t
        last = h >= remaining * (1.0 - 1e-12)
        if last:
            h = remaining
        k = [k1]
        for i in range(1, 7):
            a = _A[i]
            dx = a[0] * k[0]
            for j in range(1, i):
                dx = dx + a[j] * k[j]
            k.append(f(t + _C[i] * h, x + h * dx))
        x_new = x + h * (_A[6][0] * k[0] + _A[6][2] * k[2] + _A[6][3] * k[3]
                         + _A[6][4] * k[4] + _A[6][5] * k[5])
        err = h * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3] + _E[4] * k[4]
                   + _E[5] * k[5] + _E[6] * k[6])
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not np.isfinite(err_norm):
            raise IntegrationFailure(f"non-finite state at t={t}")
        if err_norm <= 1.0:
            t = t1 if last else t + h
            x = x_new
            k1 = k[6]
            if last:
                return x
            factor = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm ** -0.2)
            h = h * max(factor, 0.2)
        else:
            h = h * max(0.2, 0.9 * err_norm ** -0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise IntegrationFailure(f"step size underflow at t={t}")
    raise IntegrationFailure(f"more than {max_steps} micro-steps in [{t0}, {t1})")


def output_derivative_fd(spec, t, x, dx, u, du, window):
    """Backward-difference estimate of ``dy/dt`` along the current trend."""
    y = np.asarray(spec.out(t, x, u), dtype=float)
    y_back = np.asarray(spec.out(t - window, x - window * dx, u - window * du),
                        dtype=float)
    return (y - y_back) / window


def integrate_extended(spec, state, tau, inputs, cfg):
    """Advance ``state`` across ``tau`` driven by the polynomial ``inputs``.

    Returns the outputs and their time-derivatives at the step end.  The
    committed snapshot is left alone.
    """
    t_a, t_b = float(tau[0]), float(tau[1])
    if state.t != t_a:
        raise TimeMismatch(f"slave at t={state.t}, step starts at {t_a}")
    if inputs.n_channels != spec.n_inputs:
        raise LengthMismatch(
            f"{inputs.n_channels} input channels for {spec.n_inputs} inputs")

    def f(t, x):
        return np.asarray(spec.rhs(t, x, inputs.value(t)), dtype=float)

    if spec.n_states == 0:
        x_end = state.x.copy()
    elif cfg.method == "rk4":
        x_end = rk4_integrate(f, t_a, t_b, state.x, cfg.micro_step)
        if not np.all(np.isfinite(x_end)):
            raise IntegrationFailure(f"non-finite state at t={t_b}")
    else:
        x_end = rk45_integrate(f, t_a, t_b, state.x, cfg.micro_step,
                               cfg.rel_tol, cfg.abs_tol, cfg.max_steps)
    state.t = t_b
    state.x = x_end

    u = inputs.value(t_b)
    du = inputs.derivative(t_b)
    y = np.asarray(spec.out(t_b, x_end, u), dtype=float)
    dx = f(t_b, x_end) if spec.n_states else x_end
    if spec.out_derivative is not None:
        dy = np.asarray(spec.out_derivative(t_b, x_end, dx, u, du), dtype=float)
    else:
        window = cfg.fd_derivative_dt or 1e-6 * (t_b - t_a)
        dy = output_derivative_fd(spec, t_b, x_end, dx, u, du, window)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(dy))):
        raise IntegrationFailure(f"non-finite outputs at t={t_b}")
    return y, dy


class SlaveSystem:
    """An :class:`OdeSpec` together with its hidden state and integrator."""

    def __init__(self, spec, t_init=0.0, cfg=None):
        self.spec = spec
        self.cfg = cfg or IntegratorConfig()
        self.state = SlaveState.initial(spec, t_init)

    @property
    def t(self):
        return self.state.t

    @property
    def x(self):
        return self.state.x

    def initial_outputs(self):
        """Outputs at the current time with all inputs at zero."""
        return np.asarray(self.spec.out(self.state.t, self.state.x,
                                        np.zeros(self.spec.n_inputs)), dtype=float)

    def integrate(self, tau, inputs):
        return integrate_extended(self.spec, self.state, tau, inputs, self.cfg)

    def commit(self):
        self.state.commit()

    def rollback(self):
        self.state.rollback()
