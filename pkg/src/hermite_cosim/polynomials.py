"""Per-step input polynomials (degree <= 3) and the choice between them.

Every builder works on all channels of one system at once: values and
derivatives are arrays with one entry per input channel.  Coefficients are
stored in the monomial basis of ``s = t - t_a``, lowest degree first.
"""
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateStep, LengthMismatch, NonContiguousStep

__all__ = ["InputPolynomial", "StepMode", "BoundaryData", "build_moving_on",
           "build_replay", "build_first_step", "select_mode", "build_for_mode"]


class StepMode(enum.Enum):
    MOVING_ON = "moving-on"
    REPLAY = "replay"
    SHRINK_RETRY = "shrink-retry"
    FIRST_STEP = "first-step"
    FIRST_STEP_REPLAY = "first-step-replay"

    @property
    def imposes_right_end(self):
        """Whether the solver iterate constrains the step end."""
        return self in (StepMode.REPLAY, StepMode.FIRST_STEP_REPLAY)


@dataclass(frozen=True)
class InputPolynomial:
    t_a: float
    t_b: float
    coeffs: np.ndarray  # shape (n_channels, 4)

    def __post_init__(self):
        if not self.t_b > self.t_a:
            raise DegenerateStep(f"empty step [{self.t_a}, {self.t_b})")
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[1] != 4:
            raise ValueError("coeffs must have shape (n_channels, 4)")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_channels(self):
        return self.coeffs.shape[0]

    @property
    def degree(self):
        nz = np.flatnonzero(np.any(self.coeffs != 0.0, axis=0))
        return int(nz[-1]) if nz.size else 0

    def value(self, t):
        s = t - self.t_a
        c = self.coeffs
        return c[:, 0] + s * (c[:, 1] + s * (c[:, 2] + s * c[:, 3]))

    def derivative(self, t):
        s = t - self.t_a
        c = self.coeffs
        return c[:, 1] + s * (2.0 * c[:, 2] + 3.0 * s * c[:, 3])

    @classmethod
    def constant(cls, t_a, t_b, values):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        coeffs = np.zeros((values.size, 4))
        coeffs[:, 0] = values
        return cls(t_a, t_b, coeffs)


@dataclass(frozen=True)
class BoundaryData:
    """Input values/derivatives at the step start, carried over from the
    last committed polynomial.  ``left_derivative`` is ``None`` on the
    first step, where no derivative is imposed."""
    left_value: np.ndarray
    left_derivative: Optional[np.ndarray] = None


def _step(tau):
    t_a, t_b = float(tau[0]), float(tau[1])
    if not t_b > t_a:
        raise DegenerateStep(f"empty step [{t_a}, {t_b})")
    return t_a, t_b, t_b - t_a


def _vec(x, n=None, what="vector"):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if n is not None and x.size != n:
        raise LengthMismatch(f"{what} has length {x.size}, expected {n}")
    return x


def build_moving_on(left, tau):
    """Quadratic matching value and slope at the step start and returning
    to the start value at the step end."""
    t_a, t_b, h = _step(tau)
    v = _vec(left.left_value)
    if left.left_derivative is None:
        return InputPolynomial.constant(t_a, t_b, v)
    d = _vec(left.left_derivative, v.size, "left derivative")
    coeffs = np.zeros((v.size, 4))
    coeffs[:, 0] = v
    coeffs[:, 1] = d
    coeffs[:, 2] = -d / h
    return InputPolynomial(t_a, t_b, coeffs)


def build_replay(left, right_value, right_derivative, tau):
    """Cubic Hermite interpolant of value and slope at both step ends."""
    t_a, t_b, h = _step(tau)
    v0 = _vec(left.left_value)
    d0 = _vec(left.left_derivative, v0.size, "left derivative")
    v1 = _vec(right_value, v0.size, "right value")
    d1 = _vec(right_derivative, v0.size, "right derivative")
    slope = (v1 - v0) / h
    coeffs = np.empty((v0.size, 4))
    coeffs[:, 0] = v0
    coeffs[:, 1] = d0
    coeffs[:, 2] = (3.0 * slope - 2.0 * d0 - d1) / h
    coeffs[:, 3] = (d0 + d1 - 2.0 * slope) / (h * h)
    return InputPolynomial(t_a, t_b, coeffs)


def build_first_step(u_init, tau, right_value=None, right_derivative=None):
    """Input polynomial on the very first step.

    Without right-end data this is the constant ``u_init``; otherwise the
    quadratic through ``u_init`` at the start that matches value and slope
    at the end (no slope is imposed at the initial time).
    """
    t_a, t_b, h = _step(tau)
    v0 = _vec(u_init)
    if right_value is None:
        return InputPolynomial.constant(t_a, t_b, v0)
    v1 = _vec(right_value, v0.size, "right value")
    d1 = _vec(right_derivative, v0.size, "right derivative")
    delta = v1 - v0
    c2 = (d1 * h - delta) / (h * h)
    coeffs = np.zeros((v0.size, 4))
    coeffs[:, 0] = v0
    coeffs[:, 1] = d1 - 2.0 * c2 * h
    coeffs[:, 2] = c2
    return InputPolynomial(t_a, t_b, coeffs)


def select_mode(prev_tau, tau, t_init):
    """Classify a call on ``tau`` given the step of the previous call.

    ``prev_tau`` is ``None`` before the first call.  A retry with a
    different end on the first step behaves like the first call itself.
    """
    start, end = tau
    first = start == t_init
    if prev_tau is None:
        if not first:
            raise NonContiguousStep(
                f"first call must start at t_init={t_init}, got {start}")
        return StepMode.FIRST_STEP
    p_start, p_end = prev_tau
    if start == p_end:
        return StepMode.MOVING_ON
    if start == p_start:
        if end == p_end:
            return StepMode.FIRST_STEP_REPLAY if first else StepMode.REPLAY
        return StepMode.FIRST_STEP if first else StepMode.SHRINK_RETRY
    raise NonContiguousStep(
        f"step [{start}, {end}) neither continues nor restarts [{p_start}, {p_end})")


def build_for_mode(mode, left, tau, right_value=None, right_derivative=None):
    """Polynomial for one system according to ``mode``.

    On the first step ``left.left_value`` holds the initial inputs.
    """
    if mode is StepMode.FIRST_STEP:
        return build_first_step(left.left_value, tau)
    if mode is StepMode.FIRST_STEP_REPLAY:
        return build_first_step(left.left_value, tau, right_value, right_derivative)
    if mode is StepMode.REPLAY:
        return build_replay(left, right_value, right_derivative, tau)
    return build_moving_on(left, tau)
