"""The macro-step loop.

On every step ``tau = [t_N, t_N+1)`` the orchestrator

1. makes a priming call in which every system integrates with its
   moving-on polynomial (nothing imposed at the step end),
2. hands the coupling residual ``gamma(u, du)`` to the configured solver,
   starting from the dispatched outputs of the priming call,
3. on convergence replays the step once more at the solution so that every
   system sits in the state matching it, then commits all systems,
4. grows the next step by 30% (capped by ``dt_ref``) or, on failure,
   retries the same step with half its size.
"""
import enum
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .coupling import (GlobalPair, coupling_residual, dispatch, extract_inputs,
                       rearrange_outputs, validate_graph)
from .errors import CosimError, EvaluationFailure, LengthMismatch, SlaveFailure
from .polynomials import BoundaryData, build_for_mode, select_mode
from .solvers import JfmConfig, Outcome, SolveStats, check_convergence, solve

__all__ = ["CosimRun", "CosimResult", "StepRecord", "MacroStepPlan", "StepStatus",
           "Finished", "Abort", "next_step", "gamma_eval", "scatter_gather",
           "run_cosimulation", "CosimAborted"]


class StepStatus(enum.Enum):
    FRESH = "fresh"
    RETRIED = "retried"


@dataclass(frozen=True)
class MacroStepPlan:
    tau: tuple
    dt_ref: float
    status: StepStatus = StepStatus.FRESH
    halvings: int = 0
    min_step: Optional[float] = None

    @property
    def size(self):
        return self.tau[1] - self.tau[0]


@dataclass(frozen=True)
class Finished:
    t: float


@dataclass(frozen=True)
class Abort:
    t: float
    attempted_size: float


class CosimAborted(CosimError):
    def __init__(self, t, result=None):
        self.t = t
        self.result = result
        super().__init__(f"step size underflow at t={t}")


def _snap(end, t_end, scale):
    return t_end if t_end - end <= 1e-10 * scale else end


def next_step(tau_old, converged, dt_ref, t_end, min_step=None, halvings=0):
    """Next macro-step after the solver exited on ``tau_old``.

    Returns a :class:`MacroStepPlan`, :class:`Finished` when the converged
    step reached ``t_end``, or :class:`Abort` when halving would go below
    ``min_step`` (default ``dt_ref * 2**-20``).
    """
    start, end = float(tau_old[0]), float(tau_old[1])
    size = end - start
    if min_step is None:
        min_step = dt_ref * 2.0 ** -20
    if converged:
        if end >= t_end:
            return Finished(end)
        new_size = min(dt_ref, 1.3 * size)
        new_end = _snap(min(t_end, end + new_size), t_end, dt_ref)
        return MacroStepPlan((end, new_end), dt_ref, StepStatus.FRESH, 0, min_step)
    half = 0.5 * size
    if half < min_step:
        return Abort(start, half)
    return MacroStepPlan((start, start + half), dt_ref, StepStatus.RETRIED,
                         halvings + 1, min_step)


@dataclass
class StepRecord:
    N: int
    t_start: float
    dt: float
    iterations: int
    residual_evals: int
    outcome: str
    accepted: bool


@dataclass
class CosimResult:
    status: str                       # "completed" or "aborted"
    t: np.ndarray                     # committed times, t_init first
    u: np.ndarray                     # (n_samples, n_in) input values
    du: np.ndarray
    y: np.ndarray                     # (n_samples, n_out) output values
    dy: np.ndarray
    states: List[np.ndarray]          # per system, (n_samples, n_states_k)
    polynomials: list                 # per committed step, list over systems
    steps: List[StepRecord]
    final_residuals: list             # per committed step, gamma at the solution
    abort_time: Optional[float] = None

    @property
    def completed(self):
        return self.status == "completed"

    @property
    def total_iterations(self):
        return sum(s.iterations for s in self.steps)

    @property
    def total_residual_evals(self):
        return sum(s.residual_evals for s in self.steps)

    @property
    def iterations_per_step(self):
        """Solver iterations of each accepted step."""
        return [s.iterations for s in self.steps if s.accepted]

    def state_matrix(self):
        return np.hstack(self.states) if self.states else np.zeros((len(self.t), 0))


class CosimRun:
    """Systems, their connections, the solver and the time window of a run.

    ``executor`` (any object with a ``map`` method, e.g. a thread pool)
    integrates the systems of one residual evaluation concurrently; by
    default they run one after the other.  Results are identical either
    way since systems share no state.
    """

    def __init__(self, graph, slaves, solver=None, t_init=0.0, t_end=1.0,
                 dt_ref=0.1, min_step=None, u_init=None, executor=None):
        validate_graph(graph)
        layout = graph.layout
        if len(slaves) != layout.n_sys:
            raise LengthMismatch(f"{len(slaves)} systems for a layout of {layout.n_sys}")
        for k, s in enumerate(slaves):
            if (s.spec.n_inputs, s.spec.n_outputs) != (layout.in_sizes[k], layout.out_sizes[k]):
                raise LengthMismatch(f"system {k} does not match the layout")
        if not t_end > t_init:
            raise ValueError("t_end must be greater than t_init")
        if dt_ref <= 0:
            raise ValueError("dt_ref must be positive")
        self.graph = graph
        self.slaves = list(slaves)
        self.solver = solver or JfmConfig()
        self.t_init = float(t_init)
        self.t_end = float(t_end)
        self.dt_ref = float(dt_ref)
        self.min_step = dt_ref * 2.0 ** -20 if min_step is None else float(min_step)
        self.executor = executor
        for s in self.slaves:
            s.state.t = self.t_init
            s.state.commit()
        if u_init is None:
            y0 = rearrange_outputs(layout, [(s.initial_outputs(), np.zeros(layout.out_sizes[k]))
                                            for k, s in enumerate(self.slaves)])
            u_init = dispatch(graph, y0).values
        self.u_init = np.asarray(u_init, dtype=float)
        if self.u_init.size != layout.n_in:
            raise LengthMismatch("u_init does not match the number of inputs")
        self.left = [BoundaryData(self.u_init[layout.in_slice(k)].copy())
                     for k in range(layout.n_sys)]
        self.prev_tau = [None] * layout.n_sys
        self.last_polys = [None] * layout.n_sys
        self.gamma_calls = 0
        self.last_outputs = None

    @property
    def layout(self):
        return self.graph.layout

    def modes(self, tau):
        return [select_mode(p, tau, self.t_init) for p in self.prev_tau]

    def commit(self, polys):
        for k, (s, poly) in enumerate(zip(self.slaves, polys)):
            s.commit()
            t_b = poly.t_b
            self.left[k] = BoundaryData(poly.value(t_b), poly.derivative(t_b))


def _integrate_one(job):
    slave, tau, poly = job
    slave.rollback()
    return slave.integrate(tau, poly)


def scatter_gather(run, tau, x, modes=None):
    """Integrate every system over ``tau`` with inputs built from ``x``.

    ``x`` is the stacked ``(u; du)`` of step-end values; each system only
    receives its own slice.  Returns the per-system ``(y_k, dy_k)`` in
    system order.
    """
    layout = run.layout
    glob = GlobalPair.unstack(x)
    if glob.values.size != layout.n_in:
        raise LengthMismatch(f"iterate has {x.size} entries, expected {2 * layout.n_in}")
    if modes is None:
        modes = run.modes(tau)
    polys = []
    for k in range(layout.n_sys):
        local = extract_inputs(layout, k, glob)
        mode = modes[k]
        right = (local.values, local.derivatives) if mode.imposes_right_end else (None, None)
        polys.append(build_for_mode(mode, run.left[k], tau, *right))
    jobs = [(s, tau, p) for s, p in zip(run.slaves, polys)]
    for k in range(layout.n_sys):
        run.prev_tau[k] = tuple(tau)
    run.last_polys = polys
    run.gamma_calls += 1
    mapper = run.executor.map if run.executor is not None else map
    results = []
    it = iter(mapper(_integrate_one, jobs))
    for k in range(layout.n_sys):
        try:
            results.append(next(it))
        except EvaluationFailure as exc:
            raise SlaveFailure(k, exc) from exc
    return results


def gamma_eval(run, tau, x, modes=None):
    """Coupling residual at step end: ``x`` minus the dispatched outputs."""
    outs = rearrange_outputs(run.layout, scatter_gather(run, tau, x, modes))
    run.last_outputs = outs
    return coupling_residual(run.graph, GlobalPair.unstack(x), outs)


def run_cosimulation(run, raise_on_abort=False, callback=None):
    """March the run from ``t_init`` to ``t_end``.

    ``callback(record)`` is called with each :class:`StepRecord`.
    """
    layout = run.layout
    cfg = run.solver
    n_in = layout.n_in
    zero = np.zeros(2 * n_in)

    y0 = [(s.initial_outputs(), np.zeros(layout.out_sizes[k]))
          for k, s in enumerate(run.slaves)]
    out0 = rearrange_outputs(layout, y0)
    ts = [run.t_init]
    us, dus = [run.u_init.copy()], [np.zeros(n_in)]
    ys, dys = [out0.values], [out0.derivatives]
    states = [[s.x.copy()] for s in run.slaves]
    polys_hist, final_res, steps = [], [], []

    plan = next_step((run.t_init, run.t_init), True, run.dt_ref, run.t_end, run.min_step)
    if isinstance(plan, MacroStepPlan):  # first step has the full reference size
        plan = MacroStepPlan((run.t_init, _snap(min(run.t_end, run.t_init + run.dt_ref),
                                                run.t_end, run.dt_ref)),
                             run.dt_ref, StepStatus.FRESH, 0, run.min_step)
    N = 0
    abort_time = None
    while isinstance(plan, MacroStepPlan):
        tau = plan.tau
        stats = SolveStats()
        calls_before = run.gamma_calls
        x_sol = None
        try:
            if n_in == 0:
                # nothing to couple: a single pass per step
                res = gamma_eval(run, tau, zero)
                x_sol = zero
                stats.outcome = Outcome.CONVERGED
            else:
                prime = -gamma_eval(run, tau, zero)
                x_sol, stats = solve(lambda x: gamma_eval(run, tau, x), prime, cfg)
            if stats.converged and n_in:
                res = gamma_eval(run, tau, x_sol)
                # guard against a solver accepting a point the final replay rejects
                if not check_convergence(res, x_sol, cfg.eps_abs, cfg.eps_rel):
                    stats.outcome = Outcome.DIVERGED
                    stats.message = "final replay does not satisfy the coupling tolerance"
        except SlaveFailure as exc:
            stats.outcome = Outcome.DIVERGED
            stats.message = str(exc)
        converged = stats.converged
        rec = StepRecord(N, tau[0], tau[1] - tau[0], stats.iterations,
                         run.gamma_calls - calls_before, stats.outcome.value, converged)
        steps.append(rec)
        if callback is not None:
            callback(rec)
        if converged:
            polys = list(run.last_polys)
            run.commit(polys)
            glob = GlobalPair.unstack(x_sol)
            ts.append(tau[1])
            us.append(glob.values.copy())
            dus.append(glob.derivatives.copy())
            ys.append(run.last_outputs.values.copy())
            dys.append(run.last_outputs.derivatives.copy())
            for k, s in enumerate(run.slaves):
                states[k].append(s.x.copy())
            polys_hist.append(polys)
            final_res.append(res)
            N += 1
        plan = next_step(tau, converged, run.dt_ref, run.t_end, run.min_step,
                         getattr(plan, "halvings", 0))
    if isinstance(plan, Abort):
        abort_time = plan.t
        for s in run.slaves:
            s.rollback()

    n_out = layout.n_out
    result = CosimResult(
        status="aborted" if abort_time is not None else "completed",
        t=np.array(ts),
        u=np.array(us).reshape(len(ts), n_in),
        du=np.array(dus).reshape(len(ts), n_in),
        y=np.array(ys).reshape(len(ts), n_out),
        dy=np.array(dys).reshape(len(ts), n_out),
        states=[np.array(st).reshape(len(ts), -1) for st in states],
        polynomials=polys_hist,
        steps=steps,
        final_residuals=final_res,
        abort_time=abort_time,
    )
    if abort_time is not None and raise_on_abort:
        raise CosimAborted(abort_time, result)
    return result

