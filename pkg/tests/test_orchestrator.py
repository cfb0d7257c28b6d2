from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from hermite_cosim.coupling import CouplingGraph, SystemLayout
from hermite_cosim.errors import IntegrationFailure
from hermite_cosim.orchestrator import (Abort, CosimAborted, CosimRun, Finished, MacroStepPlan,
                                        StepStatus, gamma_eval, next_step, run_cosimulation,
                                        scatter_gather)
from hermite_cosim.slave import OdeSpec, SlaveSystem
from hermite_cosim.solvers import JfmConfig
from hermite_cosim.testbench import MsdParams, make_msd_run


# -- step control -------------------------------------------------------------------

def test_rejection_halves():
    plan = next_step((0.0, 0.1), False, 0.1, 10.0)
    assert isinstance(plan, MacroStepPlan)
    assert plan.tau == (0.0, 0.05)
    assert plan.status is StepStatus.RETRIED and plan.halvings == 1


def test_growth_capped_by_reference():
    plan = next_step((0.1, 0.15), True, 0.1, 10.0)
    assert plan.tau[0] == 0.15
    assert plan.tau[1] == pytest.approx(0.215, abs=1e-15)
    plan = next_step((1.0, 1.09), True, 0.1, 10.0)
    assert plan.size == pytest.approx(0.1)


def test_clipped_at_end_and_finished():
    plan = next_step((9.9, 9.95), True, 0.1, 10.0)
    assert plan.tau == (9.95, 10.0)
    assert next_step((9.95, 10.0), True, 0.1, 10.0) == Finished(10.0)


def test_abort_below_min_step():
    out = next_step((1.0, 1.0 + 1e-3), False, 0.1, 10.0, min_step=1e-3)
    assert isinstance(out, Abort) and out.t == 1.0


def test_default_floor():
    size = 0.1 * 2.0 ** -20
    assert isinstance(next_step((0.0, size), False, 0.1, 1.0), Abort)
    assert isinstance(next_step((0.0, 2 * size), False, 0.1, 1.0), MacroStepPlan)


# -- small systems --------------------------------------------------------------------

def feedthrough(gain=1.0):
    """No state, y = gain * u."""
    return OdeSpec(0, 1, 1, lambda t, x, u: np.zeros(0), lambda t, x, u: gain * u,
                   np.zeros(0), lambda t, x, dx, u, du: gain * du)


def test_feedthrough_residual_vanishes_at_fixed_point():
    graph = CouplingGraph(SystemLayout((1,), (1,)), ((0, 0),))
    run = CosimRun(graph, [SlaveSystem(feedthrough())], t_end=1.0, dt_ref=0.5)
    tau = (0.0, 0.5)
    gamma_eval(run, tau, np.zeros(2))
    r = gamma_eval(run, tau, np.array([0.3, 0.7]))
    np.testing.assert_allclose(r, 0.0, atol=1e-15)


def test_decoupled_blocks_are_independent():
    # two systems each feeding itself
    layout = SystemLayout((1, 1), (1, 1))
    graph = CouplingGraph(layout, ((0, 0), (1, 1)))
    run = CosimRun(graph, [SlaveSystem(feedthrough(0.5)), SlaveSystem(feedthrough(2.0))],
                   t_end=1.0, dt_ref=0.5)
    tau = (0.0, 0.5)
    gamma_eval(run, tau, np.zeros(4))
    base = gamma_eval(run, tau, np.array([1.0, 1.0, 0.1, 0.1]))
    moved = gamma_eval(run, tau, np.array([1.0, 5.0, 0.1, 3.0]))
    # entries 0 and 2 belong to system 0, untouched by system 1's inputs
    assert base[0] == moved[0] and base[2] == moved[2]
    assert base[1] != moved[1]


def test_uncoupled_slave_single_pass_per_step():
    spec = OdeSpec(1, 0, 1, lambda t, x, u: np.array([1.0]), lambda t, x, u: x.copy(),
                   np.array([0.0]))
    run = CosimRun(CouplingGraph(SystemLayout((0,), (1,)), ()), [SlaveSystem(spec)],
                   t_end=1.0, dt_ref=0.25)
    res = run_cosimulation(run)
    assert res.completed
    np.testing.assert_allclose(res.t, [0, 0.25, 0.5, 0.75, 1.0])
    assert all(s.residual_evals == 1 and s.iterations == 0 for s in res.steps)
    assert res.states[0][-1, 0] == pytest.approx(1.0)


def test_scatter_slices_of_benchmark():
    run = make_msd_run(MsdParams(D_D=4.0), dt_ref=0.1)
    assert [run.layout.in_slice(k).stop - run.layout.in_slice(k).start for k in range(2)] == [2, 1]
    out = scatter_gather(run, (0.0, 0.1), np.zeros(6))
    assert [len(y) for y, _ in out] == [1, 2]


def test_parallel_equals_sequential():
    x = np.array([0.1, 0.01, 0.4, 0.5, 0.1, 2.0])
    seq = make_msd_run(MsdParams(D_D=0.64), dt_ref=0.1)
    gamma_eval(seq, (0.0, 0.1), np.zeros(6))
    a = gamma_eval(seq, (0.0, 0.1), x)
    with ThreadPoolExecutor(2) as pool:
        par = make_msd_run(MsdParams(D_D=0.64), dt_ref=0.1, executor=pool)
        gamma_eval(par, (0.0, 0.1), np.zeros(6))
        b = gamma_eval(par, (0.0, 0.1), x)
    np.testing.assert_array_equal(a, b)


def test_threaded_run_identical_to_sequential():
    cfg = JfmConfig.from_name("anderson")
    a = run_cosimulation(make_msd_run(MsdParams(D_D=1.0), cfg, dt_ref=0.2, t_end=2.0))
    with ThreadPoolExecutor(2) as pool:
        b = run_cosimulation(make_msd_run(MsdParams(D_D=1.0), cfg, dt_ref=0.2, t_end=2.0,
                                          executor=pool))
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.state_matrix(), b.state_matrix())


# -- forced failures ----------------------------------------------------------------

class Fragile(SlaveSystem):
    """Integrator ``x' = u`` that refuses steps longer than ``limit``."""

    def __init__(self, limit):
        spec = OdeSpec(1, 1, 1, lambda t, x, u: np.array([u[0]]),
                       lambda t, x, u: np.array([x[0]]), np.array([0.0]),
                       lambda t, x, dx, u, du: np.array([dx[0]]))
        super().__init__(spec)
        self.limit = limit

    def integrate(self, tau, inputs):
        if tau[1] - tau[0] > self.limit:
            raise IntegrationFailure("step too long")
        return super().integrate(tau, inputs)


def constant_source(value=1.0):
    return OdeSpec(0, 1, 1, lambda t, x, u: np.zeros(0),
                   lambda t, x, u: np.array([value]), np.zeros(0),
                   lambda t, x, dx, u, du: np.zeros(1))


def fragile_run(limit, t_end=1.0, dt_ref=0.4):
    layout = SystemLayout((1, 1), (1, 1))
    graph = CouplingGraph(layout, ((1, 0), (0, 1)))
    return CosimRun(graph, [Fragile(limit), SlaveSystem(constant_source())],
                    JfmConfig.from_name("fixed-point"), t_end=t_end, dt_ref=dt_ref)


def test_rejections_halve_then_grow():
    res = run_cosimulation(fragile_run(0.15))
    assert res.completed
    sizes = [(round(s.dt, 12), s.accepted) for s in res.steps[:5]]
    assert sizes[:3] == [(0.4, False), (0.2, False), (0.1, True)]
    # success grows by 30 percent, which the fragile slave refuses again
    assert sizes[3] == (0.13, True)
    assert sizes[4] == (round(0.13 * 1.3, 12), False)
    assert res.states[0][-1, 0] == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.diff(res.t) > 0)


def test_abort_reports_time():
    res = run_cosimulation(fragile_run(0.0))
    assert not res.completed and res.abort_time == 0.0
    with pytest.raises(CosimAborted) as info:
        run_cosimulation(fragile_run(0.0), raise_on_abort=True)
    assert info.value.t == 0.0


# -- benchmark runs -------------------------------------------------------------------

@pytest.fixture(scope="module")
def contractant_runs():
    p = MsdParams(D_D=4.0)
    return {m: run_cosimulation(make_msd_run(p, JfmConfig.from_name(m), dt_ref=0.1))
            for m in ("fixed-point", "newtonls")}


def test_contractant_fixed_point_meets_tolerance(contractant_runs):
    res = contractant_runs["fixed-point"]
    assert res.completed and res.t[-1] == 10.0
    cfg = JfmConfig()
    for t_res, x in zip(res.final_residuals, np.hstack([res.u, res.du])[1:]):
        assert np.all(np.abs(t_res) < np.abs(x) * cfg.eps_rel + cfg.eps_abs)


def test_step_protocol_accounting(contractant_runs):
    for res in contractant_runs.values():
        for s in res.steps:
            assert s.residual_evals >= s.iterations + 2


def test_time_grid_monotone_and_bounded(contractant_runs):
    for res in contractant_runs.values():
        dt = np.diff(res.t)
        assert np.all(dt > 0) and np.all(dt <= 0.1 + 1e-12)


def test_trajectories_agree_across_solvers(contractant_runs):
    a, b = contractant_runs["fixed-point"], contractant_runs["newtonls"]
    np.testing.assert_array_equal(a.t, b.t)
    assert np.max(np.abs(a.u - b.u)) < 10 * 1e-4


def test_interfaces_are_c1(contractant_runs):
    polys = contractant_runs["newtonls"].polynomials
    for prev, nxt in zip(polys[:-1], polys[1:]):
        for p, q in zip(prev, nxt):
            t = p.t_b
            assert np.max(np.abs(p.value(t) - q.value(t))) <= 1e-10
            assert np.max(np.abs(p.derivative(t) - q.derivative(t))) <= 1e-10


def test_non_contractant_fixed_point_aborts():
    res = run_cosimulation(make_msd_run(MsdParams(D_D=0.64),
                                        JfmConfig.from_name("fixed-point"), dt_ref=0.1))
    assert res.status == "aborted"
    assert res.abort_time == 0.0
