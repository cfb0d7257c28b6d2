"""Co-simulation of black-box ODE systems with smooth (C1) interface
inputs, with the interface equations solved by fixed-point iteration or
Jacobian-free nonlinear solvers (Newton-GMRES, Anderson, N-GMRES).

Typical use::

    from hermite_cosim import testbench, JfmConfig, run_cosimulation
    run = testbench.make_msd_run(testbench.MsdParams(D_D=0.64),
                                 JfmConfig.from_name("newtonls"), dt_ref=0.1)
    result = run_cosimulation(run)
"""
from . import errors, testbench
from .coupling import (CouplingGraph, GlobalPair, SystemLayout, coupling_residual,
                       dispatch, extract_inputs, rearrange_outputs, validate_graph)
from .orchestrator import (Abort, CosimAborted, CosimResult, CosimRun, Finished,
                           MacroStepPlan, StepRecord, StepStatus, gamma_eval,
                           next_step, run_cosimulation, scatter_gather)
from .polynomials import (BoundaryData, InputPolynomial, StepMode, build_first_step,
                          build_for_mode, build_moving_on, build_replay, select_mode)
from .slave import IntegratorConfig, OdeSpec, SlaveState, SlaveSystem, integrate_extended
from .solvers import JfmConfig, Method, Outcome, SolveStats, check_convergence, solve

__version__ = "0.1.0"
