# %% [markdown]
# A soft damper (D_D = 0.64) flips the contraction factor above one.  Fixed
# point iteration now diverges on every attempt, the step is halved until it
# hits the floor, and the run aborts.  The Jacobian-free solvers do not care.

# %%
from hermite_cosim import JfmConfig, run_cosimulation
from hermite_cosim.testbench import (MsdParams, error_metric, make_msd_run,
                                     monolithic_reference, spectral_radius)

p = MsdParams(D_D=0.64)
print("contraction factor:", spectral_radius(p.D_SD, p.D_D))

# %%
fp = run_cosimulation(make_msd_run(p, JfmConfig.from_name("fixed-point"), dt_ref=0.1))
print("fixed-point:", fp.status, "at t =", fp.abort_time,
      "after", len(fp.steps), "rejected attempts")
print("attempted step sizes:", [f"{s.dt:.2e}" for s in fp.steps[:6]], "...")

# %%
for method in ("newtonls", "anderson", "ngmres-ls"):
    res = run_cosimulation(make_msd_run(p, JfmConfig.from_name(method), dt_ref=0.1))
    err = error_metric(res.state_matrix(), monolithic_reference(p, res.t))
    print(f"{method:<10} {res.status:<10} iterations={res.total_iterations:<5} error={err:.2e}")

# %% [markdown]
# Solver parameters can be changed per run with dotted keys.

# %%
cfg = JfmConfig.from_name("anderson", **{"anderson.m": 2, "anderson.beta": 0.5})
res = run_cosimulation(make_msd_run(p, cfg, dt_ref=0.1))
print("anderson m=2 beta=0.5:", res.status, "iterations:", res.total_iterations)
