# %% [markdown]
# Where does the contraction factor come from?  Differentiating the
# fixed-point map numerically over a short step recovers it, together with
# the block of entries that vanish because a system never sees its own
# inputs in another system's outputs.

# %%
import numpy as np

from hermite_cosim.testbench import MsdParams, estimate_rho_numeric, spectral_radius

np.set_printoptions(precision=3, suppress=True, linewidth=100)
est = estimate_rho_numeric(MsdParams(D_D=0.25), tau_size=1e-3)
print("order: (v_C, x_C, f_C) values, then derivatives")
print(est.jacobian)

# %%
print("eigenvalues:", est.eigenvalues)
print("numeric radius:", est.rho, " predicted:", spectral_radius(1.0, 0.25))
print("largest structural-zero entry:", est.max_structural_entry())

# %% [markdown]
# Sweep the damper rating.

# %%
for dd in (4.0, 1.0, 0.25, 0.01):
    est = estimate_rho_numeric(MsdParams(D_D=dd))
    print(f"D_D={dd:<5} numeric={est.rho:8.4f} predicted={spectral_radius(1.0, dd):8.4f}")
