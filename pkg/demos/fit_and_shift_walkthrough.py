# %% [markdown]
# # From a spectral density to a corrected master equation
#
# This walkthrough takes the ultrastrong-coupling density (an emitter next to
# a cavity that leaks into an Ohmic background), fits one lossy mode to the
# region around the emitter and then treats what the fit misses to second
# order.  Energies are in meV, times in ps.

# %%
import numpy as np

from splitbath import CoupledOhmic, FitOptions, FitWindow, fit, markov_params, residual, validity_beta
from splitbath.fitmodel import eval_jfit, spectral_sum_rule
from splitbath.specdens import integrate

j = CoupledOhmic(g=0.25, omega_c=0.58, kappa=0.1)
omega_e = 0.58

# %% [markdown]
# ## One-mode fit on a window around the emitter
#
# The window is where the model must be accurate; outside it the fit is free
# to be wrong, and the residual picks up the difference.

# %%
report = fit(j, FitWindow(0.2, 1.0, 400), n_modes=1, options=FitOptions(seed=0))
m = report.model
print("fitted mode: omega = %.4f, kappa = %.4f, g = %.4f" % (m.omega_matrix[0, 0], m.kappa[0], m.g[0]))
print("residual norm:", report.residual_norm, " converged:", report.converged)

w = np.linspace(0.0, 1.6, 9)
print("\n   omega     J       J_fit")
for wi, a, b in zip(w, j(w), eval_jfit(m, w)):
    print(f"{wi:8.3f} {a:8.4f} {b:8.4f}")

# %% [markdown]
# The fitted density integrates to the sum of squared couplings, while the
# physical one carries extra weight in its slow Ohmic tail.

# %%
print("sum g^2 of the model:", spectral_sum_rule(m))
print("weight of J on (0, 20 omega_c):", integrate(j, 0.0, 20 * 0.58))

# %% [markdown]
# ## Residual: shifts and signed rates
#
# The residual `J - J_fit` is negative where the Lorentzian overshoots.  Its
# principal-value integral at `+omega_e` gives the level shift, and its value
# at `-omega_e` (where the fit leaks to negative frequencies) gives a
# negative rate for the counterrotating channel.

# %%
mp = markov_params(j, m, omega_e, counter_rotating=True)
for k, v in mp.to_dict().items():
    print(f"{k:>16s} = {v:+.5f} meV")

# %% [markdown]
# ## Is the residual weak enough?
#
# Each side of the emitter is lumped into one reaction mode; its coupling
# over detuning, squared, should be small.

# %%
vr = validity_beta(residual(j, m), omega_e)
print(vr.to_dict())
print("criterion satisfied:", vr.satisfied())
