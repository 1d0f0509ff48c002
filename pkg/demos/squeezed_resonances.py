# %% [markdown]
# # Crowded resonances: when one mode is not enough
#
# Halving the spacing of the five Lorentzians pushes the neighbours of the
# resonant peak close enough that treating them perturbatively fails.  Giving
# the fit three modes over a wider window brings them back into the exact
# part of the model.  The three-mode fit takes about a minute.

# %%
import numpy as np

from splitbath import (
    EmitterParams, FitOptions, FitWindow, LorentzianMode, LorentzianSum,
    build_hs, discretize, exact_rwa, fit, hbar, markov_params, propagate, relative_error,
    residual, validity_beta,
)

omega_e = 1.5135
j = LorentzianSum([LorentzianMode(0.1, omega_e + 0.3 * (i - 1), 0.05) for i in range(5)])
em = EmitterParams(omega_e)
h = hbar("eV", "fs")
t = np.linspace(0.0, 200.0, 1001)
exact = exact_rwa(em, discretize(j, (-4.0, 9.0), 4000), t, hbar=h)

# %%
for n_modes, window in ((1, (omega_e - 0.15, omega_e + 0.15)), (3, (omega_e - 0.45, omega_e + 0.45))):
    rep = fit(j, FitWindow(*window, 600), n_modes, FitOptions(seed=0))
    mp = markov_params(j, rep.model, omega_e)
    vr = validity_beta(residual(j, rep.model), omega_e)
    tr = propagate(build_hs(em, rep.model, n_max=1), mp, rep.model, em, t, hbar=h)
    err = relative_error(tr, exact)
    print(f"{n_modes} mode(s): shift {mp.delta_mod:+.4f} eV, beta -/+ {vr.beta_minus:.3g}/{vr.beta_plus:.3g},"
          f" max eps_r {err.max_unflagged:.3f}, mean eps_r {err.mean_unflagged:.3f}")
