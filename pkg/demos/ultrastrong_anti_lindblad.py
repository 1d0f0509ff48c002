# %% [markdown]
# # Ultrastrong coupling and a negative decay rate
#
# Without the rotating-wave approximation the fitted Lorentzian has a tail at
# negative frequencies that the physical density does not.  Left alone, it
# pumps the emitter.  The residual there is negative, so the correction adds
# a dissipator with a negative rate that removes the spurious pumping.

# %%
import numpy as np

from splitbath import (
    CoupledOhmic, EmitterParams, FitOptions, FitWindow,
    build_hs, expectation, fit, hbar, liouvillian, markov_params, propagate, steady_state,
)

j = CoupledOhmic(0.25, 0.58, 0.1)
em = EmitterParams(0.58)
h = hbar("meV", "ps")
rep = fit(j, FitWindow(0.2, 1.0, 400), 1, FitOptions(seed=0))
mp = markov_params(j, rep.model, em.omega_e, counter_rotating=True)
print(mp)

# %%
hs = build_hs(em, rep.model, rwa=False, n_max=5)
t = np.linspace(0.0, 150.0, 301)
occ = np.diag(hs.space.emitter_occupation)
for eq in ("rwa_eq", "usc_eq"):
    tr = propagate(hs, mp, rep.model, em, t, equation=eq, hbar=h, record_min_eig=True)
    rho = steady_state(liouvillian(hs, mp, rep.model, eq, h, em))
    print(f"\n{eq}: steady population {expectation(rho, occ).real:.4f},"
          f" max trace drift {tr.trace_drift.max():.1e}, lowest eigenvalue {tr.min_eigenvalue.min():+.1e}")
    for w in tr.warnings:
        print("  warning:", w)
    for tk in (0, 10, 30, 60, 90, 150):
        k = np.searchsorted(t, tk)
        print(f"  t = {tk:3d} ps  p = {tr.emitter_population[k]:.4f}")

# %% [markdown]
# The negative rate makes the map not completely positive, so the lowest
# eigenvalue of the state is worth watching; trace is still conserved to
# rounding, and the corrected steady population sits well below the
# uncorrected one.
