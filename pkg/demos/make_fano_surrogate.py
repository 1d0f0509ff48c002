"""Write the synthetic hybrid-cavity spectral density used by the Fano scenario.

A broad plasmon-like mode couples to the emitter; a narrow cavity mode couples
only to the plasmon.  Their interference cuts a Fano window into the broad
peak.  A weak, broad background resonance sits well above the emitter so the
residual handled perturbatively is not trivially zero.
"""

from pathlib import Path

import numpy as np

from splitbath.fitmodel import FewModeDensity, FewModeModel
from splitbath.specdens import LorentzianMode, LorentzianSum, Tabulated, dump_tabulated

OUT = Path(__file__).resolve().parents[1] / "scenarios" / "data" / "fano_surrogate.csv"

hybrid = FewModeModel(
    omega_matrix=np.array([[1.50, 0.03], [0.03, 1.35]]),
    kappa=np.array([0.20, 0.005]),
    g=np.array([0.08, 0.0]),
)
background = LorentzianSum([LorentzianMode(0.05, 2.6, 0.8)])


def surrogate(grid):
    return FewModeDensity(hybrid)(grid) + background(grid)


def main():
    grid = np.round(np.linspace(0.5, 4.0, 7001), 6)
    text = dump_tabulated(
        Tabulated(grid, surrogate(grid)),
        comment="synthetic Fano surrogate for a hybrid plasmon-cavity resonator (eV)",
    )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(text)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
