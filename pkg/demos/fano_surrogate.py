# %% [markdown]
# # Tabulated input: a Fano-shaped hybrid resonance
#
# Real nanophotonic densities come from electromagnetic solvers as tables.
# `make_fano_surrogate.py` writes a synthetic one (a broad plasmon with a
# narrow cavity dip, plus a weak background).  The scenario file fits two
# modes around the feature; this script runs the full pipeline through the
# command-line entry point and reads back the summary.

# %%
import json
import sys
from pathlib import Path

from splitbath.cli import main

root = Path(__file__).resolve().parents[1]
scenario = root / "scenarios" / "fano_surrogate.json"
out = root / "out" / "fano_surrogate"

if not (root / "scenarios" / "data" / "fano_surrogate.csv").exists():
    sys.exit("run demos/make_fano_surrogate.py first")

code = main(["pipeline", "--scenario", str(scenario), "--out", str(out), "--quiet"])
print("exit code", code)

# %%
summary = json.loads((out / "summary.json").read_text())
print(json.dumps(summary["markov"], indent=2))
for label, e in summary["epsilon_r"].items():
    print(f"{label:>9s}: max eps_r {e['max']:.3f}, mean {e['mean']:.3f}")
