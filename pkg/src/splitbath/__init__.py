"""Few-mode fits plus Markovian residual corrections for a two-level emitter.

A structured spectral density ``J`` is split into a part reproduced by a few
lossy, coupled modes (treated exactly in a master equation) and a residual
handled to second order (energy shifts and signed decay rates).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    InvalidInputError,
    NumericError,
    ParseError,
    PoleError,
    ResourceError,
    SplitBathError,
    StructuralError,
)
from .fitmodel import FewModeDensity, FewModeModel, FitOptions, FitReport, FitWindow, eval_jfit, fit
from .lindblad import EmitterParams, Trajectory, build_hs, expectation, liouvillian, propagate, steady_state
from .markov import MarkovParams, ValidityReport, markov_params, principal_value, residual, validity_beta
from .oracle import DiscretizedBath, discretize, exact_rwa, exact_truncated, relative_error
from .specdens import (
    CoupledOhmic,
    FreeSpace,
    LorentzianMode,
    LorentzianSum,
    SpectralDensity,
    Tabulated,
    evaluate,
    integrate,
    load_tabulated,
)
from .units import hbar
