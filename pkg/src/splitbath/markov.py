"""Perturbative (Markovian) corrections from the residual Delta J = J - J_fit.

Sign conventions: the Casimir-Polder Hamiltonians are ``H_CP = -delta_mod
sigma+ sigma-`` and ``H~_CP = -delta_mod_tilde sigma+ sigma-`` with

    delta_mod       =  P int dJ_s(w) / (w - w_e) dw
    delta_mod_tilde = -P int dJ_s(w) / (w + w_e) dw

over the whole real line, and the rates are ``gamma_mod = 2 pi dJ(w_e)``,
``gamma_mod_tilde = 2 pi dJ(-w_e)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _quad
from .errors import InvalidInputError, NumericError
from .fitmodel import FewModeDensity, FewModeModel
from .specdens import (
    Difference,
    FreeSpace,
    SpectralDensity,
    Tabulated,
    integrate,
)

__all__ = [
    "MarkovParams",
    "ValidityReport",
    "residual",
    "principal_value",
    "delta_mod",
    "gamma_mod",
    "tilde_params",
    "markov_params",
    "validity_beta",
    "lorentzian_hilbert",
    "jfit_hilbert",
]


@dataclass(frozen=True)
class MarkovParams:
    delta_mod: float = 0.0
    gamma_mod: float = 0.0
    delta_mod_tilde: float = 0.0
    gamma_mod_tilde: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in asdict(self).values()):
            raise NumericError(f"non-finite Markov parameters: {self}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovParams":
        return cls(**{k: float(d[k]) for k in ("delta_mod", "gamma_mod", "delta_mod_tilde", "gamma_mod_tilde")})


@dataclass(frozen=True)
class ValidityReport:
    """Reaction-mode check of the perturbative treatment on each side of omega_e.

    ``beta_*`` is NaN (and ``degenerate_*`` is True) when the net coupling of
    that region is not positive, so no effective mode exists.  An exactly
    vanishing region reports ``beta = 0`` and is also flagged degenerate.
    """

    beta_minus: float
    beta_plus: float
    g2_minus: float
    g2_plus: float
    omega_minus: float
    omega_plus: float
    bounds: tuple[float, float]
    degenerate_minus: bool = False
    degenerate_plus: bool = False
    #: the same ratio built from |Delta J| (always defined), for flagged regions
    beta_abs_minus: float = math.nan
    beta_abs_plus: float = math.nan

    def satisfied(self, threshold: float = 0.1) -> bool:
        """True if each side's beta (or, where flagged, its |Delta J| analogue) is below ``threshold``."""
        sides = (
            (self.beta_minus, self.degenerate_minus, self.beta_abs_minus),
            (self.beta_plus, self.degenerate_plus, self.beta_abs_plus),
        )
        return all((b_abs if deg else b) < threshold for b, deg, b_abs in sides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


@dataclass(frozen=True, eq=False)
class _Magnitude(SpectralDensity):
    inner: SpectralDensity

    def _eval(self, w):
        return np.abs(self.inner._eval(w))

    def breakpoints(self):
        # |f| of a piecewise-linear leaf kinks at every grid node
        nodes = [leaf.grid for _, leaf in self.inner.terms() if isinstance(leaf, Tabulated)]
        return tuple(self.inner.breakpoints()) + tuple(float(x) for g in nodes for x in g)

    def support(self):
        return self.inner.support()

    def scale(self):
        return self.inner.scale()


def residual(physical: SpectralDensity, model: FewModeModel) -> Difference:
    """``physical - J_fit(model)``; signed."""
    return Difference(physical, FewModeDensity(model))


# -- principal-value integrals ---------------------------------------------


def _pv_tabulated(j: Tabulated, x: float) -> float:
    """Exact PV of a piecewise-linear density against ``1/(w - x)``."""
    w0, w1 = j.grid[:-1], j.grid[1:]
    f0, f1 = j.values[:-1], j.values[1:]
    slope = (f1 - f0) / (w1 - w0)
    fx = f0 + slope * (x - w0)  # each segment's line continued to x
    with np.errstate(divide="ignore"):
        l1 = np.log(np.abs(w1 - x))
        l0 = np.log(np.abs(w0 - x))
    # log|0| terms from x sitting on an interior node cancel between neighbours
    # (both neighbours share f(x)); drop them.
    l1 = np.where(np.isinf(l1), 0.0, l1)
    l0 = np.where(np.isinf(l0), 0.0, l0)
    on_edge = (x == j.grid[0] and j.values[0] != 0) or (x == j.grid[-1] and j.values[-1] != 0)
    if on_edge:
        raise NumericError("principal value diverges: pole on a discontinuous grid edge")
    return float(np.sum(slope * (w1 - w0) + fx * (l1 - l0)))


def _pv_analytic(j: SpectralDensity, x: float, rtol: float) -> float:
    """Singularity subtraction on a core interval plus regular tails.

    On ``(a, b)`` containing ``x``:

        P int f/(w-x) = int (f(w) - f(x))/(w - x) dw + f(x) ln|(b - x)/(x - a)|

    and outside the core ``f(w)/(w - x)`` is regular and integrated to
    +-infinity directly.
    """
    lo, hi = j.support()
    scale = max(j.scale(), abs(x), 1e-300)
    pts = [p for p in j.breakpoints() if lo <= p <= hi]
    a = min(pts + [x]) - 50 * scale
    b = max(pts + [x]) + 50 * scale
    a, b = max(a, lo), min(b, hi)
    atol = 1e-14 * scale
    total = 0.0
    if a < x < b:
        fx = j(x)

        def reg(w):
            d = w - x
            return 0.0 if d == 0 else (j(w) - fx) / d

        val, _ = _quad.adaptive(reg, a, b, points=pts + [x], rtol=rtol, atol=atol)
        total += val + fx * math.log((b - x) / (x - a))
    elif a < b:
        # pole outside the support: ordinary integral (a or b may coincide with x
        # only if f vanishes there, e.g. a theta-function edge)
        if j(x) != 0 and x in (a, b):
            raise NumericError("principal value diverges at a support edge")
        val, _ = _quad.adaptive(lambda w: j(w) / (w - x) if w != x else 0.0, a, b, points=pts, rtol=rtol, atol=atol)
        total += val
    kern = lambda w: j(w) / (w - x)  # noqa: E731
    if b < hi:
        total += _quad.adaptive(kern, b, hi, rtol=rtol, atol=atol)[0]
    if lo < a:
        total += _quad.adaptive(kern, lo, a, rtol=rtol, atol=atol)[0]
    return total


def principal_value(j: SpectralDensity, x: float, *, rtol: float = 1e-10) -> float:
    """``P int_R j(w) / (w - x) dw`` by linearity over the leaves of ``j``."""
    if not math.isfinite(x):
        raise InvalidInputError("pole position must be finite")
    total = 0.0
    for coef, leaf in j.terms():
        if coef == 0:
            continue
        if isinstance(leaf, FreeSpace):
            raise InvalidInputError(
                "the free-space part diverges in the shift integral; pass the scattered part only"
            )
        if isinstance(leaf, Tabulated):
            total += coef * _pv_tabulated(leaf, x)
        else:
            total += coef * _pv_analytic(leaf, x, rtol)
    return total


def delta_mod(delta_j_s: SpectralDensity, omega_e: float, *, rtol: float = 1e-10) -> float:
    """Casimir-Polder shift ``P int dJ_s(w)/(w - omega_e) dw`` (enters as ``-delta_mod sigma+sigma-``)."""
    return principal_value(delta_j_s, omega_e, rtol=rtol)


def gamma_mod(delta_j: SpectralDensity, omega_e: float) -> float:
    """Residual decay rate ``2 pi dJ(omega_e)``; returned with its sign."""
    return 2 * math.pi * float(delta_j(omega_e))


def tilde_params(delta_j_s: SpectralDensity, delta_j: SpectralDensity, omega_e: float, *, rtol: float = 1e-10):
    """Counter-rotating corrections ``(delta_mod_tilde, gamma_mod_tilde)``.

    ``gamma_mod_tilde = 2 pi dJ(-omega_e)`` is negative whenever the physical
    density vanishes at negative frequencies (anti-Lindblad rate).
    """
    dt = -principal_value(delta_j_s, -omega_e, rtol=rtol)
    return dt, 2 * math.pi * float(delta_j(-omega_e))


def markov_params(
    physical: SpectralDensity,
    model: FewModeModel,
    omega_e: float,
    scattered: SpectralDensity | None = None,
    *,
    counter_rotating: bool = True,
) -> MarkovParams:
    """All four corrections for a fitted model.

    ``scattered`` is the part of ``physical`` without the free-space term;
    by default ``physical`` is assumed to be scattered-only already.
    """
    dj = residual(physical, model)
    dj_s = dj if scattered is None else residual(scattered, model)
    dm = delta_mod(dj_s, omega_e)
    gm = gamma_mod(dj, omega_e)
    if not counter_rotating:
        return MarkovParams(dm, gm)
    dt, gt = tilde_params(dj_s, dj, omega_e)
    return MarkovParams(dm, gm, dt, gt)


def validity_beta(delta_j: SpectralDensity, omega_e: float, bounds: tuple[float, float] | None = None) -> ValidityReport:
    """Reaction-mode coupling ratios ``beta_pm = g_pm^2 / (omega_pm - omega_e)^2``.

    ``g_pm^2`` and ``omega_pm`` are the weight and centroid of ``delta_j`` on
    ``(a, omega_e)`` and ``(omega_e, b)``; ``bounds`` defaults to ``(0, 3 omega_e)``.
    """
    a, b = bounds if bounds is not None else (0.0, 3.0 * omega_e)
    if not a < omega_e < b:
        raise InvalidInputError(f"need a < omega_e < b, got {a}, {omega_e}, {b}")
    out = {}
    for side, (lo, hi) in (("minus", (a, omega_e)), ("plus", (omega_e, b))):
        g2 = integrate(delta_j, lo, hi)
        if g2 > 0:
            wc = integrate(delta_j, lo, hi, moment=1) / g2
            beta = g2 / (wc - omega_e) ** 2 if wc != omega_e else math.inf
            degenerate = False
        else:
            wc = math.nan
            beta = 0.0 if g2 == 0 else math.nan
            degenerate = True
        mag = _Magnitude(delta_j)
        g2_abs = integrate(mag, lo, hi, rtol=1e-8)
        if g2_abs > 0:
            wa = integrate(mag, lo, hi, rtol=1e-8, moment=1) / g2_abs
            beta_abs = g2_abs / (wa - omega_e) ** 2 if wa != omega_e else math.inf
        else:
            beta_abs = 0.0
        out[side] = (beta, g2, wc, degenerate, beta_abs)
    return ValidityReport(
        beta_minus=out["minus"][0],
        beta_plus=out["plus"][0],
        g2_minus=out["minus"][1],
        g2_plus=out["plus"][1],
        omega_minus=out["minus"][2],
        omega_plus=out["plus"][2],
        bounds=(a, b),
        degenerate_minus=out["minus"][3],
        degenerate_plus=out["plus"][3],
        beta_abs_minus=out["minus"][4],
        beta_abs_plus=out["plus"][4],
    )


# -- closed forms (contour integration), used as independent checks -------------


def lorentzian_hilbert(g: float, omega0: float, kappa: float, x: float) -> float:
    """``P int L(w)/(w - x) dw`` for a Lorentzian of weight ``g^2``.

    Closing the contour in the upper half plane, where
    ``g^2/(omega0 - i kappa/2 - w)`` is analytic, gives
    ``g^2 (omega0 - x) / ((omega0 - x)^2 + (kappa/2)^2)``.
    """
    d = omega0 - x
    return g**2 * d / (d**2 + 0.25 * kappa**2)


def jfit_hilbert(model: FewModeModel, x: float) -> float:
    """``P int J_fit(w)/(w - x) dw = Re[g (H - x)^-1 g]`` for any few-mode model."""
    if model.n_modes == 0:
        return 0.0
    a = model.effective_hamiltonian - x * np.eye(model.n_modes)
    return float(np.real(model.g @ np.linalg.solve(a, model.g.astype(complex))))
