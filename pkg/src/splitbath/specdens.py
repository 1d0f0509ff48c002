"""Spectral densities J(omega): evaluation, ingestion and integration.

Every spectral density is an immutable callable.  Frequencies and J share one
energy unit (eV or meV) chosen per scenario; J has units of energy so that
``2*pi*J(w)`` is a rate in energy units.
"""

from __future__ import annotations

import abc
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy import constants as _c

from . import _quad
from .errors import InvalidInputError, ParseError

__all__ = [
    "LorentzianMode",
    "SpectralDensity",
    "LorentzianSum",
    "CoupledOhmic",
    "Tabulated",
    "FreeSpace",
    "Difference",
    "Sum",
    "evaluate",
    "free_space_j",
    "load_tabulated",
    "dump_tabulated",
    "integrate",
]


class SpectralDensity(abc.ABC):
    """Base class of all J(omega) variants.

    Subclasses implement ``_eval`` on float arrays.  Calling an instance
    validates the input and returns a float for scalar input or an array
    otherwise.
    """

    #: False only for signed combinations (residuals).
    physical = True

    @abc.abstractmethod
    def _eval(self, w: np.ndarray) -> np.ndarray: ...

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("spectral density evaluated at a non-finite frequency")
        out = self._eval(w)
        return float(out) if np.ndim(out) == 0 else out

    def breakpoints(self) -> tuple[float, ...]:
        """Frequencies where the integrand has features (peaks, kinks)."""
        return ()

    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def scale(self) -> float:
        """Characteristic frequency scale, used for padding and tolerances."""
        pts = [abs(p) for p in self.breakpoints()]
        return max(pts) if pts else 1.0

    def terms(self) -> Iterator[tuple[float, "SpectralDensity"]]:
        """Flatten linear combinations into ``(coefficient, leaf)`` pairs."""
        yield 1.0, self

    def __add__(self, other: "SpectralDensity") -> "Sum":
        return Sum((self, other))

    def __sub__(self, other: "SpectralDensity") -> "Difference":
        return Difference(self, other)


@dataclass(frozen=True)
class LorentzianMode:
    g: float
    omega0: float
    kappa: float

    def __post_init__(self):
        if not (self.g >= 0):
            raise InvalidInputError(f"Lorentzian coupling must be >= 0, got {self.g}")
        if not (self.kappa > 0):
            raise InvalidInputError(f"Lorentzian width must be > 0, got {self.kappa}")
        if not math.isfinite(self.omega0):
            raise InvalidInputError("Lorentzian center must be finite")


@dataclass(frozen=True)
class LorentzianSum(SpectralDensity):
    """``sum_i (g_i^2/pi) (kappa_i/2) / ((w - w_i)^2 + (kappa_i/2)^2)``."""

    modes: tuple[LorentzianMode, ...]

    def __init__(self, modes: Iterable[LorentzianMode]):
        object.__setattr__(self, "modes", tuple(modes))

    def _eval(self, w):
        out = np.zeros_like(w)
        for m in self.modes:
            hw = 0.5 * m.kappa
            out = out + (m.g**2 / np.pi) * hw / ((w - m.omega0) ** 2 + hw**2)
        return out

    def breakpoints(self):
        pts = []
        for m in self.modes:
            pts += [m.omega0 + s * m.kappa for s in (-10, -1, 0, 1, 10)]
        return tuple(pts)

    def scale(self):
        if not self.modes:
            return 1.0
        return max(max(abs(m.omega0), m.kappa) for m in self.modes)


@dataclass(frozen=True)
class CoupledOhmic(SpectralDensity):
    """Single oscillator (frequency ``omega_c``) damped by an Ohmic bath.

    ``J(w) = theta(w) (2 g^2/pi) kappa omega_c w / ((w^2 - omega_c^2)^2 + kappa^2 w^2)``

    Near resonance this reduces to a Lorentzian of weight ``g^2`` and width
    ``kappa``, so ``g`` is the emitter-oscillator coupling.
    """

    g: float
    omega_c: float
    kappa: float

    def __post_init__(self):
        if self.g < 0 or self.omega_c <= 0 or self.kappa <= 0:
            raise InvalidInputError("CoupledOhmic needs g >= 0, omega_c > 0, kappa > 0")

    def _eval(self, w):
        wp = np.where(w > 0, w, 0.0)
        num = (2 * self.g**2 / np.pi) * self.kappa * self.omega_c * wp
        den = (wp**2 - self.omega_c**2) ** 2 + (self.kappa * wp) ** 2
        return np.where(w > 0, num / den, 0.0)

    def breakpoints(self):
        wc, k = self.omega_c, self.kappa
        return (0.0, wc - k, wc, wc + k, wc + 10 * k)

    def support(self):
        return (0.0, math.inf)

    def scale(self):
        return max(self.omega_c, self.kappa)


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralDensity):
    """Piecewise-linear interpolation of sampled values, zero outside the grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise InvalidInputError("grid and values must be 1-D arrays of equal length")
        if grid.size < 2:
            raise InvalidInputError("a tabulated spectral density needs at least 2 points")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise InvalidInputError("tabulated data must be finite")
        bad = np.nonzero(np.diff(grid) <= 0)[0]
        if bad.size:
            raise InvalidInputError(f"grid not strictly ascending at index {bad[0] + 1}")
        neg = np.nonzero(values < 0)[0]
        if neg.size:
            raise InvalidInputError(f"negative spectral density at index {neg[0]}")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def _eval(self, w):
        return np.interp(w, self.grid, self.values, left=0.0, right=0.0)

    def breakpoints(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def scale(self):
        return float(np.max(np.abs(self.grid)))


def free_space_j(d: float, omega, energy_unit: str = "eV"):
    """Free-space spectral density ``d^2 w^3 / (6 pi^2 eps0 c^3)``.

    Parameters
    ----------
    d : float
        Transition dipole moment in units of e*nm.
    omega : float or array
        Transition energy in ``energy_unit`` (must be >= 0).

    Returns
    -------
    J in ``energy_unit``.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("free-space spectral density needs finite omega >= 0")
    out = _free_space_prefactor(d, energy_unit) * w**3
    return float(out) if out.ndim == 0 else out


def _free_space_prefactor(d, energy_unit):
    unit_j = _c.e * {"eV": 1.0, "meV": 1e-3}[energy_unit]
    d_si = d * _c.e * 1e-9
    # J[J] = d^2 (E/hbar)^3 / (6 pi^2 eps0 c^3), then expressed in energy_unit
    return d_si**2 * (unit_j / _c.hbar) ** 3 / (6 * np.pi**2 * _c.epsilon_0 * _c.c**3) / unit_j


@dataclass(frozen=True)
class FreeSpace(SpectralDensity):
    """Free-space J_0 for dipole ``d`` (e*nm); zero at negative frequency."""

    d: float
    energy_unit: str = "eV"
    prefactor: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.energy_unit not in ("eV", "meV"):
            raise InvalidInputError(f"unknown energy unit {self.energy_unit!r}")
        object.__setattr__(self, "prefactor", _free_space_prefactor(self.d, self.energy_unit))

    def _eval(self, w):
        return np.where(w > 0, self.prefactor * np.where(w > 0, w, 0.0) ** 3, 0.0)

    def breakpoints(self):
        return (0.0,)

    def support(self):
        return (0.0, math.inf)


@dataclass(frozen=True)
class Difference(SpectralDensity):
    """``left - right``; the canonical residual representation (may be negative)."""

    left: SpectralDensity
    right: SpectralDensity
    physical = False

    def _eval(self, w):
        return np.asarray(self.left._eval(w)) - np.asarray(self.right._eval(w))

    def breakpoints(self):
        return self.left.breakpoints() + self.right.breakpoints()

    def support(self):
        a, b = self.left.support(), self.right.support()
        return (min(a[0], b[0]), max(a[1], b[1]))

    def scale(self):
        return max(self.left.scale(), self.right.scale())

    def terms(self):
        yield from self.left.terms()
        for c, leaf in self.right.terms():
            yield -c, leaf


@dataclass(frozen=True)
class Sum(SpectralDensity):
    parts: tuple[SpectralDensity, ...]

    def __init__(self, parts: Iterable[SpectralDensity]):
        object.__setattr__(self, "parts", tuple(parts))

    @property
    def physical(self):
        return all(p.physical for p in self.parts)

    def _eval(self, w):
        out = np.zeros_like(w)
        for p in self.parts:
            out = out + p._eval(w)
        return out

    def breakpoints(self):
        return tuple(x for p in self.parts for x in p.breakpoints())

    def support(self):
        if not self.parts:
            return (0.0, 0.0)
        s = [p.support() for p in self.parts]
        return (min(a for a, _ in s), max(b for _, b in s))

    def scale(self):
        return max((p.scale() for p in self.parts), default=1.0)

    def terms(self):
        for p in self.parts:
            yield from p.terms()


def evaluate(j: SpectralDensity, omega):
    """Evaluate ``j`` at ``omega`` (scalar or array)."""
    return j(omega)


def load_tabulated(source) -> Tabulated:
    """Parse two-column ``omega,J`` CSV data into a :class:`Tabulated` density.

    ``source`` may be a path, a text/binary stream or a ``bytes`` object.
    Lines starting with ``#`` and blank lines are ignored; a non-numeric
    first data row is treated as a header.
    """
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    grid, values = [], []
    seen_data = False
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) != 2:
            raise ParseError(f"expected 2 columns, found {len(cols)}", line=lineno)
        try:
            w, jv = float(cols[0]), float(cols[1])
        except ValueError:
            if not seen_data and not grid:
                seen_data = True  # header row
                continue
            raise ParseError(f"non-numeric value in {line!r}", line=lineno) from None
        seen_data = True
        if not (math.isfinite(w) and math.isfinite(jv)):
            raise ParseError("non-finite value", line=lineno)
        if jv < 0:
            raise ParseError(f"negative spectral density {jv}", line=lineno)
        if grid and w <= grid[-1]:
            raise ParseError(f"frequency {w} not ascending (previous {grid[-1]})", line=lineno)
        grid.append(w)
        values.append(jv)
    if len(grid) < 2:
        raise ParseError("interpolation needs at least 2 data rows")
    return Tabulated(np.array(grid), np.array(values))


def dump_tabulated(j: Tabulated, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append("omega,J")
    lines += [f"{w!r},{v!r}" for w, v in zip(j.grid.tolist(), j.values.tolist())]
    return "\n".join(lines) + "\n"


def _tabulated_integral(j: Tabulated, a, b, moment):
    lo, hi = max(a, j.grid[0]), min(b, j.grid[-1])
    if lo >= hi:
        return 0.0
    inner = j.grid[(j.grid > lo) & (j.grid < hi)]
    x = np.concatenate(([lo], inner, [hi]))
    y = j._eval(x)
    x0, x1, y0, y1 = x[:-1], x[1:], y[:-1], y[1:]
    h = x1 - x0
    if moment == 0:
        return float(np.sum(0.5 * h * (y0 + y1)))
    # omega * (linear) is quadratic: Simpson is exact per segment
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    return float(np.sum(h / 6 * (x0 * y0 + 4 * xm * ym + x1 * y1)))


def integrate(j: SpectralDensity, a: float, b: float, *, rtol: float = 1e-9, moment: int = 0) -> float:
    """Integral of ``omega**moment * J(omega)`` over ``(a, b)``.

    Linear combinations are split into their leaves.  Tabulated leaves are
    integrated exactly (piecewise linear); analytic leaves use adaptive
    Gauss-Kronrod quadrature with breaks at their spectral features.

    Raises
    ------
    InvalidInputError
        If ``a >= b`` or a bound is not finite.
    NumericError
        If the quadrature misses ``rtol``; the exception carries the
        achieved error estimate.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise InvalidInputError(f"need finite a < b, got ({a}, {b})")
    if moment not in (0, 1):
        raise InvalidInputError("moment must be 0 or 1")
    total = 0.0
    for coef, leaf in j.terms():
        if coef == 0:
            continue
        if isinstance(leaf, Tabulated):
            total += coef * _tabulated_integral(leaf, a, b, moment)
            continue
        lo, hi = leaf.support()
        lo, hi = max(a, lo), min(b, hi)
        if lo >= hi:
            continue
        f = leaf if moment == 0 else (lambda w, _l=leaf: w * _l(w))
        atol = 1e-15 * leaf.scale() ** (1 + moment)
        val, _ = _quad.adaptive(f, lo, hi, points=leaf.breakpoints(), rtol=rtol, atol=atol)
        total += coef * val
    return total
