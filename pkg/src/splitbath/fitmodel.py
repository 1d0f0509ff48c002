"""Few-mode (pseudomode) spectral densities and their least-squares fit.

A :class:`FewModeModel` describes N lossy, mutually coupled oscillators with
a real symmetric frequency/coupling matrix ``omega_matrix``, decay rates
``kappa`` and emitter couplings ``g``.  Its spectral density is

    J_fit(w) = (1/pi) g . Im[(H - w)^-1] . g,   H = omega_matrix - (i/2) diag(kappa).

Because ``H - w`` is complex symmetric, ``Im[(H - w)^-1] = A^-1 (K/2) A^-†``
with ``A = H - w`` and ``K = diag(kappa)``, so J_fit is evaluated as
``sum_i kappa_i |x_i|^2 / (2 pi)`` with ``x = A^-1 g``, which is manifestly
non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import optimize, signal

from .errors import InvalidInputError, PoleError
from .specdens import SpectralDensity

__all__ = [
    "FewModeModel",
    "FewModeDensity",
    "FitWindow",
    "FitOptions",
    "FitReport",
    "eval_jfit",
    "eval_jfit_direct",
    "fit",
    "spectral_sum_rule",
    "n_free_params",
]


@dataclass(frozen=True, eq=False)
class FewModeModel:
    omega_matrix: np.ndarray
    kappa: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        om = np.atleast_2d(np.array(self.omega_matrix, dtype=float))
        kap = np.atleast_1d(np.array(self.kappa, dtype=float))
        g = np.atleast_1d(np.array(self.g, dtype=float))
        if np.size(self.omega_matrix) == 0:
            om = np.zeros((0, 0))
            kap = np.zeros(0)
            g = np.zeros(0)
        n = om.shape[0]
        if om.shape != (n, n) or kap.shape != (n,) or g.shape != (n,):
            raise InvalidInputError(
                f"inconsistent shapes: omega_matrix {om.shape}, kappa {kap.shape}, g {g.shape}"
            )
        if not (np.all(np.isfinite(om)) and np.all(np.isfinite(kap)) and np.all(np.isfinite(g))):
            raise InvalidInputError("model parameters must be finite")
        if n and not np.allclose(om, om.T, rtol=0, atol=1e-12 * max(1.0, np.abs(om).max())):
            raise InvalidInputError("omega_matrix must be symmetric")
        if np.any(kap < 0):
            raise InvalidInputError("decay rates kappa must be >= 0")
        om = 0.5 * (om + om.T)
        for a in (om, kap, g):
            a.flags.writeable = False
        object.__setattr__(self, "omega_matrix", om)
        object.__setattr__(self, "kappa", kap)
        object.__setattr__(self, "g", g)

    @property
    def n_modes(self) -> int:
        return self.g.shape[0]

    @property
    def effective_hamiltonian(self) -> np.ndarray:
        return self.omega_matrix - 0.5j * np.diag(self.kappa)

    @classmethod
    def lorentzians(cls, g, omega0, kappa) -> "FewModeModel":
        """Non-interacting modes (diagonal ``omega_matrix``)."""
        return cls(np.diag(np.atleast_1d(omega0)), kappa, g)

    @classmethod
    def empty(cls) -> "FewModeModel":
        return cls(np.zeros((0, 0)), np.zeros(0), np.zeros(0))

    def scale(self) -> float:
        if self.n_modes == 0:
            return 1.0
        return float(max(np.abs(self.omega_matrix).max(), self.kappa.max(), 1e-300))

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "omega_matrix": self.omega_matrix.ravel().tolist(),
            "kappa": self.kappa.tolist(),
            "g": self.g.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FewModeModel":
        n = int(d["n_modes"])
        om = np.asarray(d["omega_matrix"], dtype=float)
        if om.ndim == 1:
            om = om.reshape(n, n)
        return cls(om, d["kappa"], d["g"])


def eval_jfit(model: FewModeModel, omega):
    """J_fit(omega) for scalar or array ``omega`` (any real frequency)."""
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("J_fit evaluated at a non-finite frequency")
    n = model.n_modes
    if n == 0:
        out = np.zeros_like(w)
        return float(out) if out.ndim == 0 else out
    flat = w.reshape(-1)
    a = model.effective_hamiltonian[None, :, :] - flat[:, None, None] * np.eye(n)[None]
    rhs = np.broadcast_to(model.g.astype(complex), (flat.size, n))[..., None]
    try:
        x = np.linalg.solve(a, rhs)[..., 0]
    except np.linalg.LinAlgError:
        raise PoleError("omega hits a pole of the lossless model") from None
    out = (np.abs(x) ** 2 @ model.kappa) / (2 * np.pi)
    out = out.reshape(w.shape)
    return float(out) if out.ndim == 0 else out


def eval_jfit_direct(model: FewModeModel, omega):
    """Literal ``(1/pi) g Im[(H - w)^-1] g`` via explicit inversion (reference path)."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    n = model.n_modes
    if n == 0:
        return np.zeros_like(w)
    a = model.effective_hamiltonian[None] - w[:, None, None] * np.eye(n)[None]
    inv = np.linalg.inv(a)
    return np.einsum("i,wij,j->w", model.g, inv.imag, model.g) / np.pi


def spectral_sum_rule(model: FewModeModel) -> float:
    """Total weight ``int J_fit dw`` over the real line, equal to ``sum g_i^2``."""
    return float(np.sum(model.g**2))


@dataclass(frozen=True, eq=False)
class FewModeDensity(SpectralDensity):
    """A :class:`FewModeModel` viewed as a spectral density."""

    model: FewModeModel

    def _eval(self, w):
        return np.asarray(eval_jfit(self.model, w))

    def breakpoints(self):
        if self.model.n_modes == 0:
            return ()
        lam = np.linalg.eigvals(self.model.effective_hamiltonian)
        pts = []
        for z in lam:
            width = max(abs(z.imag), 1e-12 * self.model.scale())
            pts += [z.real + s * width for s in (-20, -2, 0, 2, 20)]
        return tuple(pts)

    def scale(self):
        return self.model.scale()


def n_free_params(n_modes: int) -> int:
    return n_modes * (n_modes - 1) // 2 + 3 * n_modes


@dataclass(frozen=True)
class FitWindow:
    lo: float
    hi: float
    n_grid: int = 400
    weighting: Literal["uniform", "relative"] = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise InvalidInputError(f"fit window needs lo < hi, got ({self.lo}, {self.hi})")
        if self.weighting not in ("uniform", "relative"):
            raise InvalidInputError(f"unknown weighting {self.weighting!r}")
        if self.n_grid < 2:
            raise InvalidInputError("fit window needs n_grid >= 2")

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_grid)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n_grid": self.n_grid, "weighting": self.weighting}


@dataclass(frozen=True)
class FitOptions:
    max_restarts: int = 16
    seed: int = 0
    tol: float = 1e-10
    # relative-weighting floor, in units of the target peak
    rel_floor: float = 1e-3


@dataclass(frozen=True, eq=False)
class FitReport:
    model: FewModeModel
    residual_norm: float
    window: FitWindow
    n_restarts_used: int
    converged: bool

    def to_dict(self) -> dict:
        d = self.model.to_dict()
        d.update(
            residual_norm=self.residual_norm,
            window=self.window.to_dict(),
            n_restarts_used=self.n_restarts_used,
            converged=self.converged,
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(
            model=FewModeModel.from_dict(d),
            residual_norm=float(d["residual_norm"]),
            window=FitWindow(**d["window"]),
            n_restarts_used=int(d.get("n_restarts_used", 0)),
            converged=bool(d["converged"]),
        )


# -- parameter packing ----------------------------------------------------
# x = [diag omega (N), upper off-diagonals (N(N-1)/2), s (N, kappa = s^2), g (N)]


def _pack(model: FewModeModel) -> np.ndarray:
    n = model.n_modes
    iu = np.triu_indices(n, 1)
    return np.concatenate(
        [np.diag(model.omega_matrix), model.omega_matrix[iu], np.sqrt(model.kappa), model.g]
    )


def _unpack_arrays(x, n):
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    om = np.diag(x[:n])
    om[iu] = x[n : n + m]
    om[(iu[1], iu[0])] = x[n : n + m]
    s = x[n + m : 2 * n + m]
    g = x[2 * n + m :]
    return om, s * s, g


def _jfit_from_x(x, n, w):
    om, kap, g = _unpack_arrays(x, n)
    a = (om - 0.5j * np.diag(kap))[None] - w[:, None, None] * np.eye(n)[None]
    sol = np.linalg.solve(a, np.broadcast_to(g.astype(complex), (w.size, n))[..., None])[..., 0]
    return (np.abs(sol) ** 2 @ kap) / (2 * np.pi)


def _jac_from_x(x, n, w):
    """d J_fit / d x, from ``J = Im(g^T A^-1 g)/pi`` with ``A = Omega - i diag(s^2)/2 - w``."""
    om, kap, g = _unpack_arrays(x, n)
    a = (om - 0.5j * np.diag(kap))[None] - w[:, None, None] * np.eye(n)[None]
    sol = np.linalg.solve(a, np.broadcast_to(g.astype(complex), (w.size, n))[..., None])[..., 0]
    iu = np.triu_indices(n, 1)
    sq = sol * sol
    s = x[n + len(iu[0]) : 2 * n + len(iu[0])]
    cols = [
        -sq.imag,
        -2.0 * (sol[:, iu[0]] * sol[:, iu[1]]).imag,
        s * sq.real,
        2.0 * sol.imag,
    ]
    return np.concatenate(cols, axis=1) / np.pi


def _initial_guess(grid, target, n_modes):
    """Peak-based starting point: modes at the largest local maxima."""
    dw = grid[1] - grid[0]
    width = grid[-1] - grid[0]
    peaks, _ = signal.find_peaks(target)
    peaks = sorted(peaks, key=lambda i: target[i], reverse=True)[:n_modes]
    centers, kappas, gs = [], [], []
    if peaks:
        widths = signal.peak_widths(target, peaks, rel_height=0.5)[0] * dw
    for k, i in enumerate(peaks):
        kap = widths[k] if widths[k] > 0 else width / (4 * n_modes)
        centers.append(grid[i])
        kappas.append(kap)
        gs.append(math.sqrt(max(np.pi * kap * target[i] / 2, 0.0)))
    # fill missing modes evenly across the window
    extra = n_modes - len(centers)
    if extra > 0:
        for w0 in np.linspace(grid[0], grid[-1], extra + 2)[1:-1]:
            kap = width / (2 * n_modes)
            h = float(np.interp(w0, grid, target))
            centers.append(w0)
            kappas.append(kap)
            gs.append(math.sqrt(max(np.pi * kap * h / 2, 0.0)) or 1e-3 * math.sqrt(width * max(target.max(), 1e-300)))
    order = np.argsort(centers)
    c, k, g = (np.asarray(v, dtype=float)[order] for v in (centers, kappas, gs))
    return FewModeModel(np.diag(c), k, g)


def _perturb(x0, n, rng, scale_w, kbar):
    x = x0.copy()
    m = n * (n - 1) // 2
    x[:n] += rng.normal(0.0, 0.5, n) * np.abs(x0[n + m : 2 * n + m]) ** 2 + rng.normal(0, 0.02, n) * scale_w
    x[n : n + m] += rng.normal(0.0, 0.2, m) * kbar
    x[n + m : 2 * n + m] *= np.exp(rng.normal(0.0, 0.3, n))
    x[2 * n + m :] *= np.exp(rng.normal(0.0, 0.3, n))
    return x


def fit(
    target: SpectralDensity,
    window: FitWindow,
    n_modes: int,
    options: FitOptions | None = None,
    initial: FewModeModel | None = None,
) -> FitReport:
    """Least-squares fit of an ``n_modes`` model to ``target`` over ``window``.

    Minimizes ``sum_grid w(omega) (J_fit - J_target)^2`` with a trust-region
    solver.  The first start is ``initial`` (if given) or a peak-detection
    guess; up to ``options.max_restarts`` randomly perturbed starts follow,
    and the lowest loss wins (first found on ties).

    ``residual_norm`` is the achieved weighted loss times the grid spacing,
    i.e. a Riemann approximation of ``int w (J_fit - J)^2 domega``.  A fit
    whose best run did not terminate successfully is returned with
    ``converged=False`` rather than raising.
    """
    options = options or FitOptions()
    if n_modes < 1:
        raise InvalidInputError("n_modes must be >= 1")
    if initial is not None and initial.n_modes != n_modes:
        raise InvalidInputError("initial model has the wrong number of modes")
    npar = n_free_params(n_modes)
    if window.n_grid < 2 * npar:
        raise InvalidInputError(
            f"fit window has n_grid={window.n_grid} but needs >= {2 * npar} for {n_modes} modes"
        )
    grid = window.grid()
    dw = grid[1] - grid[0]
    y = np.asarray(target(grid), dtype=float)
    peak = float(np.max(np.abs(y))) or 1.0
    if window.weighting == "relative":
        wts = 1.0 / (np.abs(y) + options.rel_floor * peak)
    else:
        wts = np.ones_like(y)

    def resid(x):
        return wts * (_jfit_from_x(x, n_modes, grid) - y)

    def jac(x):
        return wts[:, None] * _jac_from_x(x, n_modes, grid)

    start = initial if initial is not None else _initial_guess(grid, y, n_modes)
    x0 = _pack(start)
    rng = np.random.default_rng(options.seed)
    kbar = float(np.mean(start.kappa)) or (window.hi - window.lo) / 10
    scale_w = window.hi - window.lo
    # loss below this (relative to the target) means the target is reproduced exactly
    exact_loss = 1e-24 * float(np.sum((wts * y) ** 2)) * dw

    best = None
    used = 0
    for attempt in range(options.max_restarts + 1):
        xs = x0 if attempt == 0 else _perturb(x0, n_modes, rng, scale_w, kbar)
        with np.errstate(all="ignore"):
            res = optimize.least_squares(
                resid,
                xs,
                jac=jac,
                method="trf",
                x_scale="jac",
                ftol=options.tol,
                xtol=options.tol,
                gtol=options.tol,
                max_nfev=500 * npar,
            )
        used = attempt
        loss = float(np.sum(res.fun**2) * dw)
        ok = bool(res.status > 0 and np.isfinite(loss))
        if best is None or (np.isfinite(loss) and loss < best[0]):
            best = (loss, res.x, ok)
        if best[2] and best[0] <= exact_loss:
            break

    loss, x, ok = best
    om, kap, g = _unpack_arrays(x, n_modes)
    # fix the sign gauge of g (J_fit is invariant under g -> -g with matching off-diagonals)
    sign = np.where(g < 0, -1.0, 1.0)
    om = om * np.outer(sign, sign)
    model = FewModeModel(om, kap, g * sign)
    return FitReport(model=model, residual_norm=loss, window=window, n_restarts_used=used, converged=ok)
