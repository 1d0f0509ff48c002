"""Exact reference dynamics from a discretized bath.

The continuous bath is replaced by ``M`` modes on a uniform midpoint grid with
``g_k = sqrt(J(w_k) dw)``.  Two solvers are provided: the single-excitation
(RWA) sector, and a truncated-excitation Fock basis that keeps the
counterrotating terms.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import InvalidInputError, NumericError, ParseError, ResourceError
from .lindblad import EmitterParams, Trajectory
from .specdens import SpectralDensity

__all__ = [
    "DiscretizedBath",
    "discretize",
    "exact_rwa",
    "exact_truncated",
    "truncated_dimension",
    "relative_error",
    "ErrorSeries",
    "load_bath",
    "dump_bath",
]

MAX_TRUNCATED_DIM = 200_000


@dataclass(frozen=True, eq=False)
class DiscretizedBath:
    omegas: np.ndarray
    gs: np.ndarray

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float)
        g = np.array(self.gs, dtype=float)
        if w.ndim != 1 or w.shape != g.shape or w.size < 1:
            raise InvalidInputError("omegas and gs must be equal-length non-empty 1-D arrays")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(g))):
            raise InvalidInputError("bath contains non-finite values")
        if np.any(np.diff(w) <= 0):
            raise InvalidInputError("bath frequencies must be strictly ascending")
        if np.any(g < 0):
            raise InvalidInputError("bath couplings must be >= 0")
        w.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "gs", g)

    @property
    def m(self) -> int:
        return self.omegas.size

    @property
    def spacing(self) -> float:
        """Smallest level spacing (``inf`` for a single mode)."""
        return float(np.min(np.diff(self.omegas))) if self.m > 1 else math.inf

    def recurrence_time(self, hbar: float = 1.0) -> float:
        return 2 * math.pi * hbar / self.spacing

    def total_coupling(self) -> float:
        return float(np.sum(self.gs**2))


def discretize(j: SpectralDensity, window: tuple[float, float], m: int) -> DiscretizedBath:
    """Midpoint-rule bath on ``[a, b]`` with ``m`` modes."""
    a, b = map(float, window)
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise InvalidInputError(f"discretization range must satisfy a < b, got ({a}, {b})")
    if int(m) != m or m < 1:
        raise InvalidInputError(f"m must be a positive integer, got {m}")
    m = int(m)
    dw = (b - a) / m
    w = a + dw * (np.arange(m) + 0.5)
    jw = np.asarray(j(w), dtype=float)
    if np.any(jw < 0):
        k = int(np.argmax(jw < 0))
        raise InvalidInputError(f"J({w[k]:.6g}) = {jw[k]:.3g} < 0 cannot be discretized")
    return DiscretizedBath(w, np.sqrt(jw * dw))


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0) or not np.all(np.isfinite(times)):
        raise InvalidInputError("times must be a finite strictly ascending 1-D grid")
    return times


def _recurrence_warning(bath, times, hbar):
    if times[-1] >= 0.8 * bath.recurrence_time(hbar):
        return [f"t_max {times[-1]:.6g} is past 0.8 x recurrence time {bath.recurrence_time(hbar):.6g}"]
    return []


def _evolve(h: sp.csr_matrix, psi0: np.ndarray, times: np.ndarray, hbar: float) -> np.ndarray:
    """States ``exp(-i H t / hbar) psi0`` at every time, shape (T, dim)."""
    gen = (-1j / hbar) * h
    out = np.empty((times.size, psi0.size), dtype=complex)
    cur = expm_multiply(gen * times[0], psi0) if times[0] != 0 else psi0
    out[0] = cur
    if times.size == 1:
        return out
    dt = np.diff(times)
    if np.allclose(dt, dt[0], rtol=1e-12, atol=0):
        out[1:] = expm_multiply(gen, cur, start=0.0, stop=times[-1] - times[0], num=times.size, endpoint=True)[1:]
    else:
        for k in range(1, times.size):
            cur = expm_multiply(gen * dt[k - 1], cur)
            out[k] = cur
    return out


def exact_rwa(
    emitter: EmitterParams,
    bath: DiscretizedBath,
    times: Sequence[float],
    hbar: float = 1.0,
    method: str = "auto",
) -> Trajectory:
    """Single-excitation dynamics of an emitter in a discretized bath.

    Amplitudes obey ``i c_e' = w_e c_e + sum g_k c_k`` and
    ``i c_k' = w_k c_k + g_k c_e``; the emitter starts excited.  ``method``
    is ``"krylov"``, ``"eigh"`` (M <= 2000) or ``"auto"``.
    """
    if emitter.initial_state != "excited":
        raise InvalidInputError("exact_rwa needs an initially excited emitter")
    times = _check_times(times)
    m = bath.m
    if method == "auto":
        method = "eigh" if m <= 2000 else "krylov"
    psi0 = np.zeros(m + 1, dtype=complex)
    psi0[0] = 1.0
    diag = np.concatenate(([emitter.omega_e], bath.omegas))
    # the diagonal only contributes phases; shifting by w_e keeps the generator small
    diag = diag - emitter.omega_e
    if method == "eigh":
        if m > 2000:
            raise ResourceError("eigendecomposition is limited to M <= 2000")
        hd = np.diag(diag)
        hd[0, 1:] = bath.gs
        hd[1:, 0] = bath.gs
        evals, evecs = la.eigh(hd)
        coef = evecs.conj().T @ psi0
        states = (evecs @ (coef[:, None] * np.exp(-1j * np.outer(evals, times) / hbar))).T
    elif method == "krylov":
        rows = np.concatenate((np.zeros(m, int), np.arange(1, m + 1)))
        cols = np.concatenate((np.arange(1, m + 1), np.zeros(m, int)))
        h = sp.csr_matrix((np.concatenate((bath.gs, bath.gs)), (rows, cols)), shape=(m + 1, m + 1))
        h = h + sp.diags(diag)
        states = _evolve(sp.csr_matrix(h), psi0, times, hbar)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    probs = np.abs(states) ** 2
    norm_dev = np.abs(probs.sum(axis=1) - 1.0)
    if norm_dev.max() > 1e-10:
        raise NumericError(f"norm drift {norm_dev.max():.3g} exceeds 1e-10", achieved=float(norm_dev.max()))
    return Trajectory(
        times=times,
        emitter_population=probs[:, 0],
        trace_drift=norm_dev,
        warnings=_recurrence_warning(bath, times, hbar),
    )


def truncated_dimension(m: int, max_excitations: int) -> int:
    """Number of (emitter, M modes) configurations with at most ``k`` quanta."""
    # emitter 0 or 1 plus multisets of modes
    modes = [comb(m + k - 1, k) for k in range(max_excitations + 1)]
    return sum(modes) + sum(modes[:-1])


def _basis(m: int, kmax: int):
    """Lexicographic list of configurations ``(n_e, modes-multiset)``."""
    states = []
    for n_e in (0, 1):
        for k in range(kmax - n_e + 1):
            states.extend((n_e, c) for c in combinations_with_replacement(range(m), k))
    states.sort(key=lambda s: (s[0], len(s[1]), s[1]))
    return states


def exact_truncated(
    emitter: EmitterParams,
    bath: DiscretizedBath,
    max_excitations: int,
    times: Sequence[float],
    hbar: float = 1.0,
    counterrotating: bool = True,
    max_dim: int = MAX_TRUNCATED_DIM,
) -> Trajectory:
    """Unitary dynamics of the full emitter-bath Hamiltonian in a truncated basis.

    The basis holds every configuration with at most ``max_excitations``
    quanta (emitter plus bath).  With counterrotating terms the coupling
    ``g_k (s+ + s-)(b_k + b_k^dag)`` changes the excitation number by 0 or 2,
    so only states of the initial parity are populated.
    """
    if int(max_excitations) != max_excitations or max_excitations < 1:
        raise InvalidInputError("max_excitations must be an integer >= 1")
    kmax = int(max_excitations)
    times = _check_times(times)
    m = bath.m
    dim = truncated_dimension(m, kmax)
    if dim > max_dim:
        raise ResourceError(f"truncated basis has {dim} states (cap {max_dim}); reduce M or max_excitations")
    states = _basis(m, kmax)
    index = {s: i for i, s in enumerate(states)}
    rows, cols, vals = [], [], []
    diag = np.empty(len(states))
    g = bath.gs
    w = bath.omegas
    for i, (n_e, modes) in enumerate(states):
        diag[i] = emitter.omega_e * n_e + float(w[list(modes)].sum())
        # add one quantum to mode k (with emitter flip); each pair is stored once (i -> j), then symmetrized
        flip = 1 - n_e
        if flip + len(modes) + 1 > kmax:
            continue
        if not counterrotating and flip == 1:
            continue  # s+ b_k^dag is counterrotating
        for k in range(m):
            if g[k] == 0:
                continue
            new = tuple(sorted(modes + (k,)))
            j = index.get((flip, new))
            if j is None:
                continue
            amp = g[k] * math.sqrt(new.count(k))
            rows.append(i)
            cols.append(j)
            vals.append(amp)
    h = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    h = (h + h.T + sp.diags(diag)).tocsr()
    # remove the global phase of the reference energy
    h = h - emitter.omega_e * sp.identity(dim, format="csr")

    psi0 = np.zeros(dim, dtype=complex)
    amps = emitter.amplitudes()
    psi0[index[(0, ())]] = amps[0]
    psi0[index[(1, ())]] = amps[1]
    psi = _evolve(h, psi0, times, hbar)
    probs = np.abs(psi) ** 2
    excited = np.array([s[0] for s in states], dtype=float)
    norm_dev = np.abs(probs.sum(axis=1) - 1.0)
    if norm_dev.max() > 1e-8:
        raise NumericError(f"norm drift {norm_dev.max():.3g} exceeds 1e-8", achieved=float(norm_dev.max()))
    return Trajectory(
        times=times,
        emitter_population=probs @ excited,
        trace_drift=norm_dev,
        warnings=_recurrence_warning(bath, times, hbar),
    )


@dataclass(frozen=True, eq=False)
class ErrorSeries:
    """Relative error of a test population against a reference.

    ``values`` holds ``|p - p_ref| / p_ref``, or the absolute error where the
    reference is below ``floor`` (those points are ``flagged``).
    """

    times: np.ndarray
    values: np.ndarray
    flagged: np.ndarray

    @property
    def max_unflagged(self) -> float:
        ok = ~self.flagged
        return float(np.max(self.values[ok])) if ok.any() else math.nan

    @property
    def mean_unflagged(self) -> float:
        ok = ~self.flagged
        return float(np.mean(self.values[ok])) if ok.any() else math.nan

    @property
    def fraction_flagged(self) -> float:
        return float(np.mean(self.flagged))

    def summary(self) -> dict:
        return {
            "max": self.max_unflagged,
            "mean": self.mean_unflagged,
            "fraction_flagged": self.fraction_flagged,
        }


def relative_error(test: Trajectory, reference: Trajectory, floor: float = 1e-6) -> ErrorSeries:
    """Pointwise relative error on the reference grid.

    The test series is linearly interpolated onto reference times that lie
    inside its range; reference times outside are dropped.
    """
    tt, rt = test.times, reference.times
    lo, hi = max(tt[0], rt[0]), min(tt[-1], rt[-1])
    if lo > hi:
        raise InvalidInputError("test and reference trajectories have disjoint time ranges")
    keep = (rt >= lo - 1e-12 * max(1.0, abs(lo))) & (rt <= hi + 1e-12 * max(1.0, abs(hi)))
    t = rt[keep]
    ref = reference.emitter_population[keep]
    if tt.shape == rt.shape and np.array_equal(tt, rt):
        val = test.emitter_population[keep]
    else:
        val = np.interp(t, tt, test.emitter_population)
    diff = np.abs(val - ref)
    flagged = ref < floor
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(flagged, diff, diff / np.where(flagged, 1.0, ref))
    return ErrorSeries(t, err, flagged)


def dump_bath(bath: DiscretizedBath, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write("omega,g\n")
    for w, g in zip(bath.omegas, bath.gs):
        buf.write(f"{float(w)!r},{float(g)!r}\n")
    return buf.getvalue()


def load_bath(text: str) -> DiscretizedBath:
    ws, gs = [], []
    seen_header = False
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = [p.strip() for p in s.split(",")]
        if not seen_header and parts == ["omega", "g"]:
            seen_header = True
            continue
        if len(parts) != 2:
            raise ParseError(f"expected 2 columns, got {len(parts)}", line=lineno)
        try:
            ws.append(float(parts[0]))
            gs.append(float(parts[1]))
        except ValueError:
            raise ParseError(f"non-numeric entry {s!r}", line=lineno) from None
    if not ws:
        raise ParseError("bath file holds no rows")
    try:
        return DiscretizedBath(np.array(ws), np.array(gs))
    except InvalidInputError as exc:
        raise ParseError(str(exc)) from None
