"""Emitter + few-mode open system: Hamiltonian, Liouvillian, propagation.

Basis ordering is ``emitter (x) mode_1 (x) ... (x) mode_N`` with the emitter
basis ``[|g>, |e>]`` and every mode truncated at ``n_max`` quanta.  Density
matrices are vectorized row-major, ``vec(rho)[i*d + j] = rho[i, j]``.

Energies and rates are in one energy unit and times in one time unit; the
Liouvillian carries the ``1/hbar`` conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Literal, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import eigs, expm_multiply, spsolve

from .errors import InvalidInputError, NumericError, ResourceError, StructuralError
from .fitmodel import FewModeModel
from .markov import MarkovParams

__all__ = [
    "EmitterParams",
    "FockSpace",
    "SystemOperator",
    "Trajectory",
    "build_hs",
    "liouvillian",
    "propagate",
    "steady_state",
    "expectation",
]

Equation = Literal["rwa_eq", "usc_eq"]


@dataclass(frozen=True)
class EmitterParams:
    """Two-level emitter.

    ``initial_state`` is ``"excited"``, ``"ground"`` or ``"superposition"``;
    the latter is ``cos(theta/2)|g> + exp(i phi) sin(theta/2)|e>``.
    """

    omega_e: float
    initial_state: str = "excited"
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega_e) and self.omega_e > 0):
            raise InvalidInputError(f"omega_e must be > 0, got {self.omega_e}")
        if self.initial_state not in ("excited", "ground", "superposition"):
            raise InvalidInputError(f"unknown initial state {self.initial_state!r}")

    def amplitudes(self) -> np.ndarray:
        if self.initial_state == "excited":
            return np.array([0.0, 1.0], dtype=complex)
        if self.initial_state == "ground":
            return np.array([1.0, 0.0], dtype=complex)
        return np.array(
            [math.cos(self.theta / 2), np.exp(1j * self.phi) * math.sin(self.theta / 2)], dtype=complex
        )


@dataclass(frozen=True)
class FockSpace:
    n_modes: int
    n_max: int

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1) ** self.n_modes

    def _embed(self, op, site):
        mats = [sp.identity(2, format="csr")] + [sp.identity(self.n_max + 1, format="csr")] * self.n_modes
        mats[site] = sp.csr_matrix(op)
        return reduce(lambda x, y: sp.kron(x, y, format="csr"), mats)

    @cached_property
    def sigma_minus(self) -> sp.csr_matrix:
        return self._embed(np.array([[0.0, 1.0], [0.0, 0.0]]), 0)

    @cached_property
    def sigma_plus(self) -> sp.csr_matrix:
        return self.sigma_minus.T.tocsr()

    @cached_property
    def annihilators(self) -> tuple[sp.csr_matrix, ...]:
        a = sp.diags(np.sqrt(np.arange(1, self.n_max + 1)), 1)
        return tuple(self._embed(a, i + 1) for i in range(self.n_modes))

    @cached_property
    def emitter_occupation(self) -> np.ndarray:
        """Diagonal of sigma+ sigma- (0/1 per basis state)."""
        return np.repeat([0.0, 1.0], self.dim // 2)

    @cached_property
    def mode_occupations(self) -> np.ndarray:
        """``(N, dim)`` diagonals of a_i^dag a_i."""
        d = self.n_max + 1
        idx = np.arange(self.dim) % (d**self.n_modes) if self.n_modes else np.zeros(self.dim, int)
        occ = np.empty((self.n_modes, self.dim))
        for i in range(self.n_modes):
            occ[i] = (idx // d ** (self.n_modes - 1 - i)) % d
        return occ

    @cached_property
    def excitation_number(self) -> sp.csr_matrix:
        return sp.diags(self.emitter_occupation + self.mode_occupations.sum(axis=0)).tocsr()

    def product_state(self, emitter: EmitterParams) -> np.ndarray:
        vac = np.zeros((self.n_max + 1) ** self.n_modes, dtype=complex)
        vac[0] = 1.0
        return np.kron(emitter.amplitudes(), vac)


@dataclass(frozen=True, eq=False)
class SystemOperator:
    matrix: sp.csr_matrix
    space: FockSpace
    rwa: bool = True

    @property
    def dim(self) -> int:
        return self.space.dim

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    emitter_population: np.ndarray
    mode_populations: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    trace_drift: np.ndarray | None = None
    min_eigenvalue: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)
    states: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.emitter_population = np.asarray(self.emitter_population, dtype=float)
        if self.times.shape != self.emitter_population.shape:
            raise StructuralError("times and populations differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidInputError("trajectory times must be strictly ascending")
        mp = np.asarray(self.mode_populations, dtype=float)
        if mp.size == 0:
            mp = np.zeros((0, self.times.size))
        self.mode_populations = mp
        if self.trace_drift is None:
            self.trace_drift = np.zeros_like(self.times)

    @property
    def n_modes(self) -> int:
        return self.mode_populations.shape[0]


def build_hs(
    emitter: EmitterParams, model: FewModeModel, rwa: bool = True, n_max: int = 5, max_dim: int = 4096
) -> SystemOperator:
    """System Hamiltonian of emitter plus N interacting modes.

    ``H = w_e s+s- + sum_ij w_ij a_i^dag a_j + sum_i g_i (s+ + s-)(a_i + a_i^dag)``;
    with ``rwa=True`` only ``g_i (s+ a_i + s- a_i^dag)`` is kept.
    """
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")
    space = FockSpace(model.n_modes, n_max)
    if space.dim > max_dim:
        raise ResourceError(f"Hilbert dimension {space.dim} exceeds cap {max_dim}; lower n_max or N")
    sm, spl = space.sigma_minus, space.sigma_plus
    h = emitter.omega_e * (spl @ sm)
    a = space.annihilators
    for i in range(model.n_modes):
        for j in range(model.n_modes):
            if model.omega_matrix[i, j] != 0:
                h = h + model.omega_matrix[i, j] * (a[i].T @ a[j])
        gi = model.g[i]
        if gi != 0:
            h = h + gi * (spl @ a[i] + sm @ a[i].T)
            if not rwa:
                h = h + gi * (spl @ a[i].T + sm @ a[i])
    return SystemOperator(sp.csr_matrix(h), space, rwa)


def _collapse_ops(h_s: SystemOperator, markov: MarkovParams, model: FewModeModel, equation: Equation):
    space = h_s.space
    ops = [(float(k), a) for k, a in zip(model.kappa, space.annihilators) if k != 0]
    if markov.gamma_mod != 0:
        ops.append((markov.gamma_mod, space.sigma_minus))
    if equation == "usc_eq" and markov.gamma_mod_tilde != 0:
        ops.append((markov.gamma_mod_tilde, space.sigma_plus))
    return ops


def _total_hamiltonian(h_s, markov, emitter, equation):
    space = h_s.space
    shift = markov.delta_mod + (markov.delta_mod_tilde if equation == "usc_eq" else 0.0)
    h = h_s.matrix - shift * (space.sigma_plus @ space.sigma_minus)
    if h_s.rwa and emitter is not None:
        # excitation number commutes with everything: drop the fast phase e^{-i w_e N t}
        h = h - emitter.omega_e * space.excitation_number
    return sp.csr_matrix(h)


def liouvillian(
    h_s: SystemOperator,
    markov: MarkovParams,
    model: FewModeModel,
    equation: Equation = "rwa_eq",
    hbar: float = 1.0,
    emitter: EmitterParams | None = None,
) -> sp.csr_matrix:
    """Sparse superoperator of the master equation (row-major vectorization).

    ``rwa_eq``:  -i[H_S + H_CP, .] + gamma_mod D[s-] + sum_i kappa_i D[a_i]
    ``usc_eq``:  adds -i[H~_CP, .] and gamma_mod_tilde D[s+]

    Rates are used as given, including negative ones.  When ``h_s`` is an
    RWA Hamiltonian and ``emitter`` is supplied, the frame rotating at
    ``omega_e`` times the excitation number is used (populations unchanged).
    """
    if equation not in ("rwa_eq", "usc_eq"):
        raise InvalidInputError(f"unknown equation {equation!r}")
    if model.n_modes != h_s.space.n_modes:
        raise StructuralError("model and Hamiltonian disagree on the number of modes")
    h = _total_hamiltonian(h_s, markov, emitter, equation)
    d = h_s.dim
    eye = sp.identity(d, format="csr")
    out = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for rate, c in _collapse_ops(h_s, markov, model, equation):
        cdc = (c.conj().T @ c).tocsr()
        out = out + rate * (sp.kron(c, c.conj()) - 0.5 * sp.kron(cdc, eye) - 0.5 * sp.kron(eye, cdc.T))
    return sp.csr_matrix(out / hbar)


def _uniform(times):
    if times.size < 3:
        return True
    dt = np.diff(times)
    return np.allclose(dt, dt[0], rtol=1e-12, atol=0)


def propagate(
    h_s: SystemOperator,
    markov: MarkovParams,
    model: FewModeModel,
    emitter: EmitterParams,
    times: Sequence[float],
    equation: Equation = "rwa_eq",
    hbar: float = 1.0,
    method: Literal["auto", "dense", "krylov", "ode"] = "auto",
    record_min_eig: bool | None = None,
    keep_states: bool = False,
) -> Trajectory:
    """Propagate ``rho(0) = |emitter> (x) |vac>`` and record observables.

    Methods: ``dense`` exponentiates the full Liouvillian once per grid step
    (uniform grids, small systems); ``krylov`` applies ``exp(L t)`` to the
    state with a truncated-Taylor scheme; ``ode`` integrates with DOP853
    (rtol 1e-10, atol 1e-12).  ``auto`` picks dense for dim <= 16 on a
    uniform grid, otherwise krylov.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise InvalidInputError("times must be a strictly ascending 1-D grid")
    d = h_s.dim
    lv = liouvillian(h_s, markov, model, equation, hbar, emitter)
    psi0 = h_s.space.product_state(emitter)
    rho0 = np.outer(psi0, psi0.conj()).ravel()
    if record_min_eig is None:
        record_min_eig = d <= 256

    if method == "auto":
        method = "dense" if d <= 16 and _uniform(times) else "krylov"
    if method == "dense":
        if not _uniform(times):
            raise InvalidInputError("dense propagation needs a uniform time grid")
        vecs = np.empty((times.size, d * d), dtype=complex)
        vecs[0] = la.expm(lv.toarray() * times[0]) @ rho0 if times[0] != 0 else rho0
        if times.size > 1:
            step = la.expm(lv.toarray() * (times[1] - times[0]))
            for k in range(1, times.size):
                vecs[k] = step @ vecs[k - 1]
    elif method == "krylov":
        vecs = _krylov(lv, rho0, times)
    elif method == "ode":
        vecs = _ode(h_s, markov, model, emitter, equation, hbar, rho0, times)
    else:
        raise InvalidInputError(f"unknown method {method!r}")

    space = h_s.space
    diag_idx = np.arange(d) * (d + 1)
    diags = vecs[:, diag_idx].real
    tr = vecs[:, diag_idx].sum(axis=1)
    pop_e = diags @ space.emitter_occupation
    pop_m = space.mode_occupations @ diags.T
    min_eig = None
    if record_min_eig:
        min_eig = np.array([la.eigvalsh(0.5 * (r + r.conj().T), subset_by_index=[0, 0])[0]
                            for r in vecs.reshape(-1, d, d)])
    warn = []
    neg = [name for name, r in (("gamma_mod", markov.gamma_mod),
                                ("gamma_mod_tilde", markov.gamma_mod_tilde if equation == "usc_eq" else 0.0))
           if r < 0]
    if neg:
        warn.append("negative rate(s) " + ", ".join(neg) + ": map is not completely positive")
    return Trajectory(
        times=times,
        emitter_population=pop_e,
        mode_populations=pop_m,
        trace_drift=np.abs(tr - 1.0),
        min_eigenvalue=min_eig,
        warnings=warn,
        states=vecs.reshape(-1, d, d) if keep_states else None,
    )


def _krylov(lv, v0, times):
    out = np.empty((times.size, v0.size), dtype=complex)
    cur = expm_multiply(lv * times[0], v0) if times[0] != 0 else v0
    out[0] = cur
    if times.size == 1:
        return out
    if _uniform(times):
        out[1:] = expm_multiply(lv, cur, start=0.0, stop=times[-1] - times[0], num=times.size, endpoint=True)[1:]
        return out
    for k in range(1, times.size):
        cur = expm_multiply(lv * (times[k] - times[k - 1]), cur)
        out[k] = cur
    return out


def _ode(h_s, markov, model, emitter, equation, hbar, rho0, times):
    d = h_s.dim
    h = _total_hamiltonian(h_s, markov, emitter, equation)
    ops = [(r, c, (c.conj().T @ c).tocsr()) for r, c in _collapse_ops(h_s, markov, model, equation)]

    def rhs(_t, y):
        rho = y.reshape(d, d)
        out = -1j * (h @ rho - (h.T @ rho.T).T)
        for r, c, cdc in ops:
            crho = c @ rho
            out += r * ((c.conj() @ crho.T).T - 0.5 * (cdc @ rho) - 0.5 * (cdc.T @ rho.T).T)
        return out.ravel() / hbar

    sol = solve_ivp(rhs, (times[0], times[-1]), rho0, method="DOP853", t_eval=times, rtol=1e-10, atol=1e-12)
    if sol.status != 0:
        last = sol.t[-1] if sol.t.size else times[0]
        raise NumericError(f"ODE integration failed at t={last}: {sol.message}")
    return sol.y.T


def steady_state(lv: sp.spmatrix, tol: float = 1e-10) -> np.ndarray:
    """Unique null vector of the Liouvillian, as a unit-trace density matrix.

    Raises :class:`StructuralError` if the null space is empty or degenerate.
    """
    n = lv.shape[0]
    d = int(round(math.sqrt(n)))
    if d * d != n or lv.shape != (n, n):
        raise StructuralError("Liouvillian must be square with side d^2")
    norm = sp.linalg.norm(lv, 1) if sp.issparse(lv) else np.linalg.norm(lv, 1)
    if n <= 4096:
        dense = lv.toarray() if sp.issparse(lv) else np.asarray(lv)
        _, s, vh = la.svd(dense)
        null = np.sum(s <= tol * norm)
        if null != 1:
            raise StructuralError(f"Liouvillian null space has dimension {null} (need exactly 1)")
        vec = vh[-1].conj()
    else:
        vals = eigs(sp.csc_matrix(lv), k=2, sigma=0, which="LM", return_eigenvectors=False)
        vals = sorted(vals, key=abs)
        if abs(vals[1]) <= tol * norm:
            raise StructuralError("Liouvillian null space is degenerate")
        # replace one equation by the trace condition
        a = sp.lil_matrix(lv)
        a[0, :] = 0
        a[0, np.arange(d) * (d + 1)] = 1.0
        rhs = np.zeros(n, dtype=complex)
        rhs[0] = 1.0
        vec = spsolve(sp.csc_matrix(a), rhs)
    rho = vec.reshape(d, d)
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise StructuralError("null vector is traceless; no physical steady state")
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    resid = np.linalg.norm(lv @ rho.ravel())
    if resid > max(tol, 1e-8) * max(norm, 1.0):
        raise StructuralError(f"steady state residual {resid:.3g} too large")
    return rho


def expectation(rho: np.ndarray, op) -> complex:
    """``Tr(op rho)``."""
    mat = op.matrix if isinstance(op, SystemOperator) else op
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or mat.shape != rho.shape:
        raise StructuralError(f"dimension mismatch: operator {mat.shape}, state {rho.shape}")
    prod = mat @ rho
    return complex(prod.diagonal().sum())
