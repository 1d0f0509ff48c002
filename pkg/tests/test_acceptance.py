"""End-to-end acceptance checks, each at its stated tolerance and runtime.

Every test carries a ``criterion`` marker; ``conftest.py`` prints one
PASS/FAIL line per criterion with the measured numbers.  Parts of a
criterion are all measured and recorded before any assertion fires.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from splitbath.cli import run_pipeline
from splitbath.fitmodel import FewModeModel, eval_jfit, spectral_sum_rule
from splitbath.lindblad import EmitterParams, build_hs, expectation, liouvillian, propagate, steady_state
from splitbath.markov import lorentzian_hilbert, principal_value, residual, validity_beta
from splitbath.oracle import discretize, exact_truncated, relative_error
from splitbath.scenario import load_scenario
from splitbath.specdens import LorentzianMode, LorentzianSum, Tabulated

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
_RUNS = {}


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Run a shipped scenario once per session; returns (scenario, outcome, seconds, out_dir)."""

    def run(name):
        if name not in _RUNS:
            sc = load_scenario(SCENARIOS / f"{name}.json")
            out = tmp_path_factory.mktemp(name)
            t0 = time.perf_counter()
            res = run_pipeline(sc, out)
            _RUNS[name] = (sc, res, time.perf_counter() - t0, out)
        return _RUNS[name]

    return run


def _g(x):
    return f"{x:.4g}"


def _check(parts):
    failed = [name for name, ok in parts if not ok]
    assert not failed, "failed parts: " + ", ".join(failed)


def random_model(rng, n):
    a = rng.uniform(-5, 5, (n, n))
    kappa = 1.0 - rng.uniform(0, 1, n)  # (0, 1]
    return FewModeModel(0.5 * (a + a.T), kappa, rng.normal(0, 1, n))


@pytest.mark.criterion(1, "few-mode density is non-negative on 1000 random models")
def test_positivity_random_models(record_property):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = math.inf
    for _ in range(1000):
        m = random_model(rng, int(rng.integers(1, 6)))
        s = m.scale()
        vals = eval_jfit(m, np.linspace(-10 * s, 10 * s, 2001))
        worst = min(worst, vals.min() / vals.max())
    dt = time.perf_counter() - t0
    record_property("min J/peak", _g(worst))
    record_property("seconds", _g(dt))
    _check([("positivity", worst >= -1e-12), ("runtime", dt < 10)])


@pytest.mark.criterion(2, "integral of the few-mode density equals the sum of g^2 within 1%")
def test_sum_rule_random_models(record_property):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        m = random_model(rng, int(rng.integers(1, 6)))
        s = m.scale()
        pts = sorted(np.linalg.eigvals(m.effective_hamiltonian).real)
        core_lo, core_hi = min(pts) - 50 * s, max(pts) + 50 * s
        far = 1e5 * s
        f = lambda w: eval_jfit(m, w)  # noqa: E731
        total = (quad(f, core_lo, core_hi, points=pts, limit=500)[0]
                 + quad(f, core_hi, far, limit=500)[0] + quad(f, -far, core_lo, limit=500)[0])
        worst = max(worst, abs(total / spectral_sum_rule(m) - 1))
    dt = time.perf_counter() - t0
    record_property("max rel dev", _g(worst))
    record_property("seconds", _g(dt))
    _check([("sum rule", worst <= 0.01), ("runtime", dt < 30)])


@pytest.mark.criterion(3, "Lorentzian shift by subtracted quadrature matches the contour result")
def test_pv_against_contour(record_property):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10):
        g, w0, k = rng.uniform(0.01, 0.5), rng.uniform(0.5, 3.0), rng.uniform(0.01, 0.5)
        x = w0 + rng.uniform(-1.0, 1.0)
        got = principal_value(LorentzianSum([LorentzianMode(g, w0, k)]), x)
        exact = lorentzian_hilbert(g, w0, k, x)
        worst = max(worst, abs(got / exact - 1))
    dt = time.perf_counter() - t0
    record_property("max rel err", _g(worst))
    record_property("seconds", _g(dt))
    _check([("tolerance", worst <= 1e-6), ("runtime", dt < 5)])


@pytest.mark.criterion(4, "flat band of width 40 gamma reproduces exp(-gamma t) within 2%")
def test_wigner_weisskopf(record_property):
    from splitbath.oracle import exact_rwa

    gamma, we = 0.01, 1.0
    half = 20 * gamma
    band = (we - half, we + half)
    t0 = time.perf_counter()
    bath = discretize(Tabulated(list(band), [gamma / (2 * math.pi)] * 2), band, 4000)
    t = np.linspace(0, 5 / gamma, 501)
    p = exact_rwa(EmitterParams(we), bath, t).emitter_population
    dt = time.perf_counter() - t0
    ref = np.exp(-gamma * t)
    dev = np.max(np.abs(p - ref))
    record_property("max abs dev", _g(dev))
    record_property("max rel dev", _g(np.max(np.abs(p - ref) / ref)))
    record_property("seconds", _g(dt))
    _check([("2% agreement", dev <= 0.02), ("runtime", dt < 60)])


@pytest.mark.slow
@pytest.mark.criterion(5, "separated Lorentzians: corrected model within 10% of the exact bath, fit-only 2x worse")
def test_separated_lorentzians(pipeline, record_property):
    sc, res, dt, _ = pipeline("separated_lorentzians")
    em, ef = res.errors["model"], res.errors["fit_only"]
    record_property("max eps model", _g(em.max_unflagged))
    record_property("max eps fit-only", _g(ef.max_unflagged))
    record_property("t_max", sc.t_max)
    record_property("seconds", _g(dt))
    _check([
        ("model <= 0.10", em.max_unflagged <= 0.10),
        ("fit-only >= 2x model", ef.max_unflagged >= 2 * em.max_unflagged),
        ("runtime", dt < 300),
    ])


@pytest.mark.slow
@pytest.mark.criterion(6, "squeezed Lorentzians: one mode fails (> 0.2), three modes restore <= 0.10")
def test_squeezed_lorentzians(pipeline, record_property):
    _, one, dt1, _ = pipeline("squeezed_lorentzians")
    _, three, dt3, _ = pipeline("squeezed_lorentzians_3mode")
    e1 = one.errors["model"].max_unflagged
    e3 = three.errors["model"].max_unflagged
    record_property("max eps 1 mode", _g(e1))
    record_property("max eps 3 modes", _g(e3))
    record_property("seconds", _g(dt1 + dt3))
    _check([("1 mode > 0.2", e1 > 0.2), ("3 modes <= 0.10", e3 <= 0.10), ("runtime", dt1 + dt3 < 600)])


@pytest.mark.slow
@pytest.mark.criterion(7, "ultrastrong coupling: signed rates, steady state below the plain-Lindblad one, trace kept")
def test_usc(pipeline, record_property):
    sc, res, dt, _ = pipeline("usc_coupled_ohmic")
    mp, rep = res.markov, res.fit_report
    t0 = time.perf_counter()
    h = build_hs(sc.emitter, rep.model, rwa=sc.rwa, n_max=sc.n_max)
    occ = np.diag(h.space.emitter_occupation)
    steady = {}
    for eq in ("usc_eq", "rwa_eq"):
        rho = steady_state(liouvillian(h, mp, rep.model, eq, sc.hbar, sc.emitter))
        steady[eq] = expectation(rho, occ).real
    dt += time.perf_counter() - t0
    traj = res.trajectories["model"]
    t, p = traj.times, traj.emitter_population
    late = t >= 90.0
    settle = np.max(np.abs(p[late] - steady["usc_eq"])) / steady["usc_eq"]
    drift = float(np.max(traj.trace_drift))

    def within(v, target):
        return abs(v / target - 1) <= 0.2

    record_property("gamma~", _g(mp.gamma_mod_tilde))
    record_property("delta", _g(mp.delta_mod))
    record_property("delta~", _g(mp.delta_mod_tilde))
    record_property("steady usc/rwa", f"{_g(steady['usc_eq'])}/{_g(steady['rwa_eq'])}")
    record_property("settle dev after 90", _g(settle))
    record_property("trace drift", _g(drift))
    record_property("seconds", _g(dt))
    _check([
        ("gamma~ < 0", mp.gamma_mod_tilde < 0),
        ("|gamma~| ~ 0.0046", within(abs(mp.gamma_mod_tilde), 0.0046)),
        ("delta ~ 0.0026", within(mp.delta_mod, 0.0026)),
        ("delta~ ~ 0.0026", within(mp.delta_mod_tilde, 0.0026)),
        ("bounded", bool(np.all((p >= -1e-12) & (p <= 1 + 1e-12)))),
        ("steady by 90", settle <= 0.05),
        ("below plain Lindblad", steady["usc_eq"] < steady["rwa_eq"]),
        ("trace drift", drift < 1e-8),
        ("runtime", dt < 300),
    ])


@pytest.mark.slow
@pytest.mark.criterion(8, "reaction-mode ratios beta below 0.1 for the three benchmark cases")
def test_beta(pipeline, record_property):
    names = ["separated_lorentzians", "squeezed_lorentzians", "squeezed_lorentzians_3mode", "usc_coupled_ohmic"]
    parts = []
    seconds = 0.0
    for name in names:
        sc, res, _, _ = pipeline(name)
        t0 = time.perf_counter()
        vr = validity_beta(residual(sc.density, res.fit_report.model), sc.emitter.omega_e)
        seconds += time.perf_counter() - t0
        d = vr.to_dict()
        pair = [d["beta_minus"], d["beta_plus"]]
        if vr.degenerate_minus or vr.degenerate_plus:
            pair = [d["beta_abs_minus"], d["beta_abs_plus"]]  # net-negative side: magnitude-based ratio
        record_property(name, "/".join(_g(b) for b in pair))
        parts.append((name, vr.satisfied(0.1)))
    record_property("seconds", _g(seconds))
    _check(parts + [("runtime", seconds < 10)])


@pytest.mark.slow
@pytest.mark.criterion(9, "doubling n_max and raising max_excitations 2 -> 3 change populations by < 2%")
def test_truncation_convergence(pipeline, record_property):
    parts = []
    t0 = time.perf_counter()
    for name in ["separated_lorentzians", "squeezed_lorentzians_3mode", "usc_coupled_ohmic"]:
        sc, res, _, _ = pipeline(name)
        rep = res.fit_report
        model = res.trajectories["model"]
        h2 = build_hs(sc.emitter, rep.model, rwa=sc.rwa, n_max=2 * sc.n_max, max_dim=10 * sc.max_dim)
        doubled = propagate(h2, res.markov, rep.model, sc.emitter, sc.times(), equation=sc.equation, hbar=sc.hbar)
        dev = relative_error(doubled, model).max_unflagged
        record_property(f"n_max x2 {name}", _g(dev))
        parts.append((f"n_max {name}", dev < 0.02))

    sc, res, _, _ = pipeline("usc_coupled_ohmic")
    bath = discretize(sc.density, sc.oracle.range, sc.oracle_m)
    t = sc.oracle_times()
    two = exact_truncated(sc.emitter, bath, 2, t, hbar=sc.hbar)
    three = res.trajectories["oracle"] if sc.max_excitations == 3 else exact_truncated(sc.emitter, bath, 3, t, hbar=sc.hbar)
    dev = relative_error(two, three).max_unflagged
    dt = time.perf_counter() - t0
    record_property("excitations 2->3", _g(dev))
    record_property("seconds", _g(dt))
    parts += [("excitations 2->3", dev < 0.02), ("runtime", dt < 600)]
    _check(parts)


@pytest.mark.slow
@pytest.mark.criterion(10, "re-running a pipeline with the same seed reproduces every output byte")
def test_reproducibility(pipeline, tmp_path, record_property):
    parts = []
    for name in ["separated_lorentzians", "usc_coupled_ohmic"]:
        sc, _, _, first = pipeline(name)
        second = tmp_path / name
        run_pipeline(replace(sc), second)
        files = sorted(p.name for p in first.iterdir())
        same = all((first / f).read_bytes() == (second / f).read_bytes() for f in files)
        record_property(name, f"{len(files)} files identical" if same else "differs")
        parts.append((name, same and files == sorted(p.name for p in second.iterdir())))
    _check(parts)
