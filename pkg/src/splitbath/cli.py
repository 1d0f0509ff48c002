"""Command-line front end: fit, correct, simulate, oracle, compare, pipeline.

Exit codes: 0 success, 1 usage/config error, 2 non-converged fit,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    InvalidInputError,
    NumericError,
    ResourceError,
    SplitBathError,
    StructuralError,
)
from .fitmodel import FitReport, fit
from .io import content_hash, format_error_series, format_json, format_trajectory, read_trajectory
from .lindblad import Trajectory, build_hs, propagate
from .markov import MarkovParams, ValidityReport, markov_params, residual, validity_beta
from .oracle import ErrorSeries, discretize, dump_bath, exact_rwa, exact_truncated, relative_error
from .scenario import Scenario, load_scenario

__all__ = [
    "Outcome",
    "run_fit",
    "run_correct",
    "run_simulate",
    "run_oracle",
    "run_pipeline",
    "run_compare",
    "main",
]

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_NUMERIC = 0, 1, 2, 3


class StageError(SplitBathError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class Outcome:
    """Result of one command: written files, exit code and in-memory products."""

    files: list[Path] = field(default_factory=list)
    exit_code: int = EXIT_OK
    fit_report: FitReport | None = None
    markov: MarkovParams | None = None
    validity: ValidityReport | None = None
    trajectories: dict[str, Trajectory] = field(default_factory=dict)
    errors: dict[str, ErrorSeries] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except SplitBathError as exc:
                raise StageError(name, exc) from exc

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


def _meta(sc: Scenario, **extra) -> dict:
    meta = {"scenario": sc.name, "scenario_sha256": sc.source_hash,
            "units": f"{sc.energy_unit},{sc.time_unit}"}
    if sc.fit is not None:
        meta["seed"] = sc.fit.options.seed
    meta.update(extra)
    return meta


def _write(out: Outcome, path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    out.files.append(path)


def _with_seed(sc: Scenario, seed: int | None) -> Scenario:
    if seed is None or sc.fit is None:
        return sc
    return replace(sc, fit=replace(sc.fit, options=replace(sc.fit.options, seed=seed)))


# -- stages ----------------------------------------------------------------


@_stage("fit")
def _do_fit(sc: Scenario) -> FitReport:
    if sc.fit is None:
        raise ConfigError("fit", "scenario has no fit section")
    return fit(sc.density, sc.fit.window, sc.fit.n_modes, sc.fit.options, initial=sc.model)


@_stage("correct")
def _do_correct(sc: Scenario, report: FitReport):
    mp = markov_params(sc.density, report.model, sc.emitter.omega_e, sc.scattered,
                       counter_rotating=sc.equation == "usc_eq")
    dj = residual(sc.density, report.model)
    return mp, validity_beta(dj, sc.emitter.omega_e)


@_stage("simulate")
def _do_simulate(sc: Scenario, report: FitReport, mp: MarkovParams) -> Trajectory:
    h = build_hs(sc.emitter, report.model, rwa=sc.rwa, n_max=sc.n_max, max_dim=sc.max_dim)
    return propagate(h, mp, report.model, sc.emitter, sc.times(), equation=sc.equation, hbar=sc.hbar)


@_stage("oracle")
def _do_oracle(sc: Scenario):
    bath = discretize(sc.density, sc.oracle.range, sc.oracle_m)
    t = sc.oracle_times()
    if sc.rwa:
        traj = exact_rwa(sc.emitter, bath, t, hbar=sc.hbar)
    else:
        traj = exact_truncated(sc.emitter, bath, sc.max_excitations, t, hbar=sc.hbar)
    return bath, traj


def _model_for(sc: Scenario, out: Outcome) -> FitReport:
    if sc.fit is None:
        return FitReport(sc.model, float("nan"), None, 0, True)
    rep = _do_fit(sc)
    out.fit_report = rep
    if not rep.converged:
        out.exit_code = EXIT_NOT_CONVERGED
    return rep


def _fit_payload(rep: FitReport) -> dict:
    if rep.window is None:
        return rep.model.to_dict()
    return rep.to_dict()


# -- public run_* API --------------------------------------------------------


def run_fit(sc: Scenario, out_dir: Path | None = None) -> Outcome:
    """Fit the few-mode model and write ``fit_report.json``."""
    out = Outcome()
    if sc.fit is None:
        raise ConfigError("fit", "scenario has no fit section")
    rep = _model_for(sc, out)
    _write(out, Path(out_dir or sc.outputs) / "fit_report.json", format_json(rep.to_dict(), _meta(sc)))
    return out


def run_correct(sc: Scenario, out_dir: Path | None = None) -> Outcome:
    """Fit, then compute the Markov corrections and the validity report."""
    out = Outcome()
    rep = _model_for(sc, out)
    mp, vr = _do_correct(sc, rep)
    out.markov, out.validity = mp, vr
    body = {"fit": _fit_payload(rep), "markov": mp.to_dict(), "validity": vr.to_dict(),
            "validity_satisfied": vr.satisfied()}
    _write(out, Path(out_dir or sc.outputs) / "markov.json", format_json(body, _meta(sc)))
    return out


def _markov_for(sc: Scenario, rep: FitReport, out: Outcome) -> MarkovParams:
    if not sc.markov_enabled:
        return MarkovParams()
    if out.markov is None:
        out.markov, out.validity = _do_correct(sc, rep)
    return out.markov


def run_simulate(sc: Scenario, out_dir: Path | None = None) -> Outcome:
    """Propagate the model master equation; writes ``trajectory_model.csv``."""
    out = Outcome()
    rep = _model_for(sc, out)
    mp = _markov_for(sc, rep, out)
    traj = _do_simulate(sc, rep, mp)
    out.trajectories["model"] = traj
    meta = _meta(sc, equation=sc.equation, rwa=sc.rwa, n_max=sc.n_max, markov=mp.to_dict())
    _write(out, Path(out_dir or sc.outputs) / "trajectory_model.csv", format_trajectory(traj, meta))
    return out


def run_oracle(sc: Scenario, out_dir: Path | None = None) -> Outcome:
    """Exact discretized-bath reference; writes ``trajectory_oracle.csv`` and ``bath.csv``."""
    out = Outcome()
    if sc.oracle.range is None:
        raise ConfigError("oracle.range", "required for the oracle")
    bath, traj = _do_oracle(sc)
    out.trajectories["oracle"] = traj
    d = Path(out_dir or sc.outputs)
    solver = "single-excitation" if sc.rwa else f"truncated(max_excitations={sc.max_excitations})"
    meta = _meta(sc, solver=solver, m=bath.m, range=list(sc.oracle.range))
    _write(out, d / "bath.csv", dump_bath(bath, "\n".join(f"{k}: {v}" for k, v in meta.items())))
    _write(out, d / "trajectory_oracle.csv", format_trajectory(traj, meta))
    return out


def run_pipeline(sc: Scenario, out_dir: Path | None = None) -> Outcome:
    """fit -> correct -> simulate (with and without corrections) -> oracle -> compare."""
    d = Path(out_dir or sc.outputs)
    out = Outcome()
    rep = _model_for(sc, out)
    if sc.fit is not None:
        _write(out, d / "fit_report.json", format_json(rep.to_dict(), _meta(sc)))
    mp, vr = _do_correct(sc, rep)
    out.markov, out.validity = mp, vr

    runs = {"model": mp if sc.markov_enabled else MarkovParams()}
    if sc.markov_enabled:
        runs["fit_only"] = MarkovParams()
    for label, params in runs.items():
        traj = _do_simulate(sc, rep, params)
        out.trajectories[label] = traj
        meta = _meta(sc, equation=sc.equation, rwa=sc.rwa, n_max=sc.n_max, markov=params.to_dict())
        _write(out, d / f"trajectory_{label}.csv", format_trajectory(traj, meta))

    summary = {
        "scenario": sc.name,
        "fit": _fit_payload(rep),
        "markov": mp.to_dict(),
        "markov_enabled": sc.markov_enabled,
        "anti_lindblad_active": sc.equation == "usc_eq" and sc.markov_enabled and mp.gamma_mod_tilde < 0,
        "validity": vr.to_dict(),
        "validity_satisfied": vr.satisfied(),
        "equation": sc.equation,
        "final_population": {k: float(t.emitter_population[-1]) for k, t in out.trajectories.items()},
        "max_trace_drift": {k: float(np.max(t.trace_drift)) for k, t in out.trajectories.items()},
        "warnings": {k: t.warnings for k, t in out.trajectories.items() if t.warnings},
    }
    if sc.oracle.enabled:
        orc = run_oracle(sc, d)
        out.files += orc.files
        ref = orc.trajectories["oracle"]
        out.trajectories["oracle"] = ref
        summary["epsilon_r"] = {}
        for label in runs:
            err = relative_error(out.trajectories[label], ref)
            out.errors[label] = err
            summary["epsilon_r"][label] = err.summary()
            _write(out, d / f"error_{label}.csv",
                   format_error_series(err, _meta(sc, test=f"trajectory_{label}.csv", reference="trajectory_oracle.csv")))
    out.summary = summary
    _write(out, d / "summary.json", format_json(summary, _meta(sc)))
    return out


def run_compare(path_a: str | Path, path_b: str | Path, out_path: str | Path | None = None) -> Outcome:
    """Relative error of trajectory ``a`` against reference ``b``."""
    a, b = Path(path_a), Path(path_b)
    err = relative_error(read_trajectory(a), read_trajectory(b))
    out = Outcome()
    out.errors["compare"] = err
    out.summary = err.summary()
    meta = {"test": a.name, "test_sha256": content_hash(a.read_bytes()),
            "reference": b.name, "reference_sha256": content_hash(b.read_bytes())}
    text = format_error_series(err, meta)
    if out_path is not None:
        _write(out, Path(out_path), text)
    return out


# -- argparse ----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario JSON file")
    common.add_argument("--out", type=Path, help="output directory (default: scenario 'outputs')")
    common.add_argument("--seed", type=int, help="override fit.options.seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = argparse.ArgumentParser(prog="splitbath", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("fit", "fit the few-mode model"),
        ("correct", "fit and compute Markov corrections"),
        ("simulate", "propagate the model master equation"),
        ("oracle", "exact discretized-bath reference"),
        ("pipeline", "run every stage and compare with the oracle"),
    ]:
        sub.add_parser(name, help=help_, parents=[common])
    cmp_ = sub.add_parser("compare", help="relative error of one trajectory CSV against another", parents=[common])
    cmp_.add_argument("test", type=Path)
    cmp_.add_argument("reference", type=Path)
    return p


_RUNNERS = {
    "fit": run_fit,
    "correct": run_correct,
    "simulate": run_simulate,
    "oracle": run_oracle,
    "pipeline": run_pipeline,
}


def _say(quiet, msg):
    if not quiet:
        print(msg, file=sys.stdout)


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    quiet = args.quiet
    try:
        if args.command == "compare":
            dest = args.out / "compare.csv" if args.out else None
            out = run_compare(args.test, args.reference, dest)
            if dest is None:
                sys.stdout.write(format_error_series(out.errors["compare"]))
        else:
            if args.scenario is None:
                print("error: --scenario is required", file=sys.stderr)
                return EXIT_CONFIG
            sc = _with_seed(load_scenario(args.scenario), args.seed)
            out = _RUNNERS[args.command](sc, args.out)
        for f in out.files:
            _say(quiet, f"wrote {f}")
        for k, v in out.summary.get("epsilon_r", {}).items():
            _say(quiet, f"max eps_r ({k}): {v['max']:.4g}")
        if out.exit_code == EXIT_NOT_CONVERGED:
            print("error: fit did not converge", file=sys.stderr)
        return out.exit_code
    except (StageError, SplitBathError) as exc:
        cause = exc.cause if isinstance(exc, StageError) else exc
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(cause, (InvalidInputError, ConfigError)):
            return EXIT_CONFIG
        if isinstance(cause, (NumericError, ResourceError, StructuralError)):
            return EXIT_NUMERIC
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
