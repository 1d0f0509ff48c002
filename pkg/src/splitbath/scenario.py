"""Scenario files: one JSON document describing a full fit-correct-simulate run.

Minimal example::

    {
      "name": "usc",
      "units": {"energy": "meV", "time": "ps"},
      "emitter": {"omega_e": 0.58},
      "spectral_density": {"type": "CoupledOhmic", "g": 0.25, "omega_c": 0.58, "kappa": 0.1},
      "fit": {"window": {"lo": 0.2, "hi": 1.0}, "n_modes": 1},
      "markov_enabled": true,
      "equation": "usc_eq",
      "rwa": false,
      "truncation": {"n_max": 5},
      "times": {"t_max": 150, "n_points": 301},
      "outputs": "out/usc"
    }

Errors name the offending field with its dotted path (``fit.window``).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInputError
from .fitmodel import FewModeModel, FitOptions, FitWindow
from .io import content_hash
from .lindblad import EmitterParams
from .specdens import (
    CoupledOhmic,
    FreeSpace,
    LorentzianMode,
    LorentzianSum,
    SpectralDensity,
    Sum,
    load_tabulated,
)
from .units import hbar

__all__ = ["Scenario", "FitSpec", "OracleSpec", "load_scenario", "parse_scenario", "build_density"]


@dataclass(frozen=True)
class FitSpec:
    window: FitWindow
    n_modes: int
    options: FitOptions = FitOptions()


@dataclass(frozen=True)
class OracleSpec:
    enabled: bool = False
    range: tuple[float, float] | None = None
    t_max: float | None = None
    n_points: int | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    energy_unit: str
    time_unit: str
    emitter: EmitterParams
    density: SpectralDensity
    scattered: SpectralDensity
    fit: FitSpec | None
    model: FewModeModel | None
    markov_enabled: bool
    equation: str
    rwa: bool
    n_max: int
    max_dim: int
    oracle_m: int
    max_excitations: int
    t_max: float
    n_points: int
    oracle: OracleSpec
    outputs: Path
    source_hash: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def hbar(self) -> float:
        return hbar(self.energy_unit, self.time_unit)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)

    def oracle_times(self) -> np.ndarray:
        t_max = self.oracle.t_max if self.oracle.t_max is not None else self.t_max
        n = self.oracle.n_points
        if n is None:
            # keep the model grid spacing
            n = max(2, int(round(t_max / self.t_max * (self.n_points - 1))) + 1)
        return np.linspace(0.0, t_max, n)


# -- low-level field access ------------------------------------------------


def _get(d: dict, key: str, path: str, default=..., kind=None):
    full = f"{path}.{key}" if path else key
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        if default is ...:
            raise ConfigError(full, "missing required field")
        return default
    val = d[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ConfigError(full, f"expected a finite number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(full, f"expected an integer, got {val!r}")
        return val
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(full, f"expected true/false, got {val!r}")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(full, f"expected a string, got {val!r}")
        return val
    if kind is dict and not isinstance(val, dict):
        raise ConfigError(full, "expected an object")
    if kind is list and not isinstance(val, list):
        raise ConfigError(full, "expected a list")
    return val


def _pair(d, key, path, default=...):
    val = _get(d, key, path, default)
    if val is None:
        return None
    full = f"{path}.{key}"
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(v, (int, float)) for v in val)):
        raise ConfigError(full, "expected [lo, hi]")
    lo, hi = map(float, val)
    if not lo < hi:
        raise ConfigError(full, "needs lo < hi")
    return lo, hi


def build_density(cfg: dict, path: str, base_dir: Path, energy_unit: str) -> SpectralDensity:
    """Construct a spectral density from its JSON description."""
    kind = _get(cfg, "type", path, kind=str)
    try:
        if kind == "LorentzianSum":
            modes = _get(cfg, "modes", path, kind=list)
            out = []
            for i, m in enumerate(modes):
                p = f"{path}.modes[{i}]"
                out.append(LorentzianMode(_get(m, "g", p, kind=float), _get(m, "omega0", p, kind=float),
                                          _get(m, "kappa", p, kind=float)))
            return LorentzianSum(out)
        if kind == "CoupledOhmic":
            return CoupledOhmic(_get(cfg, "g", path, kind=float), _get(cfg, "omega_c", path, kind=float),
                                _get(cfg, "kappa", path, kind=float))
        if kind == "Tabulated":
            rel = _get(cfg, "path", path, kind=str)
            file = (base_dir / rel).resolve()
            if not file.is_file():
                raise ConfigError(f"{path}.path", f"file not found: {rel}")
            return load_tabulated(file)
        if kind == "FreeSpace":
            return FreeSpace(_get(cfg, "d", path, kind=float), energy_unit)
        if kind == "Sum":
            parts = _get(cfg, "parts", path, kind=list)
            return Sum(tuple(build_density(p, f"{path}.parts[{i}]", base_dir, energy_unit) for i, p in enumerate(parts)))
    except ConfigError:
        raise
    except InvalidInputError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown spectral density type {kind!r}")


def _scattered(j: SpectralDensity) -> SpectralDensity:
    """``j`` without its top-level free-space parts."""
    if isinstance(j, Sum):
        rest = tuple(p for p in j.parts if not isinstance(p, FreeSpace))
        if len(rest) != len(j.parts):
            return Sum(rest)
    return j


def parse_scenario(doc: dict, base_dir: str | Path = ".", source_hash: str = "") -> Scenario:
    base_dir = Path(base_dir)
    if not isinstance(doc, dict):
        raise ConfigError("", "scenario must be a JSON object")
    name = _get(doc, "name", "", kind=str)
    units = _get(doc, "units", "", {"energy": "eV", "time": "fs"}, kind=dict)
    e_unit = _get(units, "energy", "units", "eV", kind=str)
    t_unit = _get(units, "time", "units", "fs", kind=str)
    if e_unit not in ("eV", "meV"):
        raise ConfigError("units.energy", f"must be eV or meV, got {e_unit!r}")
    if t_unit not in ("fs", "ps"):
        raise ConfigError("units.time", f"must be fs or ps, got {t_unit!r}")

    em = _get(doc, "emitter", "", kind=dict)
    try:
        emitter = EmitterParams(
            _get(em, "omega_e", "emitter", kind=float),
            _get(em, "initial_state", "emitter", "excited", kind=str),
            _get(em, "theta", "emitter", 0.0, kind=float),
            _get(em, "phi", "emitter", 0.0, kind=float),
        )
    except ConfigError:
        raise
    except InvalidInputError as exc:
        raise ConfigError("emitter", str(exc)) from None

    density = build_density(_get(doc, "spectral_density", "", kind=dict), "spectral_density", base_dir, e_unit)

    fit_spec = None
    model = None
    if "fit" in doc:
        f = _get(doc, "fit", "", kind=dict)
        w = _get(f, "window", "fit", kind=dict)
        try:
            window = FitWindow(
                _get(w, "lo", "fit.window", kind=float),
                _get(w, "hi", "fit.window", kind=float),
                _get(w, "n_grid", "fit.window", 400, kind=int),
                _get(w, "weighting", "fit.window", "uniform", kind=str),
            )
        except ConfigError:
            raise
        except InvalidInputError as exc:
            raise ConfigError("fit.window", str(exc)) from None
        n_modes = _get(f, "n_modes", "fit", kind=int)
        if n_modes < 1:
            raise ConfigError("fit.n_modes", f"must be >= 1, got {n_modes}")
        o = _get(f, "options", "fit", {}, kind=dict)
        options = FitOptions(
            max_restarts=_get(o, "max_restarts", "fit.options", 16, kind=int),
            seed=_get(o, "seed", "fit.options", 0, kind=int),
            tol=_get(o, "tol", "fit.options", 1e-10, kind=float),
            rel_floor=_get(o, "rel_floor", "fit.options", 1e-3, kind=float),
        )
        if options.max_restarts < 0 or options.seed < 0 or options.tol <= 0:
            raise ConfigError("fit.options", "max_restarts and seed must be >= 0, tol > 0")
        fit_spec = FitSpec(window, n_modes, options)
    if "model" in doc:
        try:
            model = FewModeModel.from_dict(_get(doc, "model", "", kind=dict))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("model", str(exc)) from None
    if fit_spec is None and model is None:
        raise ConfigError("fit", "either fit or model must be given")

    equation = _get(doc, "equation", "", "rwa_eq", kind=str)
    if equation not in ("rwa_eq", "usc_eq"):
        raise ConfigError("equation", f"must be rwa_eq or usc_eq, got {equation!r}")
    rwa = _get(doc, "rwa", "", equation == "rwa_eq", kind=bool)

    tr = _get(doc, "truncation", "", {}, kind=dict)
    n_max = _get(tr, "n_max", "truncation", 5, kind=int)
    if n_max < 1:
        raise ConfigError("truncation.n_max", "must be >= 1")
    max_dim = _get(tr, "max_dim", "truncation", 4096, kind=int)
    oracle_m = _get(tr, "oracle_m", "truncation", 2000, kind=int)
    max_exc = _get(tr, "max_excitations", "truncation", 1 if rwa else 3, kind=int)
    if oracle_m < 1:
        raise ConfigError("truncation.oracle_m", "must be >= 1")
    if max_exc < 1:
        raise ConfigError("truncation.max_excitations", "must be >= 1")

    tm = _get(doc, "times", "", kind=dict)
    t_max = _get(tm, "t_max", "times", kind=float)
    n_points = _get(tm, "n_points", "times", 201, kind=int)
    if t_max <= 0:
        raise ConfigError("times.t_max", "must be > 0")
    if n_points < 2:
        raise ConfigError("times.n_points", "must be >= 2")

    oc = _get(doc, "oracle", "", {}, kind=dict)
    oracle = OracleSpec(
        enabled=_get(oc, "enabled", "oracle", False, kind=bool),
        range=_pair(oc, "range", "oracle", None),
        t_max=_get(oc, "t_max", "oracle", None, kind=float) if oc.get("t_max") is not None else None,
        n_points=_get(oc, "n_points", "oracle", None, kind=int) if oc.get("n_points") is not None else None,
    )
    if oracle.enabled and oracle.range is None:
        raise ConfigError("oracle.range", "required when the oracle is enabled")

    outputs = Path(_get(doc, "outputs", "", f"out/{name}", kind=str))
    if not outputs.is_absolute():
        outputs = Path(os.path.normpath(base_dir / outputs))
    return Scenario(
        name=name,
        energy_unit=e_unit,
        time_unit=t_unit,
        emitter=emitter,
        density=density,
        scattered=_scattered(density),
        fit=fit_spec,
        model=model,
        markov_enabled=_get(doc, "markov_enabled", "", True, kind=bool),
        equation=equation,
        rwa=rwa,
        n_max=n_max,
        max_dim=max_dim,
        oracle_m=oracle_m,
        max_excitations=max_exc,
        t_max=t_max,
        n_points=n_points,
        oracle=oracle,
        outputs=outputs,
        source_hash=source_hash,
        raw=doc,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file.

    Relative paths inside the file (tabulated data, outputs) resolve against
    the file's directory.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError("", f"cannot read scenario {path}: {exc.strerror}") from None
    try:
        doc = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"line {exc.lineno}: {exc.msg}") from None
    return parse_scenario(doc, path.parent, content_hash(data))
