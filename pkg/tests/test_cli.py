import json

import numpy as np
import pytest

from splitbath import cli
from splitbath.errors import ConfigError, ParseError
from splitbath.fitmodel import FitReport
from splitbath.io import format_trajectory, read_trajectory, write_trajectory
from splitbath.lindblad import Trajectory
from splitbath.scenario import load_scenario, parse_scenario


def small_rwa(tmp_path, **over):
    doc = {
        "name": "small",
        "units": {"energy": "eV", "time": "fs"},
        "emitter": {"omega_e": 1.0},
        "spectral_density": {
            "type": "LorentzianSum",
            "modes": [{"g": 0.05, "omega0": 1.0, "kappa": 0.05}, {"g": 0.05, "omega0": 1.5, "kappa": 0.05}],
        },
        "fit": {"window": {"lo": 0.8, "hi": 1.2, "n_grid": 200}, "n_modes": 1, "options": {"max_restarts": 2}},
        "markov_enabled": True,
        "equation": "rwa_eq",
        "rwa": True,
        "truncation": {"n_max": 1, "oracle_m": 800},
        "times": {"t_max": 60.0, "n_points": 121},
        "oracle": {"enabled": True, "range": [-1.0, 3.0]},
        "outputs": "out",
    }
    doc.update(over)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_pipeline_files_and_reproducibility(tmp_path, capsys):
    path = small_rwa(tmp_path)
    assert cli.main(["pipeline", "--scenario", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["pipeline", "--scenario", str(path), "--out", str(tmp_path / "b"), "--quiet"]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted([
        "bath.csv", "error_fit_only.csv", "error_model.csv", "fit_report.json", "summary.json",
        "trajectory_fit_only.csv", "trajectory_model.csv", "trajectory_oracle.csv",
    ])
    digest = load_scenario(path).source_hash
    for name in names:
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert digest.encode() in a
    out = capsys.readouterr().out
    assert "max eps_r (model)" in out


def test_pipeline_correction_improves_error(tmp_path):
    sc = load_scenario(small_rwa(tmp_path))
    res = cli.run_pipeline(sc, tmp_path / "o")
    eps = res.summary["epsilon_r"]
    assert eps["model"]["max"] < eps["fit_only"]["max"]
    assert res.summary["validity_satisfied"]


def test_pipeline_without_oracle_has_no_error_section(tmp_path):
    sc = load_scenario(small_rwa(tmp_path, oracle={"enabled": False}))
    res = cli.run_pipeline(sc, tmp_path / "o")
    assert "epsilon_r" not in res.summary
    assert not (tmp_path / "o" / "trajectory_oracle.csv").exists()


def test_seed_override_recorded(tmp_path):
    path = small_rwa(tmp_path)
    assert cli.main(["fit", "--scenario", str(path), "--out", str(tmp_path / "s"), "--seed", "9", "--quiet"]) == 0
    body = json.loads((tmp_path / "s" / "fit_report.json").read_text())
    assert body["_meta"]["seed"] == 9
    assert body["converged"] is True
    assert FitReport.from_dict(body).model.n_modes == 1


def test_usc_summary_reports_anti_lindblad(tmp_path):
    doc = {
        "name": "usc",
        "units": {"energy": "meV", "time": "ps"},
        "emitter": {"omega_e": 0.58},
        "spectral_density": {"type": "CoupledOhmic", "g": 0.25, "omega_c": 0.58, "kappa": 0.1},
        "fit": {"window": {"lo": 0.2, "hi": 1.0}, "n_modes": 1, "options": {"max_restarts": 1}},
        "equation": "usc_eq",
        "rwa": False,
        "truncation": {"n_max": 3},
        "times": {"t_max": 5.0, "n_points": 11},
    }
    sc = parse_scenario(doc, tmp_path)
    res = cli.run_pipeline(sc, tmp_path / "u")
    assert res.summary["markov"]["gamma_mod_tilde"] < 0
    assert res.summary["anti_lindblad_active"]


def test_correct_and_simulate_commands(tmp_path):
    path = small_rwa(tmp_path)
    assert cli.main(["correct", "--scenario", str(path), "--out", str(tmp_path / "c"), "--quiet"]) == 0
    body = json.loads((tmp_path / "c" / "markov.json").read_text())
    assert set(body) >= {"fit", "markov", "validity", "validity_satisfied"}
    assert cli.main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "c"), "--quiet"]) == 0
    tr = read_trajectory(tmp_path / "c" / "trajectory_model.csv")
    assert tr.times.size == 121 and tr.n_modes == 1
    assert cli.main(["oracle", "--scenario", str(path), "--out", str(tmp_path / "c"), "--quiet"]) == 0


def test_missing_window_exit_1(tmp_path, capsys):
    path = small_rwa(tmp_path, fit={"n_modes": 1})
    assert cli.main(["fit", "--scenario", str(path)]) == 1
    assert "fit.window" in capsys.readouterr().err


def test_zero_modes_exit_1(tmp_path, capsys):
    path = small_rwa(tmp_path, fit={"window": {"lo": 0.8, "hi": 1.2}, "n_modes": 0})
    assert cli.main(["fit", "--scenario", str(path)]) == 1
    assert "fit.n_modes" in capsys.readouterr().err


@pytest.mark.parametrize(
    "over, field",
    [
        ({"units": {"energy": "J"}}, "units.energy"),
        ({"times": {"t_max": -1.0}}, "times.t_max"),
        ({"equation": "bloch"}, "equation"),
        ({"spectral_density": {"type": "Tabulated", "path": "nope.csv"}}, "spectral_density.path"),
        ({"spectral_density": {"type": "Gaussian"}}, "spectral_density.type"),
        ({"emitter": {"omega_e": -1.0}}, "emitter"),
        ({"oracle": {"enabled": True}}, "oracle.range"),
    ],
)
def test_config_errors_name_field(tmp_path, over, field):
    path = small_rwa(tmp_path, **over)
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.field == field


def test_bad_json_and_missing_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"name\": \n}")
    assert cli.main(["fit", "--scenario", str(bad)]) == 1
    assert "line" in capsys.readouterr().err
    assert cli.main(["fit"]) == 1
    assert cli.main(["fit", "--scenario", str(tmp_path / "none.json")]) == 1
    assert cli.main(["bogus"]) == 1


def test_tabulated_density_from_file(tmp_path):
    (tmp_path / "j.csv").write_text("omega,J\n0.5,0.0\n1.0,0.02\n1.5,0.0\n")
    path = small_rwa(tmp_path, spectral_density={"type": "Tabulated", "path": "j.csv"}, oracle={"enabled": False})
    sc = load_scenario(path)
    assert sc.density(1.0) == 0.02


def test_non_converged_fit_exit_2(tmp_path, monkeypatch):
    path = small_rwa(tmp_path)
    real = cli.fit

    def fake(*args, **kwargs):
        rep = real(*args, **kwargs)
        return FitReport(rep.model, rep.residual_norm, rep.window, rep.n_restarts_used, False)

    monkeypatch.setattr(cli, "fit", fake)
    assert cli.main(["fit", "--scenario", str(path), "--out", str(tmp_path / "n"), "--quiet"]) == 2
    assert (tmp_path / "n" / "fit_report.json").exists()


def test_numeric_failure_exit_3(tmp_path, capsys):
    # a lossless model resonant with the emitter has a pole on the real axis
    doc = json.loads(small_rwa(tmp_path).read_text())
    del doc["fit"]
    doc["model"] = {"n_modes": 1, "omega_matrix": [1.0], "kappa": [0.0], "g": [0.05]}
    path = tmp_path / "pole.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["correct", "--scenario", str(path), "--out", str(tmp_path / "p")]) == 3
    assert "[correct]" in capsys.readouterr().err


def test_compare_command(tmp_path, capsys):
    t = np.linspace(0, 1, 11)
    ref = Trajectory(t, np.exp(-t))
    write_trajectory(tmp_path / "ref.csv", ref)
    write_trajectory(tmp_path / "off.csv", Trajectory(t, 1.05 * np.exp(-t)))
    assert cli.main(["compare", str(tmp_path / "ref.csv"), str(tmp_path / "ref.csv"), "--out", str(tmp_path / "c1")]) == 0
    text = (tmp_path / "c1" / "compare.csv").read_text()
    assert "# summary_max: 0.0" in text
    res = cli.run_compare(tmp_path / "off.csv", tmp_path / "ref.csv")
    assert res.summary["max"] == pytest.approx(0.05, rel=1e-12)
    assert cli.main(["compare", str(tmp_path / "off.csv"), str(tmp_path / "ref.csv")]) == 0
    assert "t,eps_r,flag" in capsys.readouterr().out
    write_trajectory(tmp_path / "late.csv", Trajectory(t + 5, np.exp(-t)))
    assert cli.main(["compare", str(tmp_path / "late.csv"), str(tmp_path / "ref.csv")]) == 1


def test_trajectory_csv_round_trip(tmp_path):
    t = np.linspace(0, 2, 7)
    tr = Trajectory(t, np.cos(t) ** 2, np.vstack([np.sin(t) ** 2, 0.1 * t]), np.full(7, 1e-16), -1e-3 * t, ["w1"])
    text = format_trajectory(tr, {"scenario": "x", "markov": {"delta_mod": 0.1}})
    assert text.splitlines()[0] == "# scenario: x"
    assert "t,pop_emitter,pop_mode_1,pop_mode_2,trace_drift,min_eig" in text
    path = tmp_path / "t.csv"
    path.write_text(text)
    back = read_trajectory(path)
    assert np.array_equal(back.emitter_population, tr.emitter_population)
    assert np.array_equal(back.mode_populations, tr.mode_populations)
    assert np.array_equal(back.min_eigenvalue, tr.min_eigenvalue)
    assert back.warnings == ["w1"]


@pytest.mark.parametrize(
    "text",
    ["", "x,y\n1,2\n", "t,pop_emitter,trace_drift\n0,1\n", "t,pop_emitter,trace_drift\n0,a,0\n",
     "t,pop_emitter,trace_drift\n1,1,0\n0,1,0\n"],
)
def test_trajectory_csv_errors(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError):
        read_trajectory(path)


@pytest.mark.parametrize("name", [
    "separated_lorentzians", "squeezed_lorentzians", "squeezed_lorentzians_3mode",
    "usc_coupled_ohmic", "fano_surrogate",
])
def test_shipped_scenarios_load(name):
    from pathlib import Path

    sc = load_scenario(Path(__file__).resolve().parents[1] / "scenarios" / f"{name}.json")
    assert sc.density(sc.emitter.omega_e) > 0
    assert sc.times()[-1] == sc.t_max
