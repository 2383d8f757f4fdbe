"""Tests for the experiment runner: configs, artifacts, determinism."""

import numpy as np
import pytest

from hypersample.cli import (
    ExperimentConfig,
    config_to_ini,
    load_config,
    main,
    run,
    verify_all,
)
from hypersample.errors import ConfigError


@pytest.fixture()
def outroot(tmp_path, monkeypatch):
    root = tmp_path / "runs"
    monkeypatch.setenv("HYPERSAMPLE_OUTPUT_ROOT", str(root))
    return root


def _write(tmp_path, text):
    path = tmp_path / "exp.ini"
    path.write_text(text, encoding="ascii")
    return path


def test_config_roundtrips_bit_exactly(tmp_path):
    cfg = ExperimentConfig(scenario="frame_reconstruct", omega=2.0,
                           r_values=(0.4, 0.2, 0.1), seeds=(3,),
                           cut=1e-12, output="demo")
    path = _write(tmp_path, config_to_ini(cfg))
    assert load_config(path) == cfg


def test_config_rejects_unknown_key(tmp_path):
    path = _write(tmp_path, "[experiment]\nscenario = lattice\nwat = 1\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[experiment]\nscenario = flat\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path,
                           "[experiment]\nscenario = lattice\nomega = x\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path,
                           "[experiment]\nscenario = lattice\nomega = -1\n"))


def test_config_requires_file_and_section(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[other]\nscenario = lattice\n"))


def test_overrides_win_over_file(tmp_path):
    path = _write(tmp_path, "[experiment]\nscenario = baseline1d\n"
                            "gamma = 0.8\n")
    cfg = load_config(path, {"gamma": "0.9", "seeds": "7"})
    assert cfg.gamma == 0.9
    assert cfg.seeds == (7,)


def test_scenario_defaults_are_applied(tmp_path):
    cfg = load_config(_write(tmp_path, "[experiment]\nscenario = theorem73\n"))
    assert cfg.tau_values == (0.0, 0.1, 0.3)
    assert cfg.r == 0.1
    # file values still win over the scenario layer
    cfg = load_config(_write(tmp_path, "[experiment]\nscenario = theorem73\n"
                                       "r = 0.3\n"))
    assert cfg.r == 0.3


def test_baseline_run_writes_artifacts_and_is_deterministic(tmp_path, outroot):
    path = _write(tmp_path, "[experiment]\nscenario = baseline1d\n"
                            "seeds = 0\n")
    assert main(["run", str(path)]) == 0
    outdir = outroot / "baseline1d"
    results = (outdir / "results.csv").read_bytes()
    manifest = (outdir / "manifest.txt").read_bytes()
    assert (outdir / "plot_results.py").exists()
    assert (outdir / "timings.txt").exists()

    text = manifest.decode("ascii")
    assert "plancherel_scale = " in text
    assert "tolerance.reconstruction_rel" in text
    assert "config.gamma = 0.8" in text

    # the echoed config reloads to the identical object
    assert load_config(outdir / "config.ini").scenario == "baseline1d"

    assert main(["run", str(path)]) == 0
    assert (outdir / "results.csv").read_bytes() == results
    assert (outdir / "manifest.txt").read_bytes() == manifest


def test_failing_invariant_exits_one(tmp_path, outroot, capsys):
    # a lattice this coarse cannot reach the finest-radius tolerance; the
    # run must fail and say which invariant broke
    path = _write(tmp_path, "[experiment]\nscenario = frame_reconstruct\n"
                            "seeds = 0\nr_values = 0.8\n")
    assert main(["run", str(path)]) == 1
    err = capsys.readouterr().err
    assert "frame.error_at_finest" in err


def test_lattice_scenario_runs(tmp_path, outroot):
    path = _write(tmp_path, "[experiment]\nscenario = lattice\n"
                            "r_values = 0.4\ndomain_radius = 1.2\n"
                            "seeds = 0\n")
    assert main(["run", str(path)]) == 0
    rows = (outroot / "lattice" / "results.csv").read_text().splitlines()
    assert rows[0].startswith("r,n_points,min_separation")
    assert len(rows) == 2 and rows[1].endswith("true")


def test_inadmissible_tau_is_informative_not_fatal(tmp_path, outroot):
    path = _write(tmp_path, "[experiment]\nscenario = theorem73\n"
                            "r = 0.4\ntau_values = 0.6\nk_schedule =\n"
                            "seeds = 0\n")
    assert main(["run", str(path)]) == 0
    body = (outroot / "theorem73" / "results.csv").read_text()
    line = body.splitlines()[1]
    assert ",false," in line  # admissible column
    assert "info.admissible_all = false" in \
        (outroot / "theorem73" / "manifest.txt").read_text()


def test_bad_config_exits_two(tmp_path, outroot, capsys):
    path = _write(tmp_path, "[experiment]\nscenario = lattice\nbogus = 1\n")
    assert main(["run", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_verify_subset_and_empty(capsys):
    assert verify_all(only=["baseline1d"]) == 0
    out = capsys.readouterr().out
    assert "baseline1d.routes" in out and "pass" in out
    assert verify_all(only=[""]) == 0
    assert "vacuous" in capsys.readouterr().err


def test_verify_mutation_hook_trips_parseval(capsys):
    assert verify_all(perturb_scale=0.01, only=["transforms"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_calibrate_subcommand(capsys):
    assert main(["calibrate"]) == 0
    out = capsys.readouterr().out
    scale = float(out.splitlines()[0].split("=")[1])
    assert scale == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-10)
