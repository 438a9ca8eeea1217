import json
import subprocess
import sys

import numpy as np
import pytest

from gibbswave import cli
from gibbswave.experiments import ConfigError, galerkin_errors, parse_config, write_csv
from gibbswave.sampling import GibbsSpec, SeededStream, sample_ensemble

SMALL = {
    "sample": "n_modes = 8\nn_samples = 50\n",
    "evolve": "n_modes = 8\nt_final = 0.05\nrecord_every = 10\n",
    "invariance": "n_modes = 8\nn_ensemble = 500\nt_final = 0.02\ndt = 0.01\ncheck_half_dt = false\n",
    "tails": "n_modes = 8\nn_samples = 1000\ntails_doubling = false\n",
    "converge": "n_ref = 16\nn_list = 4, 8\nt_final = 0.05\npicard_modes = 8\npicard_T = 0.02\npicard_dt = 1e-3\n",
    "growth": "n_modes = 8\nn_ensemble = 4\nt_final = 1\ndt = 0.01\nrecord_every = 10\n",
}


def run_cli(tmp_path, command, text, seed=7, workers=1, out="out"):
    cfg = tmp_path / f"{command}.cfg"
    cfg.write_text(text)
    argv = [command, "--config", str(cfg), "--seed", str(seed), "--out", str(tmp_path / out)]
    if workers is not None:
        argv += ["--workers", str(workers)]
    return cli.main(argv)


def test_defaults_and_comments():
    cfg = parse_config("# comment\nalpha = 2   # inline\n\nn_list = 16, 32\n")
    assert cfg["alpha"] == 2.0 and cfg["p"] == 5.0 and cfg["n_modes"] == 64
    assert cfg["n_list"] == (16, 32)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("alhpa = 2\n")


def test_alpha_out_of_range_rejected():
    with pytest.raises(ConfigError, match="0 < alpha < 3"):
        parse_config("alpha = 3.5\n")


def test_p_window_cited():
    with pytest.raises(ConfigError, match=r"max\(4,2α\) < p < 6"):
        parse_config("alpha = 2.8\np = 5\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        parse_config("n_modes = many\n")


def test_csv_format(tmp_path):
    write_csv(tmp_path / "x.csv", ["a", "b"], [(0.1, 3), (True, "z")])
    assert (tmp_path / "x.csv").read_bytes() == b"a,b\r\n0.10000000000000001,3\r\n1,z\r\n"


def test_sigma_echo_and_manifest(tmp_path, capsys):
    assert run_cli(tmp_path, "sample", SMALL["sample"]) == 0
    assert "sigma = 3/2 - 4/p = 0.7" in capsys.readouterr().out
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["sigma"] == pytest.approx(0.7)
    assert man["seed"] == 7 and man["config"]["n_modes"] == 8
    assert sorted(man["outputs"]) == ["coefficients.csv", "hs_histogram.csv", "norms.csv"]
    for name in man["outputs"]:
        assert (tmp_path / "out" / name).exists()


def test_invalid_config_exit_code(tmp_path):
    assert run_cli(tmp_path, "sample", "alpha = 3.5\n") == 1
    assert run_cli(tmp_path, "sample", "foo = 1\n") == 1
    assert run_cli(tmp_path, "invariance", "n_ensemble = 10\n") == 1
    assert not (tmp_path / "out").exists()


def test_numerical_abort_exit_code(tmp_path, monkeypatch):
    from gibbswave import experiments
    from gibbswave.dynamics import NumericalAbort

    def blow_up(*args, **kwargs):
        raise NumericalAbort("non-finite state", members=[0], time=0.1)

    monkeypatch.setattr(experiments, "evolve", blow_up)
    assert run_cli(tmp_path, "evolve", SMALL["evolve"]) == 2


def test_rejected_invariance_exit_code(tmp_path, monkeypatch):
    from gibbswave import experiments
    from gibbswave.statistics import KSResult

    def rejecting(*args, **kwargs):
        return {name: KSResult(0.5, 1e-9, 500, 500) for name in experiments.OBSERVABLES}

    monkeypatch.setattr(experiments, "invariance_test", rejecting)
    assert run_cli(tmp_path, "invariance", SMALL["invariance"]) == 3
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["status"] == "rejected" and man["summary"]["invariant"] is False


def test_evolve_zero_time_emits_initial_state_only(tmp_path):
    assert run_cli(tmp_path, "evolve", "n_modes = 8\nt_final = 0\n") == 0
    lines = (tmp_path / "out" / "series.csv").read_text().splitlines()
    assert len(lines) == 1 + 4
    assert all(line.split(",")[2] == "0" for line in lines[1:])
    final = np.loadtxt(tmp_path / "out" / "final_state.csv", delimiter=",", skiprows=1)
    u0, _ = sample_ensemble(GibbsSpec.build(2.0, 8), 7, [0])
    np.testing.assert_array_equal(final[:, 1] + 1j * final[:, 2], u0[0])


def test_evolve_energy_series_and_times(tmp_path):
    assert run_cli(tmp_path, "evolve", SMALL["evolve"]) == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["summary"]["energy_drift"] < 1e-5
    rows = [l.split(",") for l in (tmp_path / "out" / "series.csv").read_text().splitlines()[1:]]
    for name in ("hs_norm", "hamiltonian"):
        t = [float(r[2]) for r in rows if r[1] == name]
        assert np.all(np.diff(t) > 0)


@pytest.mark.parametrize("command", sorted(SMALL))
def test_reruns_are_byte_identical(tmp_path, command):
    assert run_cli(tmp_path, command, SMALL[command], out="a") in (0, 3)
    assert run_cli(tmp_path, command, SMALL[command], out="b", workers=2) in (0, 3)
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["outputs"]
    for name in man["outputs"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_invariance_zero_time(tmp_path):
    assert run_cli(tmp_path, "invariance", "n_modes = 8\nn_ensemble = 500\nt_final = 0\n") == 0
    rows = (tmp_path / "out" / "ks.csv").read_text().splitlines()[1:]
    assert len(rows) == 4
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)


def test_converge_reference_error_is_zero():
    spec = GibbsSpec.build(2.0, 16)
    u, _ = sample_ensemble(spec, 1, [0])
    errs = galerkin_errors(u[0], 2.0, [8, 16], 0.05, 1e-3)
    assert errs[16] == 0.0 and errs[8] > 0


def test_growth_linear_run_is_flat(tmp_path):
    text = SMALL["growth"] + "nonlinear = false\n"
    assert run_cli(tmp_path, "growth", text) == 0
    data = np.loadtxt(tmp_path / "out" / "growth.csv", delimiter=",", skiprows=1, usecols=(0, 2, 3))
    for k in range(4):
        v = data[data[:, 0] == k, 2]
        np.testing.assert_allclose(v, v[0], rtol=1e-12)
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert np.isfinite(man["summary"]["max_sup_ratio"])


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "gibbswave.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for command in SMALL:
        assert command in out.stdout
