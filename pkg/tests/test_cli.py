import filecmp
import os

import numpy as np
import pytest
import yaml

from qutrit_readout.cli import main, read_csv, write_csv
from qutrit_readout.config import (
    DEFAULTS, MHZ, ScenarioConfig, load_config, parse_config, serialize_config,
)
from qutrit_readout.errors import ConfigError

SMALL_SME = {
    "simulation": {"n_traj": 4, "t_final_us": 0.2, "save_every": 20, "record_every": 10,
                   "window_us": [0.0, 0.2]},
    "measurement": {"dt_s": 4e-9},
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert isinstance(cfg, ScenarioConfig)
        assert cfg.data["system"]["chi_mhz"] == DEFAULTS["system"]["chi_mhz"]

    def test_round_trip_idempotent(self, tmp_path):
        raw = {"system": {"chi_mhz": 0.7},
               "simulation": {"initial_state": [[0.5, "0.1+0.2j", 0], ["0.1-0.2j", 0.5, 0],
                                                [0, 0, 0]]}}
        text = serialize_config(parse_config(raw))
        path = tmp_path / "c.yaml"
        path.write_text(text)
        assert serialize_config(load_config(str(path))) == text

    def test_units(self):
        p = parse_config({"system": {"chi_mhz": 0.5, "gamma_1_ge_per_us": 0.02}}).params()
        assert p.chi_qr == pytest.approx(0.5 * MHZ)
        assert p.gamma_1_ge == pytest.approx(2e4)
        assert abs(p.epsilon) == pytest.approx(DEFAULTS["system"]["epsilon_mhz"] * MHZ)

    def test_complex_initial_state(self):
        cfg = parse_config({"simulation": {"initial_state": [[0.5, "0.1+0.2j", 0],
                                                             ["0.1-0.2j", 0.5, 0], [0, 0, 0]]}})
        assert cfg.initial_state()[0, 1] == 0.1 + 0.2j

    @pytest.mark.parametrize("raw,field", [
        ({"system": {"kappa_in_mhz": -1.0}}, "system.kappa_in_mhz"),
        ({"system": {"chi": 1.0}}, "system"),
        ({"measurement": {"eta": 1.2}}, "measurement.eta"),
        ({"simulation": {"n_traj": 2.5}}, "simulation.n_traj"),
        ({"simulation": {"window_us": [1.0, 0.5]}}, "simulation.window_us"),
        ({"simulation": {"initial_state": [[1, 1, 0], [0, 0, 0], [0, 0, 0]]}},
         "simulation.initial_state"),
        ({"filters": {"cp_n": [3]}}, "filters.cp_n"),
        ({"schema_version": 9}, "schema_version"),
        ({"measurement": {"steady_state": "yes"}}, "measurement.steady_state"),
    ])
    def test_errors_name_the_field(self, raw, field):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            parse_config(raw)

    def test_bad_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("system: [1, 2\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_overrides(self):
        cfg = parse_config({}).with_overrides(**{"simulation.seed": 5, "measurement.eta": None})
        assert cfg.data["simulation"]["seed"] == 5
        assert cfg.data["measurement"]["eta"] == DEFAULTS["measurement"]["eta"]


class TestCSV:
    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "x.csv")
        rows = np.array([[0.1, 1e-300], [np.pi, -2.0]])
        write_csv(path, ["a", "b"], rows, {"k": 1})
        meta, header, data = read_csv(path)
        assert meta == {"k": 1} and header == ["a", "b"]
        np.testing.assert_array_equal(data, rows)


class TestCommands:
    def test_amplitudes(self, tmp_path):
        assert main(["amplitudes", "--out", str(tmp_path)]) == 0
        _, header, data = read_csv(tmp_path / "amplitudes.csv")
        assert header[0] == "t" and data.shape[1] == len(header)

    def test_zero_drive(self, tmp_path):
        cfg = write_yaml(tmp_path / "c.yaml", {"system": {"epsilon_mhz": 0.0}})
        assert main(["amplitudes", "--config", cfg, "--out", str(tmp_path)]) == 0
        _, _, data = read_csv(tmp_path / "amplitudes.csv")
        np.testing.assert_array_equal(data[:, 1:], 0.0)

    @pytest.mark.parametrize("cmd", ["sweep", "ramsey", "filters"])
    def test_other_commands(self, tmp_path, cmd):
        assert main([cmd, "--out", str(tmp_path)]) == 0
        assert os.listdir(tmp_path)

    def test_sweep_peak_between_resonances(self, tmp_path):
        main(["sweep", "--out", str(tmp_path)])
        meta, _, _ = read_csv(tmp_path / "sweep.csv")
        assert -0.6 < meta["argmax_delta_mhz"][0] < 0.0

    def test_dump_config(self, capsys):
        assert main(["dump-config", "--seed", "4"]) == 0
        data = yaml.safe_load(capsys.readouterr().out)
        assert data["simulation"]["seed"] == 4

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = write_yaml(tmp_path / "c.yaml", {"measurement": {"eta": 2.0}})
        assert main(["sme", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "measurement.eta" in capsys.readouterr().err

    def test_missing_config_exit(self, tmp_path):
        assert main(["sme", "--config", str(tmp_path / "none.yaml")]) == 2

    def test_step_guard_exit(self, tmp_path):
        cfg = write_yaml(tmp_path / "c.yaml", SMALL_SME)
        assert main(["sme", "--config", cfg, "--dt", "1e-7", "--eta", "0.5",
                     "--out", str(tmp_path)]) == 3

    def test_sme_deterministic(self, tmp_path):
        cfg = write_yaml(tmp_path / "c.yaml", SMALL_SME)
        dirs = [tmp_path / name for name in ("a", "b", "c")]
        assert main(["sme", "--config", cfg, "--seed", "7", "--out", str(dirs[0])]) == 0
        assert main(["sme", "--config", cfg, "--seed", "7", "--out", str(dirs[1])]) == 0
        assert main(["sme", "--config", cfg, "--seed", "8", "--out", str(dirs[2])]) == 0
        names = ["mean_state.csv", "iq_points.csv", "records/traj_00003.csv"]
        match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
        assert len(match) == 3 and not errors
        _, mismatch, _ = filecmp.cmpfiles(dirs[0], dirs[2], names, shallow=False)
        assert len(mismatch) == 3

    def test_sme_outputs(self, tmp_path):
        cfg = write_yaml(tmp_path / "c.yaml", SMALL_SME)
        assert main(["sme", "--config", cfg, "--traj", "3", "--out", str(tmp_path)]) == 0
        meta, header, data = read_csv(tmp_path / "iq_points.csv")
        assert data.shape == (3, 5)
        assert np.sum(meta["confusion"]) == 3
        _, _, rec = read_csv(tmp_path / "records" / "traj_00002.csv")
        assert rec.shape == (5, 5)
        _, _, mean = read_csv(tmp_path / "mean_state.csv")
        trace = mean[:, 1] + mean[:, 9] + mean[:, 17]
        np.testing.assert_allclose(trace, 1.0, atol=1e-12)
