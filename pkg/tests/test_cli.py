import json

import numpy as np
import pytest

from fodsid import FracSystem, augment
from fodsid import io as fio
from fodsid.cli import main
from fodsid.ident import operator_norm


@pytest.fixture
def scalar_json(tmp_path):
    path = tmp_path / "system.json"
    fio.save_system(FracSystem(alpha=[0.5], A=[[0.2]], sigma=0.0), path)
    return path


@pytest.fixture
def noisy_json(tmp_path):
    path = tmp_path / "noisy.json"
    fio.save_system(FracSystem(alpha=[0.5], A=[[0.2]], sigma=0.1), path)
    return path


def write_cfg(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run(argv):
    return main([str(a) for a in argv])


class TestSimulateCommand:
    def test_hand_value_in_csv(self, tmp_path, scalar_json):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(scalar_json), "K": 2, "x0": [1.0],
                         "out": str(tmp_path / "o"), "plot": False})
        assert run(["simulate", "--config", cfg]) == 0
        lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "k,x1"
        assert lines[1] == "0,1.0"
        assert lines[2] == "1,0.7"
        assert lines[3] == "2,0.615"

    def test_missing_system_file(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(tmp_path / "ghost.json"), "K": 2,
                         "out": str(tmp_path / "o"), "plot": False})
        assert run(["simulate", "--config", cfg]) == 3
        err = json.loads(capsys.readouterr().out)
        assert "ghost.json" in err["error"]["message"]
        assert err["error"]["type"] == "DataError"

    def test_rerun_is_byte_identical(self, tmp_path, noisy_json):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(noisy_json), "K": 40, "x0": [1.0],
                         "master_seed": 9, "out": str(tmp_path / "o"),
                         "plot": False})
        assert run(["simulate", "--config", cfg]) == 0
        first = (tmp_path / "o" / "trajectory.csv").read_bytes()
        assert run(["simulate", "--config", cfg, "--force"]) == 0
        assert (tmp_path / "o" / "trajectory.csv").read_bytes() == first

    def test_refuses_overwrite_without_force(self, tmp_path, scalar_json, capsys):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(scalar_json), "K": 2,
                         "out": str(tmp_path / "o"), "plot": False})
        assert run(["simulate", "--config", cfg]) == 0
        assert run(["simulate", "--config", cfg]) == 2
        assert "refusing to overwrite" in capsys.readouterr().out

    def test_augmented_generator(self, tmp_path, scalar_json):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(scalar_json), "K": 2, "x0": [1.0],
                         "generator": "augmented", "p": 1,
                         "out": str(tmp_path / "o"), "plot": False})
        assert run(["simulate", "--config", cfg]) == 0
        lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
        k, x = lines[3].split(",")
        assert k == "2"
        assert float(x) == pytest.approx(0.49, rel=1e-12)

    def test_plot_written(self, tmp_path, scalar_json):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(scalar_json), "K": 5, "x0": [1.0],
                         "out": str(tmp_path / "o")})
        assert run(["simulate", "--config", cfg]) == 0
        assert (tmp_path / "o" / "trajectory.png").exists()


class TestIdentifyCommand:
    def _simulate(self, tmp_path, system_json, K=50):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(system_json), "K": K, "x0": [1.0],
                         "generator": "augmented", "p": 2,
                         "out": str(tmp_path / "o"), "plot": False})
        assert run(["simulate", "--config", cfg]) == 0
        return tmp_path / "o" / "trajectory.csv"

    def test_end_to_end_recovery(self, tmp_path, scalar_json):
        traj_csv = self._simulate(tmp_path, scalar_json)
        cfg = write_cfg(tmp_path, "id.json",
                        {"trajectory": str(traj_csv), "p": 2,
                         "out": str(tmp_path / "o")})
        assert run(["identify", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "o" / "estimate.json").read_text())
        truth = augment(FracSystem(alpha=[0.5], A=[[0.2]]), 2).Atilde
        err = operator_norm(np.array(doc["Atilde_hat"]) - truth)
        assert err <= 1e-8
        assert doc["degenerate"] is False
        assert doc["provenance"]["tool"] == "fodsid"

    def test_structured_matches_top_row(self, tmp_path, scalar_json):
        traj_csv = self._simulate(tmp_path, scalar_json)
        full_cfg = write_cfg(tmp_path, "idf.json",
                             {"trajectory": str(traj_csv), "p": 2,
                              "out": str(tmp_path / "of")})
        structured_cfg = write_cfg(tmp_path, "ids.json",
                                   {"trajectory": str(traj_csv), "p": 2,
                                    "mode": "structured",
                                    "out": str(tmp_path / "os")})
        assert run(["identify", "--config", full_cfg]) == 0
        assert run(["identify", "--config", structured_cfg]) == 0
        full = json.loads((tmp_path / "of" / "estimate.json").read_text())
        structured = json.loads((tmp_path / "os" / "estimate.json").read_text())
        np.testing.assert_allclose(np.array(full["Atilde_hat"])[0],
                                   np.array(structured["Atilde_hat"])[0],
                                   atol=1e-8)

    def test_short_trajectory_fails(self, tmp_path, capsys):
        path = tmp_path / "short.csv"
        path.write_text("k,x1\r\n0,1.0\r\n")
        cfg = write_cfg(tmp_path, "id.json",
                        {"trajectory": str(path), "p": 1,
                         "out": str(tmp_path / "o")})
        assert run(["identify", "--config", cfg]) == 3

    def test_strict_degenerate_exit_4(self, tmp_path, capsys):
        path = tmp_path / "zeros.csv"
        rows = ["k,x1"] + [f"{k},0.0" for k in range(20)]
        path.write_text("\r\n".join(rows) + "\r\n")
        cfg = write_cfg(tmp_path, "id.json",
                        {"trajectory": str(path), "p": 2,
                         "out": str(tmp_path / "o")})
        assert run(["identify", "--config", cfg, "--strict"]) == 4
        assert run(["identify", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "o" / "estimate.json").read_text())
        assert doc["degenerate"] is True

    def test_inputs_need_system(self, tmp_path, capsys):
        sys_b = FracSystem(alpha=[0.5], A=[[0.2]], B=[[1.0]], sigma=0.0)
        sys_path = tmp_path / "sysb.json"
        fio.save_system(sys_b, sys_path)
        sim_cfg = write_cfg(tmp_path, "sim.json",
                            {"system": str(sys_path), "K": 30, "x0": [1.0],
                             "sigma_u": 1.0, "out": str(tmp_path / "o"),
                             "plot": False})
        assert run(["simulate", "--config", sim_cfg]) == 0
        traj_csv = tmp_path / "o" / "trajectory.csv"
        no_sys = write_cfg(tmp_path, "id1.json",
                           {"trajectory": str(traj_csv), "p": 2,
                            "out": str(tmp_path / "o1")})
        assert run(["identify", "--config", no_sys]) == 2
        with_sys = write_cfg(tmp_path, "id2.json",
                             {"trajectory": str(traj_csv), "p": 2,
                              "system": str(sys_path),
                              "out": str(tmp_path / "o2")})
        assert run(["identify", "--config", with_sys]) == 0
        doc = json.loads((tmp_path / "o2" / "estimate.json").read_text())
        assert doc["mode"] == "with_inputs"


class TestCertifyCommand:
    def test_k_equals_K_zero_logdet(self, tmp_path, noisy_json):
        cfg = write_cfg(tmp_path, "cert.json",
                        {"system": str(noisy_json), "p": 2, "K": 200, "k": 200,
                         "out": str(tmp_path / "o")})
        assert run(["certify", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "o" / "certificate.json").read_text())
        assert doc["logdet_ratio"] == pytest.approx(0.0, abs=1e-10)
        assert doc["valid"] is True
        assert doc["provenance"]["config"]["K"] == 200

    def test_with_inputs_variant(self, tmp_path):
        sys_b = FracSystem(alpha=[0.5], A=[[0.2]], B=[[1.0]], sigma=0.1)
        sys_path = tmp_path / "sysb.json"
        fio.save_system(sys_b, sys_path)
        cfg = write_cfg(tmp_path, "cert.json",
                        {"system": str(sys_path), "p": 2, "K": 100, "k": 10,
                         "variant": "with_inputs", "sigma_u": 0.5,
                         "out": str(tmp_path / "o")})
        assert run(["certify", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "o" / "certificate.json").read_text())
        assert doc["variant"] == "with_inputs"
        assert doc["sigma_u"] == 0.5


class TestMontecarloCommand:
    def test_thread_counts_byte_identical(self, tmp_path, noisy_json):
        blobs = []
        for threads in (1, 2, 8):
            out = tmp_path / f"o{threads}"
            cfg = write_cfg(tmp_path, f"mc{threads}.json",
                            {"system": str(noisy_json), "p": 2,
                             "K_list": [60, 120], "trials": 8,
                             "master_seed": 5, "threads": threads,
                             "out": str(out), "plot": False})
            assert run(["montecarlo", "--config", cfg]) == 0
            blobs.append((out / "campaign.csv").read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]

    def test_seed_flag_overrides(self, tmp_path, noisy_json):
        cfg = write_cfg(tmp_path, "mc.json",
                        {"system": str(noisy_json), "p": 2, "K_list": [60],
                         "trials": 4, "master_seed": 5,
                         "out": str(tmp_path / "a"), "plot": False})
        assert run(["montecarlo", "--config", cfg]) == 0
        assert run(["montecarlo", "--config", cfg, "--seed", "6",
                    "--out", str(tmp_path / "b")]) == 0
        a = fio.read_campaign_csv(tmp_path / "a" / "campaign.csv")
        b = fio.read_campaign_csv(tmp_path / "b" / "campaign.csv")
        assert a != b
        meta = json.loads((tmp_path / "b" / "campaign.meta.json").read_text())
        assert meta["provenance"]["config"]["master_seed"] == 6

    def test_campaign_figure(self, tmp_path, noisy_json):
        cfg = write_cfg(tmp_path, "mc.json",
                        {"system": str(noisy_json), "p": 2, "K_list": [60],
                         "trials": 4, "out": str(tmp_path / "o")})
        assert run(["montecarlo", "--config", cfg]) == 0
        assert (tmp_path / "o" / "campaign.png").exists()


class TestForecastCommand:
    @pytest.fixture
    def eeg_csv(self, tmp_path):
        from test_forecast import synthetic_series, write_csv
        path = tmp_path / "eeg.csv"
        write_csv(path, synthetic_series(), header=["c1", "c2", "c3", "c4"])
        return path

    def test_fifteen_windows_and_sweep(self, tmp_path, eeg_csv):
        cfg = write_cfg(tmp_path, "fc.json",
                        {"data": str(eeg_csv), "window_size": 10, "p": 2,
                         "window_sizes": [10, 15, 25, 30],
                         "out": str(tmp_path / "o"), "plot": False})
        assert run(["forecast", "--config", cfg]) == 0
        meta = json.loads((tmp_path / "o" / "forecast.meta.json").read_text())
        assert meta["metrics"]["num_windows"] == 15
        sweep = (tmp_path / "o" / "forecast_sweep.csv").read_text().splitlines()
        assert len(sweep) == 5  # header + 4 sizes

    def test_figures(self, tmp_path, eeg_csv):
        cfg = write_cfg(tmp_path, "fc.json",
                        {"data": str(eeg_csv), "window_size": 10,
                         "window_sizes": [10, 15],
                         "out": str(tmp_path / "o")})
        assert run(["forecast", "--config", cfg]) == 0
        assert (tmp_path / "o" / "forecast.png").exists()
        assert (tmp_path / "o" / "forecast_sweep.png").exists()


class TestCliPlumbing:
    def test_unknown_config_key(self, tmp_path, scalar_json, capsys):
        cfg = write_cfg(tmp_path, "sim.json",
                        {"system": str(scalar_json), "K": 2, "sead": 1})
        assert run(["simulate", "--config", cfg]) == 2
        assert "sead" in capsys.readouterr().out

    def test_flag_not_applicable(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "id.json", {"trajectory": "t.csv", "p": 2})
        assert run(["identify", "--config", cfg, "--seed", "3"]) == 2
        assert "--seed does not apply" in capsys.readouterr().out

    def test_missing_config_keys_reported(self, capsys):
        assert run(["simulate"]) == 2
        out = capsys.readouterr().out
        assert "missing required" in out
