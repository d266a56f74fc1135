"""End-to-end CLI behavior: commands, exit codes, file outputs."""

import json
import os

import pytest

from vuenet.cli import EXIT_CONFIG, EXIT_NO_TAIL_DATA, EXIT_OK, main

FAST = ["--override", "U=4", "--override", "horizon_slots=2000"]


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestRun:
    def test_writes_report_traces_figure(self, tmp_path, capsys):
        rc = main(["run", "--preset", "quick", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        assert (tmp_path / "run_proposed_0.json").exists()
        assert (tmp_path / "run_proposed_0_traces.csv").exists()
        assert (tmp_path / "run_proposed_0.png").exists()
        out = capsys.readouterr().out
        assert "proposed" in out and "outage_prob" in out

    def test_no_figures_flag(self, tmp_path):
        rc = main(["run", "--preset", "quick", "--no-figures",
                   "--out", str(tmp_path)])
        assert rc == EXIT_OK
        assert not (tmp_path / "run_proposed_0.png").exists()

    def test_missing_config_exits_2_naming_path(self, tmp_path, capsys):
        rc = main(["run", "--config", "missing/conf.yaml", "--out", str(tmp_path)])
        assert rc == EXIT_CONFIG
        assert "missing/conf.yaml" in capsys.readouterr().err

    def test_bad_override_exits_2(self, tmp_path, capsys):
        rc = main(["run", "--override", "nonsense", "--out", str(tmp_path)])
        assert rc == EXIT_CONFIG
        assert "key=value" in capsys.readouterr().err

    def test_repeat_seed_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            rc = main(["run", "--preset", "quick", "--seed", "7",
                       "--no-figures", "--out", str(out)])
            assert rc == EXIT_OK
        assert (a / "run_proposed_7.json").read_bytes() == \
               (b / "run_proposed_7.json").read_bytes()
        assert (a / "run_proposed_7_traces.csv").read_bytes() == \
               (b / "run_proposed_7_traces.csv").read_bytes()

    def test_table2_preset_expands_to_four_reports(self, tmp_path):
        rc = main(["run", "--preset", "table2-u20", *FAST,
                   "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        names = sorted(p.name for p in tmp_path.glob("run_*.json"))
        assert names == [
            "run_baseline1_0.json",
            "run_baseline2_0.json",
            "run_fixed_power_0.json",
            "run_proposed_0.json",
        ]

    def test_report_embeds_config_and_seed(self, tmp_path):
        main(["run", "--preset", "quick", "--seed", "3",
              "--no-figures", "--out", str(tmp_path)])
        data = read_json(tmp_path / "run_proposed_3.json")
        assert data["config"]["seed"] == 3
        assert data["config"]["u_pairs"] == 4
        assert data["comms"]["raw_sample_messages"] == 0

    def test_config_file_plus_cli_override(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("U: 4\nhorizon_slots: 2000\ncontrol:\n  policy: baseline1\n")
        rc = main(["run", "--config", str(cfg), "--override", "U=2",
                   "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        data = read_json(tmp_path / "run_baseline1_0.json")
        assert data["config"]["u_pairs"] == 2
        # file's partial control section kept the calibrated default V
        assert data["config"]["control"]["V"] == 1e11


class TestCompareFl:
    def test_synthetic_recovers_truth(self, tmp_path, capsys):
        rc = main(["compare-fl", "--synthetic", "50,0.3,3000",
                   "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        data = read_json(tmp_path / "compare_fl.json")
        assert data["synthetic"] == {"sigma": 50.0, "xi": 0.3, "k": 3000}
        for fit in (data["federated"], data["centralized"]):
            assert abs(fit["sigma"] - 50.0) / 50.0 < 0.10
            assert abs(fit["xi"] - 0.3) / 0.3 < 0.10
        assert data["federated"]["comms"]["raw_sample_messages"] == 0
        assert data["centralized"]["comms"]["raw_sample_messages"] == 1
        ccdf = data["ccdf"]
        assert len(ccdf["m_kb"]) == len(ccdf["empirical"])
        assert len(ccdf["m_kb"]) <= 400

    def test_no_tail_data_exits_3(self, tmp_path, capsys):
        rc = main(["compare-fl", *FAST, "--override", "arrival_mean_bits=0",
                   "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_NO_TAIL_DATA
        data = read_json(tmp_path / "compare_fl.json")
        assert data["no_tail_data"] is True
        assert data["total_samples"] == 0
        assert "no tail data" in capsys.readouterr().out

    def test_sim_mode_emits_both_fits(self, tmp_path):
        rc = main(["compare-fl", "--override", "U=8",
                   "--override", "horizon_slots=4000",
                   "--override", "control.policy=fixed_power",
                   "--rounds", "30", "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        data = read_json(tmp_path / "compare_fl.json")
        assert data["total_samples"] > 0
        assert set(data["ccdf"]) == {"m_kb", "empirical", "federated",
                                     "centralized"}
        # federated moves model messages, centralized moves raw samples
        fed, cen = data["federated"]["comms"], data["centralized"]["comms"]
        assert fed["raw_sample_messages"] == 0
        assert cen["uplink_bytes"] == 8 * data["total_samples"]

    def test_bad_synthetic_spec(self, tmp_path, capsys):
        rc = main(["compare-fl", "--synthetic", "50,0.3",
                   "--out", str(tmp_path)])
        assert rc == EXIT_CONFIG
        assert "SIGMA,XI,K" in capsys.readouterr().err


class TestSweep:
    def test_grid_counts(self, tmp_path, capsys):
        rc = main(["sweep", "--param", "U", "--values", "2,4",
                   "--seed", "0", "--seed", "1",
                   "--override", "horizon_slots=2000",
                   "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        lines = (tmp_path / "sweep_U.csv").read_text().splitlines()
        assert lines[0] == "param,value,seed,metric,metric_value"
        groups = {tuple(l.split(",")[:3]) for l in lines[1:]}
        assert len(groups) == 4  # 2 values x 2 seeds
        power_rows = [l for l in lines[1:] if ",avg_power_w," in l]
        assert len(power_rows) == 4

    def test_unknown_param_exits_2(self, tmp_path, capsys):
        rc = main(["sweep", "--param", "bogus", "--values", "1",
                   "--out", str(tmp_path)])
        assert rc == EXIT_CONFIG
        assert "u_pairs" in capsys.readouterr().err

    def test_empty_values_exit_2(self, tmp_path, capsys):
        rc = main(["sweep", "--param", "U", "--values", ",",
                   "--out", str(tmp_path)])
        assert rc == EXIT_CONFIG
        assert "at least one value" in capsys.readouterr().err

    def test_dotted_param(self, tmp_path):
        rc = main(["sweep", "--param", "control.V", "--values", "1e10,1e11",
                   *FAST, "--no-figures", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        assert (tmp_path / "sweep_control_V.csv").exists()


class TestValidateConfig:
    def test_echoes_resolved_yaml(self, capsys):
        rc = main(["validate-config", "--override", "U=40"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        import yaml

        data = yaml.safe_load(out)
        assert data["u_pairs"] == 40
        assert data["control"]["policy"] == "proposed"

    def test_invalid_exits_2(self, capsys):
        rc = main(["validate-config", "--override", "u_pairs=0"])
        assert rc == EXIT_CONFIG
        assert "config" in capsys.readouterr().err
