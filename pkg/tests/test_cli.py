import csv
import json
from pathlib import Path

import pytest

from vanetopt.cli import main
from vanetopt.config import (
    ConfigError,
    config_from_dict,
    config_to_json,
    load_config,
)

BASE_TOML = """
[run]
seed = 5
gamma = 0.3
output_dir = "{out}"

[scenario]
archetype = "increasing"
duration_s = 3
rng_seed = 9

[evo]
pop_size = 12
max_generations = 2
"""


def write_config(tmp_path, text=None, name="cfg.toml", out=None):
    out = out or (tmp_path / "out")
    path = tmp_path / name
    path.write_text((text or BASE_TOML).format(out=out))
    return path, Path(out)


class TestConfig:
    def test_round_trip_is_identity(self, tmp_path):
        path, _ = write_config(tmp_path)
        cfg = load_config(path)
        again = config_from_dict(json.loads(config_to_json(cfg)))
        assert again == cfg

    def test_json_equivalent_accepted(self, tmp_path):
        path, out = write_config(tmp_path)
        cfg = load_config(path)
        json_path = tmp_path / "cfg.json"
        json_path.write_text(config_to_json(cfg))
        assert load_config(json_path) == cfg

    def test_threshold_units_normalized(self, tmp_path):
        path, _ = write_config(tmp_path)
        cfg = load_config(path)
        qos = cfg.thresholds.to_qos()
        assert qos.sinr_min == pytest.approx(10.0)  # 10 dB
        assert qos.delay_max_s == pytest.approx(0.1)  # 100 ms

    def test_missing_seed_is_field_precise(self, tmp_path):
        path, _ = write_config(
            tmp_path, text="[scenario]\narchetype='increasing'\nduration_s=3\n"
        )
        with pytest.raises(ConfigError, match="seed"):
            load_config(path)

    def test_bad_section_key_is_field_precise(self, tmp_path):
        text = BASE_TOML + "\n[channel]\nbogus_knob = 3\n"
        path, _ = write_config(tmp_path, text=text)
        with pytest.raises(ConfigError, match="channel"):
            load_config(path)

    def test_scenario_and_trajectory_exclusive(self, tmp_path):
        text = BASE_TOML + "\n[trajectory]\npath = 'x.csv'\n"
        path, _ = write_config(tmp_path, text=text)
        with pytest.raises(ConfigError, match="exactly one"):
            load_config(path)

    def test_gamma_list_accepted(self, tmp_path):
        text = BASE_TOML.replace("gamma = 0.3", "gamma = [0.0, 0.3]")
        path, _ = write_config(tmp_path, text=text)
        assert load_config(path).gammas == (0.0, 0.3)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRunCommand:
    def test_writes_all_artifacts(self, tmp_path):
        path, out = write_config(tmp_path)
        assert main(["run", "--config", str(path)]) == 0
        rows = read_csv(out / "metrics.csv")
        assert rows[0] == [
            "second",
            "n_vehicles",
            "avg_delay_s",
            "load_variance",
            "avg_sinr",
            "path_stability",
        ]
        assert len(rows) == 4  # header + 3 seconds
        for t in (1, 2, 3):
            pareto_rows = read_csv(out / f"pareto_t{t}.csv")
            assert pareto_rows[0] == ["f1", "f2", "f3", "f4", "violation"]
            assert len(pareto_rows) >= 2
        assert (out / "pareto_fronts.svg").exists()
        assert (out / "metrics_timeseries.svg").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert "0.3" in summary["gammas"]
        assert summary["gammas"]["0.3"]["seconds"] == 3

    def test_gamma_sweep_writes_subdirectories(self, tmp_path):
        path, out = write_config(tmp_path)
        code = main(
            ["run", "--config", str(path), "--gamma", "0,0.3,0.5,0.8"]
        )
        assert code == 0
        for g in ("0", "0.3", "0.5", "0.8"):
            assert (out / f"gamma_{g}" / "metrics.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["gammas"]) == {"0", "0.3", "0.5", "0.8"}

    def test_rerun_byte_identical_metrics(self, tmp_path):
        path, out = write_config(tmp_path)
        assert main(["run", "--config", str(path)]) == 0
        first = (out / "metrics.csv").read_bytes()
        assert main(["run", "--config", str(path)]) == 0
        assert (out / "metrics.csv").read_bytes() == first

    def test_seed_override_changes_output(self, tmp_path):
        path, out = write_config(tmp_path)
        assert main(["run", "--config", str(path)]) == 0
        first = (out / "metrics.csv").read_bytes()
        assert main(["run", "--config", str(path), "--seed", "77"]) == 0
        assert (out / "metrics.csv").read_bytes() != first

    def test_invalid_config_exits_2(self, tmp_path):
        path, _ = write_config(
            tmp_path, text="[run]\nseed = 5\n"
        )  # no scenario/trajectory
        assert main(["run", "--config", str(path)]) == 2

    def test_trajectory_input_path(self, tmp_path):
        assert (
            main(
                [
                    "gen-scenario",
                    "--archetype",
                    "decreasing",
                    "--duration",
                    "3",
                    "--seed",
                    "4",
                    "--out",
                    str(tmp_path / "tr.csv"),
                ]
            )
            == 0
        )
        out = tmp_path / "out_traj"
        text = """
[run]
seed = 5
output_dir = "{out}"

[trajectory]
path = "%s"

[evo]
pop_size = 8
max_generations = 1
""" % (tmp_path / "tr.csv")
        path, out = write_config(tmp_path, text=text, name="traj.toml", out=out)
        assert main(["run", "--config", str(path)]) == 0
        assert len(read_csv(out / "metrics.csv")) == 4


class TestGenScenario:
    def test_increasing_counts_end_above_start(self, tmp_path):
        out = tmp_path / "inc.csv"
        code = main(
            [
                "gen-scenario",
                "--archetype",
                "increasing",
                "--duration",
                "40",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["frame", "id", "x", "y", "xVelocity", "yVelocity"]
        by_frame = {}
        for frame, vid, *_ in rows[1:]:
            by_frame.setdefault(int(frame), set()).add(vid)
        assert len(by_frame[13]) < len(by_frame[988])

    def test_decreasing_counts_end_below_start(self, tmp_path):
        out = tmp_path / "dec.csv"
        assert (
            main(
                [
                    "gen-scenario",
                    "--archetype",
                    "decreasing",
                    "--duration",
                    "40",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
        rows = read_csv(out)
        by_frame = {}
        for frame, vid, *_ in rows[1:]:
            by_frame.setdefault(int(frame), set()).add(vid)
        assert len(by_frame[13]) > len(by_frame[988])

    def test_zero_duration_rejected(self, tmp_path):
        code = main(
            [
                "gen-scenario",
                "--archetype",
                "increasing",
                "--duration",
                "0",
                "--out",
                str(tmp_path / "x.csv"),
            ]
        )
        assert code == 2

    def test_unknown_archetype_lists_names(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "gen-scenario",
                    "--archetype",
                    "sideways",
                    "--duration",
                    "10",
                    "--out",
                    str(tmp_path / "x.csv"),
                ]
            )
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert "increasing" in err and "decreasing" in err


ORACLE_TOML = """
[run]
seed = 3
gamma = 0.3
output_dir = "{out}"

[evo]
pop_size = 24
max_generations = 12

[oracle]
vehicles = [
    [1, 0.0, 0.0, 30.0, 0.0],
    [2, 15.0, 0.0, 31.0, 0.0],
    [3, 120.0, 4.0, 29.0, 0.0],
    [4, 150.0, 4.0, 30.0, 0.0],
]
s_b_grid = [1e5, 4e5]
p_n_grid = [1e3, 1e4]
max_hops = 1
"""


class TestOracleCommand:
    def test_writes_front_and_report(self, tmp_path):
        path, out = write_config(tmp_path, text=ORACLE_TOML, name="oracle.toml")
        assert main(["oracle", "--config", str(path)]) == 0
        front_rows = read_csv(out / "oracle_front.csv")
        assert front_rows[0] == ["f1", "f2", "f3", "f4", "violation"]
        assert len(front_rows) >= 2
        report = json.loads((out / "oracle_report.json").read_text())
        assert report["oracle_front_size"] >= 1
        assert report["dominance_violations"] == 0
        assert 0.0 <= report["hypervolume_ratio"] <= 1.0 + 1e-9

    def test_oversized_instance_refused(self, tmp_path):
        text = ORACLE_TOML.replace("max_hops = 1", "max_hops = 3").replace(
            "s_b_grid = [1e5, 4e5]", "s_b_grid = [1e5, 4e5, 7e5, 1e6, 2e6]"
        )
        vehicles = ",\n    ".join(
            f"[{i}, {15.0 * i}, 0.0, 30.0, 0.0]" for i in range(1, 7)
        )
        start = text.index("vehicles = [")
        end = text.index("]", text.index("[4,")) + 1
        text = text[:start] + f"vehicles = [\n    {vehicles},\n]" + text[end:]
        path, _ = write_config(tmp_path, text=text, name="big.toml")
        assert main(["oracle", "--config", str(path)]) == 2

    def test_malformed_grid_exits_2(self, tmp_path):
        text = ORACLE_TOML.replace("s_b_grid = [1e5, 4e5]", "s_b_grid = []")
        path, _ = write_config(tmp_path, text=text, name="bad.toml")
        assert main(["oracle", "--config", str(path)]) == 2
