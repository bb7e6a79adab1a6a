"""CLI tests: strict config parsing, artifact emission, reproducibility."""

import hashlib
import json

import numpy as np
import pytest

from jamsense.cli import (
    ConfigError,
    PRESETS,
    config_from_dict,
    config_to_dict,
    export_grid,
    main,
    parse_config,
    run_experiment,
)
from jamsense.engine import SimConfig, run
from jamsense.policies import PolicyKind
from jamsense.sensing import FadingKind

# Pinned after validating grid entries against the quadrature oracle
# (see test_sensing); guards the CSV export byte layout as well.
GRID_AWGN_SHA256 = "a45f625f135dd258b60ca9377f9d1b00898fc0eb675845c0089ac89e9fd8906b"
GRID_RAYLEIGH_SHA256 = "f04bca690aa5127743091e90176638cbaec0606f39060910addde81083d843bb"


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


class TestParseConfig:
    def test_minimal_seed_only_gives_reference_scenario(self, tmp_path):
        config = parse_config(write_config(tmp_path, {"seed": 1}))
        assert config.seed == 1
        assert config.n_wn == 10
        assert config.n_fb == 10
        assert config.horizon == 2000
        assert config.replications == 100
        assert config.fading is FadingKind.AWGN
        assert config.policy is PolicyKind.PSEUDO_RANDOM
        assert config.epsilon_n == 0.1
        assert config.detection.threshold == 12.1
        assert config.jammer_bounds == (0.85, 0.98)
        assert config.placement is None  # resolved to the two-ring default
        assert config.resolved_placement().n_nodes == 10

    def test_epsilon_out_of_bounds_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="epsilon_n"):
            parse_config(write_config(tmp_path, {"seed": 1, "epsilon_n": 1.5}))

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key 'sneaky'"):
            parse_config(write_config(tmp_path, {"seed": 1, "sneaky": 2}))

    def test_unknown_nested_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="detection"):
            parse_config(
                write_config(tmp_path, {"detection": {"lambda": 3.0}})
            )

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text('{"seed": 1, "seed": 2}')
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config(path)

    def test_syntax_error_is_line_anchored(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "seed": 1,\n}')
        with pytest.raises(ConfigError, match=r"bad\.json:3:"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no such config"):
            parse_config(tmp_path / "absent.json")

    def test_band_override_creates_matching_chains(self, tmp_path):
        config = parse_config(
            write_config(tmp_path, {"seed": 1, "n_fb": 20, "horizon": 3,
                                    "replications": 1})
        )
        record = run(config)
        assert len(record.chain_params) == 20
        assert record.truth.shape == (3, 20)

    def test_placement_requires_nodes(self, tmp_path):
        with pytest.raises(ConfigError, match="nodes"):
            parse_config(
                write_config(tmp_path, {"placement": {"range_km": 0.4}})
            )

    def test_false_alarm_override(self, tmp_path):
        config = parse_config(
            write_config(
                tmp_path,
                {"seed": 1, "false_alarm": {"awgn": {"1": 0.5, "2": 0.25}}},
            )
        )
        assert config.false_alarm.awgn == {1: 0.5, 2: 0.25}
        assert config.false_alarm.rayleigh[1] == 0.83  # default retained


def test_config_dict_round_trip():
    config = SimConfig(seed=9, n_fb=12, fading=FadingKind.RAYLEIGH,
                       policy=PolicyKind.QLEARNING, epsilon_n=0.2)
    echoed = config_from_dict(config_to_dict(config))
    assert config_to_dict(echoed) == config_to_dict(config)


class TestRunExperiment:
    @pytest.fixture()
    def small_curves(self):
        config = SimConfig(seed=5, horizon=40, replications=2)
        return [("", config)]

    def test_writes_all_artifacts(self, tmp_path, small_curves):
        written = run_experiment(small_curves, tmp_path)
        names = {p.name for p in written}
        assert names == {
            "metrics.csv", "config_echo.json", "summary.txt",
            "grid_awgn.csv", "grid_rayleigh.csv",
        }
        header = (tmp_path / "metrics.csv").read_text().splitlines()[0]
        assert header == "t,jdr_mean,jdr_std,tsr_mean,tsr_std"
        assert len((tmp_path / "metrics.csv").read_text().splitlines()) == 41
        summary = (tmp_path / "summary.txt").read_text()
        for key in ("version=", "jdr_final_mean=", "snr_db=", "edges=",
                    "chains_rep0="):
            assert key in summary
        # Resolved-geometry echo matches the actual run world.
        record = run(SimConfig(seed=5, horizon=1, replications=1))
        edges_line = next(
            l for l in summary.splitlines() if l.startswith("edges=")
        )
        expected = ";".join(f"{i}-{j}" for i, j in record.edges)
        assert edges_line == f"edges={expected}"
        chains_line = next(
            l for l in summary.splitlines() if l.startswith("chains_rep0=")
        )
        first = chains_line.split("=", 1)[1].split(";")[0].split(",")
        assert float(first[0]) == pytest.approx(record.chain_params[0][0], abs=1e-6)

    def test_byte_identical_on_rerun(self, tmp_path, small_curves):
        run_experiment(small_curves, tmp_path / "a")
        run_experiment(small_curves, tmp_path / "b")
        for name in ("metrics.csv", "summary.txt", "config_echo.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_echo_closure_reproduces_metrics(self, tmp_path, small_curves):
        run_experiment(small_curves, tmp_path / "orig")
        echoed = parse_config(tmp_path / "orig" / "config_echo.json")
        run_experiment([("", echoed)], tmp_path / "again")
        assert (tmp_path / "orig" / "metrics.csv").read_bytes() == (
            tmp_path / "again" / "metrics.csv"
        ).read_bytes()

    def test_trace_flag(self, tmp_path, small_curves):
        run_experiment(small_curves, tmp_path, trace=True)
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0] == (
            "t,node,action,m,tau,transmit,outcome,decision,super_decision"
        )
        assert len(lines) == 1 + 40 * 10
        row = lines[1].split(",")
        assert row[4] in ("V", "O")
        assert set(row[7]) <= {"V", "O", "U"}

    def test_failure_removes_partial_outputs(self, tmp_path, monkeypatch):
        import jamsense.cli as cli

        def boom(config, workers=1):
            raise RuntimeError("replication blew up")

        monkeypatch.setattr(cli, "run_batch", boom)
        config = SimConfig(seed=5, horizon=10, replications=1)
        with pytest.raises(RuntimeError):
            run_experiment([("", config)], tmp_path / "fail")
        assert not list((tmp_path / "fail").glob("*"))


class TestExportGrid:
    def test_default_grid_shapes_and_pinned_hashes(self, tmp_path):
        paths = export_grid(SimConfig(), tmp_path)
        awgn = (tmp_path / "grid_awgn.csv").read_text().splitlines()
        assert len(awgn) == 7  # header plus one row per diversity order
        assert len(awgn[0].split(",")) == 17  # label plus 16 SNR columns
        rayleigh = (tmp_path / "grid_rayleigh.csv").read_text().splitlines()
        assert len(rayleigh) == 2
        hashes = {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in paths
        }
        assert hashes["grid_awgn.csv"] == GRID_AWGN_SHA256
        assert hashes["grid_rayleigh.csv"] == GRID_RAYLEIGH_SHA256

    def test_zero_threshold_grid_all_ones(self, tmp_path):
        from jamsense.sensing import DetectionParams, ProbabilityGrid

        config = SimConfig(detection=DetectionParams(threshold=0.0))
        export_grid(config, tmp_path)
        grid = ProbabilityGrid.from_csv(tmp_path / "grid_awgn.csv")
        assert np.all(grid.values == 1.0)


class TestMain:
    def test_run_exit_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"seed": 2, "horizon": 20, "replications": 1})
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "jdr_final_mean" in out

    def test_config_error_exit_two_and_no_outputs(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"seed": 1, "epsilon_n": 7})
        out_dir = tmp_path / "out"
        code = main(["run", "--config", str(cfg), "--out", str(out_dir)])
        assert code == 2
        assert "config error" in capsys.readouterr().err
        assert not out_dir.exists()

    def test_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path, {"seed": 2, "horizon": 20, "replications": 1})
        out_dir = tmp_path / "out"
        code = main([
            "run", "--config", str(cfg), "--out", str(out_dir),
            "--policy", "uniform", "--fading", "rayleigh",
            "--super-decision", "off", "--n-fb", "12", "--seed", "77",
        ])
        assert code == 0
        echo = json.loads((out_dir / "config_echo.json").read_text())
        assert echo["policy"] == "uniform"
        assert echo["fading"] == "rayleigh"
        assert echo["use_super_decision"] is False
        assert echo["n_fb"] == 12
        assert echo["seed"] == 77

    def test_preset_writes_one_metrics_file_per_curve(self, tmp_path):
        out_dir = tmp_path / "out"
        code = main([
            "run", "--preset", "jdr-awgn", "--out", str(out_dir),
            "--horizon", "15", "--replications", "1",
        ])
        assert code == 0
        names = {p.name for p in out_dir.glob("metrics_*.csv")}
        assert names == {
            "metrics_pseudo_random.csv",
            "metrics_uniform.csv",
            "metrics_qlearning.csv",
        }

    def test_presets_listing(self, capsys):
        assert main(["presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_export_grid_command(self, tmp_path):
        assert main(["export-grid", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "grid_awgn.csv").exists()


def test_preset_definitions_consistent():
    assert set(PRESETS) == {
        "jdr-awgn", "jdr-rayleigh", "jdr-awgn-20ch", "tsr-local", "tsr-super"
    }
    for preset in PRESETS.values():
        labels = [label for label, _ in preset.curves]
        assert len(labels) == len(set(labels))
        for label, deltas in preset.curves:
            merged = dict(preset.base)
            merged.update(deltas)
            config = config_from_dict(merged, where=f"preset {preset.name}")
            config.validate()
    assert PRESETS["jdr-awgn-20ch"].base["n_fb"] == 20
    assert PRESETS["tsr-local"].base["use_super_decision"] is False
    assert PRESETS["tsr-super"].base["use_super_decision"] is True
