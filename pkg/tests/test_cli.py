"""Batch front end: config handling, artifacts, exit codes, determinism."""

import json

import numpy as np
import pytest
import yaml

from xdiff.cli import EXIT_ASSERTION, EXIT_ERROR, EXIT_OK, load_config, main

BASE_RUN = {
    "grid": {"d": 1, "n": 64},
    "coefficient": {"family": "constant"},
    "entropy": {"alpha": 4.0},
    "mu": [0.0, 0.0],
    "scheme": {"kind": "entropy_implicit", "tau": 1.0e-3, "t_end": 0.02, "regularization_weight": 0.0},
    "initial": {"preset": "constant", "base": [1.0, 1.0]},
    "probes": {"every": 10},
}


def write_config(tmp_path, cfg, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


class TestRun:
    def test_constant_preset_reaches_exact_average(self, tmp_path):
        cfg = write_config(tmp_path, BASE_RUN)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["final"]["l2_to_average"] <= 1e-12
        assert (out / "diagnostics.csv").exists()

    def test_cosine_perturbation_decays_at_heat_rate(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["grid"] = {"d": 1, "n": 128}
        cfg["scheme"] = {"tau": 1.0e-4, "t_end": 0.05, "regularization_weight": 0.0}
        cfg["initial"] = {"preset": "cosine-perturbed", "base": [1.0, 1.0], "amplitude": 0.5}
        out = tmp_path / "out"
        assert main(["run", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
        rows = (out / "diagnostics.csv").read_text().strip().splitlines()
        header = rows[0].split(",")
        first = dict(zip(header, map(float, rows[1].split(","))))
        last = dict(zip(header, map(float, rows[-1].split(","))))
        observed = last["l2_to_average"] / first["l2_to_average"]
        assert observed == pytest.approx(np.exp(-4 * np.pi**2 * 0.05), rel=0.05)

    def test_alpha_below_hypothesis_exits_one(self, tmp_path, capsys):
        cfg = dict(BASE_RUN)
        cfg["coefficient"] = {"family": "power", "alpha_c": 0.5}
        cfg["entropy"] = {"alpha": 4.0}  # needs alpha >= p + 4 = 4.5
        code = main(["run", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == EXIT_ERROR
        assert "p + 4" in capsys.readouterr().err

    def test_source_rate_restriction_exits_one(self, tmp_path, capsys):
        cfg = dict(BASE_RUN)
        cfg["mu"] = [-20.0, -20.0]
        cfg["scheme"] = {"tau": 0.01, "t_end": 0.02}
        code = main(["run", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == EXIT_ERROR
        assert "C_h" in capsys.readouterr().err

    def test_csv_deterministic_across_runs(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["initial"] = {"preset": "random-smooth", "seed": 11, "base": [1.0, 1.0], "amplitude": 0.3}
        path = write_config(tmp_path, cfg)
        main(["run", "--config", path, "--out", str(tmp_path / "a")])
        main(["run", "--config", path, "--out", str(tmp_path / "b")])
        assert (tmp_path / "a/diagnostics.csv").read_bytes() == (tmp_path / "b/diagnostics.csv").read_bytes()

    def test_seed_flag_changes_output(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["initial"] = {"preset": "random-smooth", "seed": 11, "base": [1.0, 1.0], "amplitude": 0.3}
        path = write_config(tmp_path, cfg)
        main(["run", "--config", path, "--out", str(tmp_path / "a")])
        main(["run", "--config", path, "--out", str(tmp_path / "b"), "--seed", "12"])
        assert (tmp_path / "a/diagnostics.csv").read_bytes() != (tmp_path / "b/diagnostics.csv").read_bytes()

    def test_column_sidecar(self, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", write_config(tmp_path, BASE_RUN), "--out", str(out), "--columns"])
        dat = (out / "diagnostics.dat").read_text().splitlines()
        assert dat[0].startswith("# t H ")

    def test_csv_header_schema(self, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", write_config(tmp_path, BASE_RUN), "--out", str(out)])
        header = (out / "diagnostics.csv").read_text().splitlines()[0]
        assert header == (
            "t,H,mass1,mass2,min_u1,min_u2,l2_to_average,"
            "hminus1_u1,hminus1_u2,newton_iters,entropy_margin,clamp_events"
        )


class TestConfigErrors:
    def test_missing_file(self, capsys):
        assert main(["run", "--config", "/nonexistent.yaml", "--out", "/tmp/x"]) == EXIT_ERROR

    def test_yaml_error_carries_location(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("grid: {d: 1, n: 64\n")
        assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == EXIT_ERROR
        assert "bad.yaml" in capsys.readouterr().err

    def test_json_alternate_format(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(BASE_RUN))
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_OK

    def test_missing_required_field(self, tmp_path, capsys):
        cfg = {k: v for k, v in BASE_RUN.items() if k != "scheme"}
        assert main(["run", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_ERROR
        assert "scheme" in capsys.readouterr().err

    def test_load_config_top_level(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ValueError):
            load_config(path)


class TestVerifyStructure:
    @pytest.mark.parametrize(
        "coefficient,alpha",
        [
            ({"family": "constant"}, 4.0),
            ({"family": "power", "alpha_c": 0.5}, 4.5),
            ({"family": "reciprocal"}, 5.0),
            ({"family": "saturating", "beta": 0.5}, 4.5),
        ],
    )
    def test_certified_families_pass(self, tmp_path, coefficient, alpha):
        cfg = {"coefficient": coefficient, "entropy": {"alpha": alpha}, "samples": 2000}
        out = tmp_path / "out"
        code = main(["verify-structure", "--config", write_config(tmp_path, cfg), "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads((out / "structure_report.json").read_text())
        assert report["passed"]
        assert report["roundtrip_error"] <= 1e-8
        assert report["quadratic_growth_margin"] >= -1e-12

    def test_quadratic_custom_fails(self, tmp_path):
        cfg = {
            "coefficient": {"family": "custom", "expr": "r**2", "a0": 1.0, "p": 2.0},
            "entropy": {"alpha": 6.0},
            "samples": 500,
        }
        out = tmp_path / "out"
        code = main(["verify-structure", "--config", write_config(tmp_path, cfg), "--out", str(out)])
        assert code == EXIT_ASSERTION
        report = json.loads((out / "structure_report.json").read_text())
        assert not report["assumptions"]["growth_ok"]


class TestFpCompare:
    def test_small_study(self, tmp_path):
        cfg = {
            "coefficient": {"family": "constant"},
            "entropy": {"alpha": 4.0},
            "fp": {
                "lambda": [0.5, -0.5],
                "sigma_n": 1.0,
                "L": 8.0,
                "horizon": 0.05,
                "initial": {"x_profile": "cosine-perturbed", "base": 1.0, "amplitude": 0.3, "y_sigma": 1.0},
                "resolutions": [{"n_x": 32, "n_y": 64, "tau": 5.0e-3}],
                "assert_max_discrepancy": 0.02,
            },
        }
        out = tmp_path / "out"
        code = main(["fp-compare", "--config", write_config(tmp_path, cfg), "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "fp_compare.csv").exists()
        summary = json.loads((out / "fp_summary.json").read_text())
        assert summary["rows"][0]["truncation_ok"]

    def test_equal_weights_exit_one(self, tmp_path, capsys):
        cfg = {
            "coefficient": {"family": "constant"},
            "entropy": {"alpha": 4.0},
            "fp": {"lambda": [0.5, 0.5], "horizon": 0.1, "resolutions": [{"n_x": 16, "n_y": 32, "tau": 1e-3}]},
        }
        code = main(["fp-compare", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
        assert code == EXIT_ERROR
        assert "lambda" in capsys.readouterr().err


class TestSweep:
    def test_temporal_order_from_richardson(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["grid"] = {"d": 1, "n": 64}
        cfg["scheme"] = {"tau": 1.0e-3, "t_end": 0.05, "regularization_weight": 0.0}
        cfg["initial"] = {"preset": "cosine-perturbed", "base": [1.0, 1.0], "amplitude": 0.5}
        cfg["probes"] = {"every": 1000}
        cfg["sweep"] = {"tau": [2.0e-3, 1.0e-3, 5.0e-4]}
        out = tmp_path / "out"
        assert main(["sweep", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
        rows = (out / "sweep_summary.csv").read_text().strip().splitlines()
        header = rows[0].split(",")
        amp = {}
        for row in rows[1:]:
            vals = dict(zip(header, row.split(",")))
            amp[float(vals["tau"])] = float(vals["final_l2_to_average"])
        d1 = amp[2e-3] - amp[1e-3]
        d2 = amp[1e-3] - amp[5e-4]
        order = np.log2(abs(d1) / abs(d2))
        assert order == pytest.approx(1.0, abs=0.2)

    def test_spatial_order_from_richardson(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["scheme"] = {"tau": 1.0e-3, "t_end": 0.05, "regularization_weight": 0.0}
        cfg["initial"] = {"preset": "cosine-perturbed", "base": [1.0, 1.0], "amplitude": 0.5}
        cfg["probes"] = {"every": 1000}
        cfg["sweep"] = {"n": [32, 64, 128]}
        out = tmp_path / "out"
        assert main(["sweep", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
        rows = (out / "sweep_summary.csv").read_text().strip().splitlines()
        header = rows[0].split(",")
        amp = {}
        for row in rows[1:]:
            vals = dict(zip(header, row.split(",")))
            amp[int(float(vals["n"]))] = float(vals["final_l2_to_average"])
        order = np.log2(abs(amp[32] - amp[64]) / abs(amp[64] - amp[128]))
        assert order == pytest.approx(2.0, abs=0.25)

    def test_empty_sweep_exits_one(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["sweep"] = {}
        assert main(["sweep", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_ERROR

    def test_failing_point_reported(self, tmp_path):
        cfg = dict(BASE_RUN)
        cfg["coefficient"] = {"family": "power", "alpha_c": 0.5}
        cfg["sweep"] = {"alpha": [4.5, 4.0]}  # 4.0 violates alpha >= p + 4
        out = tmp_path / "out"
        code = main(["sweep", "--config", write_config(tmp_path, cfg), "--out", str(out)])
        assert code == EXIT_ASSERTION
        rows = (out / "sweep_summary.csv").read_text().strip().splitlines()
        assert len(rows) == 3
        assert any("False" in row for row in rows[1:])
