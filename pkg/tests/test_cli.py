import json
import math

import numpy as np
import pytest

from psmet import closed_form as cf
from psmet.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VERIFY, main

HALF_PI = math.pi / 2


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_rows(path):
    header = None
    rows = []
    for line in open(path):
        line = line.rstrip("\n")
        if line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(dict(zip(header, (float(x) for x in line.split(",")))))
    return header, rows


class TestSweep:
    def test_two_axis_sweep_row_major_and_stable(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "sweep.json",
            {
                "ma": {"kind": "qubit"},
                "axes": [
                    {"name": "theta", "min": 0.4, "max": 2.6, "steps": 3},
                    {"name": "gamma_fluct", "min": 0.1, "max": 0.9, "steps": 2},
                ],
            },
        )
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out1)]) == EXIT_OK
        assert main(["sweep", "--config", cfg, "--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        header, rows = read_rows(out1)
        assert header[:2] == ["theta", "gamma_fluct"]
        assert header[2:] == [
            "w_success", "Q_pp", "Q_GG", "H_pp", "H_GG", "F_pp", "F_GG",
            "tradeoff_quantum", "tradeoff_classical",
            "commutator_trace_abs_success", "commutator_trace_abs_failure",
        ]
        assert len(rows) == 6
        # row-major: the inner axis varies fastest
        assert [r["gamma_fluct"] for r in rows[:2]] == [0.1, 0.9]
        assert rows[0]["theta"] == rows[1]["theta"] == 0.4

    def test_qubit_sweep_tradeoff_peak(self, tmp_path):
        # over a theta x gamma grid containing theta = pi/2, the quantum
        # tradeoff peaks at 2 exactly on the balanced-preparation line
        cfg = write_config(
            tmp_path, "peak.json",
            {
                "ma": {"kind": "qubit"},
                "axes": [
                    {"name": "theta", "min": 0.1, "max": math.pi - 0.1, "steps": 7},
                    {"name": "gamma_fluct", "min": 0.05, "max": 1.0, "steps": 4},
                ],
            },
        )
        out = tmp_path / "peak.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        _, rows = read_rows(out)
        best = max(rows, key=lambda r: r["tradeoff_quantum"])
        assert abs(best["tradeoff_quantum"] - 2.0) < 1e-6
        thetas = sorted({r["theta"] for r in rows})
        nearest = min(thetas, key=lambda t: abs(t - HALF_PI))
        assert abs(best["theta"] - nearest) < 1e-12

    def test_provenance_header(self, tmp_path):
        cfg = write_config(tmp_path, "s.json", {"ma": {"kind": "qubit"}})
        out = tmp_path / "point.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        head = out.read_text().splitlines()[:3]
        assert head[0].startswith("# psmet ")
        assert head[1].startswith("# config_hash ")
        assert head[2] == "# seed 42"

    def test_degenerate_point_sweep_matches_closed_forms(self, tmp_path):
        cfg = write_config(
            tmp_path, "pt.json",
            {"ma": {"kind": "qubit", "theta": 1.1, "gamma_fluct": 0.5}},
        )
        out = tmp_path / "pt.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        _, rows = read_rows(out)
        row = rows[0]
        q = cf.qubit_pqfim(1.1, 0.5)
        quantum, classical = cf.qubit_tradeoffs(1.1, 0.5)
        w = cf.qubit_w_success(cf.QubitParams(theta=1.1, gamma_fluct=0.5, phi=1e-6))
        assert abs(row["w_success"] - w) < 1e-9
        assert abs(row["Q_pp"] - q[0, 0]) < 1e-6
        assert abs(row["Q_GG"] - q[1, 1]) < 1e-6
        assert abs(row["tradeoff_quantum"] - quantum) < 1e-6
        assert abs(row["tradeoff_classical"] - classical) < 1e-6
        assert row["commutator_trace_abs_success"] < 1e-9

    def test_gaussian_sweep_with_figure(self, tmp_path):
        fig = tmp_path / "surface.png"
        cfg = write_config(
            tmp_path, "g.json",
            {
                "ma": {"kind": "gaussian"},
                "grid_n": 256,
                "figure": str(fig),
                "axes": [
                    {"name": "sigma", "min": 0.15, "max": 0.8, "steps": 3},
                    {"name": "gamma_fluct", "min": 0.2, "max": 1.0, "steps": 3},
                ],
            },
        )
        out = tmp_path / "g.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        assert fig.exists() and fig.stat().st_size > 1000
        _, rows = read_rows(out)
        for row in rows:
            assert row["tradeoff_classical"] <= 1.0 + 1e-6
            assert row["tradeoff_quantum"] <= 2.0 + 1e-6

    def test_single_axis_figure(self, tmp_path):
        fig = tmp_path / "line.png"
        cfg = write_config(
            tmp_path, "one.json",
            {
                "ma": {"kind": "qubit"},
                "figure": str(fig),
                "axes": [{"name": "theta", "min": 0.3, "max": 2.8, "steps": 5}],
            },
        )
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "one.csv")]) == EXIT_OK
        assert fig.exists()

    def test_thread_env_does_not_change_bytes(self, tmp_path, monkeypatch):
        cfg = write_config(
            tmp_path, "t.json",
            {
                "ma": {"kind": "qubit"},
                "axes": [{"name": "gamma_fluct", "min": 0.1, "max": 1.2, "steps": 7}],
            },
        )
        out1 = tmp_path / "serial.csv"
        out2 = tmp_path / "threaded.csv"
        monkeypatch.setenv("PSMET_THREADS", "1")
        assert main(["sweep", "--config", cfg, "--out", str(out1)]) == EXIT_OK
        monkeypatch.setenv("PSMET_THREADS", "4")
        assert main(["sweep", "--config", cfg, "--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_bad_axis_rejected(self, tmp_path):
        cfg = write_config(
            tmp_path, "bad.json",
            {
                "ma": {"kind": "gaussian"},
                "axes": [{"name": "theta", "min": 0, "max": 1, "steps": 3}],
            },
        )
        assert main(["sweep", "--config", cfg, "--out", "/dev/null"]) == EXIT_CONFIG

    def test_unwritable_output(self, tmp_path):
        cfg = write_config(tmp_path, "ok.json", {"ma": {"kind": "qubit"}})
        assert main(["sweep", "--config", cfg, "--out", "/nonexistent/dir/x.csv"]) == EXIT_IO


class TestVerify:
    def test_default_verify_passes(self, tmp_path):
        out = tmp_path / "verdict.json"
        assert main(["verify", "--set", "chain_draws=20", "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["pass"] is True
        assert report["checks"]["chain"]["pass"] is True
        assert report["checks"]["commutator_readings"]["alternate_max_dev"] > 1e-3
        assert report["checks"]["fluctuation_diag_readings"]["cot_max_dev"] > 1e-3

    def test_injected_corruption_fails(self, tmp_path):
        out = tmp_path / "bad.json"
        code = main([
            "verify", "--set", "debug.scale_q=1.5", "--set", "chain_draws=6",
            "--out", str(out),
        ])
        assert code == EXIT_VERIFY
        report = json.loads(out.read_text())
        assert report["checks"]["chain"]["pass"] is False
        assert report["checks"]["chain"]["min_eig_h_minus_q"] < -1e-3

    def test_off_equator_postselection_reported_but_passes(self, tmp_path):
        # nonzero commutator traces at gamma_ps != pi/2 do not break the chain
        out = tmp_path / "v.json"
        assert main(["verify", "--set", "chain_draws=12", "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["checks"]["commutator_readings"]["adopted_max_dev"] <= 1e-8


class TestSimulate:
    BASE = {
        "ma": {"kind": "qubit", "theta": math.pi / 3, "phi": 0.4, "gamma_fluct": 0.3},
        "shots": 2000,
        "replications": 5,
        "seed": 3,
    }

    def test_outputs_and_determinism(self, tmp_path):
        cfg = write_config(tmp_path, "sim.json", self.BASE)
        out1 = tmp_path / "est1.csv"
        out2 = tmp_path / "est2.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out1)]) == EXIT_OK
        assert main(["simulate", "--config", cfg, "--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        header, rows = read_rows(out1)
        assert header == ["replication", "phi_hat", "gamma_hat"]
        assert len(rows) == 5
        summary = json.loads((tmp_path / "est1_summary.json").read_text())
        assert summary["shots"] == 2000
        assert summary["f_inv"] is not None
        assert summary["total_info_inv"] is not None
        assert len(summary["scaled_cov"]) == 2

    def test_zero_shots_is_config_error(self, tmp_path):
        payload = dict(self.BASE, shots=0)
        cfg = write_config(tmp_path, "bad.json", payload)
        assert main(["simulate", "--config", cfg, "--out", "/dev/null"]) == EXIT_CONFIG

    def test_figure_rendered(self, tmp_path):
        fig = tmp_path / "scatter.png"
        payload = dict(self.BASE, figure=str(fig))
        cfg = write_config(tmp_path, "fig.json", payload)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "e.csv")]) == EXIT_OK
        assert fig.exists() and fig.stat().st_size > 1000

    def test_balanced_preparation_reports_singular_bound(self, tmp_path):
        # theta = pi/2: the classical matrix is rank-1; the summary carries
        # the diagnostic instead of a bound comparison
        payload = {
            "ma": {"kind": "qubit", "theta": HALF_PI, "phi": 0.4, "gamma_fluct": 0.3},
            "shots": 1500,
            "replications": 4,
            "seed": 5,
        }
        cfg = write_config(tmp_path, "singular.json", payload)
        out = tmp_path / "sing.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        summary = json.loads((tmp_path / "sing_summary.json").read_text())
        assert summary["f_inv"] is None
        assert any("singular" in note for note in summary["notes"])


class TestClosedFormCommand:
    def test_qubit_report(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.json",
            {"ma": {"kind": "qubit", "theta": 0.9, "gamma_fluct": 0.4}},
        )
        out = tmp_path / "cf.json"
        assert main(["closed-form", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert abs(report["tradeoff_quantum"] - cf.qubit_tradeoffs(0.9, 0.4)[0]) < 1e-12
        assert report["validity"]["qubit_pqfim"].startswith("gamma_ps")
        assert report["out_of_domain"] == []

    def test_gaussian_report_out_of_domain_flagged(self, tmp_path):
        cfg = write_config(
            tmp_path, "g.json",
            {"ma": {"kind": "gaussian", "sigma": 0.4, "gamma_ps": 0.7, "phi": 0.3}},
        )
        out = tmp_path / "g.json.out"
        assert main(["closed-form", "--config", cfg, "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert len(report["out_of_domain"]) == 2
        assert "w_success" in report


class TestConfigHandling:
    def test_set_overrides_nested(self, tmp_path):
        cfg = write_config(tmp_path, "o.json", {"ma": {"kind": "qubit", "theta": 0.5}})
        out = tmp_path / "o.csv"
        assert main([
            "sweep", "--config", cfg, "--set", "ma.theta=1.2", "--out", str(out),
        ]) == EXIT_OK
        _, rows = read_rows(out)
        assert abs(rows[0]["Q_pp"] - cf.qubit_pqfim(1.2, 0.5)[0, 0]) < 1e-6

    def test_unknown_key_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "u.json", {"ma": {"kind": "qubit"}, "bogus": 1})
        assert main(["sweep", "--config", cfg, "--out", "/dev/null"]) == EXIT_CONFIG

    def test_unknown_ma_param_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "u2.json", {"ma": {"kind": "gaussian", "theta": 1.0}})
        assert main(["sweep", "--config", cfg, "--out", "/dev/null"]) == EXIT_CONFIG

    def test_malformed_set(self, tmp_path):
        cfg = write_config(tmp_path, "m.json", {"ma": {"kind": "qubit"}})
        assert main(["sweep", "--config", cfg, "--set", "noequals"]) == EXIT_CONFIG

    def test_missing_config_file(self):
        assert main(["sweep", "--config", "/nope/missing.json"]) == EXIT_CONFIG

    def test_config_hash_tracks_content(self, tmp_path):
        cfg1 = write_config(tmp_path, "h1.json", {"ma": {"kind": "qubit"}, "seed": 1})
        cfg2 = write_config(tmp_path, "h2.json", {"ma": {"kind": "qubit"}, "seed": 2})
        out1, out2 = tmp_path / "h1.csv", tmp_path / "h2.csv"
        assert main(["sweep", "--config", cfg1, "--out", str(out1)]) == EXIT_OK
        assert main(["sweep", "--config", cfg2, "--out", str(out2)]) == EXIT_OK
        h1 = out1.read_text().splitlines()[1]
        h2 = out2.read_text().splitlines()[1]
        assert h1 != h2
