import json

import numpy as np
import pytest

from proplimit import cli, posterior

SCALAR_CFG = {
    "seed": 13,
    "x": [[1.0]],
    "y": [[2.0]],
    "x0": [1.0],
    "beta": 1.0,
    "mixing": "nngp",
}


def run(args):
    return cli.main([str(a) for a in args])


class TestConfigHandling:
    def test_missing_seed_exits_2(self, tmp_path, capsys):
        code = run(["sample-limit", "--out-dir", tmp_path, "--set", "a=0.5",
                    "--set", "dim=2", "--set", "n_samples=4"])
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert "seed" in err["error"]

    def test_bad_value_exits_2(self, tmp_path, capsys):
        code = run(["sample-limit", "--seed", 1, "--out-dir", tmp_path,
                    "--set", "a=-2", "--set", "dim=2"])
        assert code == 2
        assert "error" in json.loads(capsys.readouterr().err)

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"a": 0.5, "dim": 2, "n_samples": 3, "steps": 8}))
        code = run(["sample-limit", "--config", cfg, "--seed", 5,
                    "--out-dir", tmp_path])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["config"]["seed"] == 5
        assert report["config"]["a"] == 0.5
        assert report["rng"] == {"algorithm": "Philox", "seed": 5}

    def test_unknown_verify_key_exits_2(self, tmp_path, capsys):
        code = run(["converge-test", "--seed", 1, "--out-dir", tmp_path,
                    "--set", "bogus_knob=3"])
        assert code == 2
        assert "bogus_knob" in json.loads(capsys.readouterr().err)["error"]


class TestSampleCommands:
    def test_sample_prior_csv(self, tmp_path):
        code = run([
            "sample-prior", "--seed", 11, "--out-dir", tmp_path,
            "--set", "x=[[1.0, 0.5], [0.0, 1.0]]",
            "--set", "n_out=2", "--set", "depth=2", "--set", "width=4",
            "--set", "n_samples=5",
        ])
        assert code == 0
        lines = (tmp_path / "samples.csv").read_text().splitlines()
        assert lines[0] == "sample_id,route,row,col,value"
        # 5 samples x 2 routes x (2 x 2) entries
        assert len(lines) == 1 + 5 * 2 * 4
        assert {line.split(",")[1] for line in lines[1:]} == {"direct", "mixture"}

    def test_sample_prior_rerun_byte_identical(self, tmp_path):
        args = [
            "sample-prior", "--seed", 11,
            "--set", "x=[[1.0], [2.0]]", "--set", "n_out=1",
            "--set", "depth=2", "--set", "width=4", "--set", "n_samples=8",
        ]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out-dir", out_a]) == 0
        assert run(args + ["--out-dir", out_b]) == 0
        assert (out_a / "samples.csv").read_bytes() == (out_b / "samples.csv").read_bytes()

    def test_sample_limit_vbar_lazy_identity(self, tmp_path):
        code = run(["sample-limit", "--seed", 3, "--out-dir", tmp_path,
                    "--set", "a=0.0", "--set", "dim=2", "--set", "steps=4",
                    "--set", "n_samples=2"])
        assert code == 0
        rows = (tmp_path / "samples.csv").read_text().splitlines()[1:]
        values = {}
        for line in rows:
            _, _, r, c, v = line.split(",")
            values[(int(r), int(c))] = float(v)
        assert values[(0, 0)] == 1.0 and values[(1, 1)] == 1.0
        assert values[(0, 1)] == 0.0 and values[(1, 0)] == 0.0

    def test_sample_limit_prior_route(self, tmp_path):
        code = run(["sample-limit", "--seed", 3, "--out-dir", tmp_path,
                    "--set", "a=0.5", "--set", "dim=2", "--set", "steps=8",
                    "--set", "emit=prior", "--set", "x=[[1.0, 0.0], [0.0, 1.0]]",
                    "--set", "n_samples=3"])
        assert code == 0
        lines = (tmp_path / "samples.csv").read_text().splitlines()
        assert lines[1].split(",")[1] == "limit-prior"


class TestPosteriorPredict:
    def test_nngp_matches_library(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(SCALAR_CFG))
        code = run(["posterior-predict", "--config", cfg, "--out-dir", tmp_path])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        results = report["results"]
        data = posterior.Dataset(x=[[1.0]], y=[[2.0]], x0=[1.0], beta=1.0)
        mix = posterior.posterior_mixture(posterior.nngp_mixing(1), data)
        mean, cov = posterior.predictive_moments(mix)
        assert results["predictive_mean"] == pytest.approx(mean.tolist())
        assert results["predictive_covariance"][0] == pytest.approx(cov[0].tolist())
        assert results["ess"] == 1.0

    def test_limit_mixing_runs(self, tmp_path):
        cfg = dict(SCALAR_CFG)
        cfg.update({"mixing": "limit", "a": 1.0, "steps": 8, "n_mixing": 200})
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code = run(["posterior-predict", "--config", path, "--out-dir", tmp_path])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["results"]["n_components"] == 200
        assert report["results"]["ess"] > 100

    def test_finite_mixing_runs(self, tmp_path):
        cfg = dict(SCALAR_CFG)
        cfg.update({"mixing": "finite", "depth": 4, "width": 6, "n_mixing": 100})
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert run(["posterior-predict", "--config", path, "--out-dir", tmp_path]) == 0


class TestConvergeTest:
    def test_subset_runs_and_reports(self, tmp_path, capsys):
        code = run(["converge-test", "--seed", 2026, "--out-dir", tmp_path,
                    "--set", 'criteria=["c3-mgf-bridge", "c6-nngp-degeneracy"]'])
        assert code == 0
        lines = (tmp_path / "converge_test.csv").read_text().splitlines()
        assert lines[0] == "test,N,L,a,statistic,threshold,reference,pass"
        assert all(line.endswith("true") for line in lines[1:])
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["results"]["failed"] == 0
        out = capsys.readouterr().out
        assert "PASS mgf-bridge-n1000" in out

    def test_unknown_criterion_exits_2(self, tmp_path):
        assert run(["converge-test", "--seed", 1, "--out-dir", tmp_path,
                    "--set", 'criteria=["no-such-check"]']) == 2
