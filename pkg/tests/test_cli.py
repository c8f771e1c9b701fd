"""quadtrack commands end to end, the run configuration and the artifact writer."""

import pandas as pd
import pytest
import yaml

from src.cli.artifacts import MANIFEST_NAME, ArtifactWriter, validate_manifest
from src.cli.config import JOBS_ENV_VAR, load_run_config, parse_list, parse_range
from src.cli.main import EXIT_FAILURE, EXIT_MISSING_FILE, EXIT_OK, main
from src.common.errors import ConfigError
from src.common.io_utils import load_json

COARSE = ["--field", "analytic", "--dz", "0.02"]


@pytest.fixture(autouse=True)
def no_jobs_env(monkeypatch):
    monkeypatch.delenv(JOBS_ENV_VAR, raising=False)


def read_manifest(out):
    manifest = load_json(out / MANIFEST_NAME)
    is_valid, errors = validate_manifest(manifest)
    assert is_valid, errors
    return manifest


class TestCommands:
    def test_build(self, tmp_path):
        code = main(["build", *COARSE, "--gauges", "af,coulomb,hfc", "--output", str(tmp_path)])
        assert code == EXIT_OK
        summary = load_json(tmp_path / "coefficients.json")
        assert summary["counts"]["af"] == {"x": 2, "y": 2, "z": 4, "total": 8}
        assert summary["counts"]["hfc"]["x"] == 0
        assert set(summary["work_ratio"]) == {"rhs", "m2"}
        for gauge in ("af", "coulomb", "hfc"):
            assert (tmp_path / f"potential_{gauge}.csv").is_file()
            assert (tmp_path / f"potential_{gauge}.meta.json").is_file()
        manifest = read_manifest(tmp_path)
        assert manifest["command"] == "build"
        assert "potential_hfc.meta.json" in manifest["artifacts"]
        assert "coefficients.json" in manifest["artifacts"]

    def test_manifest_is_reproducible(self, tmp_path):
        argv = ["build", *COARSE, "--output", str(tmp_path)]
        assert main(argv) == EXIT_OK
        first = (tmp_path / MANIFEST_NAME).read_bytes()
        assert main(argv) == EXIT_OK
        assert (tmp_path / MANIFEST_NAME).read_bytes() == first
        assert "created_at" not in read_manifest(tmp_path)

    def test_track(self, tmp_path):
        argv = ["track", *COARSE, "--methods", "rk4,lie2", "--step", "0.5", "--pairs", "2", "--output", str(tmp_path)]
        assert main(argv) == EXIT_OK
        df = pd.read_csv(tmp_path / "track_rk4_0p5.csv")
        assert list(df.columns) == ["Z", "X", "Y", "Px", "Py", "KX", "KY"]
        assert df["Z"].tolist() == pytest.approx([0.0, 4.0, 8.0, 12.0, 16.0])
        assert (tmp_path / "track_lie2_0p5.csv").is_file()
        summary = load_json(tmp_path / "summary.json")
        assert [run["method"] for run in summary["runs"]] == ["rk4", "lie2"]
        assert not any(run["lost"] for run in summary["runs"])
        assert read_manifest(tmp_path)["config"]["n_pairs"] == 2

    def test_maxwell(self, tmp_path):
        argv = ["maxwell", *COARSE, "--nd-range", "2,3", "--gauges", "af,coulomb", "--n-probes", "5"]
        assert main([*argv, "--output", str(tmp_path)]) == EXIT_OK
        curve = pd.read_csv(tmp_path / "maxwell_residual.csv")
        assert sorted(curve["nd"].unique().tolist()) == [2, 3]
        summary = load_json(tmp_path / "summary.json")
        assert summary["nd_values"] == [2, 3]
        assert summary["points"] == 5
        assert summary["curl_spread_at_max_nd"] >= 0.0
        assert (tmp_path / "curl_probes.csv").is_file()
        read_manifest(tmp_path)

    def test_analytic_gradients(self, tmp_path):
        argv = ["gradients", "--analytic", "--dz", "0.02", "--nd", "4", "--output", str(tmp_path)]
        assert main(argv) == EXIT_OK
        df = pd.read_csv(tmp_path / "gradients.csv")
        assert len(df) == 201
        assert df.columns[0] == "z"
        assert load_json(tmp_path / "gradients.meta.json")["nd"] == 4
        assert "gradients.meta.json" in read_manifest(tmp_path)["artifacts"]

    def test_energy_needs_pairs(self, tmp_path):
        assert main(["energy", *COARSE, "--output", str(tmp_path)]) == EXIT_FAILURE
        assert not (tmp_path / MANIFEST_NAME).exists()

    def test_missing_config_file(self, tmp_path):
        assert main(["build", "--config", str(tmp_path / "absent.yaml"), "--output", str(tmp_path)]) == EXIT_MISSING_FILE

    def test_invalid_config_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"nd": 2, "bogus": 1}))
        assert main(["build", "--config", str(path), "--output", str(tmp_path / "out")]) == EXIT_FAILURE

    def test_step_not_dividing_span(self, tmp_path):
        argv = ["track", *COARSE, "--step", "0.3", "--output", str(tmp_path)]
        assert main(argv) == EXIT_FAILURE
        assert not (tmp_path / MANIFEST_NAME).exists()


class TestRunConfig:
    def test_file_values(self, repo_root):
        cfg = load_run_config(repo_root / "config" / "quadtrack.yaml")
        assert cfg.methods == ["midpoint", "rk4", "gauss4", "gauss6", "lie2", "lie4", "lie6"]
        assert cfg.steps == [0.08, 0.04, 0.02, 0.01]
        assert cfg.fp_tol == 1e-14
        assert cfg.n_pairs is None

    def test_overrides(self, repo_root):
        cfg = load_run_config(repo_root / "config" / "quadtrack.yaml", {"nd": 4, "steps": None, "gauge": "HFC"})
        assert cfg.nd == 4
        assert cfg.steps == [0.08, 0.04, 0.02, 0.01]
        assert cfg.gauge == "hfc"

    def test_defaults_without_file(self):
        cfg = load_run_config()
        assert cfg.field == "analytic"
        assert cfg.jobs == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run_config(tmp_path / "absent.yaml")

    @pytest.mark.parametrize(
        "overrides",
        [
            {"bogus": 1},
            {"gauge": "lorenz"},
            {"methods": ["euler"]},
            {"steps": [0.1, -0.1]},
            {"mode": "linear"},
            {"checkpoints": "decimate:0"},
            {"n_pairs": 0},
        ],
    )
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            load_run_config(overrides=overrides)

    def test_jobs_from_environment(self, monkeypatch):
        monkeypatch.setenv(JOBS_ENV_VAR, "3")
        assert load_run_config().jobs == 3
        assert load_run_config(overrides={"jobs": 2}).jobs == 2
        monkeypatch.setenv(JOBS_ENV_VAR, "many")
        with pytest.raises(ConfigError, match=JOBS_ENV_VAR):
            load_run_config()

    def test_check_steps(self):
        cfg = load_run_config(overrides={"steps": [0.5, 0.3]})
        with pytest.raises(ConfigError):
            cfg.check_steps(4.0)

    def test_list_parsers(self):
        assert parse_list("a, b,,c") == ["a", "b", "c"]
        assert parse_list("0.1,0.2", float) == [0.1, 0.2]
        assert parse_range("2..5") == [2, 3, 4, 5]
        assert parse_range("2,4,8") == [2, 4, 8]


class TestArtifactWriter:
    def test_manifest_lists_artifacts(self, tmp_path):
        cfg = load_run_config(overrides={"output": str(tmp_path)})
        with ArtifactWriter("track", cfg) as out:
            out.write_json("summary.json", {"runs": []})
            out.write_csv("table.csv", pd.DataFrame({"Z": [0.0, 1.0]}))
        manifest = read_manifest(tmp_path)
        assert set(manifest["artifacts"]) == {"summary.json", "table.csv"}
        assert manifest["jobs"] == 1

    def test_cleanup_on_failure(self, tmp_path):
        cfg = load_run_config(overrides={"output": str(tmp_path)})
        with pytest.raises(RuntimeError):
            with ArtifactWriter("track", cfg) as out:
                out.write_json("summary.json", {"runs": []})
                raise RuntimeError("interrupted")
        assert not (tmp_path / "summary.json").exists()
        assert not (tmp_path / MANIFEST_NAME).exists()

    def test_invalid_manifest_is_reported(self):
        is_valid, errors = validate_manifest({"tool": "other"})
        assert not is_valid
        assert any("required" in e for e in errors)
