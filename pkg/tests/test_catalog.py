"""Study catalog loading and its translation into quadtrack command lines."""

from pathlib import Path

import pytest
import yaml

from src.catalog.catalog_loader import COMMANDS, StudyCatalog, StudyDefinition
from src.cli.main import build_parser, resolve_config
from src.common.errors import ConfigError


@pytest.fixture(scope="module")
def catalog(repo_root) -> StudyCatalog:
    return StudyCatalog(repo_root / "config" / "study_catalog.yaml")


def test_catalog_loads(catalog):
    assert len(catalog) > 0
    ids = [s.id for s in catalog]
    assert len(ids) == len(set(ids))
    assert {s.command for s in catalog} <= set(COMMANDS)


def test_defaults_are_merged(catalog):
    for study in catalog:
        assert study.args["jobs"] == 1
        assert study.args["seed"] == 0
    assert catalog.get_study_by_id("COUNT-SURROGATE-ND2").slow is False
    assert catalog.get_study_by_id("CONV-ANALYTIC-EXACT").slow is True


def test_lookups(catalog):
    assert catalog.get_study_by_id("NO-SUCH-STUDY") is None
    assert all(s.command == "build" for s in catalog.get_studies_by_command("build"))
    assert all("convergence" in s.tags for s in catalog.get_studies_by_tag("convergence"))


def test_every_study_parses_and_resolves(catalog, tmp_path):
    parser = build_parser()
    for study in catalog:
        argv = study.to_argv(tmp_path)
        args = parser.parse_args(argv)
        assert args.command == study.command
        cfg = resolve_config(args)
        assert cfg.output_dir == tmp_path / study.command / study.id


def test_to_argv_formats_values():
    study = StudyDefinition(
        id="S1",
        command="track",
        args={"methods": ["rk4", "lie4"], "step": 0.08, "pairs": 10, "seed": None, "flag": True, "off": False},
    )
    argv = study.to_argv(Path("out"))
    assert argv[:7] == ["track", "--methods", "rk4,lie4", "--step", "0.08", "--pairs", "10"]
    assert "--flag" in argv
    assert "--off" not in argv and "--seed" not in argv
    assert argv[-2:] == ["--output", str(Path("out") / "track" / "S1")]


def test_unknown_command():
    with pytest.raises(ConfigError, match="unknown command"):
        StudyDefinition(id="S1", command="plot")


def test_missing_id():
    with pytest.raises(ConfigError, match="missing 'id'"):
        StudyDefinition.from_dict({"command": "build"}, {})


def test_duplicate_ids(tmp_path):
    path = tmp_path / "catalog.yaml"
    path.write_text(yaml.safe_dump({"studies": [{"id": "A", "command": "build"}, {"id": "A", "command": "track"}]}))
    with pytest.raises(ConfigError, match="duplicate"):
        StudyCatalog(path)
