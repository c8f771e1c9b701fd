"""Hashing, I/O helpers, error types and logging setup."""

import logging

import numpy as np
import pandas as pd
import pytest
import yaml

from src.common.errors import (
    ConfigError,
    FixedPointError,
    GridError,
    HarmonicParseError,
    QuadtrackError,
    StepLengthMismatchError,
)
from src.common.hashing import compute_manifest_hashes, sha256_arrays, sha256_dict, sha256_file, sha256_str
from src.common.io_utils import (
    load_numeric_csv,
    load_yaml,
    save_numeric_csv,
    sidecar_path,
)
from src.common.logging import setup_logger


class TestHashing:
    def test_sha256_str_known_digest(self):
        assert sha256_str("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

    def test_dict_hash_ignores_key_order(self):
        assert sha256_dict({"a": 1, "b": [1, 2]}) == sha256_dict({"b": [1, 2], "a": 1})
        assert sha256_dict({"a": 1}) != sha256_dict({"a": 2})

    def test_array_hash_sees_dtype_and_shape(self):
        a = np.arange(6, dtype=float)
        assert sha256_arrays([a]) == sha256_arrays([a.copy()])
        assert sha256_arrays([a]) != sha256_arrays([a.astype(np.float32)])
        assert sha256_arrays([a]) != sha256_arrays([a.reshape(2, 3)])

    def test_manifest_hashes_skip_missing_files(self, tmp_path):
        present = tmp_path / "a.csv"
        present.write_text("z\n0\n")
        hashes = compute_manifest_hashes([present, tmp_path / "missing.csv"])
        assert list(hashes) == ["a.csv"]
        assert hashes["a.csv"]["sha256"] == sha256_file(present)
        assert hashes["a.csv"]["size"] == present.stat().st_size


class TestIO:
    def test_sidecar_path(self):
        assert str(sidecar_path("a/b.csv")).replace("\\", "/") == "a/b.meta.json"

    def test_numeric_csv_round_trip_is_bit_exact(self, tmp_path):
        values = np.array([0.1, 1.0 / 3.0, np.pi * 1e-17, -2.5e300])
        path = save_numeric_csv(pd.DataFrame({"v": values}), tmp_path / "v.csv")
        back = load_numeric_csv(path, ["v"])["v"].to_numpy()
        assert np.array_equal(back, values)

    def test_missing_columns_are_reported(self, tmp_path):
        path = save_numeric_csv(pd.DataFrame({"z": [0.0]}), tmp_path / "t.csv")
        with pytest.raises(ValueError, match="Missing required columns"):
            load_numeric_csv(path, ["z", "B2"])

    def test_load_yaml(self, tmp_path):
        (tmp_path / "c.yaml").write_text(yaml.safe_dump({"methods": ["rk4", "lie4"], "nd": 2}))
        assert load_yaml(tmp_path / "c.yaml") == {"methods": ["rk4", "lie4"], "nd": 2}

    def test_empty_yaml_is_empty_dict(self, tmp_path):
        (tmp_path / "empty.yaml").write_text("")
        assert load_yaml(tmp_path / "empty.yaml") == {}


class TestErrors:
    def test_parse_error_names_location(self):
        err = HarmonicParseError("bad value", "data/h.csv", 7)
        assert err.line == 7
        assert "h.csv:7: bad value" in str(err)

    @pytest.mark.parametrize("cls", [HarmonicParseError, GridError, ConfigError, StepLengthMismatchError])
    def test_input_errors_are_value_errors(self, cls):
        assert issubclass(cls, ValueError)
        assert issubclass(cls, QuadtrackError)

    def test_fixed_point_error_carries_residual(self):
        err = FixedPointError(1.5e-3, 50, 2.25)
        assert err.iterations == 50
        assert "Z=2.25" in str(err)


def test_setup_logger_shares_handlers_with_library(tmp_path):
    log_file = tmp_path / "logs" / "run.log"
    logger = setup_logger("quadtrack-test", level="DEBUG", log_file=log_file)
    logging.getLogger("src.tracker.tracking").debug("library message")
    logger.info("command message")
    for handler in logger.handlers:
        handler.flush()
    text = log_file.read_text()
    assert "library message" in text
    assert "command message" in text
