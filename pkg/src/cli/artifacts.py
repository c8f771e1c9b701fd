"""Artifact bookkeeping for one command: outputs, manifest, cleanup on failure."""

import platform
from pathlib import Path
from typing import Any, Dict, List, Tuple

import jsonschema
import numpy as np
import pandas as pd
import scipy

from src import __version__
from src.cli.config import RunConfig
from src.common.errors import QuadtrackError
from src.common.hashing import compute_manifest_hashes, sha256_dict
from src.common.io_utils import ensure_dir, load_json, save_json, save_numeric_csv, sidecar_path
from src.common.logging import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA_PATH = Path(__file__).resolve().parents[2] / "protocol" / "run_manifest.schema.json"


def validate_manifest(manifest: Dict[str, Any]) -> Tuple[bool, List[str]]:
    """
    Validate a run manifest against protocol/run_manifest.schema.json.

    Returns:
        (is_valid, list_of_errors)
    """
    schema = load_json(MANIFEST_SCHEMA_PATH)
    validator = jsonschema.Draft7Validator(schema)
    errors = [f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in validator.iter_errors(manifest)]
    return len(errors) == 0, errors


def environment() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


class ArtifactWriter:
    """
    Collects the files a command writes into its output directory.

    On normal exit a manifest with hashes of every artifact is written; if the
    block raises, every file recorded so far is removed and the error propagates.
    """

    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.output_dir = config.output_dir
        self.files: List[Path] = []

    def __enter__(self) -> "ArtifactWriter":
        ensure_dir(self.output_dir)
        logger.info(f"{self.command}: writing to {self.output_dir}")
        return self

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def add(self, path: Path | str, with_sidecar: bool = False) -> Path:
        """Record a file written by library code."""
        path = Path(path)
        self.files.append(path)
        if with_sidecar:
            self.files.append(sidecar_path(path))
        return path

    def write_csv(self, name: str, df: pd.DataFrame) -> Path:
        path = self.add(self.path(name))
        save_numeric_csv(df, path)
        logger.info(f"Wrote {path} ({len(df)} rows)")
        return path

    def write_json(self, name: str, data: Dict[str, Any] | List[Any]) -> Path:
        path = self.add(self.path(name))
        save_json(data, path)
        return path

    def manifest(self) -> Dict[str, Any]:
        resolved = self.config.model_dump(mode="json")
        return {
            "tool": "quadtrack",
            "version": __version__,
            "command": self.command,
            "config": resolved,
            "config_sha256": sha256_dict(resolved),
            "seed": self.config.seed,
            "jobs": self.config.jobs,
            "environment": environment(),
            "artifacts": compute_manifest_hashes(self.files),
        }

    def _cleanup(self) -> None:
        removed = 0
        for path in self.files + [self.path(MANIFEST_NAME)]:
            if path.is_file():
                path.unlink()
                removed += 1
        if removed:
            logger.warning(f"Removed {removed} partial artifacts from {self.output_dir}")

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is not None:
            self._cleanup()
            return False
        manifest = self.manifest()
        is_valid, errors = validate_manifest(manifest)
        if not is_valid:
            self._cleanup()
            raise QuadtrackError(f"manifest failed validation: {'; '.join(errors)}")
        save_json(manifest, self.path(MANIFEST_NAME))
        logger.info(f"Wrote {len(self.files)} artifacts and {MANIFEST_NAME} to {self.output_dir}")
        return False
