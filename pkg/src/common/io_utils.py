"""I/O utilities for configs, sidecars and numeric CSV tables."""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List

import pandas as pd
import yaml

# Round-trip exact text for doubles
FLOAT_FORMAT = "%.17g"


def load_yaml(path: Path | str) -> Dict[str, Any]:
    """Load YAML configuration file."""
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_json(path: Path | str) -> Dict[str, Any] | List[Any]:
    """Load JSON file."""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def save_json(data: Dict[str, Any] | List[Any], path: Path | str, indent: int = 2) -> None:
    """Save data as JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=indent, ensure_ascii=False)


def load_numeric_csv(path: Path | str, required_columns: Iterable[str] = ()) -> pd.DataFrame:
    """Load a numeric CSV table and check that the required columns are present."""
    df = pd.read_csv(path, float_precision="round_trip")

    missing = set(required_columns) - set(df.columns)
    if missing:
        raise ValueError(f"Missing required columns: {sorted(missing)}")

    return df


def save_numeric_csv(df: pd.DataFrame, path: Path | str) -> Path:
    """Save DataFrame with 17 significant digits so values read back bit-identical."""
    path = Path(path)
    df.to_csv(path, index=False, encoding="utf-8", float_format=FLOAT_FORMAT)
    return path


def sidecar_path(path: Path | str) -> Path:
    """Metadata sidecar next to a data file: same stem, ``.meta.json`` suffix."""
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def ensure_dir(path: Path | str) -> Path:
    """Ensure directory exists, create if not."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
