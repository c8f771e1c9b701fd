"""Sampled field harmonics: container, CSV loader/writer, zero padding."""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import jsonschema
import numpy as np
import pandas as pd

from src.common.errors import GridError, HarmonicParseError
from src.common.io_utils import load_json, save_json, save_numeric_csv, sidecar_path
from src.common.logging import get_logger

logger = get_logger(__name__)

PROTOCOL_DIR = Path(__file__).resolve().parents[2] / "protocol"
META_SCHEMA_PATH = PROTOCOL_DIR / "harmonics_meta.schema.json"

# relative tolerance on the grid spacing
GRID_RTOL = 1e-12

_COLUMN_PATTERN = re.compile(r"^([AB])(\d+)$")


def is_quadrupole_order(m: int) -> bool:
    """Harmonic orders compatible with quadrupole symmetry: m = 2(2j+1)."""
    return m >= 2 and m % 4 == 2


def check_uniform_grid(z: np.ndarray) -> float:
    """
    Return the spacing of a strictly increasing uniform grid.

    Raises:
        GridError: fewer than two points, non-increasing or non-uniform spacing
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or len(z) < 2:
        raise GridError("grid needs at least two points")
    steps = np.diff(z)
    dz = (z[-1] - z[0]) / (len(z) - 1)
    if dz <= 0 or np.any(steps <= 0):
        raise GridError("grid is not strictly increasing")
    # text round-off of the abscissae is allowed on top of the relative tolerance
    tol = GRID_RTOL * dz + 4 * np.finfo(float).eps * np.max(np.abs(z))
    bad = np.nonzero(np.abs(steps - dz) > tol)[0]
    if len(bad):
        k = int(bad[0])
        raise GridError(f"non-uniform grid: spacing {steps[k]:.17g} after z={z[k]:.17g}, expected {dz:.17g}")
    return float(dz)


@dataclass(frozen=True)
class HarmonicSet:
    """Per-harmonic normal (B_m) and skew (A_m) samples at the radius of analysis."""

    radius: float
    z: np.ndarray
    normal: Dict[int, np.ndarray] = field(default_factory=dict)
    skew: Dict[int, np.ndarray] = field(default_factory=dict)
    strict: bool = True
    units: str = "scaled"

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "z", z)
        check_uniform_grid(z)
        if not self.radius > 0:
            raise GridError(f"radius of analysis must be positive, got {self.radius}")
        for label, attr in (("B", "normal"), ("A", "skew")):
            series_map = {int(m): np.asarray(s, dtype=float) for m, s in getattr(self, attr).items()}
            object.__setattr__(self, attr, series_map)
            for m, samples in series_map.items():
                if samples.shape != z.shape:
                    raise GridError(f"{label}{m} has {samples.shape[0]} samples, grid has {len(z)}")
                if m < 1 or (self.strict and not is_quadrupole_order(m)):
                    raise GridError(f"harmonic order {m} not allowed for a quadrupole")

    @property
    def dz(self) -> float:
        return float((self.z[-1] - self.z[0]) / (len(self.z) - 1))

    @property
    def n_points(self) -> int:
        return len(self.z)

    @property
    def orders(self) -> List[int]:
        return sorted(set(self.normal) | set(self.skew))

    def is_empty(self) -> bool:
        return not self.normal and not self.skew

    def combined(self, other: "HarmonicSet", a: float = 1.0, b: float = 1.0) -> "HarmonicSet":
        """Linear combination a*self + b*other on a shared grid."""
        if len(other.z) != len(self.z) or not np.array_equal(other.z, self.z):
            raise GridError("harmonic sets live on different grids")

        def mix(x: Dict[int, np.ndarray], y: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
            zero = np.zeros_like(self.z)
            return {m: a * x.get(m, zero) + b * y.get(m, zero) for m in sorted(set(x) | set(y))}

        return HarmonicSet(
            radius=self.radius,
            z=self.z,
            normal=mix(self.normal, other.normal),
            skew=mix(self.skew, other.skew),
            strict=self.strict and other.strict,
            units=self.units,
        )


def _parse_header(path: Path) -> List[Tuple[str, int]]:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
    if not header:
        raise HarmonicParseError("empty file", path, 1)
    names = [name.strip() for name in header.split(",")]
    if names[0] != "z":
        raise HarmonicParseError(f"first column must be 'z', got '{names[0]}'", path, 1)
    columns = []
    seen = set()
    for name in names[1:]:
        match = _COLUMN_PATTERN.match(name)
        if not match:
            raise HarmonicParseError(f"unrecognized column '{name}'", path, 1)
        key = (match.group(1), int(match.group(2)))
        if key in seen:
            raise HarmonicParseError(f"duplicate harmonic column '{name}'", path, 1)
        seen.add(key)
        columns.append(key)
    return columns


def validate_meta(meta: Dict[str, Any]) -> Tuple[bool, List[str]]:
    """Validate a harmonic sidecar against the protocol schema."""
    schema = load_json(META_SCHEMA_PATH)
    validator = jsonschema.Draft7Validator(schema)
    errors = [f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in validator.iter_errors(meta)]
    return len(errors) == 0, errors


def load_harmonics(
    path: Path | str,
    radius: Optional[float] = None,
    reference_length: float = 1.0,
    strict: Optional[bool] = None,
) -> HarmonicSet:
    """
    Load a harmonic CSV (``z,B<m>[,A<m>]...``) and its ``.meta.json`` sidecar.

    z and the radius of analysis are divided by ``reference_length``.

    Raises:
        FileNotFoundError: missing CSV
        HarmonicParseError: malformed header/rows, bad sidecar; names the line
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Harmonic file not found: {path}")

    meta: Dict[str, Any] = {}
    meta_path = sidecar_path(path)
    if meta_path.exists():
        meta = load_json(meta_path)
        is_valid, errors = validate_meta(meta)
        if not is_valid:
            raise HarmonicParseError(f"invalid sidecar: {'; '.join(errors)}", meta_path)

    if radius is None:
        radius = meta.get("radius_of_analysis")
    if radius is None:
        raise HarmonicParseError("radius of analysis missing (no sidecar and no override)", path)
    if strict is None:
        strict = bool(meta.get("strict", True))

    columns = _parse_header(path)
    try:
        raw = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise HarmonicParseError(f"malformed row: {exc}", path, int(match.group(1)) if match else None)

    if raw.empty:
        raise HarmonicParseError("no data rows", path, 2)

    values = raw.apply(pd.to_numeric, errors="coerce")
    bad_rows = np.nonzero(values.isna().any(axis=1).to_numpy())[0]
    if len(bad_rows):
        row = int(bad_rows[0])
        raise HarmonicParseError(f"non-numeric or missing value in row {raw.iloc[row].tolist()}", path, row + 2)

    data = values.to_numpy(dtype=float)
    z = data[:, 0] / reference_length
    try:
        check_uniform_grid(z)
    except GridError as exc:
        steps = np.diff(z)
        dz = (z[-1] - z[0]) / max(len(z) - 1, 1)
        off = np.nonzero(np.abs(steps - dz) > GRID_RTOL * abs(dz) + 4 * np.finfo(float).eps * np.max(np.abs(z)))[0]
        line = int(off[0]) + 3 if len(off) else None
        raise HarmonicParseError(str(exc), path, line) from exc

    normal: Dict[int, np.ndarray] = {}
    skew: Dict[int, np.ndarray] = {}
    for col, (kind, m) in enumerate(columns, start=1):
        (normal if kind == "B" else skew)[m] = data[:, col]

    try:
        hs = HarmonicSet(
            radius=float(radius) / reference_length,
            z=z,
            normal=normal,
            skew=skew,
            strict=strict,
            units=meta.get("units", "scaled"),
        )
    except GridError as exc:
        raise HarmonicParseError(str(exc), path, 1) from exc

    logger.info(
        f"Loaded {len(hs.orders)} harmonics {hs.orders} from {path.name}: "
        f"N={hs.n_points}, dz={hs.dz:.6g}, R={hs.radius:.6g}"
    )
    return hs


def save_harmonics(hs: HarmonicSet, path: Path | str) -> Path:
    """Write a harmonic set as CSV plus sidecar (inverse of load_harmonics with L=1)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = {"z": hs.z}
    for m in hs.orders:
        if m in hs.normal:
            frame[f"B{m}"] = hs.normal[m]
        if m in hs.skew:
            frame[f"A{m}"] = hs.skew[m]
    save_numeric_csv(pd.DataFrame(frame), path)
    save_json(
        {"radius_of_analysis": hs.radius, "units": hs.units, "strict": hs.strict},
        sidecar_path(path),
    )
    return path


def zero_pad(hs: HarmonicSet, pad_len: float) -> HarmonicSet:
    """
    Extend the grid by ``pad_len`` on both sides with exactly-zero samples.

    Raises:
        GridError: negative pad length or not a multiple of the grid spacing
    """
    if pad_len < 0:
        raise GridError(f"pad length must be >= 0, got {pad_len}")
    dz = hs.dz
    count = pad_len / dz
    n_pad = int(round(count))
    if abs(count - n_pad) > 1e-9 * max(1.0, count):
        raise GridError(f"pad length {pad_len} is not a multiple of dz={dz}")
    if n_pad == 0:
        return hs

    before = hs.z[0] - dz * np.arange(n_pad, 0, -1)
    after = hs.z[-1] + dz * np.arange(1, n_pad + 1)
    z = np.concatenate([before, hs.z, after])
    zeros = np.zeros(n_pad)

    def pad(series: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
        return {m: np.concatenate([zeros, s, zeros]) for m, s in series.items()}

    return HarmonicSet(
        radius=hs.radius,
        z=z,
        normal=pad(hs.normal),
        skew=pad(hs.skew),
        strict=hs.strict,
        units=hs.units,
    )
