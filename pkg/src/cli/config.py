"""Run configuration: YAML file values overridden by command-line flags."""

import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from src.common.errors import ConfigError
from src.common.io_utils import load_yaml
from src.gauge.potential_table import GAUGES
from src.integrators.spec import METHODS
from src.sampling.coefficient_source import MODES
from src.tracker.tracking import CheckpointPolicy, steps_per_element

JOBS_ENV_VAR = "QUADTRACK_JOBS"
# keys of the YAML file that describe the file rather than the run
FILE_KEYS = ("version", "metadata")


def default_jobs() -> int:
    load_dotenv()
    raw = os.getenv(JOBS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{JOBS_ENV_VAR} must be an integer, got '{raw}'") from None


def parse_list(text: str, cast=str) -> List[Any]:
    """'a,b,c' -> [cast(a), cast(b), cast(c)]."""
    return [cast(item.strip()) for item in text.split(",") if item.strip()]


def parse_range(text: str) -> List[int]:
    """'2..16' -> [2, 3, ..., 16]; '2,4,8' -> [2, 4, 8]."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return parse_list(text, int)


class RunConfig(BaseModel):
    """Fully resolved configuration of one quadtrack command."""

    model_config = ConfigDict(extra="forbid")

    # field source: a harmonic file, or one of the named configurations
    input: Optional[str] = None
    field: Literal["analytic", "surrogate", "drift"] = "analytic"
    radius: Optional[float] = None
    pad: float = 0.0
    reference_length: float = 1.0
    energy_tev: float = 7.0

    # analytic profile
    alpha: float = 6e-4
    l1: float = 0.9
    l2: float = 0.9
    z2: float = 3.1
    zmax: float = 4.0
    dz: float = 0.002

    nd: int = 2
    gauge: str = "af"
    gauges: List[str] = ["af", "hfc"]

    methods: List[str] = ["rk4"]
    steps: List[float] = [0.04]
    mode: str = "spline"
    fp_tol: float = 1e-14
    fp_max: int = 50
    window: Optional[Tuple[float, float]] = None
    baseline: str = "gauss6"
    repeats: int = 3

    n_pairs: Optional[int] = None
    checkpoints: str = "element"
    x0: float = 0.02
    y0: float = -0.04
    px0: float = 0.0
    py0: float = 0.0
    delta0: float = 0.0

    nd_range: List[int] = [2, 4, 6, 8, 10, 12, 14, 16]
    n_probes: int = 100
    seed: int = 0

    output: str = "outputs"
    jobs: int = 1

    @field_validator("gauge")
    @classmethod
    def _check_gauge(cls, v: str) -> str:
        v = v.lower()
        if v not in GAUGES:
            raise ValueError(f"unknown gauge '{v}', expected one of {GAUGES}")
        return v

    @field_validator("gauges")
    @classmethod
    def _check_gauges(cls, v: List[str]) -> List[str]:
        v = [g.lower() for g in v]
        bad = [g for g in v if g not in GAUGES]
        if bad or not v:
            raise ValueError(f"unknown gauges {bad}, expected a non-empty subset of {GAUGES}")
        return v

    @field_validator("methods")
    @classmethod
    def _check_methods(cls, v: List[str]) -> List[str]:
        bad = [m for m in v if m not in METHODS]
        if bad or not v:
            raise ValueError(f"unknown methods {bad}, expected a non-empty subset of {METHODS}")
        return v

    @field_validator("baseline")
    @classmethod
    def _check_baseline(cls, v: str) -> str:
        if v not in METHODS:
            raise ValueError(f"unknown baseline method '{v}'")
        return v

    @field_validator("steps")
    @classmethod
    def _check_steps(cls, v: List[float]) -> List[float]:
        if not v or any(not h > 0 for h in v):
            raise ValueError(f"steps must be a non-empty list of positive numbers, got {v}")
        return v

    @field_validator("mode")
    @classmethod
    def _check_mode(cls, v: str) -> str:
        if v not in MODES:
            raise ValueError(f"unknown interpolation mode '{v}', expected one of {MODES}")
        return v

    @field_validator("checkpoints")
    @classmethod
    def _check_checkpoints(cls, v: str) -> str:
        CheckpointPolicy.parse(v)
        return v

    @field_validator("nd", "repeats", "fp_max", "n_probes")
    @classmethod
    def _check_counts(cls, v: int, info) -> int:
        minimum = 0 if info.field_name == "nd" else 1
        if v < minimum:
            raise ValueError(f"{info.field_name} must be >= {minimum}, got {v}")
        return v

    @field_validator("n_pairs", "jobs")
    @classmethod
    def _check_positive(cls, v: Optional[int], info) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"{info.field_name} must be >= 1, got {v}")
        return v

    @field_validator("dz", "zmax", "l1", "l2", "z2", "alpha", "reference_length", "energy_tev", "fp_tol")
    @classmethod
    def _check_positive_float(cls, v: float, info) -> float:
        if not v > 0:
            raise ValueError(f"{info.field_name} must be positive, got {v}")
        return v

    @property
    def output_dir(self) -> Path:
        return Path(self.output)

    def check_steps(self, span: float) -> None:
        """
        Raises:
            ConfigError: a step does not divide the element span
        """
        for h in self.steps:
            try:
                steps_per_element(span, h)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc


def load_run_config(path: Optional[Path | str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    File values first, then every override that is not None.

    Raises:
        FileNotFoundError: config file missing
        ConfigError: unknown keys or invalid values
    """
    values: Dict[str, Any] = {"jobs": default_jobs()}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        data = load_yaml(path)
        values.update({k: v for k, v in data.items() if k not in FILE_KEYS})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"invalid run configuration: {problems}") from None
