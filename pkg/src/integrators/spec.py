"""Integrator selection, cost model and stepper factory."""

from dataclasses import asdict, dataclass
from typing import Any, Dict, NamedTuple, Optional

from src.integrators.composition import yoshida
from src.integrators.lie import lie2_map
from src.integrators.runge_kutta import FixedPointParams, Stepper, runge_kutta_map
from src.integrators.tableaux import TABLEAUX
from src.sampling.coefficient_source import MODES

METHODS = ("midpoint", "gauss4", "gauss6", "rk4", "lie2", "lie4", "lie6")
IMPLICIT = ("midpoint", "gauss4", "gauss6")
LIE_METHODS = ("lie2", "lie4", "lie6")

NOMINAL_ORDER = {"midpoint": 2, "lie2": 2, "rk4": 4, "gauss4": 4, "lie4": 4, "gauss6": 6, "lie6": 6}

# rhs evaluations per fixed-point sweep (implicit) or per step (explicit); second-order maps per step
_RHS_PER_STEP = {"midpoint": 1, "gauss4": 2, "gauss6": 3, "rk4": 4}
_M2_PER_STEP = {"lie2": 1, "lie4": 3, "lie6": 9}


@dataclass(frozen=True)
class IntegratorSpec:
    method: str
    step: float
    fp_tol: float = 1e-14
    fp_max: int = 50
    z_source: str = "spline"
    on_grid: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method '{self.method}', expected one of {METHODS}")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.z_source not in MODES:
            raise ValueError(f"unknown coefficient source '{self.z_source}', expected one of {MODES}")
        FixedPointParams(self.fp_tol, self.fp_max)

    @property
    def fixed_point(self) -> FixedPointParams:
        return FixedPointParams(self.fp_tol, self.fp_max)

    @property
    def order(self) -> int:
        return NOMINAL_ORDER[self.method]

    @property
    def needs_aux(self) -> bool:
        return self.method in LIE_METHODS

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class StepCost(NamedTuple):
    rhs_evaluations: float
    map_evaluations: int


def step_cost(spec: IntegratorSpec, n_fp: Optional[float] = None) -> StepCost:
    """
    Evaluations per step: rhs calls for Runge-Kutta methods (stages times N_fp for
    implicit ones), second-order Lie maps for the splitting methods.
    """
    if spec.method in _M2_PER_STEP:
        return StepCost(0, _M2_PER_STEP[spec.method])
    per = _RHS_PER_STEP[spec.method]
    if spec.method in IMPLICIT:
        if n_fp is None:
            raise ValueError(f"{spec.method} cost depends on the fixed-point iteration count")
        return StepCost(per * n_fp, 0)
    return StepCost(per, 0)


def make_stepper(spec: IntegratorSpec, field, delta0: float = 0.0) -> Stepper:
    """Stepper (y, Z, h) -> y for ``spec.method`` bound to ``field``."""
    if spec.method in TABLEAUX:
        return runge_kutta_map(TABLEAUX[spec.method], field, delta0, spec.fixed_point)
    base = lie2_map(field, delta0)
    if spec.method == "lie2":
        return base
    return yoshida(base, NOMINAL_ORDER[spec.method])
