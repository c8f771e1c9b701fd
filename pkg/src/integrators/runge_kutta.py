"""Explicit and implicit (fixed-point) Runge-Kutta steps on the transverse vector."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.common.errors import FixedPointError
from src.dynamics.state import ParticleState
from src.integrators.tableaux import ButcherTableau

Stepper = Callable[[np.ndarray, float, float], np.ndarray]


@dataclass(frozen=True)
class FixedPointParams:
    """
    Stage iteration stops once the max-norm stage update max|U_new - U| drops below
    ``tol``, or fails after ``max_iter`` sweeps.
    """

    tol: float = 1e-14
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"fixed-point tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"fixed-point iteration cap must be >= 1, got {self.max_iter}")


def _explicit(tab: ButcherTableau, y: np.ndarray, Z: float, h: float, f) -> np.ndarray:
    s = tab.stages
    K = np.zeros((s, len(y)))
    for i in range(s):
        u = y + h * (tab.A[i, :i] @ K[:i]) if i else y
        K[i] = f(u, Z + tab.c[i] * h)
    return y + h * (tab.b @ K)


def _implicit(tab: ButcherTableau, y: np.ndarray, Z: float, h: float, f, fp: FixedPointParams, counter) -> np.ndarray:
    s = tab.stages
    U = np.tile(y, (s, 1))
    K = np.zeros_like(U)
    residual = np.inf
    for sweep in range(1, fp.max_iter + 1):
        for i in range(s):
            K[i] = f(U[i], Z + tab.c[i] * h)
        U_new = y + h * (tab.A @ K)
        residual = float(np.max(np.abs(U_new - U)))
        U = U_new
        if not np.isfinite(residual):
            break
        if residual < fp.tol:
            if counter is not None:
                counter.fixed_point_sweeps += sweep
                counter.fixed_point_solves += 1
            return y + h * (tab.b @ K)
    raise FixedPointError(residual, fp.max_iter, Z)


def rk_vector_step(
    tab: ButcherTableau,
    y: np.ndarray,
    Z: float,
    h: float,
    field,
    delta0: float = 0.0,
    fp: FixedPointParams = FixedPointParams(),
) -> np.ndarray:
    """
    One step y_{n+1} = y_n + h sum_i b_i f(Z_n + c_i h, u_i).

    Explicit tableaux use forward substitution; implicit ones fixed-point
    iteration on the stage values, started at y_n.
    """

    def f(u, z):
        return field.rhs(u, z, delta0)

    if tab.explicit:
        return _explicit(tab, y, Z, h, f)
    return _implicit(tab, y, Z, h, f, fp, getattr(field, "counter", None))


def rk_step(
    tab: ButcherTableau,
    s: ParticleState,
    h: float,
    field,
    fp: FixedPointParams = FixedPointParams(),
) -> ParticleState:
    """
    Raises:
        FixedPointError: stage iteration did not converge within fp.max_iter sweeps
    """
    y = rk_vector_step(tab, s.as_array(), s.Z, h, field, s.delta0, fp)
    return s.advanced(y, s.Z + h)


def runge_kutta_map(tab: ButcherTableau, field, delta0: float = 0.0, fp: FixedPointParams = FixedPointParams()) -> Stepper:
    """Stepper (y, Z, h) -> y for one tableau bound to a field."""

    def step(y: np.ndarray, Z: float, h: float) -> np.ndarray:
        return rk_vector_step(tab, y, Z, h, field, delta0, fp)

    return step
