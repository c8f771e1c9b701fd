"""Right-hand side and energy diagnostics of the reduced paraxial system."""

from typing import NamedTuple

import numpy as np

from src.dynamics.state import ParticleState
from src.gauge.potential_table import PotentialValues


class Derivative(NamedTuple):
    dX: float
    dY: float
    dPx: float
    dPy: float
    dZ: float = 1.0


class EnergyComponents(NamedTuple):
    K_X: float
    K_Y: float
    K_total: float


def rhs_vector(y: np.ndarray, delta0: float, pv: PotentialValues) -> np.ndarray:
    """d(X, Y, P_x, P_y)/dZ for the transverse vector ``y`` with pv evaluated at (X, Y, Z)."""
    inv = 1.0 / (1.0 + delta0)
    vx = (y[2] - pv.A[0]) * inv
    vy = (y[3] - pv.A[1]) * inv
    return np.array(
        [
            vx,
            vy,
            pv.dX[0] * vx + pv.dX[1] * vy + pv.dX[2],
            pv.dY[0] * vx + pv.dY[1] * vy + pv.dY[2],
        ]
    )


def rhs(s: ParticleState, pv: PotentialValues) -> Derivative:
    d = rhs_vector(s.as_array(), s.delta0, pv)
    return Derivative(float(d[0]), float(d[1]), float(d[2]), float(d[3]))


def energy_components(s: ParticleState, pv: PotentialValues) -> EnergyComponents:
    """
    Transverse kinetic terms and the reduced Hamiltonian
    K = K_X + K_Y - A_z - 2 delta0 (no P_z contribution).
    """
    two_p = 2.0 * (1.0 + s.delta0)
    kx = (s.Px - pv.A[0]) ** 2 / two_p
    ky = (s.Py - pv.A[1]) ** 2 / two_p
    return EnergyComponents(float(kx), float(ky), float(kx + ky - pv.A[2] - 2.0 * s.delta0))
