"""
Second-order Lie splitting map.

One step is the palindrome kick(h/2), X-block(h/2), Y-block(h), X-block(h/2),
kick(h/2). Each block is the exact flow of its sub-Hamiltonian with Z frozen at
the station given by LIE2_Z_STATIONS (fractions of the step).
"""

from typing import Tuple

import numpy as np

from src.dynamics.state import ParticleState
from src.integrators.runge_kutta import Stepper

# (first kick + X-block, Y-block, X-block + last kick)
LIE2_Z_STATIONS: Tuple[float, float, float] = (0.0, 0.5, 1.0)


def _x_block(field, X, Y, Px, Py, z, tau, inv):
    """Exact flow of (P_x - A_x)^2 / 2(1+delta0) over tau: shift to mechanical momenta, drift, shift back."""
    a, f = field.x_shift(X, Y, z)
    Px -= a
    Py -= f
    X += tau * Px * inv
    a, f = field.x_shift(X, Y, z)
    return X, Px + a, Py + f


def _y_block(field, X, Y, Px, Py, z, tau, inv):
    g, a = field.y_shift(X, Y, z)
    Px -= g
    Py -= a
    Y += tau * Py * inv
    g, a = field.y_shift(X, Y, z)
    return Y, Px + g, Py + a


def lie2_vector_step(
    y: np.ndarray,
    Z: float,
    h: float,
    field,
    delta0: float = 0.0,
    stations: Tuple[float, float, float] = LIE2_Z_STATIONS,
) -> np.ndarray:
    X, Y, Px, Py = (float(v) for v in y)
    inv = 1.0 / (1.0 + delta0)
    z_first, z_mid, z_last = (Z + s * h for s in stations)
    half = 0.5 * h

    kx, ky = field.kick(X, Y, z_first)
    Px += half * kx
    Py += half * ky
    X, Px, Py = _x_block(field, X, Y, Px, Py, z_first, half, inv)
    Y, Px, Py = _y_block(field, X, Y, Px, Py, z_mid, h, inv)
    X, Px, Py = _x_block(field, X, Y, Px, Py, z_last, half, inv)
    kx, ky = field.kick(X, Y, z_last)
    Px += half * kx
    Py += half * ky

    counter = getattr(field, "counter", None)
    if counter is not None:
        counter.map_evaluations += 1
    return np.array([X, Y, Px, Py])


def lie2_step(s: ParticleState, h: float, field) -> ParticleState:
    return s.advanced(lie2_vector_step(s.as_array(), s.Z, h, field, s.delta0), s.Z + h)


def lie2_map(field, delta0: float = 0.0, stations: Tuple[float, float, float] = LIE2_Z_STATIONS) -> Stepper:
    def step(y: np.ndarray, Z: float, h: float) -> np.ndarray:
        return lie2_vector_step(y, Z, h, field, delta0, stations)

    return step
