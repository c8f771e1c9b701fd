"""Structural checks of one-step maps: symplecticity and time reversibility."""

import numpy as np

from src.integrators.runge_kutta import Stepper

# canonical structure matrix for (X, Y, P_x, P_y)
J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


def step_jacobian(step: Stepper, y: np.ndarray, Z: float, h: float, eps: float = 1e-5) -> np.ndarray:
    """4x4 Jacobian of y -> step(y, Z, h) by central differences."""
    y = np.asarray(y, dtype=float)
    jac = np.zeros((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = eps
        jac[:, k] = (step(y + e, Z, h) - step(y - e, Z, h)) / (2.0 * eps)
    return jac


def symplecticity_defect(step: Stepper, y: np.ndarray, Z: float, h: float, eps: float = 1e-5) -> float:
    """max |J_g^T J J_g - J| of the finite-difference Jacobian J_g."""
    jac = step_jacobian(step, y, Z, h, eps)
    return float(np.max(np.abs(jac.T @ J @ jac - J)))


def time_reversal_error(step: Stepper, y: np.ndarray, Z: float, h: float) -> float:
    """max |step(step(y, Z, h), Z + h, -h) - y|."""
    y = np.asarray(y, dtype=float)
    back = step(step(y, Z, h), Z + h, -h)
    return float(np.max(np.abs(back - y)))
