"""Butcher tableaux of the Runge-Kutta methods."""

from dataclasses import dataclass
from math import sqrt

import numpy as np

SYMPLECTIC_TOL = 1e-15
ROW_SUM_TOL = 1e-15


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        s = len(self.b)
        if self.A.shape != (s, s) or self.c.shape != (s,):
            raise ValueError(f"{self.name}: inconsistent tableau shapes")
        if np.max(np.abs(self.A.sum(axis=1) - self.c)) > ROW_SUM_TOL:
            raise ValueError(f"{self.name}: abscissae are not the row sums of A")

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def explicit(self) -> bool:
        return bool(np.all(np.triu(self.A) == 0.0))

    def symplecticity_residual(self) -> float:
        """max |b_i a_ij + b_j a_ji - b_i b_j|."""
        bA = self.b[:, None] * self.A
        return float(np.max(np.abs(bA + bA.T - np.outer(self.b, self.b))))

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        return self.symplecticity_residual() <= tol


def _tableau(name, A, b, order) -> ButcherTableau:
    A = np.array(A, dtype=float)
    return ButcherTableau(name, A, np.array(b, dtype=float), A.sum(axis=1), order)


_r3 = sqrt(3.0)
_r15 = sqrt(15.0)

MIDPOINT = _tableau("midpoint", [[0.5]], [1.0], 2)

GAUSS4 = _tableau(
    "gauss4",
    [
        [1 / 4, 1 / 4 - _r3 / 6],
        [1 / 4 + _r3 / 6, 1 / 4],
    ],
    [1 / 2, 1 / 2],
    4,
)

GAUSS6 = _tableau(
    "gauss6",
    [
        [5 / 36, 2 / 9 - _r15 / 15, 5 / 36 - _r15 / 30],
        [5 / 36 + _r15 / 24, 2 / 9, 5 / 36 - _r15 / 24],
        [5 / 36 + _r15 / 30, 2 / 9 + _r15 / 15, 5 / 36],
    ],
    [5 / 18, 4 / 9, 5 / 18],
    6,
)

RK4 = _tableau(
    "rk4",
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ],
    [1 / 6, 1 / 3, 1 / 3, 1 / 6],
    4,
)

TABLEAUX = {t.name: t for t in (MIDPOINT, GAUSS4, GAUSS6, RK4)}

for _t in (MIDPOINT, GAUSS4, GAUSS6):
    if not _t.is_symplectic():
        raise RuntimeError(f"{_t.name} tableau violates the symplecticity condition")
