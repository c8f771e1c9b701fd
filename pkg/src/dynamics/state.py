"""Scaled transverse phase-space state."""

from dataclasses import dataclass

import numpy as np

from src.common.errors import DomainError


@dataclass(frozen=True)
class ParticleState:
    """(X, Y, P_x, P_y) at longitudinal position Z with momentum deviation delta0."""

    X: float
    Y: float
    Px: float
    Py: float
    Z: float = 0.0
    delta0: float = 0.0

    def __post_init__(self):
        if not self.delta0 > -1.0:
            raise DomainError(f"momentum deviation must exceed -1, got {self.delta0}")
        if not np.all(np.isfinite([self.X, self.Y, self.Px, self.Py, self.Z, self.delta0])):
            raise DomainError("particle state has non-finite components")

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Px, self.Py])

    @classmethod
    def from_array(cls, y, Z: float = 0.0, delta0: float = 0.0) -> "ParticleState":
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]), float(Z), float(delta0))

    def advanced(self, y, Z: float) -> "ParticleState":
        """New state with transverse vector ``y`` at ``Z``; delta0 is carried unchanged."""
        return ParticleState.from_array(y, Z, self.delta0)
