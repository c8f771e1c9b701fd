"""Reference-particle constants and the scaling between SI and the scaled variables."""

from dataclasses import dataclass
from math import sqrt

from scipy import constants

from src.common.errors import DomainError

PROTON_MASS_KG = constants.m_p
TEV = 1e12 * constants.electron_volt


@dataclass(frozen=True)
class KinematicConstants:
    """Reference momentum p0 [kg m/s], beta0, gamma0, length L [m], energy E [J], rest mass m0 [kg]."""

    p0: float
    beta0: float
    gamma0: float
    reference_length: float
    energy: float
    rest_mass: float
    charge: float = constants.e

    def __post_init__(self):
        if not self.p0 > 0:
            raise DomainError(f"reference momentum must be positive, got {self.p0}")
        if not 0 < self.beta0 < 1:
            raise DomainError(f"beta0 must lie in (0, 1), got {self.beta0}")

    @property
    def field_scale(self) -> float:
        """Q L / p0: multiplies a potential in T m to give the scaled potential."""
        return self.charge * self.reference_length / self.p0


def reference_constants(
    energy: float,
    rest_mass: float,
    reference_length: float = 1.0,
    charge: float = constants.e,
) -> KinematicConstants:
    """
    p0 = sqrt((E/c)^2 - m0^2 c^2), beta0 = p0 c / E for total energy E [J] and rest mass m0 [kg].

    Raises:
        DomainError: E not above the rest energy
    """
    c = constants.c
    rest_energy = rest_mass * c**2
    if not energy > rest_energy:
        raise DomainError(f"energy {energy:.6g} J does not exceed the rest energy {rest_energy:.6g} J")
    if not reference_length > 0:
        raise DomainError(f"reference length must be positive, got {reference_length}")
    # (E - m c^2)(E + m c^2) keeps precision when E is close to the rest energy
    p0 = sqrt((energy - rest_energy) * (energy + rest_energy)) / c
    return KinematicConstants(
        p0=p0,
        beta0=p0 * c / energy,
        gamma0=energy / rest_energy,
        reference_length=reference_length,
        energy=energy,
        rest_mass=rest_mass,
        charge=charge,
    )


def proton_reference(energy_tev: float = 7.0, reference_length: float = 1.0) -> KinematicConstants:
    return reference_constants(energy_tev * TEV, PROTON_MASS_KG, reference_length)


def delta_from_ptau(p_tau: float, beta0: float) -> float:
    """
    delta = sqrt(1 - 2 P_tau / beta0 + P_tau^2) - 1.

    Raises:
        DomainError: negative radicand
    """
    radicand = 1.0 - 2.0 * p_tau / beta0 + p_tau**2
    if radicand < 0:
        raise DomainError(f"no momentum deviation for P_tau={p_tau}, beta0={beta0}: radicand {radicand:.6g} < 0")
    return sqrt(radicand) - 1.0
