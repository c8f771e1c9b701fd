"""Analytic generalized-gradient profiles built from the erf-of-tangent smooth step."""

from dataclasses import dataclass, field
from functools import lru_cache
from math import pi, sqrt
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import erf

from src.common.errors import DomainError
from src.common.logging import get_logger
from src.harmonics.gradients import GradientKey, GradientTable, harmonic_weight
from src.harmonics.harmonic_set import HarmonicSet, check_uniform_grid

logger = get_logger(__name__)

# beyond this |tan| the Gaussian factor underflows
TAN_CUTOFF = 40.0
SPECTRAL_REFINEMENT = 10
GEOMETRY_TOL = 1e-12

# realistic surrogate: plateau ratio b_m / b_2 of the harmonic at the radius of analysis
SURROGATE_RATIOS = {6: 2e-3, 10: -8e-4, 14: 3e-4}
SURROGATE_RADIUS = 0.05
SURROGATE_DZ = 0.02
SURROGATE_ELL_MAX = 8


@lru_cache(maxsize=None)
def _step_polynomial(order: int) -> Polynomial:
    """P_n with sigma^(n)(x) = P_n(t) exp(-t^2), t = tan(pi x / 2), n >= 1."""
    if order == 1:
        return Polynomial([sqrt(pi) / 2, 0.0, sqrt(pi) / 2])
    prev = _step_polynomial(order - 1)
    dt_dx = Polynomial([pi / 2, 0.0, pi / 2])
    return dt_dx * (prev.deriv() - Polynomial([0.0, 2.0]) * prev)


def step_function(x, order: int = 0) -> np.ndarray:
    """
    Smooth step 0 for x <= -1, (1 + erf(tan(pi x/2)))/2 inside, 1 for x >= 1,
    and its derivatives of any order.
    """
    if order < 0:
        raise ValueError(f"derivative order must be >= 0, got {order}")
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0

    if order == 0:
        out = np.where(x >= 1.0, 1.0, 0.0)
        out[inside] = 0.5 * (1.0 + erf(np.tan(0.5 * pi * x[inside])))
        return out

    out = np.zeros_like(x)
    t = np.tan(0.5 * pi * x[inside])
    live = np.abs(t) <= TAN_CUTOFF
    values = np.zeros_like(t)
    values[live] = _step_polynomial(order)(t[live]) * np.exp(-t[live] ** 2)
    out[inside] = values
    return out


@dataclass(frozen=True)
class AnalyticProfile:
    """
    C^[0](Z) = alpha [sigma(-1 + 2Z/L1) + sigma(1 - 2(Z - Z2)/L2)] - alpha on (0, Zmax),
    zero elsewhere, with exact derivatives of every order.

    ``amplitudes`` scales the shape per (m, kind); the default carries only the
    normal quadrupole gradient with unit weight.
    """

    alpha: float
    l1: float
    l2: float
    z2: float
    zmax: float
    amplitudes: Dict[Tuple[int, str], float] = field(default_factory=lambda: {(2, "s"): 1.0})

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise DomainError(f"transition widths must be positive, got L1={self.l1}, L2={self.l2}")
        if not 0 < self.z2 < self.zmax:
            raise DomainError(f"need 0 < Z2 < Zmax, got Z2={self.z2}, Zmax={self.zmax}")
        if self.l1 > self.z2 + GEOMETRY_TOL or self.z2 + self.l2 > self.zmax + GEOMETRY_TOL:
            raise DomainError(
                f"transitions overlap or exceed the field length: "
                f"L1={self.l1}, Z2={self.z2}, L2={self.l2}, Zmax={self.zmax}"
            )

    def keys(self) -> List[Tuple[int, str]]:
        return sorted(self.amplitudes)

    def shape(self, z, order: int = 0) -> np.ndarray:
        """Derivative ``order`` of the unit-amplitude profile times alpha."""
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.zeros_like(z)
        inside = (z > 0.0) & (z < self.zmax)
        zi = z[inside]
        u1 = -1.0 + 2.0 * zi / self.l1
        u2 = 1.0 - 2.0 * (zi - self.z2) / self.l2
        if order == 0:
            out[inside] = self.alpha * (step_function(u1) + step_function(u2) - 1.0)
        else:
            out[inside] = self.alpha * (
                (2.0 / self.l1) ** order * step_function(u1, order)
                + (-2.0 / self.l2) ** order * step_function(u2, order)
            )
        return out[0] if scalar else out

    def evaluate(self, key: GradientKey, z) -> np.ndarray:
        weight = self.amplitudes.get((key.m, key.kind))
        if weight is None:
            return np.zeros(np.shape(z)) if np.ndim(z) else 0.0
        return weight * self.shape(z, key.order)


def _spectral_block(profile: AnalyticProfile, z_grid: np.ndarray, nd: int) -> np.ndarray:
    """Orders 0..nd of the unit shape; orders >= 2 by spectral differentiation of C^[1]."""
    n = len(z_grid)
    fine = np.linspace(z_grid[0], z_grid[-1], SPECTRAL_REFINEMENT * (n - 1) + 1)
    dz_fine = fine[1] - fine[0]
    k = 2.0 * np.pi * np.fft.fftfreq(len(fine), d=dz_fine)
    spectrum = np.fft.fft(profile.shape(fine, 1))

    block = np.empty((nd + 1, n))
    block[0] = profile.shape(z_grid, 0)
    if nd >= 1:
        block[1] = profile.shape(z_grid, 1)
    for order in range(2, nd + 1):
        factor = (1j * k) ** (order - 1)
        if len(fine) % 2 == 0 and (order - 1) % 2 == 1:
            factor[len(fine) // 2] = 0.0
        block[order] = np.fft.ifft(spectrum * factor).real[::SPECTRAL_REFINEMENT]
    return block


def analytic_c20(
    alpha: float,
    l1: float,
    l2: float,
    z2: float,
    zmax: float,
    z_grid: np.ndarray,
    nd: int,
    method: str = "exact",
) -> Tuple[AnalyticProfile, GradientTable]:
    """
    Analytic quadrupole gradient C_2^[0] as an exact callable and sampled up to order ``nd``.

    Args:
        method: "exact" (closed-form derivatives of every order) or "spectral"
            (orders >= 2 by spectral differentiation on a 10x finer grid)

    Raises:
        DomainError: invalid geometry
    """
    if nd < 0:
        raise ValueError(f"ND must be >= 0, got {nd}")
    if method not in ("exact", "spectral"):
        raise ValueError(f"unknown differentiation method '{method}'")
    profile = AnalyticProfile(alpha=alpha, l1=l1, l2=l2, z2=z2, zmax=zmax)
    z_grid = np.asarray(z_grid, dtype=float)
    check_uniform_grid(z_grid)

    if method == "exact":
        block = np.vstack([profile.shape(z_grid, n) for n in range(nd + 1)])
    else:
        block = _spectral_block(profile, z_grid, nd)

    table = GradientTable(
        z=z_grid.copy(),
        nd=nd,
        normal={2: block},
        profile=profile,
        provenance={
            "source": "analytic",
            "method": method,
            "alpha": alpha,
            "l1": l1,
            "l2": l2,
            "z2": z2,
            "zmax": zmax,
            "nd": nd,
        },
    )
    return profile, table


def synthetic_harmonics(
    alpha: float = 6e-4,
    l1: float = 0.9,
    l2: float = 0.9,
    z2: float = 3.1,
    zmax: float = 4.0,
    radius: float = SURROGATE_RADIUS,
    dz: float = SURROGATE_DZ,
    ratios: Optional[Dict[int, float]] = None,
    ell_max: int = SURROGATE_ELL_MAX,
) -> Tuple[AnalyticProfile, HarmonicSet]:
    """
    Realistic-style normal harmonics B_m(R, z), m in {2} + ratios, sampled on [0, zmax].

    Every gradient C_m^[0] shares the step shape; its amplitude is set so that the
    plateau of B_m equals ``ratios[m]`` times the plateau of B_2. The harmonics are
    forward-evaluated from the exact gradients with orders up to 2*ell_max.
    """
    ratios = dict(SURROGATE_RATIOS if ratios is None else ratios)
    amplitudes: Dict[Tuple[int, str], float] = {(2, "s"): 1.0}
    for m, ratio in ratios.items():
        # plateau B_m = m R^(m-1) C_m^[0]
        amplitudes[(m, "s")] = ratio * 2.0 * radius / (m * radius ** (m - 1))
    profile = AnalyticProfile(alpha=alpha, l1=l1, l2=l2, z2=z2, zmax=zmax, amplitudes=amplitudes)

    n_points = int(round(zmax / dz)) + 1
    z = dz * np.arange(n_points)
    normal = {}
    for m, kind in profile.keys():
        total = np.zeros(n_points)
        for ell in range(ell_max + 1):
            c = profile.evaluate(GradientKey(m, kind, 2 * ell), z)
            total += harmonic_weight(m, ell) * radius ** (2 * ell + m - 1) * c
        normal[m] = total

    logger.info(f"Synthesized harmonics {sorted(normal)} at R={radius}, dz={dz}, N={n_points}")
    return profile, HarmonicSet(radius=radius, z=z, normal=normal, strict=True, units="scaled")
