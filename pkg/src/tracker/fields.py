"""Named field configurations shared by the CLI, the study tools and the tests."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.common.logging import get_logger
from src.gauge.builders import build_potential
from src.gauge.potential_table import PotentialTable
from src.harmonics.analytic import analytic_c20, synthetic_harmonics
from src.harmonics.gradients import GradientTable, compute_gradients
from src.harmonics.harmonic_set import HarmonicSet, zero_pad
from src.sampling.field import EvaluationCounter, Field

logger = get_logger(__name__)

# benchmark quadrupole: alpha, L1, L2, Z2, Zmax
ANALYTIC_DEFAULTS = {"alpha": 6e-4, "l1": 0.9, "l2": 0.9, "z2": 3.1, "zmax": 4.0}
ANALYTIC_DZ = 0.002
SURROGATE_PAD = 1.2
# extra gradient orders kept so that z-derivative companions stay structural
COMPANION_ORDERS = 2


@dataclass
class FieldConfiguration:
    """
    A gradient table plus the expansion order and scaling used to build potentials.

    Potential tables are built lazily, once per gauge.
    """

    name: str
    gradients: GradientTable
    nd: int
    scale_factor: float = 1.0
    gauge: str = "af"
    metadata: Dict[str, Any] = field(default_factory=dict)
    _tables: Dict[str, PotentialTable] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.nd <= self.gradients.nd:
            raise ValueError(f"ND={self.nd} outside the gradient table orders 0..{self.gradients.nd}")

    def table(self, gauge: Optional[str] = None) -> PotentialTable:
        gauge = (gauge or self.gauge).lower()
        if gauge not in self._tables:
            self._tables[gauge] = build_potential(gauge, self.gradients, self.nd, self.scale_factor)
        return self._tables[gauge]

    def field(
        self,
        gauge: Optional[str] = None,
        mode: str = "spline",
        polarity: float = 1.0,
        with_aux: bool = True,
        counter: Optional[EvaluationCounter] = None,
        **source_options,
    ) -> Field:
        return Field.from_table(self.table(gauge), mode, polarity, with_aux, counter, **source_options)

    @property
    def span(self) -> float:
        return float(self.gradients.z[-1] - self.gradients.z[0])

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "nd": self.nd,
            "gradient_nd": self.gradients.nd,
            "gauge": self.gauge,
            "scale_factor": self.scale_factor,
            "span": self.span,
            "n_points": len(self.gradients.z),
            **self.metadata,
        }


def analytic_benchmark(
    gauge: str = "af",
    nd: int = 2,
    dz: float = ANALYTIC_DZ,
    alpha: float = ANALYTIC_DEFAULTS["alpha"],
    l1: float = ANALYTIC_DEFAULTS["l1"],
    l2: float = ANALYTIC_DEFAULTS["l2"],
    z2: float = ANALYTIC_DEFAULTS["z2"],
    zmax: float = ANALYTIC_DEFAULTS["zmax"],
    method: str = "exact",
) -> FieldConfiguration:
    """Single normal quadrupole gradient with the step-function profile, sampled on [0, zmax]."""
    n_points = int(round(zmax / dz)) + 1
    z = dz * np.arange(n_points)
    _, gt = analytic_c20(alpha, l1, l2, z2, zmax, z, nd + COMPANION_ORDERS, method=method)
    return FieldConfiguration(
        name="analytic",
        gradients=gt,
        nd=nd,
        gauge=gauge,
        metadata={"alpha": alpha, "l1": l1, "l2": l2, "z2": z2, "zmax": zmax, "dz": dz, "method": method},
    )


def from_harmonics(
    hs: HarmonicSet,
    nd: int,
    gauge: str = "af",
    pad: float = 0.0,
    scale_factor: float = 1.0,
    name: str = "harmonics",
) -> FieldConfiguration:
    """Pad, invert and wrap a harmonic set."""
    padded = zero_pad(hs, pad) if pad else hs
    gt = compute_gradients(padded, nd + COMPANION_ORDERS)
    return FieldConfiguration(
        name=name,
        gradients=gt,
        nd=nd,
        scale_factor=scale_factor,
        gauge=gauge,
        metadata={"pad": pad, "radius": hs.radius, "harmonics": hs.orders},
    )


def realistic_surrogate(
    gauge: str = "af",
    nd: int = 16,
    pad: float = SURROGATE_PAD,
    ratios: Optional[Dict[int, float]] = None,
) -> FieldConfiguration:
    """
    Realistic-style quadrupole: harmonics {2, 6, 10, 14} at R=0.05, dz=0.02,
    zero-padded by ``pad`` on each side and inverted spectrally.
    """
    _, hs = synthetic_harmonics(ratios=ratios)
    config = from_harmonics(hs, nd, gauge=gauge, pad=pad, name="surrogate")
    logger.info(f"Realistic surrogate: ND={nd}, span={config.span:.6g}, harmonics={hs.orders}")
    return config


def drift_configuration(gauge: str = "af", nd: int = 2, span: float = 4.0, dz: float = 0.02) -> FieldConfiguration:
    """A quadrupole table with identically zero gradients: every map reduces to a drift."""
    n_points = int(round(span / dz)) + 1
    z = dz * np.arange(n_points)
    gt = GradientTable(
        z=z,
        nd=nd + COMPANION_ORDERS,
        normal={2: np.zeros((nd + COMPANION_ORDERS + 1, n_points))},
        provenance={"source": "drift"},
    )
    return FieldConfiguration(name="drift", gradients=gt, nd=nd, gauge=gauge, metadata={"dz": dz})


CONFIGURATIONS = {
    "analytic": analytic_benchmark,
    "surrogate": realistic_surrogate,
    "drift": drift_configuration,
}
