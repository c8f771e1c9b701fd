"""Instrumented field evaluation: potential, rhs and the Lie-substep quantities at (X, Y, Z)."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.gauge.potential_table import COMPONENTS, PotentialTable, PotentialValues, antiderivatives
from src.sampling.coefficient_source import CoefficientSource, make_source


@dataclass
class EvaluationCounter:
    """
    Work counters of one tracking job.

    ``quantities[c]`` counts evaluated quantities (value or one partial derivative)
    of component c; ``work[c]`` weights each by the component's term count.
    Antiderivative evaluations are charged to the component they integrate.
    """

    quantities: Dict[str, int] = field(default_factory=lambda: {c: 0 for c in COMPONENTS})
    work: Dict[str, int] = field(default_factory=lambda: {c: 0 for c in COMPONENTS})
    rhs_evaluations: int = 0
    map_evaluations: int = 0
    fixed_point_sweeps: int = 0
    fixed_point_solves: int = 0

    def record(self, component: str, n_quantities: int, n_terms: int) -> None:
        self.quantities[component] += n_quantities
        self.work[component] += n_quantities * n_terms

    @property
    def total_work(self) -> int:
        return sum(self.work.values())

    @property
    def mean_fixed_point_iterations(self) -> float:
        if not self.fixed_point_solves:
            return 0.0
        return self.fixed_point_sweeps / self.fixed_point_solves

    def reset(self) -> None:
        for c in COMPONENTS:
            self.quantities[c] = 0
            self.work[c] = 0
        self.rhs_evaluations = 0
        self.map_evaluations = 0
        self.fixed_point_sweeps = 0
        self.fixed_point_solves = 0

    def snapshot(self) -> Dict[str, Any]:
        return {
            "rhs_evaluations": self.rhs_evaluations,
            "map_evaluations": self.map_evaluations,
            "fixed_point_sweeps": self.fixed_point_sweeps,
            "fixed_point_solves": self.fixed_point_solves,
            "mean_fixed_point_iterations": self.mean_fixed_point_iterations,
            "work_total": self.total_work,
            **{f"work_{c}": self.work[c] for c in COMPONENTS},
            **{f"quantities_{c}": self.quantities[c] for c in COMPONENTS},
        }


class Field:
    """
    Vector potential of one element, sign-flipped by ``polarity``.

    All methods take element-local Z.
    """

    def __init__(
        self,
        table: PotentialTable,
        source: CoefficientSource,
        polarity: float = 1.0,
        counter: Optional[EvaluationCounter] = None,
    ):
        self.table = table
        self.source = source
        self.polarity = float(polarity)
        self.counter = counter if counter is not None else EvaluationCounter()
        self._kernels = {name: terms.kernel for name, terms in source.terms.items()}
        self._sizes = {name: len(terms) for name, terms in source.terms.items()}
        self._rhs_components = [c for c in COMPONENTS if self._sizes[c]]
        self._has_aux = "fx" in source.terms

    @classmethod
    def from_table(
        cls,
        table: PotentialTable,
        mode: str = "spline",
        polarity: float = 1.0,
        with_aux: bool = True,
        counter: Optional[EvaluationCounter] = None,
        **source_options,
    ) -> "Field":
        aux = antiderivatives(table) if with_aux else None
        return cls(table, make_source(table, mode, aux=aux, **source_options), polarity, counter)

    def with_polarity(self, polarity: float) -> "Field":
        """Same table and source with another sign, sharing the counter."""
        return Field(self.table, self.source, polarity, self.counter)

    @property
    def span(self) -> float:
        return self.table.span

    @property
    def z_start(self) -> float:
        return float(self.table.z[0])

    def values(self, X: float, Y: float, Z: float, with_z_derivative: bool = True) -> PotentialValues:
        """A and its partial derivatives at one point."""
        coeffs = self.source.query(Z, self._rhs_components, derivative=with_z_derivative)
        A, dX, dY, dZ = np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3)
        for c, name in enumerate(COMPONENTS):
            if name not in coeffs:
                continue
            a, ap = coeffs[name]
            mono, mono_x, mono_y = self._kernels[name].basis(X, Y)
            A[c] = mono @ a
            dX[c] = mono_x @ a
            dY[c] = mono_y @ a
            if ap is not None:
                dZ[c] = mono @ ap
        p = self.polarity
        return PotentialValues(p * A, p * dX, p * dY, p * dZ)

    def rhs(self, y: np.ndarray, Z: float, delta0: float) -> np.ndarray:
        """d(X, Y, P_x, P_y)/dZ; evaluates value, dX, dY of A_x and A_y and dX, dY of A_z."""
        X, Y = y[0], y[1]
        coeffs = self.source.query(Z, self._rhs_components)
        ax = ay = 0.0
        axx = axy = ayx = ayy = azx = azy = 0.0
        if "x" in coeffs:
            a, _ = coeffs["x"]
            mono, mono_x, mono_y = self._kernels["x"].basis(X, Y)
            ax, axx, axy = mono @ a, mono_x @ a, mono_y @ a
            self.counter.record("x", 3, self._sizes["x"])
        if "y" in coeffs:
            a, _ = coeffs["y"]
            mono, mono_x, mono_y = self._kernels["y"].basis(X, Y)
            ay, ayx, ayy = mono @ a, mono_x @ a, mono_y @ a
            self.counter.record("y", 3, self._sizes["y"])
        if "z" in coeffs:
            a, _ = coeffs["z"]
            _, mono_x, mono_y = self._kernels["z"].basis(X, Y)
            azx, azy = mono_x @ a, mono_y @ a
            self.counter.record("z", 2, self._sizes["z"])
        self.counter.rhs_evaluations += 1

        p = self.polarity
        inv = 1.0 / (1.0 + delta0)
        vx = (y[2] - p * ax) * inv
        vy = (y[3] - p * ay) * inv
        return np.array(
            [
                vx,
                vy,
                p * (axx * vx + ayx * vy + azx),
                p * (axy * vx + ayy * vy + azy),
            ]
        )

    def kick(self, X: float, Y: float, Z: float) -> Tuple[float, float]:
        """(dA_z/dX, dA_z/dY)."""
        if not self._sizes["z"]:
            return 0.0, 0.0
        a, _ = self.source.query(Z, ("z",))["z"]
        _, mono_x, mono_y = self._kernels["z"].basis(X, Y)
        self.counter.record("z", 2, self._sizes["z"])
        return self.polarity * float(mono_x @ a), self.polarity * float(mono_y @ a)

    def _value_pair(self, X: float, Y: float, Z: float, first: str, second: str, charge: str) -> Tuple[float, float]:
        if not self._sizes[charge]:
            return 0.0, 0.0
        coeffs = self.source.query(Z, (first, second))
        values = []
        for name in (first, second):
            a, _ = coeffs[name]
            if not len(a):
                values.append(0.0)
                continue
            mono = self._kernels[name].basis(X, Y)[0]
            values.append(self.polarity * float(mono @ a))
        self.counter.record(charge, 2, self._sizes[charge])
        return values[0], values[1]

    def x_shift(self, X: float, Y: float, Z: float) -> Tuple[float, float]:
        """(A_x, int dA_x/dY dX): momentum shift of the X-drift block."""
        self._require_aux()
        return self._value_pair(X, Y, Z, "x", "fx", "x")

    def y_shift(self, X: float, Y: float, Z: float) -> Tuple[float, float]:
        """(int dA_y/dX dY, A_y): momentum shift of the Y-drift block."""
        self._require_aux()
        return self._value_pair(X, Y, Z, "gy", "y", "y")

    def _require_aux(self) -> None:
        if not self._has_aux:
            raise ValueError("Lie substeps need a source built with antiderivative tables")
