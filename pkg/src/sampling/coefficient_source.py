"""Coefficient values a_{i,j}(Z) and a'_{i,j}(Z) at arbitrary Z from gridded samples or exact closures."""

from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from src.common.errors import DataError, GridError
from src.common.logging import get_logger
from src.gauge.potential_table import COMPONENTS, AuxTable, ComponentTerms, PotentialTable

logger = get_logger(__name__)

MODES = ("previous", "nearest", "interval", "spline", "exact")
# queries within this fraction of a grid step of a node return the stored sample
NODE_TOL = 1e-12
MIN_SPLINE_KNOTS = 4

Coefficients = Dict[str, Tuple[np.ndarray, Optional[np.ndarray]]]


class CoefficientSource:
    """
    Per-term coefficient values at arbitrary Z for one potential table.

    Interpolation is applied per coefficient series. Queries outside the grid
    return zeros and increment ``out_of_range``. Only the integer counter is
    mutated by queries.
    """

    def __init__(
        self,
        pt: PotentialTable,
        mode: str = "spline",
        aux: Optional[AuxTable] = None,
        strict_nodes: bool = False,
        companion: str = "series",
    ):
        if mode not in MODES:
            raise ValueError(f"unknown interpolation mode '{mode}', expected one of {MODES}")
        if companion not in ("series", "spline"):
            raise ValueError(f"unknown companion derivative '{companion}'")
        self.mode = mode
        self.table = pt
        self.aux = aux
        self.strict_nodes = strict_nodes
        self.companion = companion
        self.z0 = float(pt.z[0])
        self.n = len(pt.z)
        self.dz = float((pt.z[-1] - pt.z[0]) / (self.n - 1))
        self.z_end = float(pt.z[-1])
        self.out_of_range = 0

        self.terms: Dict[str, ComponentTerms] = dict(pt.components)
        if aux is not None:
            self.terms["fx"] = aux.fx
            self.terms["gy"] = aux.gy

        for name, terms in self.terms.items():
            for label, arr in (("a", terms.a), ("a_prime", terms.a_prime)):
                if not np.all(np.isfinite(arr)):
                    bad = np.argwhere(~np.isfinite(arr))[0]
                    raise DataError(
                        f"non-finite {label} sample in component {name}, term {tuple(terms.exponents[bad[1]])}, "
                        f"z={pt.z[bad[0]]:.6g}"
                    )

        self._splines: Dict[str, Tuple[np.ndarray, Optional[np.ndarray]]] = {}
        if mode == "spline":
            if self.n < MIN_SPLINE_KNOTS:
                raise GridError(f"spline interpolation needs at least {MIN_SPLINE_KNOTS} knots, got {self.n}")
            for name, terms in self.terms.items():
                if not len(terms):
                    continue
                c = CubicSpline(pt.z, terms.a, axis=0, bc_type="not-a-knot").c
                cp = None
                if companion == "series":
                    cp = CubicSpline(pt.z, terms.a_prime, axis=0, bc_type="not-a-knot").c
                self._splines[name] = (c, cp)
            if companion == "spline":
                logger.warning("z-derivative coefficients taken from the spline derivative, not the companion series")

        self._profile = pt.profile
        self._keys = list(pt.keys)
        self._shifted = [k.shifted(1) for k in self._keys]
        if mode == "exact" and self._profile is None:
            raise ValueError("exact coefficient source needs a table built from an analytic profile")

    @property
    def components(self) -> List[str]:
        return list(self.terms)

    def _locate(self, z: float) -> Optional[float]:
        """Fractional grid index of z, or None outside the grid."""
        s = (z - self.z0) / self.dz
        if s < -NODE_TOL or s > self.n - 1 + NODE_TOL:
            self.out_of_range += 1
            if self.out_of_range == 1:
                logger.debug(f"coefficient query at Z={z:.6g} outside [{self.z0:.6g}, {self.z_end:.6g}]")
            return None
        return min(max(s, 0.0), self.n - 1.0)

    def _gridded(self, terms: ComponentTerms, name: str, s: float, derivative: bool):
        node = round(s)
        on_node = abs(s - node) < NODE_TOL
        if self.strict_nodes and not on_node:
            raise GridError(f"query at fractional grid index {s:.6g} while restricted to data nodes")
        if on_node:
            k = int(node)
            return terms.a[k], (self._node_prime(terms, name, k) if derivative else None)

        k = int(np.floor(s))
        if self.mode == "previous":
            return terms.a[k], (terms.a_prime[k] if derivative else None)
        if self.mode == "nearest":
            j = int(np.floor(s + 0.5))
            return terms.a[j], (terms.a_prime[j] if derivative else None)
        if self.mode == "interval":
            a = 0.5 * (terms.a[k] + terms.a[k + 1])
            ap = 0.5 * (terms.a_prime[k] + terms.a_prime[k + 1]) if derivative else None
            return a, ap

        # spline
        k = min(k, self.n - 2)
        t = (s - k) * self.dz
        c, cp = self._splines[name]
        a = ((c[0, k] * t + c[1, k]) * t + c[2, k]) * t + c[3, k]
        ap = None
        if derivative:
            if cp is not None:
                ap = ((cp[0, k] * t + cp[1, k]) * t + cp[2, k]) * t + cp[3, k]
            else:
                ap = (3.0 * c[0, k] * t + 2.0 * c[1, k]) * t + c[2, k]
        return a, ap

    def _node_prime(self, terms: ComponentTerms, name: str, k: int) -> np.ndarray:
        if self.mode == "spline" and self.companion == "spline":
            c, _ = self._splines[name]
            if k < self.n - 1:
                return c[2, k].copy()
            t = self.dz
            return (3.0 * c[0, -1] * t + 2.0 * c[1, -1]) * t + c[2, -1]
        return terms.a_prime[k]

    def _exact(self, z: float, derivative: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        values = np.array([self._profile.evaluate(k, z) for k in self._keys], dtype=float)
        primes = None
        if derivative:
            primes = np.array([self._profile.evaluate(k, z) for k in self._shifted], dtype=float)
        if not np.all(np.isfinite(values)) or (primes is not None and not np.all(np.isfinite(primes))):
            raise DataError(f"non-finite analytic gradient at Z={z:.6g}")
        return values, primes

    def query(self, z: float, components: Iterable[str] = COMPONENTS, derivative: bool = False) -> Coefficients:
        """
        Coefficients of the requested components at Z.

        Returns:
            {component: (a, a_prime or None)}; empty components map to empty arrays
        """
        components = list(components)
        s = self._locate(z)
        out: Coefficients = {}
        if s is None:
            for name in components:
                t = len(self.terms[name])
                out[name] = (np.zeros(t), np.zeros(t) if derivative else None)
            return out

        if self.mode == "exact":
            values, primes = self._exact(z, derivative)
            for name in components:
                w = self.terms[name].weights
                out[name] = (w @ values, w @ primes if derivative else None)
            return out

        for name in components:
            terms = self.terms[name]
            if not len(terms):
                out[name] = (np.zeros(0), np.zeros(0) if derivative else None)
                continue
            out[name] = self._gridded(terms, name, s, derivative)
        return out


def make_source(
    pt: PotentialTable,
    mode: str = "spline",
    aux: Optional[AuxTable] = None,
    strict_nodes: bool = False,
    companion: str = "series",
) -> CoefficientSource:
    """
    Build a coefficient source for a potential table.

    Raises:
        GridError: spline mode with fewer than four knots
        DataError: non-finite coefficient samples
    """
    return CoefficientSource(pt, mode=mode, aux=aux, strict_nodes=strict_nodes, companion=companion)
