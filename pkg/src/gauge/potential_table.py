"""Gauge-tagged monomial tables of the scaled vector potential and their evaluation."""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from src.common.io_utils import save_json, save_numeric_csv, sidecar_path
from src.common.logging import get_logger
from src.gauge.polynomials import SeriesPolynomial, union_keys
from src.harmonics.gradients import GradientKey, GradientTable

logger = get_logger(__name__)

GAUGES = ("af", "coulomb", "hfc")
COMPONENTS = ("x", "y", "z")

# quantities evaluated per component by one rhs call and by one second-order Lie map;
# antiderivative evaluations are charged to the component they integrate
RHS_WEIGHTS = {"x": 3, "y": 3, "z": 2}
M2_WEIGHTS = {"x": 8, "y": 4, "z": 4}


class MonomialKernel:
    """Power-table evaluation of sum_t a_t X^i_t Y^j_t and its transverse derivatives."""

    def __init__(self, exponents: np.ndarray):
        exponents = np.asarray(exponents, dtype=int).reshape(-1, 2)
        self.i = exponents[:, 0]
        self.j = exponents[:, 1]
        self.fi = self.i.astype(float)
        self.fj = self.j.astype(float)
        self.i1 = np.clip(self.i - 1, 0, None)
        self.j1 = np.clip(self.j - 1, 0, None)
        self.i2 = np.clip(self.i - 2, 0, None)
        self.j2 = np.clip(self.j - 2, 0, None)
        self._px = np.arange(int(self.i.max(initial=0)) + 1)
        self._py = np.arange(int(self.j.max(initial=0)) + 1)

    def __len__(self) -> int:
        return len(self.i)

    def _powers(self, X, Y) -> Tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return np.power.outer(X, self._px), np.power.outer(Y, self._py)

    def basis(self, X, Y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Monomials and their X, Y derivatives; shape (..., T) for points of shape (...)."""
        xp, yp = self._powers(X, Y)
        xi, yj = xp[..., self.i], yp[..., self.j]
        return xi * yj, self.fi * xp[..., self.i1] * yj, self.fj * xi * yp[..., self.j1]

    def second_basis(self, X, Y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """d2/dX2, d2/dY2, d2/dXdY of every monomial."""
        xp, yp = self._powers(X, Y)
        xi, yj = xp[..., self.i], yp[..., self.j]
        dxx = self.fi * (self.fi - 1) * xp[..., self.i2] * yj
        dyy = self.fj * (self.fj - 1) * xi * yp[..., self.j2]
        dxy = self.fi * self.fj * xp[..., self.i1] * yp[..., self.j1]
        return dxx, dyy, dxy


@dataclass(frozen=True)
class ComponentTerms:
    """
    One potential component: exponents (T, 2), rational-derived weights (T, K) over
    the table's gradient keys (scale factor included), coefficient samples a (N, T)
    and their z-derivatives a_prime (N, T).
    """

    name: str
    exponents: np.ndarray
    weights: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray

    def __len__(self) -> int:
        return len(self.exponents)

    @cached_property
    def kernel(self) -> MonomialKernel:
        return MonomialKernel(self.exponents)

    def monomials(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in self.exponents]


class PotentialValues(NamedTuple):
    """A and its partial derivatives at one point; each entry is (A_x, A_y, A_z)."""

    A: np.ndarray
    dX: np.ndarray
    dY: np.ndarray
    dZ: np.ndarray


class CoefficientCounts(NamedTuple):
    x: int
    y: int
    z: int
    total: int


@dataclass(frozen=True)
class PotentialTable:
    """Scaled vector potential of one gauge as per-component monomial expansions."""

    gauge: str
    z: np.ndarray
    components: Dict[str, ComponentTerms]
    keys: List[GradientKey]
    polynomials: Dict[str, SeriesPolynomial]
    nd: int
    scale_factor: float
    gradients: GradientTable
    provenance: Dict[str, Any] = field(default_factory=dict)

    def component(self, name: str) -> ComponentTerms:
        return self.components[name]

    @property
    def n_points(self) -> int:
        return len(self.z)

    @property
    def span(self) -> float:
        return float(self.z[-1] - self.z[0])

    @property
    def profile(self):
        return self.gradients.profile


@dataclass(frozen=True)
class AuxTable:
    """Transverse antiderivatives used by the Lie substeps: fx = int dA_x/dY dX, gy = int dA_y/dX dY."""

    fx: ComponentTerms
    gy: ComponentTerms
    parent_counts: Dict[str, int]


def _component_from_polynomial(
    name: str,
    poly: SeriesPolynomial,
    keys: List[GradientKey],
    samples: np.ndarray,
    companions: np.ndarray,
    scale_factor: float,
) -> ComponentTerms:
    monomials = poly.monomials()
    column = {key: k for k, key in enumerate(keys)}
    weights = np.zeros((len(monomials), len(keys)))
    for t, mono in enumerate(monomials):
        for key, w in poly.terms[mono].items():
            if w != 0:
                weights[t, column[key]] = float(w) * scale_factor
    exponents = np.array(monomials, dtype=int).reshape(-1, 2)
    return ComponentTerms(
        name=name,
        exponents=exponents,
        weights=weights,
        a=(weights @ samples).T.copy(),
        a_prime=(weights @ companions).T.copy(),
    )


def tabulate(
    gauge: str,
    polynomials: Dict[str, SeriesPolynomial],
    gt: GradientTable,
    nd: int,
    scale_factor: float = 1.0,
    provenance: Optional[Dict[str, Any]] = None,
) -> PotentialTable:
    """
    Sample exact series polynomials on the gradient grid.

    Companion z-derivatives come from the next gradient order when the table
    carries it; otherwise from spline differentiation, which is recorded.
    """
    if gauge not in GAUGES:
        raise ValueError(f"unknown gauge '{gauge}'")
    keys = union_keys(polynomials.values())
    n = len(gt.z)
    samples = np.vstack([gt.series(k) for k in keys]) if keys else np.zeros((0, n))

    companions = np.zeros((len(keys), n))
    spline_companions = []
    for row, key in enumerate(keys):
        companions[row], structural = gt.derivative_series(key, 1)
        if not structural:
            spline_companions.append(key.label)
    if spline_companions:
        logger.warning(
            f"{gauge}: z-derivative coefficients for {len(spline_companions)} series taken from "
            f"spline differentiation (gradient table ND={gt.nd})"
        )

    components = {
        name: _component_from_polynomial(name, polynomials[name], keys, samples, companions, scale_factor)
        for name in COMPONENTS
    }
    meta = dict(provenance or {})
    meta.update(
        {
            "gauge": gauge,
            "nd": nd,
            "gradient_nd": gt.nd,
            "harmonics": [[m, kind] for m, kind in gt.present()],
            "scale_factor": scale_factor,
            "spline_companions": spline_companions,
        }
    )
    table = PotentialTable(
        gauge=gauge,
        z=gt.z.copy(),
        components=components,
        keys=keys,
        polynomials=polynomials,
        nd=nd,
        scale_factor=scale_factor,
        gradients=gt,
        provenance=meta,
    )
    counts = count_coefficients(table)
    logger.info(f"Built {gauge} potential, ND={nd}: terms x={counts.x}, y={counts.y}, z={counts.z}")
    return table


def evaluate(pt: PotentialTable, X: float, Y: float, z_eval) -> PotentialValues:
    """
    A, dA/dX, dA/dY, dA/dZ at (X, Y) with coefficients supplied by ``z_eval``.

    ``z_eval`` is a CoefficientSource already positioned at the wanted Z, i.e. the
    result of ``source.query(Z, derivative=True)``.
    """
    A = np.zeros(3)
    dX = np.zeros(3)
    dY = np.zeros(3)
    dZ = np.zeros(3)
    for c, name in enumerate(COMPONENTS):
        terms = pt.components[name]
        if not len(terms):
            continue
        a, a_prime = z_eval[name]
        mono, mono_x, mono_y = terms.kernel.basis(X, Y)
        A[c] = mono @ a
        dX[c] = mono_x @ a
        dY[c] = mono_y @ a
        if a_prime is not None:
            dZ[c] = mono @ a_prime
    return PotentialValues(A, dX, dY, dZ)


def _antiderivative(terms: ComponentTerms, name: str, along: str) -> ComponentTerms:
    """
    Term-by-term int (d/dY A) dX (along="x") or int (d/dX A) dY (along="y").

    (i, j, a) maps to (i+1, j-1, a j/(i+1)) for along="x"; integration constant zero.
    """
    rows, exps, factors = [], [], []
    for t, (i, j) in enumerate(terms.monomials()):
        if along == "x" and j > 0:
            rows.append(t)
            exps.append((i + 1, j - 1))
            factors.append(j / (i + 1))
        elif along == "y" and i > 0:
            rows.append(t)
            exps.append((i - 1, j + 1))
            factors.append(i / (j + 1))
    f = np.asarray(factors, dtype=float)
    n, k = terms.a.shape[0], terms.weights.shape[1]
    if not rows:
        return ComponentTerms(name, np.zeros((0, 2), dtype=int), np.zeros((0, k)), np.zeros((n, 0)), np.zeros((n, 0)))
    return ComponentTerms(
        name=name,
        exponents=np.array(exps, dtype=int),
        weights=terms.weights[rows] * f[:, None],
        a=terms.a[:, rows] * f,
        a_prime=terms.a_prime[:, rows] * f,
    )


def antiderivatives(pt: PotentialTable) -> AuxTable:
    """Antiderivative tables needed by the X- and Y-drift blocks of the Lie map."""
    return AuxTable(
        fx=_antiderivative(pt.components["x"], "fx", "x"),
        gy=_antiderivative(pt.components["y"], "gy", "y"),
        parent_counts={"x": len(pt.components["x"]), "y": len(pt.components["y"])},
    )


def count_coefficients(pt: PotentialTable) -> CoefficientCounts:
    x, y, z = (len(pt.components[c]) for c in COMPONENTS)
    return CoefficientCounts(x, y, z, x + y + z)


def evaluation_work(counts: CoefficientCounts, path: str = "rhs") -> int:
    """Coefficient work of one rhs evaluation (path="rhs") or one Lie map (path="m2")."""
    weights = {"rhs": RHS_WEIGHTS, "m2": M2_WEIGHTS}[path]
    return weights["x"] * counts.x + weights["y"] * counts.y + weights["z"] * counts.z


def evaluation_work_ratio(hfc: PotentialTable, af: PotentialTable, path: str = "rhs") -> float:
    """Predicted HFC/AF ratio of coefficient work per evaluation."""
    return evaluation_work(count_coefficients(hfc), path) / evaluation_work(count_coefficients(af), path)


def export_potential(pt: PotentialTable, path: Path | str) -> Path:
    """Write rows ``component,i,j,z,a,a_prime`` and a JSON sidecar with gauge and provenance."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = []
    for name in COMPONENTS:
        terms = pt.components[name]
        n_terms = len(terms)
        if not n_terms:
            continue
        frames.append(
            pd.DataFrame(
                {
                    "component": name,
                    "i": np.repeat(terms.exponents[:, 0], pt.n_points),
                    "j": np.repeat(terms.exponents[:, 1], pt.n_points),
                    "z": np.tile(pt.z, n_terms),
                    "a": terms.a.T.ravel(),
                    "a_prime": terms.a_prime.T.ravel(),
                }
            )
        )
    columns = ["component", "i", "j", "z", "a", "a_prime"]
    df = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)
    save_numeric_csv(df[columns], path)
    counts = count_coefficients(pt)
    save_json(
        {
            "gauge": pt.gauge,
            "nd": pt.nd,
            "scale_factor": pt.scale_factor,
            "counts": counts._asdict(),
            "keys": [k.label for k in pt.keys],
            "provenance": pt.provenance,
        },
        sidecar_path(path),
    )
    logger.info(f"Exported {pt.gauge} potential ({counts.total} terms) to {path}")
    return path
