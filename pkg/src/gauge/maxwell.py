"""Curl, divergence and curl-curl of potential tables along a transverse probe line."""

from typing import Dict, Iterable, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from src.common.errors import UndefinedFieldError
from src.common.logging import get_logger
from src.gauge.builders import build_potential
from src.gauge.potential_table import COMPONENTS, PotentialTable
from src.harmonics.gradients import GradientKey, GradientTable

logger = get_logger(__name__)

DENOMINATOR_FLOOR = 1e-300


class LineDerivatives(NamedTuple):
    """
    Derivatives of (A_x, A_y, A_z) at fixed (X, Y) over all grid z.

    Every entry has shape (N, 3); the column is the component.
    """

    A: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    xx: np.ndarray
    yy: np.ndarray
    xy: np.ndarray
    xz: np.ndarray
    yz: np.ndarray
    zz: np.ndarray


def _second_z_coefficients(pt: PotentialTable, name: str) -> np.ndarray:
    gt = pt.gradients
    terms = pt.components[name]
    n = len(pt.z)
    if not len(terms) or not pt.keys:
        return np.zeros((n, len(terms)))
    second = np.vstack([gt.derivative_series(k, 2)[0] for k in pt.keys])
    return (terms.weights @ second).T


def line_derivatives(pt: PotentialTable, X: float, Y: float) -> LineDerivatives:
    """All first and second derivatives needed by curl and curl-curl at (X, Y)."""
    n = len(pt.z)
    out = {f: np.zeros((n, 3)) for f in LineDerivatives._fields}
    for c, name in enumerate(COMPONENTS):
        terms = pt.components[name]
        if not len(terms):
            continue
        mono, mono_x, mono_y = terms.kernel.basis(X, Y)
        mono_xx, mono_yy, mono_xy = terms.kernel.second_basis(X, Y)
        a, a1 = terms.a, terms.a_prime
        a2 = _second_z_coefficients(pt, name)
        out["A"][:, c] = a @ mono
        out["x"][:, c] = a @ mono_x
        out["y"][:, c] = a @ mono_y
        out["z"][:, c] = a1 @ mono
        out["xx"][:, c] = a @ mono_xx
        out["yy"][:, c] = a @ mono_yy
        out["xy"][:, c] = a @ mono_xy
        out["xz"][:, c] = a1 @ mono_x
        out["yz"][:, c] = a1 @ mono_y
        out["zz"][:, c] = a2 @ mono
    return LineDerivatives(**out)


def curl(pt: PotentialTable, X: float, Y: float) -> np.ndarray:
    """B = curl A at (X, Y) over all grid z, shape (N, 3)."""
    d = line_derivatives(pt, X, Y)
    return np.column_stack(
        [
            d.y[:, 2] - d.z[:, 1],
            d.z[:, 0] - d.x[:, 2],
            d.x[:, 1] - d.y[:, 0],
        ]
    )


def divergence(pt: PotentialTable, X: float, Y: float) -> np.ndarray:
    d = line_derivatives(pt, X, Y)
    return d.x[:, 0] + d.y[:, 1] + d.z[:, 2]


def _curl_curl(d: LineDerivatives) -> np.ndarray:
    return np.column_stack(
        [
            d.xy[:, 1] - d.yy[:, 0] - d.zz[:, 0] + d.xz[:, 2],
            d.yz[:, 2] - d.zz[:, 1] - d.xx[:, 1] + d.xy[:, 0],
            d.xz[:, 0] - d.xx[:, 2] - d.yy[:, 2] + d.yz[:, 1],
        ]
    )


def curl_curl(pt: PotentialTable, X: float, Y: float) -> np.ndarray:
    """curl curl A at (X, Y) over all grid z, shape (N, 3)."""
    return _curl_curl(line_derivatives(pt, X, Y))


class ResidualParts(NamedTuple):
    residual: float
    numerator: float
    denominator: float


def maxwell_residual_parts(pt: PotentialTable, X0: float, Y0: float) -> ResidualParts:
    """
    max_Z |curl curl A(X0, Y0, Z)| / max_Z |A(X0, Y0, Z)| with its two factors.

    Raises:
        UndefinedFieldError: the potential vanishes along the probe line
    """
    d = line_derivatives(pt, X0, Y0)
    cc = _curl_curl(d)
    numerator = float(np.max(np.linalg.norm(cc, axis=1)))
    denominator = float(np.max(np.linalg.norm(d.A, axis=1)))
    if denominator < DENOMINATOR_FLOOR:
        raise UndefinedFieldError(f"vector potential vanishes along ({X0}, {Y0}); residual undefined")
    return ResidualParts(numerator / denominator, numerator, denominator)


def maxwell_residual(pt: PotentialTable, X0: float, Y0: float) -> float:
    return maxwell_residual_parts(pt, X0, Y0).residual


def spurious_current(gt: GradientTable, X: float, Y: float) -> np.ndarray:
    """
    Closed-form curl curl A of the single-harmonic normal quadrupole truncated at ND = 2:
    ((X^3 + 3XY^2) C_2^[3] / 6, -(Y^3 + 3YX^2) C_2^[3] / 6, 0).
    """
    c3, structural = gt.derivative_series(GradientKey(2, "s", 0), 3)
    if not structural:
        logger.warning("third derivative of C_2 taken from spline differentiation")
    return np.column_stack(
        [
            (X**3 + 3 * X * Y**2) * c3 / 6.0,
            -(Y**3 + 3 * Y * X**2) * c3 / 6.0,
            np.zeros_like(c3),
        ]
    )


def maxwell_residual_curve(
    gt: GradientTable,
    X0: float,
    Y0: float,
    nd_values: Iterable[int],
    gauges: Sequence[str] = ("af", "coulomb", "hfc"),
    scale_factor: float = 1.0,
) -> pd.DataFrame:
    """Residual for every (gauge, ND); the gradient table must carry at least max(ND) orders."""
    rows = []
    for nd in nd_values:
        for gauge in gauges:
            pt = build_potential(gauge, gt, nd, scale_factor)
            parts = maxwell_residual_parts(pt, X0, Y0)
            rows.append(
                {
                    "nd": nd,
                    "gauge": gauge,
                    "X0": X0,
                    "Y0": Y0,
                    "residual": parts.residual,
                    "numerator": parts.numerator,
                    "denominator": parts.denominator,
                }
            )
    df = pd.DataFrame(rows)
    logger.info(f"Maxwell residual curve at ({X0}, {Y0}): {len(df)} points")
    return df


def probe_fields(pts: Dict[str, PotentialTable], points: np.ndarray, z_index: Optional[int] = None) -> pd.DataFrame:
    """Curl of each table at probe points (rows X, Y); one row per (gauge, point, z)."""
    rows = []
    for gauge, pt in pts.items():
        for p, (X, Y) in enumerate(np.asarray(points, dtype=float)):
            B = curl(pt, X, Y)
            zs = range(len(pt.z)) if z_index is None else [z_index]
            for k in zs:
                rows.append(
                    {"gauge": gauge, "point": p, "X": X, "Y": Y, "z": pt.z[k], "Bx": B[k, 0], "By": B[k, 1], "Bz": B[k, 2]}
                )
    return pd.DataFrame(rows)
