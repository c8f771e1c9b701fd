"""
Vector-potential builders for the azimuthal-free, symmetric Coulomb and
horizontal-free Coulomb gauges.

Every builder truncates against one ND: a series term is kept iff every gradient
order it references is <= ND. The gradient table may carry more orders than ND;
the extra orders feed the companion z-derivative coefficients.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.common.errors import GaugeConstructionError
from src.common.logging import get_logger
from src.gauge.polynomials import (
    Combination,
    SeriesPolynomial,
    angular,
    g_weight,
    h_weight,
    shift_combination,
    times_x,
    times_y,
)
from src.gauge.potential_table import PotentialTable, tabulate
from src.harmonics.gradients import GradientKey, GradientTable

logger = get_logger(__name__)


def _resolve_nd(gt: GradientTable, nd: Optional[int]) -> int:
    if gt.is_empty():
        raise ValueError("gradient table carries no harmonics")
    nd = gt.nd if nd is None else nd
    if nd < 0 or nd > gt.nd:
        raise ValueError(f"ND={nd} outside the gradient table's orders 0..{gt.nd}")
    return nd


def _parts(kind: str) -> Tuple[str, int]:
    """Angular part (Re or Im of (x + iy)^m) and sign for normal or skew gradients."""
    return ("re", 1) if kind == "s" else ("im", -1)


def _empty() -> Dict[str, SeriesPolynomial]:
    return {"x": SeriesPolynomial(), "y": SeriesPolynomial(), "z": SeriesPolynomial()}


def af_polynomials(gt: GradientTable, nd: int) -> Dict[str, SeriesPolynomial]:
    """A_phi = 0: transverse terms proportional to (x, y) rho^2l cos/sin(m phi) r^m."""
    polys = _empty()
    for m, kind in gt.present():
        part, sign = _parts(kind)
        for ell in range(nd // 2 + 1):
            g = g_weight(ell, m)
            base = angular(ell, m, part)
            if 2 * ell + 1 <= nd:
                key = GradientKey(m, kind, 2 * ell + 1)
                w = sign * g / m
                polys["x"].add(times_x(base), key, w)
                polys["y"].add(times_y(base), key, w)
            key = GradientKey(m, kind, 2 * ell)
            polys["z"].add(base, key, -sign * Fraction(2 * ell + m, m) * g)
    return {c: p.pruned() for c, p in polys.items()}


def coulomb_polynomials(gt: GradientTable, nd: int) -> Dict[str, SeriesPolynomial]:
    """Symmetric Coulomb gauge: div A = 0 with transverse terms of angular order m + 1."""
    polys = _empty()
    for m, kind in gt.present():
        part, sign = _parts(kind)
        for ell in range(nd // 2 + 1):
            if 2 * ell + 1 <= nd:
                key = GradientKey(m, kind, 2 * ell + 1)
                w = h_weight(ell, m) / 2
                if kind == "s":
                    polys["x"].add(angular(ell, m + 1, "re"), key, w)
                    polys["y"].add(angular(ell, m + 1, "im"), key, w)
                else:
                    polys["x"].add(angular(ell, m + 1, "im"), key, -w)
                    polys["y"].add(angular(ell, m + 1, "re"), key, w)
            key = GradientKey(m, kind, 2 * ell)
            polys["z"].add(angular(ell, m, part), key, -sign * g_weight(ell, m))
    return {c: p.pruned() for c, p in polys.items()}


@dataclass(frozen=True)
class LambdaTable:
    """
    Gauge function coefficients L_{k,kind}^[0] as exact gradient combinations.

    ``combinations[(k, kind)]`` holds L_k^[0]; L_k^[2l] is that combination
    differentiated 2l times. Samples come from the gradient table.
    """

    z: np.ndarray
    nd: int
    combinations: Dict[Tuple[int, str], Combination]
    gradients: GradientTable
    truncated: bool = False
    provenance: Dict[str, Any] = field(default_factory=dict)

    def orders(self) -> List[Tuple[int, str]]:
        return sorted(self.combinations)

    def combination(self, k: int, kind: str, order: int = 0) -> Combination:
        """L_k^[order] truncated at ND."""
        base = self.combinations.get((k, kind), {})
        shifted, _ = shift_combination(base, order, self.nd)
        return shifted

    def series(self, k: int, kind: str, order: int = 0) -> np.ndarray:
        """Samples of L_k^[order]; orders above ND read as zero."""
        out = np.zeros(len(self.z))
        for key, w in self.combination(k, kind, order).items():
            out += float(w) * self.gradients.series(key)
        return out

    def polynomial(self) -> SeriesPolynomial:
        """lambda = sum_k sum_l g(l, k) L_k^[2l] rho^2l {cos, sin}(k phi) r^k, truncated at ND."""
        poly = SeriesPolynomial()
        for (k, kind), _ in sorted(self.combinations.items()):
            part = "re" if kind == "s" else "im"
            for ell in range(self.nd // 2 + 1):
                combo = self.combination(k, kind, 2 * ell)
                if combo:
                    poly.add_combination(angular(ell, k, part), combo, g_weight(ell, k))
        return poly.pruned()


def build_lambda(gt: GradientTable, nd: Optional[int] = None) -> LambdaTable:
    """
    Ascending recursion L_{k+1} = [L_{k-1}^[2] / (4k) - B_k] / (k+1) from L_0 = L_1 = L_2 = 0,
    with B_k = C_{k-1,s}^[1] / (2k) for normal and -C_{k-1,c}^[1] / (2k) for skew gradients.

    Combinations referencing orders above ND are dropped. ``truncated`` records
    whether some kept L^[2l] lacks its z-derivative L^[2l+1] within ND.
    """
    nd = _resolve_nd(gt, nd)
    combinations: Dict[Tuple[int, str], Combination] = {}
    max_m = max(gt.harmonics)
    for kind in ("s", "c"):
        carried = gt.normal if kind == "s" else gt.skew
        if not carried:
            continue
        sign = 1 if kind == "s" else -1
        L: Dict[int, Combination] = {0: {}, 1: {}, 2: {}}
        k = 2
        while True:
            combo, _ = shift_combination(L[k - 1], 2, nd)
            nxt: Combination = {key: w / (4 * k) for key, w in combo.items()}
            if (k - 1) in carried and nd >= 1:
                key = GradientKey(k - 1, kind, 1)
                nxt[key] = nxt.get(key, Fraction(0)) - Fraction(sign, 2 * k)
            L[k + 1] = {key: w / (k + 1) for key, w in nxt.items() if w != 0}
            k += 1
            if k > max_m + 1 and not L[k] and not L[k - 1]:
                break
        for order, combo in L.items():
            if combo:
                combinations[(order, kind)] = combo

    truncated = any(
        key.order + 1 > nd
        for combo in combinations.values()
        for ell in range(nd // 2 + 1)
        for key in shift_combination(combo, 2 * ell, nd)[0]
    )
    if truncated:
        logger.debug(f"lambda z-derivative truncated at ND={nd}")
    return LambdaTable(
        z=gt.z.copy(),
        nd=nd,
        combinations=combinations,
        gradients=gt,
        truncated=truncated,
        provenance={"nd": nd, "orders": sorted({k for k, _ in combinations})},
    )


def hfc_polynomials(gt: GradientTable, nd: int) -> Tuple[Dict[str, SeriesPolynomial], LambdaTable, bool]:
    """
    Coulomb potential plus grad(lambda), with lambda chosen so that A_x vanishes.

    Raises:
        GaugeConstructionError: the x-component does not cancel exactly
    """
    coulomb = coulomb_polynomials(gt, nd)
    lam = build_lambda(gt, nd)
    lam_poly = lam.polynomial()
    dz_lambda, truncated = lam_poly.derivative_z(nd)

    ax = coulomb["x"] + lam_poly.derivative_x()
    if not ax.is_zero():
        raise GaugeConstructionError(
            f"x-component of the horizontal-free potential does not cancel: "
            f"{len(ax)} monomials remain (ND={nd})"
        )
    polys = {
        "x": SeriesPolynomial(),
        "y": coulomb["y"] + lam_poly.derivative_y(),
        "z": coulomb["z"] + dz_lambda,
    }
    return polys, lam, truncated or lam.truncated


def build_af(gt: GradientTable, nd: Optional[int] = None, scale_factor: float = 1.0) -> PotentialTable:
    nd = _resolve_nd(gt, nd)
    return tabulate("af", af_polynomials(gt, nd), gt, nd, scale_factor)


def build_coulomb(gt: GradientTable, nd: Optional[int] = None, scale_factor: float = 1.0) -> PotentialTable:
    nd = _resolve_nd(gt, nd)
    return tabulate("coulomb", coulomb_polynomials(gt, nd), gt, nd, scale_factor)


def build_hfc(gt: GradientTable, nd: Optional[int] = None, scale_factor: float = 1.0) -> PotentialTable:
    nd = _resolve_nd(gt, nd)
    polys, lam, truncated = hfc_polynomials(gt, nd)
    return tabulate(
        "hfc",
        polys,
        gt,
        nd,
        scale_factor,
        provenance={"lambda_orders": lam.provenance["orders"], "lambda_truncated": truncated},
    )


BUILDERS = {"af": build_af, "coulomb": build_coulomb, "hfc": build_hfc}


def build_potential(
    gauge: str, gt: GradientTable, nd: Optional[int] = None, scale_factor: float = 1.0
) -> PotentialTable:
    """Dispatch on the gauge tag: "af", "coulomb" or "hfc"."""
    try:
        builder = BUILDERS[gauge.lower()]
    except KeyError:
        raise ValueError(f"unknown gauge '{gauge}', expected one of {sorted(BUILDERS)}") from None
    return builder(gt, nd, scale_factor)
