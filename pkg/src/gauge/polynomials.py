"""
Exact Cartesian expansions of cylindrical harmonic terms.

A series polynomial maps a monomial X^i Y^j to a linear combination of generalized
gradient series with rational weights. All arithmetic is exact, so vanishing
terms are detected structurally rather than by a floating-point threshold.
"""

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Iterable, List, Tuple

from src.harmonics.gradients import GradientKey

Monomial = Tuple[int, int]
IntPoly = Dict[Monomial, int]


@lru_cache(maxsize=None)
def _complex_power(p: int) -> Tuple[Tuple[Monomial, int, int], ...]:
    """(x + iy)^p as ((i, j), real coefficient, imaginary coefficient) triples."""
    out = []
    for k in range(p + 1):
        c = comb(p, k)
        # i^k cycles through 1, i, -1, -i
        re, im = [(c, 0), (0, c), (-c, 0), (0, -c)][k % 4]
        out.append(((p - k, k), re, im))
    return tuple(out)


def re_power(p: int) -> IntPoly:
    """rho^p cos(p phi) = Re[(x + iy)^p]."""
    return {mono: re for mono, re, _ in _complex_power(p) if re}


def im_power(p: int) -> IntPoly:
    """rho^p sin(p phi) = Im[(x + iy)^p]."""
    return {mono: im for mono, _, im in _complex_power(p) if im}


def rho_power(ell: int) -> IntPoly:
    """(x^2 + y^2)^ell."""
    return {(2 * k, 2 * (ell - k)): comb(ell, k) for k in range(ell + 1)}


def multiply(p: IntPoly, q: IntPoly) -> IntPoly:
    out: IntPoly = {}
    for (i1, j1), a in p.items():
        for (i2, j2), b in q.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0) + a * b
    return {k: v for k, v in out.items() if v}


def times_x(p: IntPoly) -> IntPoly:
    return {(i + 1, j): c for (i, j), c in p.items()}


def times_y(p: IntPoly) -> IntPoly:
    return {(i, j + 1): c for (i, j), c in p.items()}


def angular(ell: int, p: int, part: str) -> IntPoly:
    """rho^(2 ell) times Re or Im of (x + iy)^p."""
    base = re_power(p) if part == "re" else im_power(p)
    return multiply(rho_power(ell), base)


def g_weight(ell: int, m: int) -> Fraction:
    """(-1)^l m! / (4^l l! (l+m)!): weight of C^[2l] in the harmonic expansion of order m."""
    return Fraction((-1) ** ell * factorial(m), 4**ell * factorial(ell) * factorial(ell + m))


def h_weight(ell: int, m: int) -> Fraction:
    """(-1)^l m! / (4^l l! (l+m+1)!): transverse Coulomb-gauge weight."""
    return Fraction((-1) ** ell * factorial(m), 4**ell * factorial(ell) * factorial(ell + m + 1))


Combination = Dict[GradientKey, Fraction]


def shift_combination(combo: Combination, extra: int, max_order: int) -> Tuple[Combination, bool]:
    """Differentiate a gradient combination ``extra`` times; drops orders beyond ``max_order``."""
    out: Combination = {}
    truncated = False
    for key, w in combo.items():
        target = key.shifted(extra)
        if target.order > max_order:
            truncated = True
            continue
        out[target] = out.get(target, Fraction(0)) + w
    return {k: v for k, v in out.items() if v}, truncated


class SeriesPolynomial:
    """
    Sum over monomials X^i Y^j of rational combinations of gradient series.

    Instances are built incrementally by ``add`` and treated as immutable once
    handed to a potential table.
    """

    def __init__(self, terms: Dict[Monomial, Combination] | None = None):
        self.terms: Dict[Monomial, Combination] = {}
        for mono, combo in (terms or {}).items():
            for key, w in combo.items():
                self._accumulate(mono, key, w)

    def _accumulate(self, mono: Monomial, key: GradientKey, weight: Fraction) -> None:
        if not weight:
            return
        combo = self.terms.setdefault(mono, {})
        combo[key] = combo.get(key, Fraction(0)) + weight

    def add(self, poly: IntPoly, key: GradientKey, weight: Fraction) -> None:
        """Accumulate weight * C_key(z) * poly(X, Y)."""
        for mono, c in poly.items():
            self._accumulate(mono, key, weight * c)

    def add_combination(self, poly: IntPoly, combo: Combination, weight: Fraction) -> None:
        for key, w in combo.items():
            self.add(poly, key, weight * w)

    def __add__(self, other: "SeriesPolynomial") -> "SeriesPolynomial":
        out = SeriesPolynomial(self.terms)
        for mono, combo in other.terms.items():
            for key, w in combo.items():
                out._accumulate(mono, key, w)
        return out.pruned()

    def scaled(self, factor: Fraction) -> "SeriesPolynomial":
        return SeriesPolynomial(
            {mono: {key: w * factor for key, w in combo.items()} for mono, combo in self.terms.items()}
        )

    def derivative_x(self) -> "SeriesPolynomial":
        out = SeriesPolynomial()
        for (i, j), combo in self.terms.items():
            if i == 0:
                continue
            for key, w in combo.items():
                out._accumulate((i - 1, j), key, w * i)
        return out.pruned()

    def derivative_y(self) -> "SeriesPolynomial":
        out = SeriesPolynomial()
        for (i, j), combo in self.terms.items():
            if j == 0:
                continue
            for key, w in combo.items():
                out._accumulate((i, j - 1), key, w * j)
        return out.pruned()

    def derivative_z(self, max_order: int) -> Tuple["SeriesPolynomial", bool]:
        """d/dz of every gradient series; terms needing order > max_order are dropped."""
        out = SeriesPolynomial()
        truncated = False
        for mono, combo in self.terms.items():
            shifted, cut = shift_combination(combo, 1, max_order)
            truncated |= cut
            for key, w in shifted.items():
                out._accumulate(mono, key, w)
        return out.pruned(), truncated

    def pruned(self) -> "SeriesPolynomial":
        """Drop exactly-zero weights and monomials left without any series."""
        out = SeriesPolynomial()
        for mono, combo in self.terms.items():
            kept = {k: w for k, w in combo.items() if w != 0}
            if kept:
                out.terms[mono] = kept
        return out

    def is_zero(self) -> bool:
        return not self.pruned().terms

    def monomials(self) -> List[Monomial]:
        return sorted(mono for mono, combo in self.terms.items() if any(w != 0 for w in combo.values()))

    def keys(self) -> List[GradientKey]:
        return sorted({key for combo in self.terms.values() for key, w in combo.items() if w != 0})

    def max_order(self) -> int:
        return max((key.order for key in self.keys()), default=-1)

    def __len__(self) -> int:
        return len(self.monomials())


def union_keys(polys: Iterable[SeriesPolynomial]) -> List[GradientKey]:
    keys = set()
    for p in polys:
        keys.update(p.keys())
    return sorted(keys)
