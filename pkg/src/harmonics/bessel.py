"""Derivative of the modified Bessel function of the first kind, by power series."""

from math import factorial

import numpy as np

# relative size of the last accepted term
SERIES_RTOL = 1e-17


def bessel_i_derivative(m: int, x):
    """
    I_m'(x) = sum_j (m+2j) (x/2)^(m+2j-1) / (2 j! (m+j)!).

    All terms share the sign of x^(m-1), so the partial sums do not cancel and the
    series is accurate to round-off wherever it does not overflow (|x| below ~700).

    Args:
        m: Order, m >= 1
        x: Real scalar or array

    Returns:
        Same shape as x (a float for scalar input)
    """
    if m < 1:
        raise ValueError(f"Bessel order must be >= 1, got {m}")

    x_arr = np.asarray(x, dtype=float)
    half = x_arr / 2.0
    q = half * half

    with np.errstate(over="ignore", invalid="ignore"):
        term = m * np.power(half, m - 1) / (2.0 * factorial(m))
        total = term.copy()

        max_terms = 40 + int(2 * np.max(np.abs(x_arr), initial=0.0))
        for j in range(max_terms):
            term = term * q * (m + 2 * j + 2) / ((m + 2 * j) * (j + 1) * (m + j + 1))
            total = total + term
            if np.all(np.abs(term) <= SERIES_RTOL * np.abs(total)):
                break

    if np.ndim(x) == 0:
        return float(total)
    return total
