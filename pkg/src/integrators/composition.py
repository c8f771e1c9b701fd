"""Order-raising triple-jump composition of symmetric one-step maps."""

from typing import Tuple

import numpy as np

from src.integrators.runge_kutta import Stepper

SUPPORTED_TARGETS = (4, 6)


def yoshida_coefficients(base_order: int) -> Tuple[float, float]:
    """
    (alpha0, alpha1) such that M(a1 h) o M(a0 h) o M(a1 h) has order base_order + 2.

    alpha1 = 1 / (2 - 2^(1/(p+1))), alpha0 = -2^(1/(p+1)) / (2 - 2^(1/(p+1))), p = base_order.
    """
    if base_order < 2 or base_order % 2:
        raise ValueError(f"composition needs an even base order >= 2, got {base_order}")
    root = 2.0 ** (1.0 / (base_order + 1))
    return -root / (2.0 - root), 1.0 / (2.0 - root)


def yoshida(base: Stepper, target_order: int, base_order: int = 2) -> Stepper:
    """
    Raise a symmetric stepper of order ``base_order`` to ``target_order``.

    Raises:
        ValueError: target order not in (4, 6) or not reachable from the base order
    """
    if target_order not in SUPPORTED_TARGETS:
        raise ValueError(f"unsupported target order {target_order}, expected one of {SUPPORTED_TARGETS}")
    if target_order - base_order == 4:
        base = yoshida(base, target_order - 2, base_order)
        base_order += 2
    if target_order - base_order != 2:
        raise ValueError(f"cannot reach order {target_order} from order {base_order}")

    a0, a1 = yoshida_coefficients(base_order)

    def step(y: np.ndarray, Z: float, h: float) -> np.ndarray:
        y = base(y, Z, a1 * h)
        y = base(y, Z + a1 * h, a0 * h)
        return base(y, Z + (a1 + a0) * h, a1 * h)

    return step
