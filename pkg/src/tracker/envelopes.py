"""Amplitude envelopes, growth detection and trend fits of long tracking runs."""

from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats

TAIL_FRACTION = 0.25
GROWTH_FACTOR = 2.0
TAIL_BLOCKS = 8
# slopes within this many standard errors of zero count as no trend
SLOPE_SIGMAS = 3.0
# or a fitted change over the whole run below this fraction of the mean level
DRIFT_RTOL = 1e-3


class InstabilityVerdict(NamedTuple):
    unstable: bool
    monotone_tail: bool
    growth: float  # last tail block max / first-quartile max


class EnvelopeTrend(NamedTuple):
    slope: float
    stderr: float
    intercept: float
    relative_drift: float
    stable: bool


def block_envelope(values: Sequence[float], window: int) -> np.ndarray:
    """Max |value| over consecutive windows; a short last window is kept."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    v = np.abs(np.asarray(values, dtype=float))
    if not len(v):
        return v
    edges = np.arange(0, len(v), window)
    return np.maximum.reduceat(v, edges)


def pair_envelope(element_max: Sequence[float]) -> np.ndarray:
    """Per-pair max of per-element maxima (elements 2k, 2k+1 form pair k)."""
    return block_envelope(element_max, 2)


def detect_instability(
    envelope: Sequence[float],
    tail_fraction: float = TAIL_FRACTION,
    growth_factor: float = GROWTH_FACTOR,
    tail_blocks: int = TAIL_BLOCKS,
) -> InstabilityVerdict:
    """
    Flag monotone amplitude growth.

    The final ``tail_fraction`` of the envelope is split into ``tail_blocks``
    blocks; the run is unstable when the block maxima never decrease and the last
    one exceeds ``growth_factor`` times the max over the first quartile.
    """
    env = np.asarray(envelope, dtype=float)
    if len(env) < 4 * tail_blocks:
        raise ValueError(f"envelope too short for growth detection: {len(env)} < {4 * tail_blocks}")
    if not np.all(np.isfinite(env)):
        return InstabilityVerdict(True, True, float("inf"))
    tail = env[int(np.floor((1.0 - tail_fraction) * len(env))) :]
    blocks = np.array([b.max() for b in np.array_split(tail, tail_blocks)])
    monotone = bool(np.all(np.diff(blocks) >= 0.0))
    reference = env[: max(1, len(env) // 4)].max()
    growth = float(blocks[-1] / reference) if reference > 0 else float("inf")
    return InstabilityVerdict(monotone and growth > growth_factor, monotone, growth)


def envelope_slope(
    envelope: Sequence[float],
    position: Optional[Sequence[float]] = None,
    sigmas: float = SLOPE_SIGMAS,
    drift_rtol: float = DRIFT_RTOL,
) -> EnvelopeTrend:
    """
    Least-squares line through the envelope with the slope's standard error.

    ``stable`` holds when the slope is within ``sigmas`` standard errors of zero,
    or the fitted change over the run is below ``drift_rtol`` of the mean level.
    """
    env = np.asarray(envelope, dtype=float)
    if len(env) < 3:
        raise ValueError(f"need at least 3 envelope points, got {len(env)}")
    x = np.arange(len(env), dtype=float) if position is None else np.asarray(position, dtype=float)
    fit = stats.linregress(x, env)
    level = float(np.mean(np.abs(env)))
    change = abs(fit.slope) * float(x[-1] - x[0])
    relative = change / level if level > 0 else 0.0
    stable = bool(abs(fit.slope) <= sigmas * fit.stderr or relative <= drift_rtol)
    return EnvelopeTrend(float(fit.slope), float(fit.stderr), float(fit.intercept), relative, stable)
