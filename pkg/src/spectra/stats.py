"""Small summary-statistics helpers."""
from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np

QUANTILE_LEVELS = (0.01, 0.25, 0.50, 0.75, 0.99)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("Wilson interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def quantiles(values, levels=QUANTILE_LEVELS) -> dict[str, float] | None:
    """Linear-interpolation quantiles keyed ``q01``, ``q25``...; None for no data."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return None
    qs = np.quantile(values, levels)
    return {f"q{round(level * 100):02d}": float(q) for level, q in zip(levels, qs)}


def mean_and_stderr(values) -> tuple[float | None, float | None]:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return None, None
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))
