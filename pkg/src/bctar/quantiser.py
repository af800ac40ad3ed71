"""Threshold quantisers mapping real samples to an m-ary alphabet."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InputError


@dataclass(frozen=True)
class Quantiser:
    """Quantiser defined by strictly increasing thresholds ``c_1 < ... < c_{m-1}``.

    A sample ``x`` is mapped to the number of thresholds strictly below it, so a
    value equal to a threshold falls into the lower bin.
    """

    thresholds: tuple[float, ...]

    def __init__(self, thresholds: Iterable[float]):
        ts = tuple(float(c) for c in thresholds)
        if not ts:
            raise ConfigurationError("a quantiser needs at least one threshold (m >= 2)")
        if not all(math.isfinite(c) for c in ts):
            raise ConfigurationError(f"thresholds must be finite, got {ts}")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError(f"thresholds must be strictly increasing, got {ts}")
        object.__setattr__(self, "thresholds", ts)

    @property
    def m(self) -> int:
        return len(self.thresholds) + 1

    def __call__(self, x: float) -> int:
        return quantize(x, self)


def quantize(x: float, q: Quantiser) -> int:
    x = float(x)
    if not math.isfinite(x):
        raise InputError(f"cannot quantise non-finite value {x!r}")
    return sum(1 for c in q.thresholds if x > c)


def quantize_series(series: Sequence[float], q: Quantiser) -> np.ndarray:
    """Quantise every sample; errors name the offending (0-based) index."""
    arr = np.asarray(series, dtype=float).reshape(-1)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise InputError(f"cannot quantise non-finite value {arr[bad[0]]!r} at index {bad[0]}")
    # searchsorted(side="left") counts thresholds strictly below each value
    return np.searchsorted(np.asarray(q.thresholds), arr, side="left").astype(np.int64)


def _is_centred(x: np.ndarray) -> bool:
    lo, hi = np.percentile(x, [10, 90])
    return abs(float(np.median(x))) <= 0.05 * float(hi - lo)


def threshold_grid(
    series: Sequence[float],
    m: int,
    grid_points: int,
    mode: str = "auto",
) -> list[tuple[float, ...]]:
    """Candidate threshold sets for evidence-based tuning.

    Grid values are evenly spaced quantiles of the data between the 10th and
    90th percentiles. ``mode`` controls how sets of ``m - 1`` thresholds are
    formed:

    ``"subsets"``
        every strictly increasing ``(m-1)``-subset of the grid;
    ``"symmetric"``
        pairs ``(-c, c)`` where ``c`` runs over the same quantile grid of
        ``|x|`` (only for ``m == 3``);
    ``"auto"``
        ``"symmetric"`` when ``m == 3`` and the series is centred near zero,
        ``"subsets"`` otherwise.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size == 0:
        raise InputError("threshold_grid needs a nonempty series")
    if not np.all(np.isfinite(x)):
        raise InputError("threshold_grid needs finite samples")
    if m < 2:
        raise ConfigurationError(f"alphabet size must be >= 2, got {m}")
    if grid_points < 1:
        raise ConfigurationError(f"grid_points must be >= 1, got {grid_points}")
    if mode not in ("auto", "subsets", "symmetric"):
        raise ConfigurationError(f"unknown grid mode {mode!r}")

    if np.ptp(x) == 0:
        raise ConfigurationError("constant series: every quantile coincides")

    levels = np.linspace(10.0, 90.0, grid_points) if grid_points > 1 else np.array([50.0])
    if mode == "auto":
        mode = "symmetric" if m == 3 and _is_centred(x) else "subsets"

    if mode == "symmetric":
        if m != 3:
            raise ConfigurationError("symmetric threshold pairs need m == 3")
        grid = np.unique(np.percentile(np.abs(x), levels))
        grid = grid[grid > 0]
        if grid.size == 0:
            raise ConfigurationError("series too degenerate for symmetric thresholds")
        return [(-float(c), float(c)) for c in grid]

    grid = np.unique(np.percentile(x, levels))
    if grid.size < m - 1:
        raise ConfigurationError(
            f"grid yields {grid.size} distinct values, need {m - 1} for m={m}"
        )
    return [tuple(float(c) for c in combo) for combo in itertools.combinations(grid, m - 1)]
