"""Brute-force ground truth: score every combination, smooth, find optima.

Being exhaustive is the point; nothing here tries to be clever. The smoothing
window is given for a 495-combination space and shrinks in proportion for
smaller ones, so every space is smoothed over the same share of its length.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .action_space import Ordering, Region, RegionActionSpace
from .errors import DomainError
from .evaluator import Evaluator, ScoreRecord, ScoringBackend


logger = logging.getLogger(__name__)


DEFAULT_WINDOW = 50
NEAR_OPTIMAL_RATIO = 0.98
ARGMAX_TOLERANCE = 1e-12
LOCAL_MAX_TOLERANCE = 0.01
# one region of the final design: C(12, 4)
REFERENCE_SPACE_SIZE = 495


@dataclass
class RewardCurve:
    """Reward at every position of one region's action space."""
    region: Region
    ordering: Ordering
    values: np.ndarray
    smoothed: Optional[np.ndarray] = None
    records: Optional[Sequence[ScoreRecord]] = None

    @property
    def size(self) -> int:
        return int(self.values.size)

    def with_smoothing(self, window: int = DEFAULT_WINDOW) -> "RewardCurve":
        self.smoothed = smooth(self.values, window)
        return self


def window_bounds(position: int, size: int, window: int) -> Tuple[int, int]:
    """Half-open slice ``[lo, hi)`` averaged at ``position``, clipped to the space."""
    back = window // 2
    return max(position - back, 0), min(position + window - back, size)


def scaled_window(window: int, size: int, reference_size: int = REFERENCE_SPACE_SIZE) -> int:
    """Window for a space of ``size`` positions, ``window`` being meant for ``reference_size``."""
    return max(1, int(round(window * size / reference_size)))


def sweep(evaluator: Evaluator, region: Region, space: RegionActionSpace) -> RewardCurve:
    """Score every combination of ``space`` (values only, not smoothed)."""
    records = [evaluator.score(region, i, space) for i in range(space.size)]
    values = np.array([r.reward for r in records], dtype=float)
    logger.info("Swept %s (%s): %d combos, max reward %.4f at %d",
                region.value, space.ordering.value, space.size,
                float(values.max()), int(np.argmax(values)))
    return RewardCurve(region=region, ordering=space.ordering, values=values, records=records)


def sweep_all(
    evaluator: Evaluator,
    spaces: Dict[Region, RegionActionSpace],
    window: int = DEFAULT_WINDOW,
) -> Dict[Region, RewardCurve]:
    """Sweep and smooth every region, scaling ``window`` to each space's size."""
    return {region: sweep(evaluator, region, space).with_smoothing(scaled_window(window, space.size))
            for region, space in spaces.items()}


def smooth(values: Sequence[float], window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Centered rectangular moving average, truncated at the ends.

    Position i averages values[i - window//2 : i + window - window//2], clipped
    to the array, so the output has the input's length and stays aligned with
    combination positions.

    Raises:
        DomainError: If window < 1
    """
    if window < 1:
        raise DomainError(f"smoothing window must be >= 1, got {window}")

    values = np.asarray(values, dtype=float)
    n = values.size
    bounds = (window_bounds(i, n, window) for i in range(n))
    return np.array([values[lo:hi].mean() for lo, hi in bounds], dtype=float)


def argmax_smoothed(curve: RewardCurve) -> int:
    """Lowest position attaining the smoothed maximum."""
    smoothed = curve.smoothed if curve.smoothed is not None else smooth(curve.values)
    if smoothed.size == 0:
        raise DomainError("cannot take the argmax of an empty curve")
    peak = float(smoothed.max())
    return int(np.flatnonzero(smoothed >= peak - ARGMAX_TOLERANCE)[0])


def count_local_maxima(smoothed: Sequence[float], tolerance: float = LOCAL_MAX_TOLERANCE) -> int:
    """Count interior peaks that stand out by more than ``tolerance``.

    Walks the curve as a zigzag: a peak counts once the curve has risen more
    than ``tolerance`` into it and then fallen more than ``tolerance`` below
    it. Wiggles and plateaus within ``tolerance`` merge into their
    surroundings, and a maximum at either end of the curve is not counted.
    """
    values = np.asarray(smoothed, dtype=float)
    if values.size == 0:
        raise DomainError("cannot count maxima of an empty curve")

    count = 0
    rising: Optional[bool] = None
    hi = lo = float(values[0])
    for v in values[1:]:
        x = float(v)
        if rising is None:
            if x > lo + tolerance:
                rising, hi = True, x
            elif x < hi - tolerance:
                rising, lo = False, x
            else:
                hi, lo = max(hi, x), min(lo, x)
        elif rising:
            if x > hi:
                hi = x
            elif x < hi - tolerance:
                count += 1
                rising, lo = False, x
        else:
            if x < lo:
                lo = x
            elif x > lo + tolerance:
                rising, hi = True, x
    return count


def near_optimal_positions(curve: RewardCurve, ratio: float = NEAR_OPTIMAL_RATIO) -> np.ndarray:
    """Boolean mask of positions whose smoothed reward is >= ratio x smoothed max."""
    smoothed = curve.smoothed if curve.smoothed is not None else smooth(curve.values)
    return smoothed >= ratio * float(smoothed.max())


def near_optimal_fraction(
    visited: Sequence[int],
    curve: RewardCurve,
    ratio: float = NEAR_OPTIMAL_RATIO,
) -> float:
    """Share of visited positions that are near-optimal on the smoothed curve."""
    visited = np.asarray(visited, dtype=int)
    if visited.size == 0:
        return 0.0
    mask = near_optimal_positions(curve, ratio)
    return float(np.count_nonzero(mask[visited])) / visited.size


def oracle_gap(curve: RewardCurve, position: int) -> float:
    """Smoothed maximum minus the smoothed reward at ``position``."""
    smoothed = curve.smoothed if curve.smoothed is not None else smooth(curve.values)
    return float(smoothed.max() - smoothed[position])


class WindowedScores:
    """Scores averaged over the smoothing window around each position.

    Wraps a backend so a learner sees the same window average the oracle
    uses for its smoothed curve. The window scales with the space size the
    way ``sweep_all`` scales it. Averages are cached per (region, position),
    so use one instance per population and action space.
    """

    def __init__(self, backend: ScoringBackend, window: int = DEFAULT_WINDOW) -> None:
        if window < 1:
            raise DomainError(f"smoothing window must be >= 1, got {window}")
        self.backend = backend
        self.window = window
        self._cache: Dict[Tuple[Region, int], ScoreRecord] = {}

    def score(self, region: Region, combo_index: int, space: RegionActionSpace) -> ScoreRecord:
        key = (region, combo_index)
        if key not in self._cache:
            lo, hi = window_bounds(combo_index, space.size, scaled_window(self.window, space.size))
            records = [self.backend.score(region, i, space) for i in range(lo, hi)]
            self._cache[key] = ScoreRecord(
                region=region,
                combo_index=combo_index,
                mss=float(np.mean([r.mss for r in records])),
                se_norm=float(np.mean([r.se_norm for r in records])),
                reward=float(np.mean([r.reward for r in records])),
            )
        return self._cache[key]
