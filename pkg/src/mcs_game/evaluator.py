"""Evaluator side of the game: simulated UEs, cell regions and proposal scoring."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Protocol, Tuple

import numpy as np

from .action_space import McsCombination, Region, RegionActionSpace
from .errors import ConfigError, ScoringError
from .mcs_table import McsTable
from .sir_model import Sir, SirDistribution


logger = logging.getLogger(__name__)


MIN_POPULATION = 40


class RewardKind(str, Enum):
    MEAN = "mean"        # (MSS + SE) / 2
    PRODUCT = "product"  # MSS * SE

    def combine(self, mss: float, se_norm: float) -> float:
        if self is RewardKind.PRODUCT:
            return mss * se_norm
        return (mss + se_norm) / 2.0


@dataclass(frozen=True, eq=False)
class UePopulation:
    """Frozen set of UE SIR draws with their cell-region labels.

    Regions are quartile bands of the empirical distribution: edge below q25,
    center at or above q75, median in between.
    """
    sirs: np.ndarray
    q25: float
    q50: float
    q75: float
    region_of: np.ndarray
    seed: Optional[int] = None
    _region_db: Dict[Region, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_sirs(cls, sirs: np.ndarray, seed: Optional[int] = None) -> "UePopulation":
        """Partition explicit linear SIR values into regions."""
        sirs = np.asarray(sirs, dtype=float)
        if sirs.size == 0:
            raise ConfigError("population needs at least one UE")

        q25, q50, q75 = (float(q) for q in np.percentile(sirs, [25.0, 50.0, 75.0]))
        region_of = np.full(sirs.size, Region.CELL_MEDIAN.value, dtype=object)
        region_of[sirs < q25] = Region.CELL_EDGE.value
        region_of[sirs >= q75] = Region.CELL_CENTER.value

        sir_db = 10.0 * np.log10(sirs)
        region_db = {r: np.sort(sir_db[region_of == r.value]) for r in Region}
        return cls(sirs=sirs, q25=q25, q50=q50, q75=q75, region_of=region_of,
                   seed=seed, _region_db=region_db)

    @property
    def n(self) -> int:
        return int(self.sirs.size)

    def region_sir_db(self, region: Region) -> np.ndarray:
        """Sorted SIRs (dB) of the UEs in ``region``."""
        return self._region_db[region]

    def region_size(self, region: Region) -> int:
        return int(self._region_db[region].size)


def simulate_population(
    n: int,
    seed: int,
    distribution: Optional[SirDistribution] = None,
) -> UePopulation:
    """Draw ``n`` iid UEs and label them by SIR quartile.

    Raises:
        ConfigError: If n < 40 (regions would be too thin to score)
    """
    if n < MIN_POPULATION:
        raise ConfigError(f"population needs at least {MIN_POPULATION} UEs, got {n}")

    distribution = distribution or SirDistribution()
    population = UePopulation.from_sirs(distribution.sample_array(n, seed), seed=seed)
    logger.info(
        "Simulated %d UEs (seed=%d): q25=%.3f q50=%.3f q75=%.3f, edge/median/center=%d/%d/%d",
        n, seed, population.q25, population.q50, population.q75,
        population.region_size(Region.CELL_EDGE),
        population.region_size(Region.CELL_MEDIAN),
        population.region_size(Region.CELL_CENTER),
    )
    return population


def challenge(pop: UePopulation) -> Tuple[float, float, float]:
    """The three empirical percentile SIRs in dB, as sent to the constructor."""
    return tuple(Sir(q).db for q in (pop.q25, pop.q50, pop.q75))


def mss_for(sir_db: np.ndarray, combo: McsCombination, table: McsTable) -> float:
    """MCS Suitability Score of ``combo`` over a set of UE SIRs (dB).

    For each proposed MCS, the fraction of UEs meeting its threshold; then
    the average of those fractions over the k MCSs.

    Raises:
        ScoringError: If there are no UEs
    """
    sir_db = np.asarray(sir_db, dtype=float)
    n = sir_db.size
    if n == 0:
        raise ScoringError("cannot score a proposal for an empty region")

    fractions = [int(np.count_nonzero(sir_db >= table.min_sinr(m))) / n for m in combo]
    return math.fsum(fractions) / combo.k


def se_avg_for(sir_db: np.ndarray, combo: McsCombination, table: McsTable) -> float:
    """Average best-achievable SE over UEs, normalized by the table's max SE.

    Each UE uses the highest-SE viable MCS of the proposal; a UE with no
    viable MCS contributes zero.

    Raises:
        ScoringError: If there are no UEs
    """
    sir_db = np.asarray(sir_db, dtype=float)
    n = sir_db.size
    if n == 0:
        raise ScoringError("cannot score a proposal for an empty region")

    thresholds = np.array([table.min_sinr(m) for m in combo], dtype=float)
    se_values = np.array([table.se(m) for m in combo], dtype=float)
    # thresholds ascend with index: position of the highest threshold <= SIR
    best = np.searchsorted(thresholds, sir_db, side="right") - 1
    per_ue = np.where(best >= 0, se_values[np.clip(best, 0, None)], 0.0)
    return math.fsum(per_ue.tolist()) / n / table.max_se


def mss(pop: UePopulation, region: Region, combo: McsCombination, table: McsTable) -> float:
    """MSS of ``combo`` for the UEs of ``region``."""
    return mss_for(pop.region_sir_db(region), combo, table)


def se_avg(pop: UePopulation, region: Region, combo: McsCombination, table: McsTable) -> float:
    """Normalized average SE of ``combo`` for the UEs of ``region``."""
    return se_avg_for(pop.region_sir_db(region), combo, table)


class ScoringBackend(Protocol):
    """Anything that can score a position of an action space."""

    def score(self, region: Region, combo_index: int, space: RegionActionSpace) -> "ScoreRecord":
        ...


@dataclass(frozen=True)
class ScoreRecord:
    """Evaluator feedback for one proposal."""
    region: Region
    combo_index: int
    mss: float
    se_norm: float
    reward: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "region": self.region.value,
            "combo_index": self.combo_index,
            "mss": self.mss,
            "se_norm": self.se_norm,
            "reward": self.reward,
        }


class Evaluator:
    """Scores proposals against one frozen population and MCS table.

    Scoring is pure, so results are memoized per (region, combination).
    """

    def __init__(
        self,
        population: UePopulation,
        table: McsTable,
        reward: RewardKind = RewardKind.MEAN,
    ) -> None:
        self.population = population
        self.table = table
        self.reward = reward
        self._cache: Dict[Tuple[Region, Tuple[int, ...]], Tuple[float, float, float]] = {}

    def challenge(self) -> Tuple[float, float, float]:
        return challenge(self.population)

    def score_combination(
        self,
        region: Region,
        combo: McsCombination,
        combo_index: int = -1,
    ) -> ScoreRecord:
        """Score a combination directly (the protocol path, no action space needed)."""
        key = (region, combo.indices)
        cached = self._cache.get(key)
        if cached is None:
            m = mss(self.population, region, combo, self.table)
            s = se_avg(self.population, region, combo, self.table)
            cached = (m, s, self.reward.combine(m, s))
            self._cache[key] = cached

        m, s, r = cached
        return ScoreRecord(region=region, combo_index=combo_index, mss=m, se_norm=s, reward=r)

    def score(self, region: Region, combo_index: int, space: RegionActionSpace) -> ScoreRecord:
        """Score the combination at ``combo_index`` of ``space``."""
        return self.score_combination(region, space.combination_at(combo_index), combo_index)

    def reseeded(self, seed: int) -> "Evaluator":
        """Same table and reward over a freshly drawn population of the same size."""
        population = simulate_population(self.population.n, seed)
        return Evaluator(population, self.table, self.reward)


def score(
    pop: UePopulation,
    region: Region,
    combo_index: int,
    space: RegionActionSpace,
    table: McsTable,
    reward: RewardKind = RewardKind.MEAN,
) -> ScoreRecord:
    """One-shot scoring without an Evaluator instance."""
    return Evaluator(pop, table, reward).score(region, combo_index, space)
