"""Unit tests for population simulation and proposal scoring."""

import math

import numpy as np
import pytest

from mcs_game.action_space import REGIONS, McsCombination, Region, build_final_spaces
from mcs_game.errors import ConfigError, ScoringError
from mcs_game.evaluator import (
    Evaluator,
    RewardKind,
    UePopulation,
    challenge,
    mss,
    mss_for,
    score,
    se_avg,
    se_avg_for,
    simulate_population,
)
from mcs_game.sir_model import SirDistribution


def _brute_force(sir_db, combo, table):
    """Independent counting oracle: loops over UEs and MCSs one at a time."""
    n = len(sir_db)
    fractions = []
    for m in combo.indices:
        count = 0
        for value in sir_db:
            if value >= table.min_sinr(m):
                count += 1
        fractions.append(count / n)
    per_ue = []
    for value in sir_db:
        best = 0.0
        for m in combo.indices:
            if value >= table.min_sinr(m) and table.se(m) > best:
                best = table.se(m)
        per_ue.append(best)
    return math.fsum(fractions) / combo.k, math.fsum(per_ue) / n / table.max_se


def test_simulate_population_rejects_small_n():
    """Fewer than 40 UEs is a configuration error."""
    with pytest.raises(ConfigError):
        simulate_population(39, seed=1)


def test_region_sizes_are_quartiles():
    """10^4 UEs split 2500 / 5000 / 2500."""
    pop = simulate_population(10_000, seed=3)
    assert pop.region_size(Region.CELL_EDGE) == pytest.approx(2500, abs=1)
    assert pop.region_size(Region.CELL_MEDIAN) == pytest.approx(5000, abs=2)
    assert pop.region_size(Region.CELL_CENTER) == pytest.approx(2500, abs=1)
    assert sum(pop.region_size(r) for r in REGIONS) == 10_000


def test_region_labels_follow_quartiles(small_population):
    """Edge below q25, center at or above q75, median in between."""
    pop = small_population
    labels = pop.region_of
    assert np.all(pop.sirs[labels == Region.CELL_EDGE.value] < pop.q25)
    assert np.all(pop.sirs[labels == Region.CELL_CENTER.value] >= pop.q75)
    median = pop.sirs[labels == Region.CELL_MEDIAN.value]
    assert np.all((median >= pop.q25) & (median < pop.q75))
    assert pop.q25 <= pop.q50 <= pop.q75


def test_population_is_deterministic():
    """Same seed, same percentiles."""
    a = simulate_population(1000, seed=8)
    b = simulate_population(1000, seed=8)
    assert (a.q25, a.q50, a.q75) == (b.q25, b.q50, b.q75)


def test_challenge_near_closed_form():
    """At 10^5 UEs the challenge is close to (-1.57, 2.10, 8.12) dB."""
    pop = simulate_population(100_000, seed=2024)
    p25, p50, p75 = challenge(pop)
    assert p25 == pytest.approx(-1.57, abs=0.2)
    assert p50 == pytest.approx(2.10, abs=0.2)
    assert p75 == pytest.approx(8.12, abs=0.2)
    assert p25 < p50 < p75
    assert challenge(pop) == (p25, p50, p75)
    assert pop.q50 == pytest.approx(1.6211, abs=0.05)


def test_mss_hand_example(synthetic_table):
    """4 UEs at {0, 5, 10, 15} dB against thresholds {4, 12} dB give 0.5."""
    combo = McsCombination((14, 22))
    assert synthetic_table.min_sinr(14) == 4.0
    assert synthetic_table.min_sinr(22) == 12.0
    assert mss_for(np.array([0.0, 5.0, 10.0, 15.0]), combo, synthetic_table) == 0.5


def test_mss_all_and_none_viable(synthetic_table):
    """All-viable proposals score 1, hopeless ones 0."""
    sir_db = np.array([20.0, 25.0, 30.0])
    assert mss_for(sir_db, McsCombination((0, 1, 2)), synthetic_table) == 1.0
    assert mss_for(np.array([-20.0, -15.0]), McsCombination((0, 1, 2)), synthetic_table) == 0.0
    assert se_avg_for(np.array([-20.0, -15.0]), McsCombination((0, 1, 2)), synthetic_table) == 0.0


def test_se_avg_top_mcs_normalizes_to_one(table):
    """UEs viable for MCS 28 using a combo that holds it score SE 1."""
    sir_db = np.array([25.0, 26.0, 30.0])
    assert se_avg_for(sir_db, McsCombination((20, 28)), table) == 1.0


def test_se_avg_two_ue_example(table):
    """One UE viable for MCS 0 and 10, the other only for 0."""
    combo = McsCombination((0, 10))
    expected = (table.se(10) + table.se(0)) / 2 / table.max_se
    assert se_avg_for(np.array([0.0, 5.0]), combo, table) == expected


def test_empty_region_raises(table):
    """Scoring an empty set of UEs is a scoring error."""
    with pytest.raises(ScoringError):
        mss_for(np.array([]), McsCombination((0,)), table)
    with pytest.raises(ScoringError):
        se_avg_for(np.array([]), McsCombination((0,)), table)


def test_matches_brute_force_oracle(table):
    """100 random (region, combo) pairs at n=20 match the counting oracle exactly."""
    pop = UePopulation.from_sirs(SirDistribution().sample_array(20, seed=77), seed=77)
    sir_db = 10.0 * np.log10(pop.sirs)
    spaces = build_final_spaces()
    rng = np.random.default_rng(123)

    for _ in range(100):
        region = REGIONS[int(rng.integers(3))]
        space = spaces[region]
        combo = space.combination_at(int(rng.integers(space.size)))
        region_db = [float(v) for v, label in zip(sir_db, pop.region_of) if label == region.value]

        expected_mss, expected_se = _brute_force(region_db, combo, table)
        assert mss(pop, region, combo, table) == expected_mss
        assert se_avg(pop, region, combo, table) == expected_se


def test_mss_monotone_under_lower_index(small_population, table):
    """Swapping a member for a lower unused index never lowers MSS."""
    rng = np.random.default_rng(5)
    for _ in range(50):
        indices = sorted(rng.choice(29, size=4, replace=False).tolist())
        unused = [i for i in range(indices[0]) if i not in indices]
        if not unused:
            continue
        lower = sorted(indices[1:] + [unused[-1]])
        for region in REGIONS:
            before = mss(small_population, region, McsCombination(tuple(indices)), table)
            after = mss(small_population, region, McsCombination(tuple(lower)), table)
            assert after >= before


def test_all_scores_bounded(small_evaluator):
    """Every score of every final-config combination lies in [0, 1]."""
    for region, space in build_final_spaces().items():
        for idx in range(space.size):
            record = small_evaluator.score(region, idx, space)
            assert 0.0 <= record.mss <= 1.0
            assert 0.0 <= record.se_norm <= 1.0
            assert record.reward == (record.mss + record.se_norm) / 2.0


def test_reward_kinds():
    """Mean and product rewards combine the two scores."""
    assert RewardKind.MEAN.combine(0.5, 0.25) == 0.375
    assert RewardKind.MEAN.combine(1.0, 1.0) == 1.0
    assert RewardKind.MEAN.combine(0.0, 0.0) == 0.0
    assert RewardKind.PRODUCT.combine(0.5, 0.25) == 0.125


def test_score_is_pure(small_population, table):
    """Module-level score equals Evaluator.score and repeats identically."""
    space = build_final_spaces()[Region.CELL_MEDIAN]
    evaluator = Evaluator(small_population, table)
    a = score(small_population, Region.CELL_MEDIAN, 42, space, table)
    b = evaluator.score(Region.CELL_MEDIAN, 42, space)
    assert a == b
    assert evaluator.score(Region.CELL_MEDIAN, 42, space) == b
    assert b.to_dict()["region"] == "CM"


def test_product_reward_evaluator(small_population, table):
    """An evaluator built for the product reward uses it."""
    space = build_final_spaces()[Region.CELL_EDGE]
    record = Evaluator(small_population, table, RewardKind.PRODUCT).score(Region.CELL_EDGE, 100, space)
    assert record.reward == record.mss * record.se_norm


def test_reseeded_keeps_table_and_size(small_evaluator):
    """A reseeded evaluator draws a new population of the same size."""
    other = small_evaluator.reseeded(99)
    assert other.population.n == small_evaluator.population.n
    assert other.table is small_evaluator.table
    assert other.population.q50 != small_evaluator.population.q50
