"""Full-scale checks: 10^4-UE sweeps and 5x10^4-step training.

Run with ``pytest -m slow``.
"""

import numpy as np
import pytest

from mcs_game.action_space import REGIONS, build_final_spaces, build_naive_spaces
from mcs_game.constructor_rl import AgentConfig, make_agents, train
from mcs_game.evaluator import Evaluator, simulate_population
from mcs_game.mcs_table import load_table
from mcs_game.oracle import count_local_maxima, near_optimal_fraction, sweep_all
from mcs_game.report import final_window


pytestmark = pytest.mark.slow

SEED = 2024


@pytest.fixture(scope="module")
def full_evaluator():
    return Evaluator(simulate_population(10_000, SEED), load_table())


@pytest.fixture(scope="module")
def final_curves(full_evaluator):
    return sweep_all(full_evaluator, build_final_spaces())


def test_sum_sorted_curves_are_smoother(full_evaluator, final_curves):
    """The sum-sorted final curves have fewer local maxima than the naive lexicographic ones."""
    naive_curves = sweep_all(full_evaluator, build_naive_spaces())
    for region in REGIONS:
        final_count = count_local_maxima(final_curves[region].smoothed)
        naive_count = count_local_maxima(naive_curves[region].smoothed)
        assert final_count < naive_count, region


def test_agents_settle_near_the_oracle_optimum(full_evaluator, final_curves):
    """At least 90% of the last 10^4 visited combinations are near-optimal."""
    spaces = build_final_spaces()
    agents = make_agents(AgentConfig(), SEED)
    result = train(agents, full_evaluator, spaces)

    for region in REGIONS:
        trace = result.traces[region]
        assert len(trace) == 50_000
        assert all(0 <= step.state_bin <= 19 for step in trace)
        visited = final_window(trace, 10_000)
        assert near_optimal_fraction(visited, final_curves[region]) >= 0.90, region
        q = result.agents[region].q
        assert np.all((q >= 0.0) & (q <= 10.0))
