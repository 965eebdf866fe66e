"""Shared fixtures: MCS tables and small UE populations."""

import pytest

from mcs_game.evaluator import Evaluator, simulate_population
from mcs_game.mcs_table import McsEntry, McsTable, Modulation, load_table


@pytest.fixture(scope="session")
def table():
    """The bundled 29-entry LTE table."""
    return load_table()


@pytest.fixture(scope="session")
def synthetic_table():
    """Thresholds at -10 + i dB and SE 0.2 (i + 1): easy to reason about by hand."""
    entries = tuple(
        McsEntry(index=i, modulation=Modulation.QPSK, se=0.2 * (i + 1), min_sinr_db=-10.0 + i)
        for i in range(29)
    )
    return McsTable(entries=entries, source="synthetic")


@pytest.fixture(scope="session")
def small_population():
    return simulate_population(400, seed=11)


@pytest.fixture
def small_evaluator(small_population, table):
    return Evaluator(small_population, table)
