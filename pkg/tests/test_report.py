"""Unit tests for run summaries."""

import numpy as np
import pytest

from mcs_game.action_space import Action, Ordering, Region, RegionActionSpace
from mcs_game.constructor_rl import TraceStep
from mcs_game.errors import DomainError
from mcs_game.oracle import RewardCurve
from mcs_game.report import (
    final_window,
    format_session_outcome,
    format_sweep_summary,
    format_training_summary,
    normalized_rewards,
    sweep_summary,
    training_summary,
)


def _space():
    return RegionActionSpace.build(Region.CELL_EDGE, range(5), 1)


def _curve():
    values = np.array([0.1, 0.2, 0.9, 1.0, 0.3])
    return RewardCurve(Region.CELL_EDGE, Ordering.SUM_SORTED, values).with_smoothing(1)


def _trace(positions):
    curve = _curve()
    return [
        TraceStep(step=i, episode=0, combo_index=p, action=Action.STAY, mss=0.5, se_norm=0.5,
                  reward=float(curve.values[p]), state_bin=10, alpha=0.5, epsilon=0.01)
        for i, p in enumerate(positions)
    ]


def test_sweep_summary():
    """Sweep summary reports both maxima and the oracle combination."""
    summary = sweep_summary(_curve(), _space())
    assert summary["region"] == "CE"
    assert summary["size"] == 5
    assert summary["raw_argmax"] == 3
    assert summary["oracle_argmax"] == 3
    assert summary["oracle_combo"] == [3]
    assert summary["local_maxima"] == 1
    assert "Local maxima: 1" in format_sweep_summary(summary)


def test_final_window():
    """Only the last positions count."""
    trace = _trace([0, 1, 2, 3, 4])
    assert final_window(trace, 2) == [3, 4]
    assert final_window(trace, 0) == []


def test_training_summary_passes():
    """A walk ending near the optimum passes the occupancy check."""
    summary = training_summary(_curve(), _space(), _trace([0, 1, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3]),
                               occupancy_window=10)
    assert summary["best_combo_index"] == 3
    assert summary["best_combo"] == [3]
    assert summary["best_reward"] == 1.0
    assert summary["oracle_gap"] == 0.0
    assert summary["near_optimal_occupancy"] == 0.9
    assert summary["normalized_reward_mean"] == pytest.approx(0.99)
    assert summary["passed"] is True
    assert format_training_summary(summary).startswith("✅")


def test_training_summary_fails_far_from_optimum():
    """A walk stuck at low rewards fails the check."""
    summary = training_summary(_curve(), _space(), _trace([0, 1, 0, 1]))
    assert summary["best_combo_index"] == 1
    assert summary["oracle_gap"] == pytest.approx(0.8)
    assert summary["passed"] is False
    assert format_training_summary(summary).startswith("⚠️")


def test_training_summary_without_trace():
    """No steps: oracle fields only."""
    summary = training_summary(_curve(), _space(), [])
    assert summary["steps"] == 0
    assert summary["best_combo"] is None
    assert summary["passed"] is None
    assert summary["normalized_reward_mean"] is None
    assert summary["oracle_argmax"] == 3
    assert "no training steps" in format_training_summary(summary)


def test_format_session_outcome():
    """Outcome header and one line per region."""
    text = format_session_outcome(False, 7, {"CE": 0.5}, {"CE": 0.9})
    assert text.startswith("🚫 No consensus after 7 rounds")
    assert "CE: 0.5000 (threshold 0.9000)" in text


def test_normalized_rewards():
    """Visited raw rewards are divided by the best raw reward of the region."""
    assert list(normalized_rewards(_curve(), [3, 2, 0, 4])) == pytest.approx([1.0, 0.9, 0.1, 0.3])
    assert normalized_rewards(_curve(), []).size == 0
    flat = RewardCurve(Region.CELL_EDGE, Ordering.SUM_SORTED, np.zeros(3)).with_smoothing(1)
    with pytest.raises(DomainError):
        normalized_rewards(flat, [0])


def test_training_text_shows_normalized_reward_and_oracle_note():
    """The normalized mean is always printed; the oracle note only when set."""
    summary = training_summary(_curve(), _space(), _trace([3, 3, 2, 3]))
    text = format_training_summary(summary)
    assert "Normalized reward: 0.9750" in text
    assert "Oracle reference" not in text
    summary["oracle_reference"] = "master population (seed 5); episodes trained on reseeded populations"
    assert "Oracle reference: master population (seed 5)" in format_training_summary(summary)
