"""Run summaries: per-region numbers for the JSON summary and terminal text."""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .action_space import RegionActionSpace
from .constructor_rl import TraceStep
from .errors import DomainError
from .oracle import (
    LOCAL_MAX_TOLERANCE,
    NEAR_OPTIMAL_RATIO,
    RewardCurve,
    argmax_smoothed,
    count_local_maxima,
    near_optimal_fraction,
    oracle_gap,
)


def sweep_summary(
    curve: RewardCurve,
    space: RegionActionSpace,
    local_max_tolerance: float = LOCAL_MAX_TOLERANCE,
) -> Dict[str, Any]:
    """Summarize one region's brute-force sweep.

    Returns:
        Dict with:
            - region, ordering, size
            - raw_max / raw_argmax: best unsmoothed reward and its position
            - smoothed_max / oracle_argmax: same on the smoothed curve
            - oracle_combo: the combination at oracle_argmax
            - local_maxima: number of interior local maxima of the smoothed curve
    """
    oracle_position = argmax_smoothed(curve)
    return {
        "region": curve.region.value,
        "ordering": curve.ordering.value,
        "size": curve.size,
        "raw_max": float(curve.values.max()),
        "raw_argmax": int(np.argmax(curve.values)),
        "smoothed_max": float(curve.smoothed.max()),
        "oracle_argmax": oracle_position,
        "oracle_combo": list(space.combination_at(oracle_position)),
        "local_maxima": count_local_maxima(curve.smoothed, local_max_tolerance),
    }


def final_window(trace: Sequence[TraceStep], window: int) -> List[int]:
    """Positions visited in the last ``window`` steps of a trace."""
    return [step.combo_index for step in trace[-window:]] if window > 0 else []


NORMALIZED_COLUMNS = ["step", "combo_index", "raw_reward", "normalized_reward"]


def normalized_rewards(curve: RewardCurve, positions: Sequence[int]) -> np.ndarray:
    """Raw reward at each of ``positions`` over the region's best raw reward.

    Raises:
        DomainError: If the curve never pays anything
    """
    peak = float(curve.values.max())
    if peak <= 0.0:
        raise DomainError(f"{curve.region.value} has no positive reward to normalize by")
    return curve.values[np.asarray(positions, dtype=int)] / peak


def training_summary(
    curve: RewardCurve,
    space: RegionActionSpace,
    trace: Sequence[TraceStep],
    occupancy_window: int = 10_000,
    ratio: float = NEAR_OPTIMAL_RATIO,
    occupancy_target: float = 0.90,
) -> Dict[str, Any]:
    """Compare one trained agent's trajectory with the oracle.

    The best combination is the highest raw reward visited in the final
    occupancy window. With an empty trace every trajectory field is None.

    Returns:
        Dict with:
            - region, steps
            - best_combo_index / best_combo / best_reward / best_smoothed_reward
            - final_combo_index: where the walk ended
            - oracle_argmax / oracle_gap (gap measured at the best combo)
            - near_optimal_occupancy: share of the final window that is near-optimal
            - normalized_reward_mean: mean of normalized_rewards over the final window
            - passed: occupancy >= occupancy_target (None without a trace)
    """
    oracle_position = argmax_smoothed(curve)
    summary: Dict[str, Any] = {
        "region": curve.region.value,
        "steps": len(trace),
        "best_combo_index": None,
        "best_combo": None,
        "best_reward": None,
        "best_smoothed_reward": None,
        "final_combo_index": None,
        "oracle_argmax": oracle_position,
        "oracle_combo": list(space.combination_at(oracle_position)),
        "oracle_gap": None,
        "near_optimal_occupancy": None,
        "normalized_reward_mean": None,
        "passed": None,
    }
    if not trace:
        return summary

    visited = final_window(trace, occupancy_window)
    best = max(visited, key=lambda position: (curve.values[position], -position))
    occupancy = near_optimal_fraction(visited, curve, ratio)
    summary.update({
        "best_combo_index": int(best),
        "best_combo": list(space.combination_at(best)),
        "best_reward": float(curve.values[best]),
        "best_smoothed_reward": float(curve.smoothed[best]),
        "final_combo_index": trace[-1].combo_index,
        "oracle_gap": oracle_gap(curve, best),
        "near_optimal_occupancy": occupancy,
        "normalized_reward_mean": float(normalized_rewards(curve, visited).mean()),
        "passed": occupancy >= occupancy_target,
    })
    return summary


def format_sweep_summary(summary: Dict[str, Any]) -> str:
    """Format a sweep summary for display."""
    return (
        f"📈 {summary['region']} ({summary['ordering']}, {summary['size']} combos)\n"
        f"  Raw max: {summary['raw_max']:.4f} at {summary['raw_argmax']}\n"
        f"  Smoothed max: {summary['smoothed_max']:.4f} at {summary['oracle_argmax']} "
        f"{summary['oracle_combo']}\n"
        f"  Local maxima: {summary['local_maxima']}\n"
    )


def format_training_summary(summary: Dict[str, Any]) -> str:
    """Format a training summary for display.

    Args:
        summary: Output of training_summary

    Returns:
        Multi-line message, flagged ✅ / ⚠️ by the occupancy check
    """
    if summary["steps"] == 0:
        return f"• {summary['region']}: no training steps\n"

    emoji = "✅" if summary["passed"] else "⚠️"
    note = summary.get("oracle_reference")
    message = (
        f"{emoji} {summary['region']}: best {summary['best_combo']} "
        f"(position {summary['best_combo_index']})\n"
        f"  Reward: {summary['best_reward']:.4f} raw, {summary['best_smoothed_reward']:.4f} smoothed\n"
        f"  Oracle: position {summary['oracle_argmax']} {summary['oracle_combo']}, "
        f"gap {summary['oracle_gap']:.4f}\n"
        f"  Near-optimal occupancy: {summary['near_optimal_occupancy']:.1%} "
        f"over {summary['steps']} steps\n"
        f"  Normalized reward: {summary['normalized_reward_mean']:.4f} over the final window\n"
    )
    if note:
        message += f"  Oracle reference: {note}\n"
    return message


def format_session_outcome(
    consensus: bool,
    rounds: int,
    final_rewards: Dict[str, float],
    thresholds: Optional[Dict[str, float]] = None,
) -> str:
    """Format the end of a session for display."""
    header = "🤝 Consensus" if consensus else "🚫 No consensus"
    message = f"{header} after {rounds} rounds\n"
    for region, reward in final_rewards.items():
        threshold = (thresholds or {}).get(region)
        suffix = f" (threshold {threshold:.4f})" if threshold is not None else ""
        message += f"  • {region}: {reward:.4f}{suffix}\n"
    return message
