"""mcs_game - Constructor/evaluator game for automated MCS-set selection."""

__version__ = "0.1.0"
