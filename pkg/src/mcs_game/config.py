"""Run configuration: defaults, JSON config file, environment, CLI flags.

Precedence, lowest first: dataclass defaults, ``--config`` JSON file,
``MCS_GAME_*`` environment variables (a ``.env`` file is honoured), flags.
"""

import dataclasses
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from dotenv import load_dotenv

from .action_space import (
    FINAL_K,
    FINAL_REGION_SETS,
    NAIVE_K,
    NAIVE_REGION_SETS,
    REGIONS,
    Ordering,
    Region,
    RegionActionSpace,
    build_spaces,
)
from .constructor_rl import AgentConfig
from .errors import ConfigError
from .evaluator import MIN_POPULATION, RewardKind


logger = logging.getLogger(__name__)


ENV_PREFIX = "MCS_GAME_"
ENV_FIELDS = ("seed", "n_ues", "output_dir", "mcs_table_path")

# "auto": 0.95 x the region's raw oracle maximum
AUTO = "auto"
AUTO_THRESHOLD_RATIO = 0.95
NUMBER_OR_AUTO = ("session_threshold", "terminal_reward_threshold")


@dataclass
class RunConfig:
    """Everything one reproduction run needs. Defaults are the final design."""
    seed: int = 2024
    n_ues: int = 10_000
    mcs_table_path: Optional[str] = None
    k: int = FINAL_K
    region_sets: Dict[Region, Tuple[int, ...]] = field(default_factory=lambda: dict(FINAL_REGION_SETS))
    ordering: Ordering = Ordering.SUM_SORTED
    naive_split: bool = False
    reward: RewardKind = RewardKind.MEAN
    agent: AgentConfig = field(default_factory=AgentConfig)
    smoothing_window: int = 50
    local_max_tolerance: float = 0.01
    near_optimal_ratio: float = 0.98
    occupancy_window: int = 10_000
    occupancy_target: float = 0.90
    reseed_per_episode: bool = False
    session_threshold: Union[float, str] = AUTO
    session_max_rounds: int = 1000
    n_rb: int = 50
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if not isinstance(self.ordering, Ordering):
            self.ordering = Ordering.parse(self.ordering)
        self.reward = RewardKind(self.reward)
        if self.naive_split:
            self.region_sets = dict(NAIVE_REGION_SETS)
            self.k = NAIVE_K
        self.validate()

    def validate(self) -> None:
        if self.n_ues < MIN_POPULATION:
            raise ConfigError(f"n_ues must be >= {MIN_POPULATION}, got {self.n_ues}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.smoothing_window < 1:
            raise ConfigError(f"smoothing_window must be >= 1, got {self.smoothing_window}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if set(self.region_sets) != set(REGIONS):
            raise ConfigError("region_sets must name all three cell regions")
        if not 0.0 < self.near_optimal_ratio <= 1.0:
            raise ConfigError("near_optimal_ratio must be in (0, 1]")
        if self.session_max_rounds < 1:
            raise ConfigError("session_max_rounds must be >= 1")
        if isinstance(self.session_threshold, str) and self.session_threshold != AUTO:
            raise ConfigError(f"session_threshold must be a number or {AUTO!r}")

    def build_spaces(self) -> Dict[Region, RegionActionSpace]:
        return build_spaces(self.region_sets, self.k, self.ordering)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ordering"] = self.ordering.value
        data["reward"] = self.reward.value
        data["agent"] = self.agent.to_dict()
        data["region_sets"] = {r.value: list(s) for r, s in self.region_sets.items()}
        return data


def scalar_fields(cls) -> Dict[str, dataclasses.Field]:
    """Dataclass fields that map to a single command-line flag."""
    skip = {"region_sets", "agent"}
    return {f.name: f for f in dataclasses.fields(cls) if f.name not in skip}


def _coerce(name: str, value: Any, template: Any) -> Any:
    if value is None:
        return None
    if name in NUMBER_OR_AUTO:
        if isinstance(value, str) and value.strip().lower() == AUTO:
            return AUTO
        return float(value)
    if isinstance(template, bool):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if isinstance(template, int) and not isinstance(template, bool):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value


def _apply(target: Dict[str, Any], overrides: Dict[str, Any], templates: Dict[str, Any]) -> None:
    for key, value in overrides.items():
        if value is None:
            continue
        template = templates.get(key)
        try:
            target[key] = _coerce(key, value, template)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {key}: {value!r}") from e


def _parse_region_sets(raw: Dict[str, Any]) -> Dict[Region, Tuple[int, ...]]:
    try:
        return {Region.parse(name): tuple(int(i) for i in indices) for name, indices in raw.items()}
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad region_sets: {raw!r}") from e


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Load a JSON config file into a plain dict."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(config_path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def env_overrides() -> Dict[str, Any]:
    """``MCS_GAME_<FIELD>`` values from the environment (after loading .env)."""
    load_dotenv()
    overrides = {}
    for name in ENV_FIELDS:
        value = os.getenv(ENV_PREFIX + name.upper())
        if value:
            overrides[name] = value
    return overrides


def build_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    agent_overrides: Optional[Dict[str, Any]] = None,
    use_env: bool = True,
) -> RunConfig:
    """Layer defaults, file, environment and flag values into a RunConfig.

    Raises:
        ConfigError: Unreadable file, unknown region, or values that fail validation
    """
    run_defaults = {
        name: f.default if f.default is not dataclasses.MISSING else f.default_factory()
        for name, f in scalar_fields(RunConfig).items()
    }
    agent_defaults = asdict(AgentConfig())

    run_values: Dict[str, Any] = {}
    agent_values: Dict[str, Any] = {}
    region_sets = None

    if config_file is not None:
        data = read_config_file(config_file)
        agent_file = data.pop("agent", {}) or {}
        if "region_sets" in data:
            region_sets = _parse_region_sets(data.pop("region_sets"))
        unknown = set(data) - set(scalar_fields(RunConfig))
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        _apply(run_values, data, run_defaults)
        _apply(agent_values, agent_file, agent_defaults)

    if use_env:
        _apply(run_values, env_overrides(), run_defaults)
    _apply(run_values, overrides or {}, run_defaults)
    _apply(agent_values, agent_overrides or {}, agent_defaults)

    try:
        agent = AgentConfig(**{**agent_defaults, **agent_values})
        config = RunConfig(agent=agent, **run_values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e

    if region_sets is not None and not config.naive_split:
        config.region_sets = region_sets
        config.validate()
    logger.debug("Run config: %s", config.to_dict())
    return config
