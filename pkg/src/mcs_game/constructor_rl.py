"""Constructor side: one tabular Q-learning agent per cell region.

The state is the quantized MSS of the most recent proposal. The action moves
one position back, stays, or moves one position forward through the region's
sum-sorted combination list. By default the agent learns from the evaluator's
scores averaged over the oracle's smoothing window around the proposal, and
starts with every Q value at 10, the largest discounted return a reward in
[0, 1] can add up to, so actions stay attractive until they are tried.
Set ``reward_signal="raw"`` to learn from the raw R of the proposal alone.

Exploration schedule: the printed constants read "eps_min = 1.0, eps_init =
0.01", which with eps <- max(eps_min, eps * decay) would pin eps at 1.0
forever. The two values are swapped here: eps starts at 1.0 and decays by
0.995 per step down to 0.01.
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .action_space import REGIONS, Action, Region, RegionActionSpace
from .errors import ConfigError, DomainError
from .evaluator import ScoringBackend
from .oracle import DEFAULT_WINDOW, WindowedScores


logger = logging.getLogger(__name__)


N_ACTIONS = len(Action)


class RewardSignal(str, Enum):
    """What the agent is rewarded with after each move."""
    RAW = "raw"
    SMOOTHED = "smoothed"


@dataclass
class AgentConfig:
    """Q-learning hyper-parameters shared by the three agents."""
    discount: float = 0.90
    alpha_init: float = 0.7
    alpha_min: float = 0.5
    alpha_decay: float = 0.995
    epsilon_init: float = 1.0
    epsilon_min: float = 0.01
    epsilon_decay: float = 0.995
    n_state_bins: int = 20
    max_steps_per_episode: int = 50_000
    n_episodes: int = 1
    # None: episodes only end at max_steps_per_episode. "auto" must be
    # resolved to a number per region before training.
    terminal_reward_threshold: Optional[Union[float, str]] = None
    reward_signal: RewardSignal = RewardSignal.SMOOTHED
    signal_window: int = DEFAULT_WINDOW
    q_init: float = 10.0

    def __post_init__(self) -> None:
        try:
            self.reward_signal = RewardSignal(self.reward_signal)
        except ValueError as e:
            raise ConfigError(f"reward_signal must be raw or smoothed, got {self.reward_signal!r}") from e
        if not 0.0 < self.discount < 1.0:
            raise ConfigError(f"discount must be in (0, 1), got {self.discount}")
        if not 0.0 <= self.epsilon_min <= self.epsilon_init <= 1.0:
            raise ConfigError("need 0 <= epsilon_min <= epsilon_init <= 1")
        if not 0.0 < self.alpha_min <= self.alpha_init <= 1.0:
            raise ConfigError("need 0 < alpha_min <= alpha_init <= 1")
        if not (0.0 < self.alpha_decay <= 1.0 and 0.0 < self.epsilon_decay <= 1.0):
            raise ConfigError("decay factors must be in (0, 1]")
        if self.n_state_bins < 1:
            raise ConfigError(f"n_state_bins must be >= 1, got {self.n_state_bins}")
        if self.max_steps_per_episode < 0 or self.n_episodes < 0:
            raise ConfigError("step and episode counts must be >= 0")
        if isinstance(self.terminal_reward_threshold, str) and self.terminal_reward_threshold != "auto":
            raise ConfigError("terminal_reward_threshold must be a number, 'auto' or None")
        if self.signal_window < 1:
            raise ConfigError(f"signal_window must be >= 1, got {self.signal_window}")
        if self.q_init < 0.0:
            raise ConfigError(f"q_init must be >= 0, got {self.q_init}")

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["reward_signal"] = self.reward_signal.value
        return data


def quantize_state(mss: float, n_bins: int = 20) -> int:
    """Bin an MSS in [0, 1] into 0..n_bins-1 (1.0 lands in the top bin).

    Raises:
        DomainError: If mss is outside [0, 1]
    """
    if not 0.0 <= mss <= 1.0:
        raise DomainError(f"MSS must be in [0, 1], got {mss}")
    return min(int(mss * n_bins), n_bins - 1)


@dataclass(frozen=True)
class TraceStep:
    """One training step as written to the trace CSV."""
    step: int
    episode: int
    combo_index: int
    action: Action
    mss: float
    se_norm: float
    reward: float
    state_bin: int
    alpha: float
    epsilon: float

    def to_row(self) -> List[object]:
        return [self.step, self.episode, self.combo_index, self.action.name,
                self.mss, self.se_norm, self.reward, self.state_bin, self.alpha, self.epsilon]


TRACE_COLUMNS = ["step", "episode", "combo_index", "action", "mss", "se_norm",
                 "reward", "state_bin", "alpha", "epsilon"]
QTABLE_COLUMNS = ["state_bin", "action", "q_value"]


class QAgent:
    """Tabular Q-learning for one cell region."""

    def __init__(
        self,
        region: Region,
        config: AgentConfig,
        rng: np.random.Generator,
    ) -> None:
        self.region = region
        self.config = config
        self.rng = rng
        self.q = np.full((config.n_state_bins, N_ACTIONS), config.q_init, dtype=float)
        self.alpha = config.alpha_init
        self.epsilon = config.epsilon_init
        self.current_combo = 0
        self.steps_taken = 0

    def quantize(self, mss: float) -> int:
        return quantize_state(mss, self.config.n_state_bins)

    def greedy_action(self, state: int) -> Action:
        # argmax returns the first maximum: PREV < STAY < NEXT on ties
        return Action(int(np.argmax(self.q[state])))

    def select_action(self, state: int, uniform_draw: Optional[float] = None) -> Action:
        """Epsilon-greedy choice.

        Args:
            state: Current state bin
            uniform_draw: Variate on [0, 1) deciding explore vs exploit; drawn
                          from the agent's generator when omitted

        Returns:
            Chosen action
        """
        if not 0 <= state < self.config.n_state_bins:
            raise DomainError(f"state bin {state} outside 0..{self.config.n_state_bins - 1}")
        if uniform_draw is None:
            uniform_draw = float(self.rng.random())
        if uniform_draw < self.epsilon:
            return Action(int(self.rng.integers(N_ACTIONS)))
        return self.greedy_action(state)

    def update(self, s: int, a: Action, r: float, s_next: int) -> float:
        """Apply one Q-learning update, then decay alpha and epsilon.

        Returns:
            The new Q(s, a)
        """
        target = r + self.config.discount * float(np.max(self.q[s_next]))
        self.q[s, a] += self.alpha * (target - self.q[s, a])

        self.alpha = max(self.config.alpha_min, self.alpha * self.config.alpha_decay)
        self.epsilon = max(self.config.epsilon_min, self.epsilon * self.config.epsilon_decay)
        self.steps_taken += 1
        return float(self.q[s, a])

    def greedy_policy(self) -> List[Action]:
        """Greedy action for every state bin."""
        return [self.greedy_action(s) for s in range(self.config.n_state_bins)]

    def q_table_rows(self) -> List[Tuple[int, str, float]]:
        """Snapshot as (state_bin, action, q_value) rows."""
        return [(s, a.name, float(self.q[s, a]))
                for s in range(self.config.n_state_bins) for a in Action]

    def load_q_table_rows(self, rows: List[Tuple[int, str, float]]) -> None:
        """Restore a snapshot written by ``q_table_rows``."""
        for state_bin, action_name, q_value in rows:
            self.q[int(state_bin), Action[action_name]] = float(q_value)


def run_episode(
    agent: QAgent,
    evaluator: ScoringBackend,
    space: RegionActionSpace,
    episode: int = 0,
    step_offset: int = 0,
    max_steps: Optional[int] = None,
) -> List[TraceStep]:
    """Run one episode from a uniformly random starting combination.

    The episode stops after ``max_steps`` steps or, when the agent config has
    a terminal threshold, as soon as the raw reward reaches it.

    Returns:
        Per-step trace (never longer than max_steps)
    """
    max_steps = agent.config.max_steps_per_episode if max_steps is None else max_steps
    threshold = agent.config.terminal_reward_threshold
    if isinstance(threshold, str):
        raise ConfigError(f"terminal reward threshold {threshold!r} was never resolved")
    trace: List[TraceStep] = []
    if max_steps <= 0:
        return trace

    position = int(agent.rng.integers(space.size))
    agent.current_combo = position
    record = evaluator.score(agent.region, position, space)
    state = agent.quantize(record.mss)

    for step in range(max_steps):
        action = agent.select_action(state)
        position = space.neighbor(position, action)
        record = evaluator.score(agent.region, position, space)
        next_state = agent.quantize(record.mss)
        agent.update(state, action, record.reward, next_state)
        agent.current_combo = position

        trace.append(TraceStep(
            step=step_offset + step,
            episode=episode,
            combo_index=position,
            action=action,
            mss=record.mss,
            se_norm=record.se_norm,
            reward=record.reward,
            state_bin=next_state,
            alpha=agent.alpha,
            epsilon=agent.epsilon,
        ))
        state = next_state

        if threshold is not None and record.reward >= threshold:
            logger.debug("%s episode %d hit terminal reward %.4f at step %d",
                         agent.region.value, episode, record.reward, step)
            break

    return trace


def make_agents(
    config: AgentConfig,
    seed: int,
    regions: Tuple[Region, ...] = REGIONS,
) -> Dict[Region, QAgent]:
    """One agent per region, each on its own generator spawned from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(len(regions))
    return {
        region: QAgent(region, config, np.random.Generator(np.random.Philox(child)))
        for region, child in zip(regions, children)
    }


@dataclass
class TrainingResult:
    agents: Dict[Region, QAgent]
    traces: Dict[Region, List[TraceStep]] = field(default_factory=dict)


def train_agent(
    agent: QAgent,
    evaluator: ScoringBackend,
    space: RegionActionSpace,
    n_episodes: Optional[int] = None,
    reseed: Optional[Callable[[int], "ScoringBackend"]] = None,
) -> List[TraceStep]:
    """Train one agent for ``n_episodes`` episodes.

    Args:
        agent: Agent to train (mutated in place)
        evaluator: Scoring backend
        space: The agent's action space
        n_episodes: Defaults to the agent config
        reseed: Optional ``episode -> evaluator`` factory that swaps in a new
                population per episode

    With the smoothed reward signal each episode's backend is wrapped in a
    ``WindowedScores`` once, so its window averages are shared across steps.

    Returns:
        Concatenated trace of all episodes
    """
    n_episodes = agent.config.n_episodes if n_episodes is None else n_episodes
    trace: List[TraceStep] = []
    for episode in range(n_episodes):
        if episode == 0 or reseed is not None:
            backend = reseed(episode) if reseed is not None else evaluator
            if agent.config.reward_signal is RewardSignal.SMOOTHED:
                backend = WindowedScores(backend, agent.config.signal_window)
        trace.extend(run_episode(agent, backend, space, episode=episode, step_offset=len(trace)))
    logger.info("Trained %s agent: %d steps over %d episodes (alpha=%.3f, epsilon=%.3f)",
                agent.region.value, len(trace), n_episodes, agent.alpha, agent.epsilon)
    return trace


def train(
    agents: Dict[Region, QAgent],
    evaluator: ScoringBackend,
    spaces: Dict[Region, RegionActionSpace],
    n_episodes: Optional[int] = None,
    reseed: Optional[Callable[[int], "ScoringBackend"]] = None,
) -> TrainingResult:
    """Train every agent independently on the shared evaluator.

    Agents only share the (immutable) population and table; each one reads
    and writes its own Q-table and generator.
    """
    result = TrainingResult(agents=agents)
    for region, agent in agents.items():
        result.traces[region] = train_agent(agent, evaluator, spaces[region], n_episodes, reseed)
    return result
