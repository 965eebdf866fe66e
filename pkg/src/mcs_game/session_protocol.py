"""Constructor <-> evaluator exchange: bit-exact proposals and a replayable transcript.

A session runs as:
    hello      session parameters (population seed, thresholds, round budget)
    challenge  evaluator -> constructor, the three percentile SIRs in dB
    proposal   constructor -> evaluator, 5 bits per MCS index, MSB first
    score      evaluator -> constructor, MSS / normalized SE / reward
    end        outcome and rounds used

Every message is one JSON object on one line, so a session can be carried
over any byte stream or replayed from a file.
"""

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Dict, Iterable, Iterator, List, Literal, Optional, Protocol, TextIO, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError, field_validator, model_validator

from .action_space import REGIONS, Action, McsCombination, Region, RegionActionSpace
from .constructor_rl import QAgent
from .errors import DomainError, MalformedMessageError
from .evaluator import Evaluator, RewardKind, ScoreRecord, simulate_population
from .mcs_table import MAX_MCS_INDEX, load_table


logger = logging.getLogger(__name__)


BITS_PER_MCS = 5


def encode_proposal(combo: McsCombination) -> str:
    """Concatenate the 5-bit binary form of each index, ascending, MSB first."""
    for index in combo:
        if not 0 <= index <= MAX_MCS_INDEX:
            raise MalformedMessageError(f"MCS index {index} does not fit the table")
    return "".join(format(index, f"0{BITS_PER_MCS}b") for index in combo)


def decode_proposal(bits: str) -> McsCombination:
    """Inverse of ``encode_proposal``.

    Raises:
        MalformedMessageError: Bad length or characters, a group above 28, or
                               groups not strictly ascending
    """
    if not bits or len(bits) % BITS_PER_MCS != 0:
        raise MalformedMessageError(f"proposal length {len(bits)} is not a positive multiple of 5")
    if set(bits) - {"0", "1"}:
        raise MalformedMessageError("proposal must contain only '0' and '1'")

    groups = [int(bits[i:i + BITS_PER_MCS], 2) for i in range(0, len(bits), BITS_PER_MCS)]
    for group in groups:
        if group > MAX_MCS_INDEX:
            raise MalformedMessageError(f"MCS group {group} exceeds {MAX_MCS_INDEX}")
    if any(b <= a for a, b in zip(groups, groups[1:])):
        raise MalformedMessageError(f"MCS groups must be strictly ascending, got {groups}")
    return McsCombination(tuple(groups))


class HelloMessage(BaseModel):
    type: Literal["hello"] = "hello"
    seed: int
    n_ues: int
    mcs_table_path: Optional[str] = None
    reward: RewardKind = RewardKind.MEAN
    thresholds: Dict[Region, float]
    max_rounds: int


class ChallengeMessage(BaseModel):
    type: Literal["challenge"] = "challenge"
    p25_db: float
    p50_db: float
    p75_db: float

    @model_validator(mode="after")
    def _ordered(self) -> "ChallengeMessage":
        if not self.p25_db < self.p50_db < self.p75_db:
            raise ValueError("percentiles must satisfy p25 < p50 < p75")
        return self


class ProposalMessage(BaseModel):
    type: Literal["proposal"] = "proposal"
    region: Region
    bits: str

    @field_validator("bits")
    @classmethod
    def _well_formed(cls, bits: str) -> str:
        decode_proposal(bits)
        return bits

    @property
    def combination(self) -> McsCombination:
        return decode_proposal(self.bits)


class ScoreMessage(BaseModel):
    type: Literal["score"] = "score"
    region: Region
    mss: float = Field(ge=0.0, le=1.0)
    se_norm: float = Field(ge=0.0, le=1.0)
    reward: float = Field(ge=0.0, le=1.0)

    @classmethod
    def from_record(cls, record: ScoreRecord) -> "ScoreMessage":
        return cls(region=record.region, mss=record.mss, se_norm=record.se_norm, reward=record.reward)


class EndMessage(BaseModel):
    type: Literal["end"] = "end"
    outcome: Literal["consensus", "no_consensus"]
    rounds: int


Message = Annotated[
    Union[HelloMessage, ChallengeMessage, ProposalMessage, ScoreMessage, EndMessage],
    Field(discriminator="type"),
]
_message_adapter: TypeAdapter = TypeAdapter(Message)


def encode_message(message: BaseModel) -> str:
    """One newline-terminated JSON record."""
    return message.model_dump_json() + "\n"


def decode_message(line: str) -> BaseModel:
    """Parse one record.

    Raises:
        MalformedMessageError: If the line is not a valid message
    """
    try:
        return _message_adapter.validate_json(line.strip())
    except (ValidationError, DomainError) as e:
        raise MalformedMessageError(f"bad message {line.strip()[:120]!r}: {e}") from e


def read_messages(stream: TextIO) -> Iterator[BaseModel]:
    """Decode every non-blank line of a text stream."""
    for line in stream:
        if line.strip():
            yield decode_message(line)


def write_messages(stream: TextIO, messages: Iterable[BaseModel]) -> None:
    for message in messages:
        stream.write(encode_message(message))


class Constructor(Protocol):
    """The proposing side of the game."""

    def propose(self, region: Region) -> McsCombination:
        ...

    def observe(self, region: Region, score: ScoreMessage) -> None:
        ...


class ScriptedConstructor:
    """Replays a fixed combination per region."""

    def __init__(self, proposals: Dict[Region, McsCombination]) -> None:
        self.proposals = dict(proposals)

    def propose(self, region: Region) -> McsCombination:
        return self.proposals[region]

    def observe(self, region: Region, score: ScoreMessage) -> None:
        pass


class QLearningConstructor:
    """Proposes by walking each region's action space with its Q-agent.

    The agents keep learning from every score they receive.
    """

    def __init__(self, agents: Dict[Region, QAgent], spaces: Dict[Region, RegionActionSpace]) -> None:
        self.agents = agents
        self.spaces = spaces
        self._state: Dict[Region, Optional[int]] = {region: None for region in agents}
        self._last_action: Dict[Region, Action] = {}

    def propose(self, region: Region) -> McsCombination:
        agent = self.agents[region]
        space = self.spaces[region]
        state = self._state[region]
        if state is None:
            # first proposal: where training left the agent, else a random start
            if agent.steps_taken:
                position = min(agent.current_combo, space.size - 1)
            else:
                position = int(agent.rng.integers(space.size))
            self._last_action.pop(region, None)
        else:
            action = agent.select_action(state)
            position = space.neighbor(agent.current_combo, action)
            self._last_action[region] = action
        agent.current_combo = position
        return space.combination_at(position)

    def observe(self, region: Region, score: ScoreMessage) -> None:
        agent = self.agents[region]
        next_state = agent.quantize(score.mss)
        previous = self._state[region]
        action = self._last_action.get(region)
        if previous is not None and action is not None:
            agent.update(previous, action, score.reward, next_state)
        self._state[region] = next_state


@dataclass
class SessionConfig:
    """Agreed parameters of one session."""
    thresholds: Dict[Region, float]
    max_rounds: int = 1000
    seed: int = 0
    n_ues: int = 10_000
    mcs_table_path: Optional[str] = None
    reward: RewardKind = RewardKind.MEAN

    def __post_init__(self) -> None:
        # the transcript must replay from any working directory
        if self.mcs_table_path is not None:
            self.mcs_table_path = str(Path(self.mcs_table_path).resolve())

    @classmethod
    def uniform(cls, threshold: float, **kwargs) -> "SessionConfig":
        return cls(thresholds={region: threshold for region in REGIONS}, **kwargs)


@dataclass
class SessionTranscript:
    messages: List[BaseModel] = field(default_factory=list)
    consensus: bool = False
    rounds: int = 0

    def proposals(self, region: Optional[Region] = None) -> List[ProposalMessage]:
        return [m for m in self.messages
                if isinstance(m, ProposalMessage) and (region is None or m.region is region)]

    def dumps(self) -> str:
        buffer = io.StringIO()
        write_messages(buffer, self.messages)
        return buffer.getvalue()


def _over_the_wire(message: BaseModel) -> BaseModel:
    # every message crosses a serialization boundary, like a real byte stream
    return decode_message(encode_message(message))


def run_session(
    constructor: Constructor,
    evaluator: Evaluator,
    config: SessionConfig,
) -> SessionTranscript:
    """Play the game until every region's reward meets its threshold.

    Each round, every region not yet satisfied gets one proposal and one
    score. The session stops on consensus or when ``max_rounds`` is spent.

    Raises:
        MalformedMessageError: If either side produces an invalid message
    """
    transcript = SessionTranscript()
    hello = HelloMessage(
        seed=config.seed,
        n_ues=config.n_ues,
        mcs_table_path=config.mcs_table_path,
        reward=config.reward,
        thresholds=config.thresholds,
        max_rounds=config.max_rounds,
    )
    transcript.messages.append(_over_the_wire(hello))

    p25, p50, p75 = evaluator.challenge()
    transcript.messages.append(_over_the_wire(ChallengeMessage(p25_db=p25, p50_db=p50, p75_db=p75)))

    pending = [region for region in REGIONS if region in config.thresholds]
    rounds = 0
    while pending and rounds < config.max_rounds:
        rounds += 1
        for region in list(pending):
            proposal = _over_the_wire(ProposalMessage(
                region=region, bits=encode_proposal(constructor.propose(region))))
            transcript.messages.append(proposal)

            record = evaluator.score_combination(region, proposal.combination)
            score = _over_the_wire(ScoreMessage.from_record(record))
            transcript.messages.append(score)
            constructor.observe(region, score)

            if score.reward >= config.thresholds[region]:
                pending.remove(region)
                logger.debug("%s reached %.4f >= %.4f in round %d",
                             region.value, score.reward, config.thresholds[region], rounds)

    transcript.consensus = not pending
    transcript.rounds = rounds
    transcript.messages.append(EndMessage(
        outcome="consensus" if transcript.consensus else "no_consensus", rounds=rounds))
    logger.info("Session ended after %d rounds: %s", rounds,
                "consensus" if transcript.consensus else f"no consensus for {[r.value for r in pending]}")
    return transcript


def save_transcript(transcript: SessionTranscript, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(transcript.dumps(), encoding="utf-8")
    return path


def load_transcript(path: Union[str, Path]) -> List[BaseModel]:
    with open(path, encoding="utf-8") as f:
        return list(read_messages(f))


@dataclass
class VerificationResult:
    checked: int = 0
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def evaluator_from_hello(hello: HelloMessage) -> Evaluator:
    """Rebuild the evaluator a transcript was recorded against."""
    population = simulate_population(hello.n_ues, hello.seed)
    return Evaluator(population, load_table(hello.mcs_table_path), hello.reward)


def verify_transcript(
    messages: List[BaseModel],
    evaluator: Optional[Evaluator] = None,
) -> VerificationResult:
    """Re-score every proposal and compare with the recorded score, exactly.

    Args:
        messages: Decoded transcript records
        evaluator: Defaults to one rebuilt from the transcript's hello record

    Raises:
        MalformedMessageError: If the transcript is structurally broken
    """
    if evaluator is None:
        hellos = [m for m in messages if isinstance(m, HelloMessage)]
        if not hellos:
            raise MalformedMessageError("transcript has no hello record")
        evaluator = evaluator_from_hello(hellos[0])

    result = VerificationResult()
    challenge_msgs = [m for m in messages if isinstance(m, ChallengeMessage)]
    if challenge_msgs:
        expected = evaluator.challenge()
        got = (challenge_msgs[0].p25_db, challenge_msgs[0].p50_db, challenge_msgs[0].p75_db)
        if tuple(expected) != got:
            result.mismatches.append(f"challenge: recorded {got}, recomputed {tuple(expected)}")

    pending: Optional[ProposalMessage] = None
    for message in messages:
        if isinstance(message, ProposalMessage):
            if pending is not None:
                raise MalformedMessageError("two proposals without a score in between")
            pending = message
        elif isinstance(message, ScoreMessage):
            if pending is None or pending.region is not message.region:
                raise MalformedMessageError("score without a matching proposal")
            record = evaluator.score_combination(pending.region, pending.combination)
            recorded = (message.mss, message.se_norm, message.reward)
            recomputed = (record.mss, record.se_norm, record.reward)
            result.checked += 1
            if recorded != recomputed:
                result.mismatches.append(
                    f"{message.region.value} {pending.bits}: recorded {recorded}, recomputed {recomputed}"
                )
            pending = None

    return result
