"""Command-line entry point: ``mcs-game <subcommand> [flags]``.

Exit codes: 0 success, 1 verification or acceptance failure, 2 bad
configuration or I/O, 3 session ended without consensus.
"""

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from . import __version__
from .action_space import Region, RegionActionSpace
from .config import (
    AUTO,
    AUTO_THRESHOLD_RATIO,
    ENV_PREFIX,
    RunConfig,
    build_config,
    scalar_fields,
)
from .constructor_rl import (
    QTABLE_COLUMNS,
    TRACE_COLUMNS,
    AgentConfig,
    QAgent,
    make_agents,
    train,
)
from .errors import ConfigError, MalformedMessageError, TableLoadError
from .evaluator import Evaluator, simulate_population
from .mcs_table import load_table
from .oracle import RewardCurve, sweep_all
from .report import (
    NORMALIZED_COLUMNS,
    format_session_outcome,
    format_sweep_summary,
    format_training_summary,
    normalized_rewards,
    sweep_summary,
    training_summary,
)
from .session_protocol import (
    QLearningConstructor,
    ScoreMessage,
    SessionConfig,
    load_transcript,
    run_session,
    save_transcript,
    verify_transcript,
)
from .sir_model import SirDistribution
from .storage import ArtifactStore, read_csv_artifact


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NO_CONSENSUS = 3

DEFAULT_LOG_LEVEL = "WARNING"
TRANSCRIPT_FILE = "session_transcript.jsonl"

FLAG_ALIASES = {
    "session_threshold": ["--threshold"],
    "max_steps_per_episode": ["--steps"],
    "n_episodes": ["--episodes"],
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_field_flags(parser: argparse.ArgumentParser, cls, group_title: str) -> None:
    group = parser.add_argument_group(group_title)
    for name, f in scalar_fields(cls).items():
        flags = [_flag(name)] + FLAG_ALIASES.get(name, [])
        if f.type is bool or f.default is False:
            group.add_argument(*flags, dest=name, action="store_true", default=None)
        else:
            group.add_argument(*flags, dest=name, default=None, metavar=name.upper(),
                               help=f"override {name} (default: {_default_text(f)})")


def _default_text(f: dataclasses.Field) -> str:
    if f.default is not dataclasses.MISSING:
        return str(f.default.value if hasattr(f.default, "value") else f.default)
    return "computed"


def build_parser() -> argparse.ArgumentParser:
    logging_parent = argparse.ArgumentParser(add_help=False)
    logging_parent.add_argument("--log-level", default=None,
                                help=f"logging level (env {ENV_PREFIX}LOG_LEVEL, default {DEFAULT_LOG_LEVEL})")

    config_parent = argparse.ArgumentParser(add_help=False)
    config_parent.add_argument("--config", default=None, help="JSON config file")
    _add_field_flags(config_parent, RunConfig, "run")
    _add_field_flags(config_parent, AgentConfig, "agent")

    parser = argparse.ArgumentParser(
        prog="mcs-game",
        description="Constructor-evaluator game for cell-region MCS selection.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.add_parser("sample-sir", parents=[logging_parent, config_parent],
                          help="draw the UE SIR population and write it as CSV")
    subparsers.add_parser("sweep", parents=[logging_parent, config_parent],
                          help="score every combination of every region (oracle curves)")

    train_parser = subparsers.add_parser("train", parents=[logging_parent, config_parent],
                                         help="train the three region agents")
    train_parser.add_argument("--check", action="store_true",
                              help="exit 1 unless every region meets the near-optimal occupancy target")
    train_parser.add_argument("--qtable-dir", default=None,
                              help="where to write Q-table snapshots (default: output dir)")

    session_parser = subparsers.add_parser("session", parents=[logging_parent, config_parent],
                                           help="play a constructor-evaluator session")
    session_parser.add_argument("--qtable-dir", default=None,
                                help="load trained Q-tables from here instead of training first")

    verify_parser = subparsers.add_parser("verify-transcript", parents=[logging_parent],
                                          help="re-score every proposal of a recorded session")
    verify_parser.add_argument("transcript", help="path to a .jsonl transcript")
    return parser


def configure_logging(level: Optional[str]) -> None:
    load_dotenv()
    level = (level or os.getenv(ENV_PREFIX + "LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Turn parsed flags into a RunConfig (flags win over file and env)."""
    values = vars(args)
    run_overrides = {name: values.get(name) for name in scalar_fields(RunConfig)}
    agent_overrides = {name: values.get(name) for name in scalar_fields(AgentConfig)}
    return build_config(values.get("config"), run_overrides, agent_overrides)


def artifact_header(config: RunConfig, command: str) -> Dict[str, Any]:
    return {"command": command, "seed": config.seed, "config": config.to_dict()}


def build_evaluator(config: RunConfig) -> Evaluator:
    population = simulate_population(config.n_ues, config.seed)
    return Evaluator(population, load_table(config.mcs_table_path), config.reward)


def _combo_columns(k: int) -> List[str]:
    return [f"mcs_{chr(ord('a') + i)}" for i in range(k)]


def cmd_sample_sir(config: RunConfig, args: argparse.Namespace) -> int:
    """Write ``sir_samples.csv`` and print the empirical quartiles."""
    values = SirDistribution().sample_array(config.n_ues, config.seed)
    sir_db = 10.0 * np.log10(values)
    store = ArtifactStore(config.output_dir)
    path = store.write_csv(
        "sir_samples.csv",
        ["ue_index", "sir_linear", "sir_db"],
        ((i, float(v), float(d)) for i, (v, d) in enumerate(zip(values, sir_db))),
        artifact_header(config, "sample-sir"),
    )
    q25, q50, q75 = np.percentile(values, [25, 50, 75])
    print(f"Wrote {config.n_ues} SIR samples to {path}")
    print(f"Quartiles (linear): p25={q25:.5f} p50={q50:.5f} p75={q75:.5f}")
    return EXIT_OK


def _write_curves(
    store: ArtifactStore,
    config: RunConfig,
    curves: Dict[Region, RewardCurve],
    spaces: Dict[Region, RegionActionSpace],
    command: str,
) -> None:
    header = artifact_header(config, command)
    for region, curve in curves.items():
        space = spaces[region]
        tag = region.value.lower()
        store.write_csv(
            f"curve_{tag}.csv",
            ["region", "combo_index", "reward", "smoothed_reward"],
            ((region.value, i, float(curve.values[i]), float(curve.smoothed[i])) for i in range(curve.size)),
            header,
        )
        store.write_csv(
            f"combos_{tag}.csv",
            ["region", "combo_index"] + _combo_columns(space.k) + ["sum"],
            ([region.value, i, *combo.indices, combo.index_sum] for i, combo in enumerate(space.combos)),
            header,
        )
        store.write_csv(
            f"scores_{tag}.csv",
            ["region", "combo_index", "mss", "se_norm", "reward"],
            ((region.value, r.combo_index, r.mss, r.se_norm, r.reward) for r in curve.records),
            header,
        )


def cmd_sweep(config: RunConfig, args: argparse.Namespace) -> int:
    """Brute-force every region and write curves, combos and scores."""
    evaluator = build_evaluator(config)
    spaces = config.build_spaces()
    curves = sweep_all(evaluator, spaces, config.smoothing_window)

    store = ArtifactStore(config.output_dir)
    _write_curves(store, config, curves, spaces, "sweep")

    regions = {}
    for region, curve in curves.items():
        summary = sweep_summary(curve, spaces[region], config.local_max_tolerance)
        summary["oracle_peak_throughput_bps"] = [
            evaluator.table.peak_throughput(i, config.n_rb) for i in summary["oracle_combo"]
        ]
        regions[region.value] = summary
        print(format_sweep_summary(summary))
    store.write_summary("sweep_summary.json", {"config": config.to_dict(), "regions": regions})
    return EXIT_OK


def derived_seed(master_seed: int, episode: int) -> int:
    """Deterministic per-episode population seed."""
    return int(np.random.SeedSequence([master_seed, episode]).generate_state(1)[0])


def resolve_thresholds(
    setting: Any,
    curves: Dict[Region, RewardCurve],
) -> Dict[Region, float]:
    """A number applies to every region; ``auto`` is 0.95 x each raw oracle max."""
    if setting == AUTO:
        return {region: AUTO_THRESHOLD_RATIO * float(curve.values.max()) for region, curve in curves.items()}
    return {region: float(setting) for region in curves}


def prepare_agents(config: RunConfig, curves: Dict[Region, RewardCurve]) -> Dict[Region, QAgent]:
    agents = make_agents(config.agent, config.seed)
    if config.agent.terminal_reward_threshold == AUTO:
        thresholds = resolve_thresholds(AUTO, curves)
        for region, agent in agents.items():
            agent.config = dataclasses.replace(agent.config, terminal_reward_threshold=thresholds[region])
    return agents


def _reseed_factory(config: RunConfig, evaluator: Evaluator) -> Optional[Callable[[int], Evaluator]]:
    if not config.reseed_per_episode:
        return None
    return lambda episode: evaluator.reseeded(derived_seed(config.seed, episode))


def cmd_train(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the agents, write traces and Q-tables, compare against the oracle."""
    evaluator = build_evaluator(config)
    spaces = config.build_spaces()
    curves = sweep_all(evaluator, spaces, config.smoothing_window)
    agents = prepare_agents(config, curves)

    if config.reseed_per_episode:
        logger.warning("Episodes use reseeded populations; the oracle is still the master population (seed %d)",
                       config.seed)
    result = train(agents, evaluator, spaces, reseed=_reseed_factory(config, evaluator))

    store = ArtifactStore(config.output_dir)
    qtable_store = ArtifactStore(args.qtable_dir) if args.qtable_dir else store
    header = artifact_header(config, "train")
    regions = {}
    for region, agent in agents.items():
        tag = region.value.lower()
        trace = result.traces[region]
        store.write_csv(f"trace_{tag}.csv", TRACE_COLUMNS, (step.to_row() for step in trace), header)
        qtable_store.write_csv(f"qtable_{tag}.csv", QTABLE_COLUMNS, agent.q_table_rows(), header)
        curve = curves[region]
        normalized = normalized_rewards(curve, [step.combo_index for step in trace])
        store.write_csv(
            f"normalized_reward_{tag}.csv",
            NORMALIZED_COLUMNS,
            ((step.step, step.combo_index, float(curve.values[step.combo_index]), float(value))
             for step, value in zip(trace, normalized)),
            header,
        )

        summary = training_summary(
            curves[region], spaces[region], trace,
            occupancy_window=config.occupancy_window,
            ratio=config.near_optimal_ratio,
            occupancy_target=config.occupancy_target,
        )
        summary["max_abs_q"] = float(np.abs(agent.q).max())
        if config.reseed_per_episode:
            summary["oracle_reference"] = (
                f"master population (seed {config.seed}); episodes trained on reseeded populations"
            )
        regions[region.value] = summary
        print(format_training_summary(summary))

    store.write_summary("train_summary.json", {"config": config.to_dict(), "regions": regions})

    if args.check and not all(summary["passed"] for summary in regions.values()):
        failed = [name for name, summary in regions.items() if not summary["passed"]]
        print(f"❌ Near-optimal occupancy below {config.occupancy_target:.0%} for: {', '.join(failed)}")
        return EXIT_FAILED
    return EXIT_OK


def load_agents(config: RunConfig, qtable_dir: str) -> Dict[Region, QAgent]:
    """Agents restored from ``qtable_<region>.csv`` snapshots, exploring at their floor rates."""
    agents = make_agents(config.agent, config.seed)
    for region, agent in agents.items():
        _, rows = read_csv_artifact(Path(qtable_dir) / f"qtable_{region.value.lower()}.csv")
        agent.load_q_table_rows([(row["state_bin"], row["action"], row["q_value"]) for row in rows])
        agent.epsilon = agent.config.epsilon_min
        agent.alpha = agent.config.alpha_min
    return agents


def cmd_session(config: RunConfig, args: argparse.Namespace) -> int:
    """Play one session and write its replayable transcript."""
    evaluator = build_evaluator(config)
    spaces = config.build_spaces()
    curves = sweep_all(evaluator, spaces, config.smoothing_window)

    if args.qtable_dir:
        agents = load_agents(config, args.qtable_dir)
    else:
        agents = prepare_agents(config, curves)
        train(agents, evaluator, spaces, reseed=_reseed_factory(config, evaluator))

    thresholds = resolve_thresholds(config.session_threshold, curves)
    session_config = SessionConfig(
        thresholds=thresholds,
        max_rounds=config.session_max_rounds,
        seed=config.seed,
        n_ues=config.n_ues,
        mcs_table_path=config.mcs_table_path,
        reward=config.reward,
    )
    transcript = run_session(QLearningConstructor(agents, spaces), evaluator, session_config)
    path = save_transcript(transcript, Path(config.output_dir) / TRANSCRIPT_FILE)

    final_rewards: Dict[str, float] = {}
    for message in transcript.messages:
        if isinstance(message, ScoreMessage):
            final_rewards[message.region.value] = message.reward
    print(format_session_outcome(
        transcript.consensus, transcript.rounds, final_rewards,
        {region.value: value for region, value in thresholds.items()},
    ))
    print(f"Transcript: {path}")
    return EXIT_OK if transcript.consensus else EXIT_NO_CONSENSUS


def cmd_verify_transcript(args: argparse.Namespace) -> int:
    """Re-score a recorded transcript; exit 1 on any mismatch."""
    messages = load_transcript(args.transcript)
    try:
        result = verify_transcript(messages)
    except MalformedMessageError as e:
        print(f"❌ Transcript is malformed: {e}")
        return EXIT_FAILED

    if result.ok:
        print(f"✅ Verified {result.checked} scores")
        return EXIT_OK
    print(f"❌ {len(result.mismatches)} of {result.checked} scores do not reproduce")
    for mismatch in result.mismatches:
        print(f"  - {mismatch}")
    return EXIT_FAILED


COMMANDS = {
    "sample-sir": cmd_sample_sir,
    "sweep": cmd_sweep,
    "train": cmd_train,
    "session": cmd_session,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        if args.command == "verify-transcript":
            return cmd_verify_transcript(args)
        config = config_from_args(args)
        return COMMANDS[args.command](config, args)
    except MalformedMessageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except (ConfigError, TableLoadError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
