"""End-to-end tests of the command-line entry point at desk scale."""

import json
import tempfile
from importlib import resources
from pathlib import Path

import pytest

from mcs_game.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_NO_CONSENSUS, EXIT_OK, main
from mcs_game.mcs_table import BUNDLED_TABLE
from mcs_game.storage import read_csv_artifact


SMALL = ["--n-ues", "200", "--seed", "5"]


@pytest.fixture
def out_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def _run(*args, out):
    return main([*args, *SMALL, "--output-dir", str(out)])


def test_sample_sir_writes_csv(out_dir, capsys):
    """sample-sir writes one row per UE with a config header."""
    assert _run("sample-sir", out=out_dir) == EXIT_OK

    header, rows = read_csv_artifact(out_dir / "sir_samples.csv")
    assert len(rows) == 200
    assert set(rows[0]) == {"ue_index", "sir_linear", "sir_db"}
    assert header["seed"] == "5"
    assert json.loads(header["config"])["n_ues"] == 200
    assert "Quartiles" in capsys.readouterr().out


def test_sample_sir_is_byte_identical(out_dir):
    """Same seed, same file."""
    _run("sample-sir", out=out_dir)
    first = (out_dir / "sir_samples.csv").read_bytes()
    _run("sample-sir", out=out_dir)
    assert (out_dir / "sir_samples.csv").read_bytes() == first


def test_sweep_final_config(out_dir):
    """Default sweep: three regions of 495 positions plus combos and scores."""
    assert _run("sweep", out=out_dir) == EXIT_OK

    for tag in ("ce", "cm", "cc"):
        _, curve = read_csv_artifact(out_dir / f"curve_{tag}.csv")
        assert len(curve) == 495
        assert set(curve[0]) == {"region", "combo_index", "reward", "smoothed_reward"}

    _, combos = read_csv_artifact(out_dir / "combos_ce.csv")
    assert list(combos[0]) == ["region", "combo_index", "mcs_a", "mcs_b", "mcs_c", "mcs_d", "sum"]
    assert combos[0]["sum"] == "6"

    _, scores = read_csv_artifact(out_dir / "scores_cm.csv")
    assert set(scores[0]) == {"region", "combo_index", "mss", "se_norm", "reward"}

    summary = json.loads((out_dir / "sweep_summary.json").read_text())
    assert set(summary["regions"]) == {"CE", "CM", "CC"}
    assert len(summary["regions"]["CE"]["oracle_peak_throughput_bps"]) == 4


def test_sweep_naive_split(out_dir):
    """--naive-split with lexicographic ordering gives 165 / 84 / 165."""
    assert _run("sweep", "--naive-split", "--ordering", "lexicographic", out=out_dir) == EXIT_OK
    sizes = {tag: len(read_csv_artifact(out_dir / f"curve_{tag}.csv")[1]) for tag in ("ce", "cm", "cc")}
    assert sizes == {"ce": 165, "cm": 84, "cc": 165}


def test_train_zero_steps(out_dir):
    """--steps 0: empty traces and a summary; --check then fails."""
    assert _run("train", "--steps", "0", out=out_dir) == EXIT_OK
    _, trace = read_csv_artifact(out_dir / "trace_ce.csv")
    assert trace == []
    summary = json.loads((out_dir / "train_summary.json").read_text())
    assert summary["regions"]["CE"]["steps"] == 0

    assert _run("train", "--steps", "0", "--check", out=out_dir) == EXIT_FAILED


def test_train_writes_traces_and_qtables(out_dir):
    """A short run writes one trace row per step and a full Q-table."""
    assert _run("train", "--steps", "150", out=out_dir) == EXIT_OK
    _, trace = read_csv_artifact(out_dir / "trace_cc.csv")
    assert len(trace) == 150
    _, qtable = read_csv_artifact(out_dir / "qtable_cc.csv")
    assert len(qtable) == 60
    summary = json.loads((out_dir / "train_summary.json").read_text())
    assert summary["regions"]["CC"]["max_abs_q"] <= 10.0


def test_train_is_deterministic(out_dir):
    """A fixed seed reproduces the training summary."""
    _run("train", "--steps", "100", out=out_dir)
    first = json.loads((out_dir / "train_summary.json").read_text())
    _run("train", "--steps", "100", out=out_dir)
    second = json.loads((out_dir / "train_summary.json").read_text())
    first.pop("created_at")
    second.pop("created_at")
    assert first == second


def test_train_auto_terminal_threshold(out_dir):
    """'auto' resolves per region and ends the episode early."""
    assert _run("train", "--steps", "2000", "--terminal-reward-threshold", "auto", out=out_dir) == EXIT_OK
    _, trace = read_csv_artifact(out_dir / "trace_ce.csv")
    assert 0 < len(trace) <= 2000


def test_session_then_verify_then_tamper(out_dir, capsys):
    """A consensus session verifies; editing one score makes verification fail."""
    assert _run("session", "--steps", "100", "--threshold", "0", out=out_dir) == EXIT_OK
    transcript = out_dir / "session_transcript.jsonl"
    assert transcript.exists()
    assert "Consensus" in capsys.readouterr().out

    assert main(["verify-transcript", str(transcript)]) == EXIT_OK

    lines = transcript.read_text().splitlines()
    for i, line in enumerate(lines):
        record = json.loads(line)
        if record["type"] == "score":
            record["reward"] = 0.5 if record["reward"] != 0.5 else 0.25
            lines[i] = json.dumps(record)
            break
    transcript.write_text("\n".join(lines) + "\n")
    assert main(["verify-transcript", str(transcript)]) == EXIT_FAILED


def test_session_without_consensus(out_dir):
    """A threshold above any reward ends at the round budget with exit 3."""
    code = _run("session", "--steps", "50", "--threshold", "1.5", "--session-max-rounds", "5", out=out_dir)
    assert code == EXIT_NO_CONSENSUS


def test_session_from_saved_qtables(out_dir):
    """session --qtable-dir reuses snapshots written by train."""
    qtables = out_dir / "qtables"
    assert _run("train", "--steps", "100", "--qtable-dir", str(qtables), out=out_dir) == EXIT_OK
    assert (qtables / "qtable_ce.csv").exists()
    assert _run("session", "--qtable-dir", str(qtables), "--threshold", "0", out=out_dir) == EXIT_OK


def test_config_errors_exit_2(out_dir):
    """Invalid configuration and missing files map to exit code 2."""
    assert main(["sample-sir", "--n-ues", "10", "--output-dir", str(out_dir)]) == EXIT_CONFIG
    assert main(["sweep", "--n-ues", "200", "--mcs-table-path", "/nonexistent.csv",
                 "--output-dir", str(out_dir)]) == EXIT_CONFIG
    assert main(["verify-transcript", str(out_dir / "missing.jsonl")]) == EXIT_CONFIG


def test_malformed_transcript_exit_1(out_dir):
    """A transcript with a garbage line fails verification."""
    path = out_dir / "bad.jsonl"
    path.write_text('{"type": "nonsense"}\n')
    assert main(["verify-transcript", str(path)]) == EXIT_FAILED


def test_train_writes_normalized_rewards(out_dir):
    """Each visited raw reward is divided by the region's best raw reward."""
    assert _run("train", "--steps", "120", out=out_dir) == EXIT_OK
    _, rows = read_csv_artifact(out_dir / "normalized_reward_cm.csv")
    assert len(rows) == 120
    assert list(rows[0]) == ["step", "combo_index", "raw_reward", "normalized_reward"]
    assert all(0.0 <= float(row["normalized_reward"]) <= 1.0 for row in rows)

    summary = json.loads((out_dir / "train_summary.json").read_text())["regions"]["CM"]
    tail = [float(row["normalized_reward"]) for row in rows]
    assert summary["normalized_reward_mean"] == pytest.approx(sum(tail) / len(tail))
    assert "oracle_reference" not in summary


def test_train_reseeded_summary_names_oracle_population(out_dir, capsys):
    """With reseeded episodes the summary says the oracle is the master population."""
    assert _run("train", "--steps", "30", "--episodes", "2", "--reseed-per-episode", out=out_dir) == EXIT_OK
    summary = json.loads((out_dir / "train_summary.json").read_text())
    for region in ("CE", "CM", "CC"):
        assert summary["regions"][region]["oracle_reference"].startswith("master population (seed 5)")
    assert "Oracle reference: master population" in capsys.readouterr().out


def test_session_hello_stores_absolute_table_path(out_dir, monkeypatch):
    """A relative --mcs-table-path is written resolved and replays from elsewhere."""
    table_dir = out_dir / "tables"
    table_dir.mkdir()
    (table_dir / "lte.csv").write_text(
        (resources.files("mcs_game") / "data" / BUNDLED_TABLE).read_text(encoding="utf-8"), encoding="utf-8")
    monkeypatch.chdir(table_dir)
    assert _run("session", "--steps", "50", "--threshold", "0", "--mcs-table-path", "lte.csv",
                out=out_dir) == EXIT_OK

    transcript = out_dir / "session_transcript.jsonl"
    hello = json.loads(transcript.read_text().splitlines()[0])
    assert hello["mcs_table_path"] == str((table_dir / "lte.csv").resolve())

    monkeypatch.chdir(out_dir)
    assert main(["verify-transcript", str(transcript)]) == EXIT_OK
