"""Artifact storage: CSV files with self-describing headers and JSON summaries."""

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

UTC = timezone.utc  # datetime.UTC alias (Python 3.11+)


HEADER_PREFIX = "# "


class ArtifactStore:
    """Writes run artifacts under one output directory.

    Every CSV starts with ``# key=value`` comment lines holding the run
    configuration and seed, so each file says how to reproduce itself.
    """

    def __init__(self, output_dir: str = "results") -> None:
        """Initialize the store.

        Args:
            output_dir: Directory for all artifacts (created if missing)
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def write_csv(
        self,
        name: str,
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
        header: Optional[Dict[str, Any]] = None,
    ) -> Path:
        """Write a CSV artifact.

        Args:
            name: File name inside the output directory
            columns: Column names
            rows: Data rows
            header: Key/value pairs written as comment lines first

        Returns:
            Path of the written file
        """
        filepath = self.path(name)
        with open(filepath, "w", newline="") as f:
            for key, value in (header or {}).items():
                f.write(f"{HEADER_PREFIX}{key}={_header_value(value)}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
        return filepath

    def read_csv(self, name: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
        """Read a CSV artifact back.

        Returns:
            (comment header as a dict, data rows as dicts)
        """
        return read_csv_artifact(self.path(name))

    def write_summary(self, name: str, summary: Dict[str, Any]) -> Path:
        """Save a JSON summary, stamping ``created_at`` if absent."""
        summary = dict(summary)
        if "created_at" not in summary:
            summary["created_at"] = datetime.now(UTC).isoformat().replace("+00:00", "Z")
        filepath = self.path(name)
        with open(filepath, "w") as f:
            json.dump(summary, f, indent=2, sort_keys=False, default=str)
        return filepath

    def load_summary(self, name: str) -> Optional[Dict[str, Any]]:
        filepath = self.path(name)
        if not filepath.exists():
            return None
        with open(filepath, "r") as f:
            return json.load(f)


def _header_value(value: Any) -> str:
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, default=str, sort_keys=True)
    return str(value)


def read_csv_artifact(path: Path) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Split a CSV artifact into its comment header and its rows."""
    header: Dict[str, str] = {}
    body: List[str] = []
    with open(path, "r", newline="") as f:
        for line in f:
            if line.startswith(HEADER_PREFIX.strip()):
                key, _, value = line[len(HEADER_PREFIX):].rstrip("\n").partition("=")
                header[key] = value
            else:
                body.append(line)
    rows = list(csv.DictReader(io.StringIO("".join(body))))
    return header, rows
