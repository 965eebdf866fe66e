"""MCS lookup table: modulation, spectral efficiency and minimum viable SINR.

The table is data, not code. A versioned CSV ships with the package and any
other file with the same columns can replace it; every number downstream is
relative to whichever table was loaded.
"""

import csv
import io
import logging
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, TableLoadError
from .sir_model import Sir


logger = logging.getLogger(__name__)


N_MCS = 29
MAX_MCS_INDEX = N_MCS - 1
TABLE_COLUMNS = ("mcs_index", "modulation", "se_bits_per_re", "min_sinr_db")
BUNDLED_TABLE = "lte_mcs_table.csv"

# Normal cyclic prefix: 12 subcarriers x 14 OFDM symbols per RB per 1 ms subframe
RES_PER_RB_PER_SUBFRAME = 12 * 14
SUBFRAMES_PER_SECOND = 1000


class Modulation(str, Enum):
    QPSK = "QPSK"
    QAM16 = "16QAM"
    QAM64 = "64QAM"

    @classmethod
    def parse(cls, text: str) -> "Modulation":
        normalized = text.strip().upper().replace("-", "")
        aliases = {"QPSK": cls.QPSK, "16QAM": cls.QAM16, "QAM16": cls.QAM16,
                   "64QAM": cls.QAM64, "QAM64": cls.QAM64}
        if normalized not in aliases:
            raise ValueError(f"unknown modulation {text!r}")
        return aliases[normalized]


@dataclass(frozen=True)
class McsEntry:
    """One MCS row."""
    index: int
    modulation: Modulation
    se: float
    min_sinr_db: float


@dataclass(frozen=True)
class McsTable:
    """The 29 MCS entries, sorted by index."""
    entries: Tuple[McsEntry, ...]
    source: str

    def __post_init__(self) -> None:
        _validate_entries(self.entries)

    @property
    def max_se(self) -> float:
        """SE of MCS 28, the normalization constant for average SE."""
        return self.entries[-1].se

    @property
    def se_values(self) -> np.ndarray:
        return np.array([e.se for e in self.entries], dtype=float)

    @property
    def thresholds_db(self) -> np.ndarray:
        return np.array([e.min_sinr_db for e in self.entries], dtype=float)

    def entry(self, index: int) -> McsEntry:
        _check_index(index)
        return self.entries[index]

    def se(self, index: int) -> float:
        return self.entry(index).se

    def min_sinr(self, index: int) -> float:
        """Minimum SINR (dB) for viable use of MCS ``index``."""
        return self.entry(index).min_sinr_db

    def interpolate_min_sinr(self, se: float) -> float:
        """Minimum SINR (dB) for an arbitrary spectral efficiency.

        Piecewise-linear between the 29 (se, min_sinr_db) anchors, exact at
        the anchors.

        Raises:
            DomainError: If se lies outside [se(0), se(28)]
        """
        low, high = self.entries[0].se, self.entries[-1].se
        if not (low <= se <= high):
            raise DomainError(f"SE {se} outside table range [{low}, {high}]")
        return float(np.interp(se, self.se_values, self.thresholds_db))

    # An MCS outside the 29-entry set is described by its SE alone
    min_sinr_for_se = interpolate_min_sinr

    def peak_throughput(self, index: int, n_rb: int) -> float:
        """Peak throughput in bit/s of MCS ``index`` over ``n_rb`` resource blocks.

        No control-channel overhead is deducted.
        """
        return self.peak_throughput_for_se(self.se(index), n_rb)

    def peak_throughput_for_se(self, se: float, n_rb: int) -> float:
        """Peak throughput in bit/s for any spectral efficiency."""
        if n_rb <= 0:
            raise DomainError(f"resource-block count must be positive, got {n_rb}")
        if se <= 0:
            raise DomainError(f"spectral efficiency must be positive, got {se}")
        return se * RES_PER_RB_PER_SUBFRAME * n_rb * SUBFRAMES_PER_SECOND

    def viable(self, index: int, sir: Sir) -> bool:
        """True when the UE's SIR meets the MCS threshold (ties count as viable)."""
        return sir.db >= self.min_sinr(index)

    def viable_for_se(self, se: float, sir: Sir) -> bool:
        """Viability of a hypothetical MCS given only its spectral efficiency."""
        return sir.db >= self.interpolate_min_sinr(se)

    def __len__(self) -> int:
        return len(self.entries)


def _check_index(index: int) -> None:
    if not 0 <= index <= MAX_MCS_INDEX:
        raise DomainError(f"MCS index must be in 0..{MAX_MCS_INDEX}, got {index}")


def _validate_entries(entries: Sequence[McsEntry]) -> None:
    if len(entries) != N_MCS:
        raise TableLoadError(f"expected {N_MCS} rows, got {len(entries)}")

    for row, (entry, expected) in enumerate(zip(entries, range(N_MCS)), start=1):
        if entry.index != expected:
            raise TableLoadError(f"expected mcs_index {expected}, got {entry.index}", row=row)
        if entry.se <= 0:
            raise TableLoadError(f"spectral efficiency must be positive, got {entry.se}", row=row)

    for row in range(2, N_MCS + 1):
        prev, cur = entries[row - 2], entries[row - 1]
        if cur.se <= prev.se:
            raise TableLoadError(
                f"spectral efficiency not strictly increasing ({prev.se} -> {cur.se})", row=row
            )
        if cur.min_sinr_db <= prev.min_sinr_db:
            raise TableLoadError(
                f"min_sinr_db not strictly increasing ({prev.min_sinr_db} -> {cur.min_sinr_db})",
                row=row,
            )


def _parse_rows(text: str, source: str) -> List[McsEntry]:
    lines = [line for line in text.splitlines()
             if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(lines)))

    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != TABLE_COLUMNS:
        raise TableLoadError(
            f"{source}: header must be {','.join(TABLE_COLUMNS)}, got {reader.fieldnames}"
        )

    entries: List[McsEntry] = []
    seen = set()
    for row_number, row in enumerate(reader, start=1):
        try:
            index = int(row["mcs_index"])
            entry = McsEntry(
                index=index,
                modulation=Modulation.parse(row["modulation"]),
                se=float(row["se_bits_per_re"]),
                min_sinr_db=float(row["min_sinr_db"]),
            )
        except (TypeError, ValueError) as e:
            raise TableLoadError(f"cannot parse {dict(row)}: {e}", row=row_number) from e

        if index in seen:
            raise TableLoadError(f"duplicate mcs_index {index}", row=row_number)
        seen.add(index)
        entries.append(entry)

    if len(entries) != N_MCS:
        raise TableLoadError(f"expected {N_MCS} rows, got {len(entries)}")

    entries.sort(key=lambda e: e.index)
    return entries


def load_table(path: Optional[Union[str, Path]] = None) -> McsTable:
    """Load and validate an MCS table.

    Args:
        path: CSV file with header ``mcs_index,modulation,se_bits_per_re,min_sinr_db``.
              None loads the bundled default.

    Returns:
        Validated McsTable

    Raises:
        TableLoadError: Wrong row count, duplicate index, non-monotone SE/SINR
        FileNotFoundError: If ``path`` does not exist
    """
    if path is None:
        text = (resources.files("mcs_game") / "data" / BUNDLED_TABLE).read_text(encoding="utf-8")
        source = f"bundled:{BUNDLED_TABLE}"
    else:
        table_path = Path(path)
        if not table_path.exists():
            raise FileNotFoundError(f"MCS table not found: {path}")
        text = table_path.read_text(encoding="utf-8")
        source = str(table_path)

    entries = _parse_rows(text, source)
    table = McsTable(entries=tuple(entries), source=source)
    logger.debug("Loaded MCS table from %s (max SE %.4f)", source, table.max_se)
    return table
