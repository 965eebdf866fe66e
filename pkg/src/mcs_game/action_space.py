"""Per-region action spaces: ordered k-of-M MCS combinations.

Each cell region gets its own list of candidate MCS sets. The RL agents do
not pick from the list directly; they move one position back, stay, or move
one position forward, so the ordering of the list decides how smooth the
reward looks to them.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, Iterable, Iterator, List, Tuple

from .errors import DomainError
from .mcs_table import MAX_MCS_INDEX


logger = logging.getLogger(__name__)


class Region(str, Enum):
    CELL_CENTER = "CC"
    CELL_MEDIAN = "CM"
    CELL_EDGE = "CE"

    @classmethod
    def parse(cls, text: str) -> "Region":
        key = text.strip().upper()
        for region in cls:
            if key in (region.value, region.name, region.name.replace("_", "")):
                return region
        raise DomainError(f"unknown cell region {text!r}")


# Edge first: the order regions are listed in reports and seeded in training
REGIONS: Tuple[Region, ...] = (Region.CELL_EDGE, Region.CELL_MEDIAN, Region.CELL_CENTER)


class Ordering(str, Enum):
    LEXICOGRAPHIC = "lexicographic"
    SUM_SORTED = "sum_sorted"

    @classmethod
    def parse(cls, text: str) -> "Ordering":
        key = text.strip().lower().replace("-", "_")
        aliases = {"lexicographic": cls.LEXICOGRAPHIC, "lex": cls.LEXICOGRAPHIC,
                   "sum_sorted": cls.SUM_SORTED, "sumsorted": cls.SUM_SORTED, "sum": cls.SUM_SORTED}
        if key not in aliases:
            raise DomainError(f"unknown ordering {text!r}")
        return aliases[key]


class Action(IntEnum):
    """Moves through the ordered list. Integer order doubles as greedy tie-break."""
    PREV = 0
    STAY = 1
    NEXT = 2


FINAL_K = 4
FINAL_REGION_SETS: Dict[Region, Tuple[int, ...]] = {
    Region.CELL_EDGE: tuple(range(0, 12)),
    Region.CELL_MEDIAN: tuple(range(6, 18)),
    Region.CELL_CENTER: tuple(range(17, 29)),
}

# First attempt: 29 MCSs split 11/9/11 with one shared MCS between neighbours
NAIVE_K = 3
NAIVE_REGION_SETS: Dict[Region, Tuple[int, ...]] = {
    Region.CELL_EDGE: tuple(range(0, 11)),
    Region.CELL_MEDIAN: tuple(range(10, 19)),
    Region.CELL_CENTER: tuple(range(18, 29)),
}


@dataclass(frozen=True, order=True)
class McsCombination:
    """A proposal of k distinct MCS indices, kept in ascending order."""
    indices: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.indices:
            raise DomainError("an MCS combination needs at least one index")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise DomainError(f"MCS indices must be strictly increasing, got {self.indices}")
        if self.indices[0] < 0 or self.indices[-1] > MAX_MCS_INDEX:
            raise DomainError(f"MCS indices must be in 0..{MAX_MCS_INDEX}, got {self.indices}")

    @classmethod
    def of(cls, indices: Iterable[int]) -> "McsCombination":
        return cls(tuple(sorted(int(i) for i in indices)))

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def index_sum(self) -> int:
        return sum(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class RegionActionSpace:
    """All k-subsets of a region's allowed MCSs in a fixed order."""
    region: Region
    allowed: Tuple[int, ...]
    k: int
    ordering: Ordering
    combos: Tuple[McsCombination, ...]
    _positions: Dict[Tuple[int, ...], int] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def build(
        cls,
        region: Region,
        allowed: Iterable[int],
        k: int,
        ordering: Ordering = Ordering.SUM_SORTED,
    ) -> "RegionActionSpace":
        """Enumerate every k-subset of ``allowed`` in the requested order.

        Sum-sorted ties are broken lexicographically on the index tuple.

        Raises:
            DomainError: If k is not in 1..|allowed| or an index is outside 0..28
        """
        allowed_sorted = tuple(sorted(set(int(i) for i in allowed)))
        if not allowed_sorted:
            raise DomainError("allowed MCS set is empty")
        if allowed_sorted[0] < 0 or allowed_sorted[-1] > MAX_MCS_INDEX:
            raise DomainError(f"allowed MCS indices must lie in 0..{MAX_MCS_INDEX}")
        if not 1 <= k <= len(allowed_sorted):
            raise DomainError(f"k={k} must be between 1 and |allowed|={len(allowed_sorted)}")

        # combinations() of a sorted input already yields lexicographic order
        tuples: List[Tuple[int, ...]] = list(itertools.combinations(allowed_sorted, k))
        if ordering is Ordering.SUM_SORTED:
            tuples.sort(key=lambda c: (sum(c), c))

        positions = {c: i for i, c in enumerate(tuples)}
        space = cls(
            region=region,
            allowed=allowed_sorted,
            k=k,
            ordering=ordering,
            combos=tuple(McsCombination(c) for c in tuples),
            _positions=positions,
        )
        logger.debug("Built %s space for %s: %d combos (k=%d)",
                     ordering.value, region.value, space.size, k)
        return space

    @property
    def size(self) -> int:
        return len(self.combos)

    def combination_at(self, idx: int) -> McsCombination:
        if not 0 <= idx < self.size:
            raise DomainError(f"position {idx} outside 0..{self.size - 1}")
        return self.combos[idx]

    def position_of(self, combo: McsCombination) -> int:
        """Position of ``combo`` in this space.

        Raises:
            DomainError: If the combination is not a member
        """
        try:
            return self._positions[combo.indices]
        except KeyError:
            raise DomainError(f"{combo.indices} is not in the {self.region.value} space") from None

    def __contains__(self, combo: McsCombination) -> bool:
        return combo.indices in self._positions

    def neighbor(self, idx: int, action: Action) -> int:
        """Position reached from ``idx`` by ``action``, saturating at both ends."""
        if action is Action.PREV:
            return max(idx - 1, 0)
        if action is Action.NEXT:
            return min(idx + 1, self.size - 1)
        return idx


def build_spaces(
    region_sets: Dict[Region, Iterable[int]],
    k: int,
    ordering: Ordering,
) -> Dict[Region, RegionActionSpace]:
    """Build one action space per region."""
    return {
        region: RegionActionSpace.build(region, region_sets[region], k, ordering)
        for region in REGIONS
    }


def build_final_spaces(ordering: Ordering = Ordering.SUM_SORTED) -> Dict[Region, RegionActionSpace]:
    """The 12-MCS, k=4 regions the game settles on (495 combos each)."""
    return build_spaces(FINAL_REGION_SETS, FINAL_K, ordering)


def build_naive_spaces(ordering: Ordering = Ordering.LEXICOGRAPHIC) -> Dict[Region, RegionActionSpace]:
    """The 11/9/11 split with k=3 (165/84/165 combos)."""
    return build_spaces(NAIVE_REGION_SETS, NAIVE_K, ordering)
