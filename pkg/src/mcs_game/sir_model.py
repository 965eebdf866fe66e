"""SIR law of a UE served by the strongest base station of a planar PPP.

With path-loss exponent 4 the CCDF of the SIR at an arbitrary UE is

    P(SIR > g) = (2/pi)/sqrt(g) - (1/pi)(1/sqrt(g) - 1)^2 * 1{0 < g < 1}

which is exact for g >= 1/2 and quadratic in 1/sqrt(g), so it inverts in
closed form. It does not depend on base-station density or transmit power.

Below g = 1/4 the approximation turns back down (its maximum is 3/pi at
g = 1/4). Sampling treats the leftover mass 1 - 3/pi as an atom at
``clamp_floor``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError


logger = logging.getLogger(__name__)


CCDF_AT_ONE = 2.0 / math.pi
CCDF_MAX = 3.0 / math.pi
DEFAULT_CLAMP_FLOOR = 0.25


def linear_to_db(value: float) -> float:
    """Convert a linear power ratio to dB."""
    return 10.0 * math.log10(value)


def db_to_linear(db: float) -> float:
    """Convert dB to a linear power ratio."""
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Sir:
    """Signal-to-interference ratio of one UE (linear, > 0)."""
    value: float
    _db: Optional[float] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value <= 0:
            raise DomainError(f"SIR must be a finite positive ratio, got {self.value}")

    @classmethod
    def from_db(cls, db: float) -> "Sir":
        # keep the caller's dB so threshold comparisons at exact ties are stable
        sir = cls(db_to_linear(db))
        object.__setattr__(sir, "_db", float(db))
        return sir

    @property
    def db(self) -> float:
        if self._db is not None:
            return self._db
        return linear_to_db(self.value)


def uniform_variates(seed: int, n: int) -> np.ndarray:
    """Draw ``n`` uniforms on (0, 1] from a counter-based stream keyed by seed.

    Variate ``i`` depends only on ``(seed, i)``: Philox maps a key and a
    counter to output, so the same seed always reproduces the same vector and
    any prefix of it.

    Args:
        seed: Non-negative integer key
        n: Number of variates

    Returns:
        Array of shape (n,)
    """
    generator = np.random.Generator(np.random.Philox(key=seed))
    # random() is on [0, 1); flip it so zero can never reach the inverse
    return 1.0 - generator.random(n)


@dataclass(frozen=True)
class SirDistribution:
    """The PPP strongest-cell SIR law. Takes no density or power parameters."""
    clamp_floor: float = DEFAULT_CLAMP_FLOOR

    def ccdf(self, gamma: float) -> float:
        """P(SIR > gamma), clamped to [0, 1].

        Raises:
            DomainError: If gamma is non-positive or non-finite
        """
        if not math.isfinite(gamma) or gamma <= 0:
            raise DomainError(f"ccdf needs a finite positive argument, got {gamma}")

        x = 1.0 / math.sqrt(gamma)
        value = 2.0 * x / math.pi
        if gamma < 1.0:
            value -= (x - 1.0) ** 2 / math.pi
        return min(max(value, 0.0), 1.0)

    def ccdf_array(self, gammas: np.ndarray) -> np.ndarray:
        """Vectorized ccdf for an array of positive ratios."""
        gammas = np.asarray(gammas, dtype=float)
        if np.any(~np.isfinite(gammas)) or np.any(gammas <= 0):
            raise DomainError("ccdf needs finite positive arguments")

        x = 1.0 / np.sqrt(gammas)
        value = 2.0 * x / np.pi - np.where(gammas < 1.0, (x - 1.0) ** 2 / np.pi, 0.0)
        return np.clip(value, 0.0, 1.0)

    def inverse_ccdf(self, p: float) -> float:
        """Ratio gamma >= 1/4 with ccdf(gamma) = p.

        For p <= 2/pi the single-term branch inverts to (2/(pi p))^2. Above
        that, 1/sqrt(gamma) is the smaller root of x^2 - 4x + 1 + pi p = 0.

        Raises:
            DomainError: If p is outside (0, 3/pi]
        """
        if not (0.0 < p <= CCDF_MAX):
            raise DomainError(f"inverse_ccdf needs p in (0, 3/pi], got {p}")

        if p <= CCDF_AT_ONE:
            return (2.0 / (math.pi * p)) ** 2
        x = 2.0 - math.sqrt(max(3.0 - math.pi * p, 0.0))
        return 1.0 / (x * x)

    def inverse_ccdf_array(self, p: np.ndarray) -> np.ndarray:
        """Vectorized inverse_ccdf; every entry must lie in (0, 3/pi]."""
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p > CCDF_MAX):
            raise DomainError("inverse_ccdf needs every p in (0, 3/pi]")

        upper = (2.0 / (np.pi * p)) ** 2
        x = 2.0 - np.sqrt(np.clip(3.0 - np.pi * p, 0.0, None))
        return np.where(p <= CCDF_AT_ONE, upper, 1.0 / (x * x))

    def sample_array(self, n: int, seed: int) -> np.ndarray:
        """Draw ``n`` linear SIR values by inverse-transform sampling.

        Uniforms above 3/pi land on the atom at ``clamp_floor``.
        """
        if n < 0:
            raise DomainError(f"sample size must be >= 0, got {n}")
        if n == 0:
            return np.empty(0, dtype=float)

        u = uniform_variates(seed, n)
        in_range = u <= CCDF_MAX
        values = np.full(n, self.clamp_floor, dtype=float)
        values[in_range] = self.inverse_ccdf_array(u[in_range])
        logger.debug("Sampled %d SIR draws (seed=%d, %d at clamp floor)",
                     n, seed, int(n - in_range.sum()))
        return values

    def sample(self, n: int, seed: int) -> List[Sir]:
        """Draw ``n`` SIR values; identical seeds give identical sequences."""
        return [Sir(float(v)) for v in self.sample_array(n, seed)]

    def analytic_percentiles(self) -> Tuple[float, float, float]:
        """Closed-form 25th/50th/75th percentiles (linear).

        The q-th percentile has ccdf = 1 - q.
        """
        return (
            self.inverse_ccdf(0.75),
            self.inverse_ccdf(0.50),
            self.inverse_ccdf(0.25),
        )


def empirical_ccdf(values: np.ndarray, gamma: float) -> float:
    """Fraction of ``values`` strictly greater than ``gamma``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.count_nonzero(values > gamma)) / values.size
