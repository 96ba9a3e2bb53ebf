from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np
from scipy import integrate, stats

from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()


class Distribution(ABC):
    """Non-negative distribution used for claim sizes xi and inter-claim times tau."""

    @abstractmethod
    def exact_moment(self, k: int) -> Optional[Fraction]:
        """E X^k as a Fraction over the (binary exact) parameters; None when infinite."""

    @abstractmethod
    def tail(self, x):
        """P{X > x}, vectorised."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        ...

    def mgf(self, s: float) -> float:
        """E e^{sX}; inf outside the domain."""
        return math.inf

    def mgf_abscissa(self) -> float:
        """sup{s: E e^{sX} < inf}."""
        return 0.0

    @property
    def is_bounded(self) -> bool:
        return False

    def moment(self, k: int) -> float:
        if k < 0:
            raise ModelError(f"moment order must be non-negative, got {k}")
        value = self.exact_moment(k)
        return math.inf if value is None else float(value)

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        second = self.moment(2)
        if math.isinf(second):
            return math.inf
        return float(self.exact_moment(2) - self.exact_moment(1) ** 2)


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        _positive("exponential rate", self.rate)

    def exact_moment(self, k):
        return Fraction(math.factorial(k)) / Fraction(self.rate) ** k

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0)))

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def mgf(self, s):
        return self.rate / (self.rate - s) if s < self.rate else math.inf

    def mgf_abscissa(self):
        return self.rate


@dataclass(frozen=True)
class GammaDist(Distribution):
    shape: float
    rate: float

    def __post_init__(self):
        _positive("gamma shape", self.shape)
        _positive("gamma rate", self.rate)

    def exact_moment(self, k):
        shape = Fraction(self.shape)
        numerator = Fraction(1)
        for i in range(k):
            numerator *= shape + i
        return numerator / Fraction(self.rate) ** k

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, stats.gamma.sf(np.maximum(x, 0.0), a=self.shape, scale=1.0 / self.rate))

    def sample(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def mgf(self, s):
        return (self.rate / (self.rate - s)) ** self.shape if s < self.rate else math.inf

    def mgf_abscissa(self):
        return self.rate


@dataclass(frozen=True)
class ParetoType(Distribution):
    """Lomax law with P{X > x} = (1 + x/scale)^{-(2 + beta)}."""

    beta: float
    scale: float = 1.0

    def __post_init__(self):
        _positive("Pareto beta", self.beta)
        _positive("Pareto scale", self.scale)

    @property
    def tail_index(self) -> float:
        return 2.0 + self.beta

    def exact_moment(self, k):
        a = Fraction(self.tail_index)
        if k >= a:
            return None
        # E X^k = s^k k! / prod_{i=1..k} (a - i)
        value = Fraction(math.factorial(k)) * Fraction(self.scale) ** k
        for i in range(1, k + 1):
            value /= a - i
        return value

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, (1.0 + np.maximum(x, 0.0) / self.scale) ** (-self.tail_index))

    def sample(self, rng, size):
        # numpy's pareto is the Lomax law with unit scale
        return self.scale * rng.pareto(self.tail_index, size)

    def mgf(self, s):
        if s > 0:
            return math.inf
        if s == 0:
            return 1.0
        a, scale = self.tail_index, self.scale
        value, _ = integrate.quad(
            lambda y: math.exp(s * y) * a / scale * (1 + y / scale) ** (-a - 1), 0, math.inf
        )
        return value


@dataclass(frozen=True)
class Deterministic(Distribution):
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ModelError(f"deterministic value must be non-negative, got {self.value}")

    def exact_moment(self, k):
        return Fraction(self.value) ** k

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.value, 1.0, 0.0)

    def sample(self, rng, size):
        return np.full(size, float(self.value))

    def mgf(self, s):
        return math.exp(s * self.value)

    def mgf_abscissa(self):
        return math.inf

    @property
    def is_bounded(self) -> bool:
        return True


def _positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        logger.error(f"Rejected {name}={value}")
        raise ModelError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class ClaimModel:
    """Independent claim size xi and inter-claim time tau."""

    xi: Distribution
    tau: Distribution

    def __post_init__(self):
        if self.tau.mean <= 0 or math.isinf(self.tau.mean):
            raise ModelError(f"E tau must lie in (0, inf), got {self.tau.mean}")


_FAMILIES = {
    "exponential": Exponential,
    "gamma": GammaDist,
    "pareto": ParetoType,
    "deterministic": Deterministic,
}


def distribution_from_dict(data: Dict[str, Any]) -> Distribution:
    data = dict(data)
    family = data.pop("family", None)
    if family not in _FAMILIES:
        raise ModelError(f"unknown distribution family {family!r}; expected one of {sorted(_FAMILIES)}")
    try:
        return _FAMILIES[family](**{key: float(value) for key, value in data.items()})
    except TypeError as e:
        logger.error(f"Invalid parameters for {family}: {e}")
        raise ModelError(f"invalid parameters for '{family}': {e}") from e


def distribution_to_dict(dist: Distribution) -> Dict[str, Any]:
    family = next(name for name, cls in _FAMILIES.items() if type(dist) is cls)
    return {"family": family, **asdict(dist)}


def claims_to_dict(claims: ClaimModel) -> Dict[str, Any]:
    return {"xi": distribution_to_dict(claims.xi), "tau": distribution_to_dict(claims.tau)}

def claims_from_dict(data: Dict[str, Any]) -> ClaimModel:
    try:
        return ClaimModel(
            xi=distribution_from_dict(data["xi"]), tau=distribution_from_dict(data["tau"])
        )
    except KeyError as e:
        raise ModelError(f"claims section is missing {e}") from e
