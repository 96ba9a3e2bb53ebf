from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np

from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()

Envelope = Callable[[float], float]


@dataclass(frozen=True)
class PowerEnvelope:
    """p(z) = coefficient * max(z, 1) ** (-exponent); integrable when exponent > 1."""

    coefficient: float
    exponent: float

    def __post_init__(self):
        if self.coefficient < 0:
            raise ModelError(f"envelope coefficient must be >= 0, got {self.coefficient}")
        if self.exponent <= 1:
            raise ModelError(
                f"envelope exponent must exceed 1 to be integrable, got {self.exponent}"
            )

    def __call__(self, z):
        return self.coefficient * np.maximum(z, 1.0) ** (-self.exponent)


@dataclass(frozen=True)
class Constant:
    v: float
    envelope_p: Optional[Envelope] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.v > 0:
            raise ModelError(f"constant premium rate must be positive, got {self.v}")


@dataclass(frozen=True)
class CriticalInverse:
    v_c: float
    theta: float
    z_min: float = 1.0
    envelope_p: Optional[Envelope] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _check_critical(self.v_c, self.theta, self.z_min)

    @property
    def alpha(self) -> float:
        return 1.0


@dataclass(frozen=True)
class CriticalPower:
    v_c: float
    theta: float
    alpha: float
    z_min: float = 1.0
    envelope_p: Optional[Envelope] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _check_critical(self.v_c, self.theta, self.z_min)
        if not 0 < self.alpha < 1:
            raise ModelError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-constant rate: breakpoints[i] = (level_i, rate_i) holds on [level_i, level_{i+1})."""

    breakpoints: Tuple[Tuple[float, float], ...]
    envelope_p: Optional[Envelope] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.breakpoints:
            raise ModelError("tabulated rate needs at least one breakpoint")
        pairs = tuple((float(level), float(rate)) for level, rate in self.breakpoints)
        levels = [level for level, _ in pairs]
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ModelError(f"tabulated levels must be strictly increasing: {levels}")
        if levels[0] < 0:
            raise ModelError("tabulated levels must be non-negative")
        if any(rate < 0 or not math.isfinite(rate) for _, rate in pairs):
            raise ModelError("tabulated rates must be finite and non-negative")
        object.__setattr__(self, "breakpoints", pairs)

    @property
    def levels(self) -> np.ndarray:
        return np.array([level for level, _ in self.breakpoints])

    @property
    def rates(self) -> np.ndarray:
        return np.array([rate for _, rate in self.breakpoints])


PremiumRateSpec = Union[Constant, CriticalInverse, CriticalPower, Tabulated]
CRITICAL_FAMILIES = (CriticalInverse, CriticalPower)


def _check_critical(v_c: float, theta: float, z_min: float) -> None:
    if not v_c > 0:
        raise ModelError(f"critical rate v_c must be positive, got {v_c}")
    if theta < 0:
        raise ModelError(f"theta must be non-negative for a non-increasing rate, got {theta}")
    if not z_min > 0:
        raise ModelError(f"z_min must be positive, got {z_min}")


def is_critical(rate: PremiumRateSpec) -> bool:
    return isinstance(rate, CRITICAL_FAMILIES)


def evaluate_rate(rate: PremiumRateSpec, z):
    """v(z); scalar in, float out, array in, array out."""
    z_arr = np.asarray(z, dtype=float)
    if isinstance(rate, Constant):
        out = np.full_like(z_arr, rate.v)
    elif isinstance(rate, CriticalInverse):
        out = rate.v_c + rate.theta / np.maximum(z_arr, rate.z_min)
    elif isinstance(rate, CriticalPower):
        out = rate.v_c + rate.theta / np.maximum(z_arr, rate.z_min) ** rate.alpha
    elif isinstance(rate, Tabulated):
        idx = np.searchsorted(rate.levels, z_arr, side="right") - 1
        out = rate.rates[np.clip(idx, 0, len(rate.breakpoints) - 1)]
    else:
        raise ModelError(f"unknown premium rate family {type(rate).__name__}")
    return float(out) if out.ndim == 0 else out


def rate_sup(rate: PremiumRateSpec) -> float:
    """v_bar = sup_z v(z)."""
    if isinstance(rate, Constant):
        return rate.v
    if isinstance(rate, CriticalInverse):
        return rate.v_c + rate.theta / rate.z_min
    if isinstance(rate, CriticalPower):
        return rate.v_c + rate.theta / rate.z_min**rate.alpha
    return float(rate.rates.max())


def rate_inf(rate: PremiumRateSpec) -> float:
    if isinstance(rate, Constant):
        return rate.v
    if is_critical(rate):
        return rate.v_c
    return float(rate.rates.min())


def envelope_value(rate: PremiumRateSpec, z):
    """Deviation envelope p(z) of the rate, zero when none is attached."""
    if rate.envelope_p is None:
        return np.zeros_like(np.asarray(z, dtype=float))
    return np.asarray(rate.envelope_p(z), dtype=float)


def rate_from_dict(data: Dict[str, Any]) -> PremiumRateSpec:
    """Build a premium rate from its JSON object (see README for the schema)."""
    data = dict(data)
    kind = data.pop("kind", None)
    envelope = data.pop("envelope", None)
    envelope_p = PowerEnvelope(**envelope) if envelope is not None else None
    try:
        if kind == "constant":
            return Constant(v=float(data.pop("v")), envelope_p=envelope_p, **data)
        if kind == "critical_inverse":
            return CriticalInverse(envelope_p=envelope_p, **_floats(data))
        if kind == "critical_power":
            return CriticalPower(envelope_p=envelope_p, **_floats(data))
        if kind == "tabulated":
            pairs = tuple(tuple(pair) for pair in data.pop("breakpoints"))
            return Tabulated(breakpoints=pairs, envelope_p=envelope_p, **data)
    except (KeyError, TypeError) as e:
        logger.error(f"Invalid premium rate specification {kind}: {e}")
        raise ModelError(f"invalid '{kind}' rate: {e}") from e
    raise ModelError(
        f"unknown rate kind {kind!r}; expected constant, critical_inverse, "
        "critical_power or tabulated"
    )


_KINDS = {
    Constant: "constant",
    CriticalInverse: "critical_inverse",
    CriticalPower: "critical_power",
    Tabulated: "tabulated",
}


def rate_to_dict(rate: PremiumRateSpec) -> Dict[str, Any]:
    """JSON object of a rate with every default filled in; rate_from_dict reads it back."""
    data: Dict[str, Any] = {"kind": _KINDS[type(rate)]}
    for f in fields(rate):
        if f.repr:
            value = getattr(rate, f.name)
            data[f.name] = [list(pair) for pair in value] if f.name == "breakpoints" else value
    if isinstance(rate.envelope_p, PowerEnvelope):
        data["envelope"] = asdict(rate.envelope_p)
    elif rate.envelope_p is not None:
        data["envelope"] = repr(rate.envelope_p)
    return data

def _floats(data: Dict[str, Any]) -> Dict[str, float]:
    return {key: float(value) for key, value in data.items()}
