from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import config
from embedded_chain.chain import Caps
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError
from utilities.json_helpers import serialize_json
from utilities.logger import Logger

logger = Logger.get_logger()

DEFAULT_GRID = (5.0, 10.0, 20.0, 40.0)


@dataclass(frozen=True)
class ExperimentParams:
    x: float = 10.0
    grid: Tuple[float, ...] = DEFAULT_GRID
    n_paths: int = 10_000
    max_steps: int = config.MC_DEFAULT_MAX_STEPS
    level_cap: Optional[float] = None
    escape_level: Optional[float] = None
    n_draws: int = config.DRIFT_MIN_DRAWS
    n_steps: int = 1_000
    delta: Optional[float] = None
    anchors: Tuple[float, ...] = ()
    bounds_levels: Tuple[float, ...] = ()
    truncated_paths: int = 0
    exact_ci: bool = False

    def caps(self, x: float) -> Caps:
        level_cap = self.level_cap
        if level_cap is None:
            level_cap = Caps.default_for(x).level_cap
        return Caps(max_steps=self.max_steps, level_cap=level_cap, escape_level=self.escape_level)

    def grid_caps(self) -> Optional[Caps]:
        """Shared caps for a grid run; None lets every level use its own default cap."""
        if (
            self.level_cap is None
            and self.escape_level is None
            and self.max_steps == config.MC_DEFAULT_MAX_STEPS
        ):
            return None
        return self.caps(max(self.grid))


_FLOAT_TUPLES = ("grid", "anchors", "bounds_levels")
_INTS = ("n_paths", "max_steps", "n_draws", "n_steps", "truncated_paths")


def _params_from_dict(data: Dict[str, Any]) -> ExperimentParams:
    data = dict(data)
    caps = data.pop("caps", None) or {}
    unknown_caps = set(caps) - {"max_steps", "level_cap", "escape_level"}
    if unknown_caps:
        raise ModelError(f"unknown caps fields: {sorted(unknown_caps)}")
    data.update(caps)

    known = set(ExperimentParams.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        logger.error(f"Unknown experiment fields {sorted(unknown)}")
        raise ModelError(f"unknown experiment fields: {sorted(unknown)}")
    try:
        for name in _FLOAT_TUPLES:
            if name in data:
                data[name] = tuple(float(v) for v in data[name])
        for name in _INTS:
            if name in data:
                data[name] = int(data[name])
        for name in ("x", "level_cap", "escape_level", "delta"):
            if data.get(name) is not None:
                data[name] = float(data[name])
        if "exact_ci" in data:
            data["exact_ci"] = bool(data["exact_ci"])
    except (TypeError, ValueError) as e:
        raise ModelError(f"invalid experiment value: {e}") from e

    params = ExperimentParams(**data)
    if params.n_paths < 1 or not params.grid or params.x < 0:
        raise ModelError("experiment needs n_paths >= 1, a non-empty grid and x >= 0")
    if any(not math.isfinite(v) or v < 0 for v in params.grid):
        raise ModelError(f"grid levels must be finite and >= 0, got {params.grid}")
    return params


@dataclass(frozen=True)
class ExperimentConfig:
    model: RiskModel
    params: ExperimentParams

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict) or "model" not in data:
            raise ModelError("config needs a 'model' section")
        unknown = set(data) - {"model", "experiment"}
        if unknown:
            raise ModelError(f"unknown config sections: {sorted(unknown)}")
        model = RiskModel.from_dict(data["model"])
        params = _params_from_dict(data.get("experiment") or {})
        logger.info(f"Loaded config: rate={type(model.rate).__name__}, n_paths={params.n_paths}")
        return cls(model=model, params=params)

    def resolved(self) -> Dict[str, Any]:
        """Model and experiment with every default filled in, as echoed into CSV metadata."""
        return {"model": self.model.to_dict(), "experiment": asdict(self.params)}

    def echo(self) -> str:
        return serialize_json(self.resolved())
