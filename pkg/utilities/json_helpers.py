# ============================================================================
# utilities/json_helpers.py - JSON HELPER FUNCTIONS
# ============================================================================
import dataclasses
import enum
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from utilities.logger import Logger

logger = Logger.get_logger()


def serialize_json(data: Any, sort_keys: bool = True) -> str:
    """
    Convert a Python object to a compact JSON string.

    Dataclasses, enums, numpy scalars and arrays, fractions and paths are
    converted to plain JSON values; keys are sorted so the text is stable.

    Raises:
        ValueError: if the conversion fails
    """

    def json_serializer(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {
                "type": type(obj).__name__,
                **{
                    f.name: getattr(obj, f.name)
                    for f in dataclasses.fields(obj)
                    if f.repr
                },
            }
        if isinstance(obj, enum.Enum):
            return obj.value
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Fraction):
            return float(obj)
        if isinstance(obj, Path):
            return str(obj)
        if hasattr(obj, "__dict__"):
            return obj.__dict__
        return str(obj)

    try:
        return json.dumps(
            data,
            default=json_serializer,
            ensure_ascii=False,
            indent=None,
            sort_keys=sort_keys,
            separators=(",", ":"),
        )
    except Exception as e:
        logger.error(f"Failed to serialize JSON: {e}")
        raise ValueError(f"JSON serialization failed: {e}")


def deserialize_json(json_str: str) -> Any:
    """
    Convert a JSON string to a Python object.

    Raises:
        ValueError: if the text is empty or not valid JSON
    """
    if not json_str or not isinstance(json_str, str) or not json_str.strip():
        raise ValueError("Invalid JSON string provided")

    try:
        return json.loads(json_str)
    except json.JSONDecodeError as e:
        logger.error(f"Failed to deserialize JSON: {e}")
        raise ValueError(f"Invalid JSON format: {e}")
    except Exception as e:
        logger.error(f"Unexpected error in JSON deserialization: {e}")
        raise ValueError(f"JSON deserialization failed: {e}")
