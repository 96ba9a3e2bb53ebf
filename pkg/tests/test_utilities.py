import enum
import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from stochastic_model.premium_rate import CriticalInverse
from utilities.errors import ModelError, NumericalError
from utilities.files.data_loader_client import UniversalDataLoader
from utilities.json_helpers import deserialize_json, serialize_json


class Colour(enum.Enum):
    RED = "red"


@dataclass
class Sample:
    level: float
    hidden: int = field(default=0, repr=False)


def test_serialize_json_is_compact_and_sorted():
    assert serialize_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


def test_serialize_json_converts_library_types():
    text = serialize_json(
        {
            "colour": Colour.RED,
            "fraction": Fraction(1, 4),
            "scalar": np.float64(2.5),
            "array": np.arange(3),
            "sample": Sample(1.5, hidden=3),
        }
    )
    data = deserialize_json(text)
    assert data["colour"] == "red"
    assert data["fraction"] == 0.25
    assert data["scalar"] == 2.5
    assert data["array"] == [0, 1, 2]
    assert data["sample"] == {"type": "Sample", "level": 1.5}


def test_serialize_json_rate_spec():
    data = deserialize_json(serialize_json(CriticalInverse(v_c=1.0, theta=3.0)))
    assert data["type"] == "CriticalInverse"
    assert data["theta"] == 3.0


@pytest.mark.parametrize("text", ["", "   ", "{not json"])
def test_deserialize_json_rejects_bad_text(text):
    with pytest.raises(ValueError):
        deserialize_json(text)


def test_error_hierarchy():
    assert issubclass(ModelError, ValueError)
    assert issubclass(NumericalError, RuntimeError)


def test_save_csv_to_stream_with_metadata():
    out = io.StringIO()
    frame = pd.DataFrame({"x": [1.0, 2.0], "p_hat": [0.5, 1 / 3]})
    UniversalDataLoader().save_csv(frame, out=out, metadata=["seed=1"])
    assert out.getvalue() == "# seed=1\nx,p_hat\n1,0.5\n2,0.333333333333\n"


def test_save_and_load_csv(tmp_path):
    path = tmp_path / "curve.csv"
    frame = pd.DataFrame({"x": [5.0, 10.0], "p_hat": [0.25, 0.125]})
    loader = UniversalDataLoader()
    loader.save_csv(frame, path=str(path), metadata=["command=curve", "seed=0"])
    loaded = loader.load_data(str(path))
    assert loaded["p_hat"].tolist() == [0.25, 0.125]
    assert list(loaded.columns) == ["x", "p_hat"]


def test_save_csv_needs_target():
    with pytest.raises(ValueError, match="No output target"):
        UniversalDataLoader().save_csv(pd.DataFrame({"x": [1]}))


def test_load_json_as_dict(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"model": {}}', encoding="utf-8")
    assert UniversalDataLoader(str(path)).load_json_as_dict() == {"model": {}}
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValueError, match="JSON object"):
        UniversalDataLoader().load_json_as_dict(str(path))


def test_loader_path_errors(tmp_path):
    loader = UniversalDataLoader()
    with pytest.raises(ValueError, match="No data path"):
        loader.load_data()
    with pytest.raises(FileNotFoundError):
        loader.load_data(str(tmp_path / "missing.csv"))
    other = tmp_path / "table.parquet"
    other.write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="Unsupported format"):
        loader.load_data(str(other))


def test_load_json_table(tmp_path):
    path = tmp_path / "rows.json"
    path.write_text('[{"x": 1, "p": 0.5}, {"x": 2, "p": 0.25}]', encoding="utf-8")
    table = UniversalDataLoader().load_data(str(path))
    assert table["p"].tolist() == [0.5, 0.25]
