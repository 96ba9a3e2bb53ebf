from pathlib import Path
from typing import Any, Dict, Iterable, Optional, TextIO

import pandas as pd

import config
from utilities.json_helpers import deserialize_json
from utilities.logger import Logger

logger = Logger.get_logger()


class UniversalDataLoader:
    """
    File loader and writer for experiment configs and result tables.
    Loads JSON configs, CSV tables, and writes CSV with '#' metadata headers.
    """

    def __init__(self, data_path: Optional[str] = None, encoding: str = "utf-8"):
        self.data_path = data_path
        self.encoding = encoding

        self.supported_formats = {
            ".csv": self._load_csv,
            ".json": self._load_json,
        }

    def load_data(self, path: Optional[str] = None, **kwargs) -> pd.DataFrame:
        """Load a table from file with automatic format detection."""
        path_obj = self._resolve(path)

        file_extension = path_obj.suffix.lower()
        if file_extension not in self.supported_formats:
            raise ValueError(f"Unsupported format: {file_extension}")

        logger.info(f"Loading {file_extension} file: {path_obj}")
        loader_func = self.supported_formats[file_extension]

        try:
            df = loader_func(str(path_obj), **kwargs)
            logger.info(f"Loaded {len(df):,} rows, {len(df.columns)} columns")
            return df
        except Exception as e:
            logger.error(f"Failed to load {path_obj}: {e}")
            raise

    def load_json_as_dict(self, path: Optional[str] = None) -> Dict[str, Any]:
        """Load a JSON document that must be an object."""
        path_obj = self._resolve(path)
        text = path_obj.read_text(encoding=self.encoding)
        data = deserialize_json(text)
        if not isinstance(data, dict):
            raise ValueError(f"Expected a JSON object in {path_obj}")
        logger.debug(f"Loaded JSON object with keys {sorted(data)}")
        return data

    def save_csv(
        self,
        df: pd.DataFrame,
        out: Optional[TextIO] = None,
        path: Optional[str] = None,
        metadata: Iterable[str] = (),
    ) -> None:
        """Write '#'-prefixed metadata lines then the table, to a stream or file."""
        header = "".join(f"# {line}\n" for line in metadata)
        body = df.to_csv(
            index=False, float_format=config.CSV_FLOAT_FORMAT, lineterminator="\n"
        )
        if path is not None:
            Path(path).write_text(header + body, encoding=self.encoding)
            logger.info(f"Wrote {len(df):,} rows to {path}")
        elif out is not None:
            out.write(header + body)
        else:
            raise ValueError("No output target provided")

    def _resolve(self, path: Optional[str]) -> Path:
        current_path = path or self.data_path
        if not current_path:
            raise ValueError("No data path provided")

        path_obj = Path(current_path)
        if not path_obj.exists():
            raise FileNotFoundError(f"File not found: {current_path}")
        return path_obj

    def _load_csv(self, path: str, **kwargs) -> pd.DataFrame:
        """Load CSV file, skipping '#' metadata lines."""
        defaults = {"encoding": self.encoding, "comment": "#"}
        defaults.update(kwargs)
        return pd.read_csv(path, **defaults)

    def _load_json(self, path: str, **kwargs) -> pd.DataFrame:
        """Load JSON file."""
        with open(path, "r", encoding=self.encoding) as f:
            parsed = deserialize_json(f.read())
        if isinstance(parsed, list):
            return pd.json_normalize(parsed)
        return pd.json_normalize([parsed])
