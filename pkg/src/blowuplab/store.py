'''store.py
Persistence of trajectories (CSV), run metadata and certificate reports (JSON).
軌道（CSV）、実行メタデータおよび証明書レポート（JSON）を保存・読込します。

Trajectories are held as pandas DataFrames in the functionals column order and
written with a fixed float format, so identical runs give identical files.
'''

import json
import logging
import os
import re
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .exceptions import DataError, InterfaceError, OperationalError, ProgrammingError
from .functionals import EnergyBreakdown, csv_columns
from .grid import Params
from .solver import Trajectory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
_MOMENTUM_COLUMN = re.compile(r"^P(\d+)$")


def trajectory_to_frame(trajectory: Trajectory) -> pd.DataFrame:
    """One row per sample in the stable column order
    サンプルごとに1行、安定した列順の DataFrame
    """
    rows = [s.as_row() for s in trajectory.samples]
    return pd.DataFrame(rows, columns=csv_columns(trajectory.n_dim))


def _infer_dimension(columns: List[str]) -> int:
    indices = sorted(int(m.group(1)) for m in (_MOMENTUM_COLUMN.match(c) for c in columns) if m)
    if not indices or indices != list(range(1, len(indices) + 1)):
        raise InterfaceError(f"Momentum columns P1..Pn missing or out of order in {columns}")
    return len(indices)


def _convert_frame_types(df: pd.DataFrame) -> pd.DataFrame:
    """Convert every column to float64
    全列を float64 に変換

    Raises:
        DataError: When a cell is not a number
                   数値でないセルがある場合
    """
    converted = df.apply(pd.to_numeric, errors="coerce").astype(np.float64)
    bad = converted.isna() & df.notna()
    if bad.to_numpy().any():
        column = converted.columns[bad.any(axis=0).to_numpy()][0]
        raise DataError(f"Column {column} holds non-numeric values")
    return converted


def frame_to_trajectory(df: pd.DataFrame, params: Optional[Params] = None) -> Trajectory:
    """Rebuild a trajectory from a DataFrame in the functionals schema
    関数値スキーマの DataFrame から軌道を復元

    Raises:
        InterfaceError: When the columns do not match the schema
                        列がスキーマと一致しない場合
        DataError: When values are not numeric or times do not increase
                   値が数値でない、または時刻が増加しない場合
    """
    columns = [str(c) for c in df.columns]
    n_dim = _infer_dimension(columns)
    expected = csv_columns(n_dim)
    if columns != expected:
        missing = [c for c in expected if c not in columns]
        extra = [c for c in columns if c not in expected]
        raise InterfaceError(f"CSV schema mismatch: missing {missing}, unexpected {extra}, or wrong order")
    if df.empty:
        raise DataError("Trajectory table has no rows")
    df = _convert_frame_types(df)
    samples = [EnergyBreakdown.from_row(row, n_dim) for row in df.to_dict(orient="records")]
    return Trajectory(samples, params=params)


def write_trajectory_csv(trajectory: Trajectory, path: str) -> None:
    """Write a trajectory CSV

    Raises:
        OperationalError: When the file cannot be written
                          ファイルを書き込めない場合
    """
    try:
        _ensure_parent(path)
        trajectory_to_frame(trajectory).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.debug("wrote %d rows to %s", len(trajectory.samples), path)
    except OSError as e:
        raise OperationalError(f"Failed to save file: {str(e)}")


def read_trajectory_csv(path: str, params: Optional[Params] = None) -> Trajectory:
    """Read a trajectory CSV
    軌道 CSV を読み込む

    Raises:
        OperationalError: When the file does not exist or cannot be read
                          ファイルが存在しない、または読み込めない場合
        InterfaceError: When the CSV cannot be parsed or its columns do not match the schema
                        CSV を解析できない、または列がスキーマと一致しない場合
    """
    if not os.path.exists(path):
        raise OperationalError(f"File does not exist: {path}")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise InterfaceError(f"Empty CSV file: {path}")
    except pd.errors.ParserError:
        raise InterfaceError(f"Failed to parse CSV file: {path}")
    except OSError as e:
        raise OperationalError(f"Failed to read file: {str(e)}")
    logger.debug("loaded %s with %d rows", path, len(df))
    return frame_to_trajectory(df, params)


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def dump_json(payload: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, NaN rejected"""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(payload: Any, path: str) -> None:
    """Write a JSON document

    Raises:
        OperationalError: When the file cannot be written
                          ファイルを書き込めない場合
        ProgrammingError: When the payload holds NaN or non-serializable values
                          NaN やシリアライズ不能な値を含む場合
    """
    try:
        text = dump_json(payload)
    except (TypeError, ValueError) as e:
        raise ProgrammingError(f"Payload is not JSON serializable: {str(e)}")
    try:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.debug("wrote %s", path)
    except OSError as e:
        raise OperationalError(f"Failed to save file: {str(e)}")


def read_json(path: str) -> Any:
    """Read a JSON document

    Raises:
        OperationalError: When the file cannot be read
                          ファイルを読み込めない場合
        InterfaceError: When the content is not valid JSON
                        JSON として不正な場合
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise OperationalError(f"File does not exist: {path}")
    except json.JSONDecodeError as e:
        raise InterfaceError(f"Malformed JSON in {path}: {str(e)}")
    except OSError as e:
        raise OperationalError(f"Failed to read file: {str(e)}")


def run_metadata(trajectory: Trajectory, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Config echo, termination and drift statistics of a run
    実行の設定、終了理由、ドリフト統計
    """
    meta: Dict[str, Any] = {
        "termination": trajectory.termination.value,
        "samples": len(trajectory.samples),
        "n_dim": trajectory.n_dim,
        "params": trajectory.params.as_dict() if trajectory.params else None,
        "solver": trajectory.config.as_dict() if trajectory.config else None,
        "statistics": {k: (v.item() if isinstance(v, np.generic) else v)
                       for k, v in trajectory.metadata.items()},
    }
    if extra:
        meta.update(extra)
    return meta


class RunStore:
    """Output directory holding trajectory tables
    軌道テーブルを保持する出力ディレクトリ

    Tables stay in memory until :meth:`commit` writes them as ``<name>.csv``.
    """

    def __init__(self, base_dir: str = "."):
        self.base_dir = base_dir
        self._tables: Dict[str, pd.DataFrame] = {}

    def _get_csv_path(self, name: str) -> str:
        return os.path.join(self.base_dir, f"{name}.csv")

    def register_trajectory(self, name: str, trajectory: Trajectory) -> None:
        """Register a trajectory as a table

        Raises:
            ProgrammingError: When the name is empty or already used
                              名前が空、または既に使用されている場合
        """
        if not name or not isinstance(name, str):
            raise ProgrammingError("Invalid table name")
        if name in self._tables:
            raise ProgrammingError(f"Table {name} already exists")
        self._tables[name] = trajectory_to_frame(trajectory)

    def commit(self) -> None:
        """Write every table as CSV

        Raises:
            OperationalError: When a file cannot be written
                              ファイルを書き込めない場合
        """
        try:
            os.makedirs(self.base_dir, exist_ok=True)
            for name, df in self._tables.items():
                df.to_csv(self._get_csv_path(name), index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise OperationalError(f"Failed to save file: {str(e)}")

