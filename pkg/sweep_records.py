import json
import logging
import os
from typing import Iterable, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger("sweep-records")


class SweepOutputError(OSError):
    """An output or cache file could not be read or written."""

    def __init__(self, path: str, cause: Exception):
        super().__init__(f"{path}: {cause}")
        self.path = path
        self.cause = cause


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


class SweepCSVManager:
    # Strict column order of the sweep summary
    COLUMNS = ["d", "fundamental", "h_plus", "total_period", "regulator", "agg_tv", "max_cycle_tv"]
    INCOMPLETE_MARK = "# status=incomplete"

    def __init__(self, csv_path: str):
        self.csv_path = csv_path

    # ==========================================
    # INTERNAL HELPERS
    # ==========================================
    def _load_df(self) -> pd.DataFrame:
        """Status comment lines are ignored; a missing or empty file is an empty frame."""
        if not os.path.exists(self.csv_path):
            return pd.DataFrame(columns=self.COLUMNS)
        try:
            df = pd.read_csv(self.csv_path, comment="#")
        except pd.errors.EmptyDataError:
            return pd.DataFrame(columns=self.COLUMNS)
        except OSError as e:
            raise SweepOutputError(self.csv_path, e) from e
        for col in self.COLUMNS:
            if col not in df.columns:
                df[col] = None
        return df[self.COLUMNS]

    def _save_df(self, df: pd.DataFrame, complete: bool = True):
        try:
            _ensure_parent(self.csv_path)
            df.to_csv(self.csv_path, index=False, encoding="utf-8", lineterminator="\n")
            if not complete:
                with open(self.csv_path, "a", encoding="utf-8") as fh:
                    fh.write(self.INCOMPLETE_MARK + "\n")
        except OSError as e:
            raise SweepOutputError(self.csv_path, e) from e

    # ==========================================
    # READ / WRITE
    # ==========================================
    def get_all(self) -> List[dict]:
        return self._load_df().to_dict(orient="records")

    def is_complete(self) -> bool:
        if not os.path.exists(self.csv_path):
            return False
        with open(self.csv_path, "r", encoding="utf-8") as fh:
            return self.INCOMPLETE_MARK not in fh.read()

    def write_rows(self, rows: Iterable[dict], complete: bool = True) -> int:
        df = pd.DataFrame(list(rows), columns=self.COLUMNS)
        df = df.sort_values("d", kind="stable") if not df.empty else df
        self._save_df(df, complete)
        logger.info(f"📄 Wrote {len(df)} rows to {self.csv_path}")
        return len(df)


class SweepJSONLWriter:
    """
    Streams one JSON record per line and always ends the file with a status
    line {"status": "complete"|"incomplete", "records": N}.
    """

    def __init__(self, path: str):
        self.path = path
        self.count = 0
        try:
            _ensure_parent(path)
            self._fh = open(path, "w", encoding="utf-8", newline="\n")
        except OSError as e:
            raise SweepOutputError(path, e) from e

    def write(self, record: BaseModel):
        try:
            self._fh.write(record.model_dump_json() + "\n")
        except OSError as e:
            raise SweepOutputError(self.path, e) from e
        self.count += 1

    def close(self, complete: bool = True):
        if self._fh.closed:
            return
        try:
            status = "complete" if complete else "incomplete"
            self._fh.write(json.dumps({"status": status, "records": self.count}) + "\n")
        except OSError as e:
            raise SweepOutputError(self.path, e) from e
        finally:
            self._fh.close()


def read_sweep_jsonl(path: str) -> Tuple[List[dict], Optional[dict]]:
    """Returns (records, status line); status is None for a truncated file."""
    records, status = [], None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "status" in obj and set(obj) == {"status", "records"}:
                    status = obj
                else:
                    records.append(obj)
    except OSError as e:
        raise SweepOutputError(path, e) from e
    return records, status


def write_histogram_csv(path: str, frame: pd.DataFrame):
    """Digit histogram CSV with columns k, count, freq, gk_mass, abs_diff."""
    try:
        _ensure_parent(path)
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    except OSError as e:
        raise SweepOutputError(path, e) from e
    logger.info(f"📄 Wrote histogram to {path}")
