import json
import logging
import os
from typing import Dict, Iterable, List, Optional

from pydantic import BaseModel, ValidationError

import config
from forms_classes import ClassCycle, PellSolution, QuadForm, form_reduced_surd
from gk_dynamics import DecInt
from sweep_records import SweepOutputError

logger = logging.getLogger("cycle-cache")


class CacheEntry(BaseModel):
    """Everything about discriminant d that is expensive to recompute."""
    schema_version: int = config.CACHE_SCHEMA_VERSION
    d: DecInt
    cycles: List[List[List[DecInt]]]
    periods: List[List[int]]
    pell_x: DecInt
    pell_y: DecInt

    @classmethod
    def from_cycles(cls, d: int, cycles: List[ClassCycle], pell: PellSolution) -> "CacheEntry":
        return cls(
            d=d,
            cycles=[c.to_json() for c in cycles],
            periods=[list(c.period) for c in cycles],
            pell_x=pell.x,
            pell_y=pell.y,
        )

    def class_cycles(self) -> List[ClassCycle]:
        out = []
        for forms, period in zip(self.cycles, self.periods):
            qfs = tuple(QuadForm.from_json(f) for f in forms)
            out.append(ClassCycle(qfs, form_reduced_surd(qfs[0]), tuple(period)))
        return out

    def pell(self) -> PellSolution:
        return PellSolution(self.d, self.pell_x, self.pell_y)


class CycleCacheManager:
    """
    JSON-lines cache keyed by d. One entry per line; the main process is the
    only writer, workers never touch the file.
    """

    def __init__(self, path: str):
        self.path = path
        self.entries: Dict[int, CacheEntry] = {}
        self.corrupt_lines = 0
        self.stale_entries = 0

    # ---------------------------------------------------------
    # READ
    # ---------------------------------------------------------
    def load(self) -> Dict[int, CacheEntry]:
        """Reads the cache. Missing file is an empty cache."""
        self.entries, self.corrupt_lines, self.stale_entries = {}, 0, 0
        if not os.path.exists(self.path):
            return self.entries
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as e:
            raise SweepOutputError(self.path, e) from e

        for line in lines:
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError:
                self.corrupt_lines += 1
                continue
            if not isinstance(raw, dict) or raw.get("schema_version") != config.CACHE_SCHEMA_VERSION:
                self.stale_entries += 1
                continue
            try:
                entry = CacheEntry.model_validate(raw)
            except ValidationError:
                self.corrupt_lines += 1
                continue
            self.entries[entry.d] = entry

        if self.corrupt_lines:
            logger.warning(f"⚠️ Skipped {self.corrupt_lines} corrupt cache lines in {self.path}")
        if self.stale_entries:
            logger.warning(f"⚠️ {self.stale_entries} cache entries have an old schema version, they will be recomputed")
        logger.info(f"Loaded {len(self.entries)} cache entries from {self.path}")
        return self.entries

    def get(self, d: int) -> Optional[CacheEntry]:
        return self.entries.get(d)

    @property
    def needs_rewrite(self) -> bool:
        return bool(self.corrupt_lines or self.stale_entries)

    # ---------------------------------------------------------
    # WRITE
    # ---------------------------------------------------------
    def append(self, entries: Iterable[CacheEntry]) -> int:
        entries = [e for e in entries if e.d not in self.entries]
        if not entries:
            return 0
        try:
            parent = os.path.dirname(self.path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                for e in entries:
                    fh.write(e.model_dump_json() + "\n")
        except OSError as e:
            raise SweepOutputError(self.path, e) from e
        for e in entries:
            self.entries[e.d] = e
        return len(entries)

    def rewrite(self):
        """Replaces the file with the valid entries only, ordered by d."""
        tmp = self.path + ".tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                for d in sorted(self.entries):
                    fh.write(self.entries[d].model_dump_json() + "\n")
            os.replace(tmp, self.path)
        except OSError as e:
            raise SweepOutputError(self.path, e) from e
        logger.info(f"Rewrote cache {self.path} with {len(self.entries)} entries")
        self.corrupt_lines = self.stale_entries = 0
