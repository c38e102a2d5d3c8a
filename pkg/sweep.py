"""
Sweep - per-discriminant aggregation over all class cycles, the sqrt(n)
statistics, and the class-number filtered sweep with bucketed means.
"""
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from typing import Iterator, List, Literal, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

import config
from cycle_cache import CacheEntry, CycleCacheManager
from forms_classes import (
    class_cycles,
    has_negative_pell,
    is_fundamental_discriminant,
    is_valid_discriminant,
    narrow_class_number,
    pell4_fundamental,
    regulator_from_pell,
    wide_class_number,
)
from gk_dynamics import (
    DecInt,
    DigitStats,
    digit_stats,
    distribution_distance,
    gauss_measure,
    interval_frequency,
    pool_stats,
)
from surd_core import CFExpansion, InvalidInputError, Surd, cf_expand, is_square
from sweep_records import SweepCSVManager, SweepJSONLWriter

logger = logging.getLogger("sweep")

Mode = Literal["sqrt", "discriminant"]


# ---------------------------------------------------------
# MODELS
# ---------------------------------------------------------
class SweepConfig(BaseModel):
    d_min: int = Field(ge=1)
    d_max: int = Field(ge=1)
    class_cap: int = Field(default=config.CLASS_CAP, ge=1)
    fundamental_only: bool = False
    digit_cap: int = Field(default=config.DIGIT_CAP, ge=1)
    mode: Mode = "discriminant"
    out_csv: Optional[str] = None
    out_jsonl: Optional[str] = None
    cache: Optional[str] = config.CACHE_PATH
    jobs: int = Field(default=config.JOBS, ge=1)
    # the sweep is deterministic; the seed is only recorded with the run
    seed: int = 0

    @model_validator(mode="after")
    def _check_range(self):
        if self.d_min > self.d_max:
            raise ValueError(f"d_min={self.d_min} exceeds d_max={self.d_max}")
        return self


class SweepRecord(BaseModel):
    d: DecInt
    discriminant: DecInt
    mode: Mode
    fundamental: bool
    h_plus: DecInt
    h_wide: DecInt
    negative_pell: bool
    cycle_count: DecInt
    periods: List[DecInt]
    total_period: DecInt
    regulator: float
    geodesic_length: float
    agg_stats: DigitStats
    per_cycle_tv: List[float]
    agg_tv: float
    max_cycle_tv: float

    @model_validator(mode="after")
    def _check_counts(self):
        if self.cycle_count < 1 or self.cycle_count != self.h_plus:
            raise ValueError("cycle_count must equal h_plus and be >= 1")
        if self.agg_stats.total != self.total_period:
            raise ValueError("pooled digit total must equal the total period")
        if self.mode == "discriminant" and self.total_period != sum(self.periods):
            raise ValueError("total_period must be the sum of the cycle periods")
        if not all(0.0 <= t <= 1.0 for t in self.per_cycle_tv + [self.agg_tv]):
            raise ValueError("TV distances must lie in [0, 1]")
        return self

    def csv_row(self) -> dict:
        return {
            "d": self.d,
            "fundamental": self.fundamental,
            "h_plus": self.h_plus,
            "total_period": self.total_period,
            "regulator": self.regulator,
            "agg_tv": self.agg_tv,
            "max_cycle_tv": self.max_cycle_tv,
        }


class IntervalRow(BaseModel):
    lo: float
    hi: float
    freq: float
    gauss: float


class SqrtStats(BaseModel):
    n: DecInt
    discriminant: DecInt
    h_plus: int
    preperiod: List[int]
    period: List[int]
    period_length: int
    stats: DigitStats
    tv: float
    chi2: float
    intervals: List[IntervalRow]


class BucketSummary(BaseModel):
    lo: DecInt
    hi: DecInt
    count: int
    mean_agg_tv: float
    mean_max_cycle_tv: float


class SweepSummary(BaseModel):
    config: SweepConfig
    candidates: int
    records: int
    cache_hits: int = 0
    cache_misses: int = 0
    buckets: List[BucketSummary] = Field(default_factory=list)
    items: List[SweepRecord] = Field(default_factory=list, exclude=True)


# ---------------------------------------------------------
# PER-DISCRIMINANT AGGREGATION
# ---------------------------------------------------------
def compute_discriminant_data(d: int) -> CacheEntry:
    """Cycles, periods and the Pell solution of d; the cacheable part of a record."""
    return CacheEntry.from_cycles(d, class_cycles(d), pell4_fundamental(d))


def _class_fields(entry: CacheEntry, K: int) -> dict:
    cycles = entry.class_cycles()
    per_cycle = [digit_stats(CFExpansion((), c.period), K) for c in cycles]
    h_plus = len(cycles)
    reg = regulator_from_pell(entry.pell())
    return {
        "discriminant": entry.d,
        "fundamental": is_fundamental_discriminant(entry.d),
        "h_plus": h_plus,
        "h_wide": wide_class_number(entry.d, h_plus),
        "negative_pell": has_negative_pell(entry.d),
        "cycle_count": h_plus,
        "periods": [len(c.period) for c in cycles],
        "regulator": reg,
        "geodesic_length": 2.0 * reg,
        "per_cycle_tv": [distribution_distance(s) for s in per_cycle],
        "_per_cycle": per_cycle,
    }


def record_from_entry(entry: CacheEntry, K: int = config.DIGIT_CAP) -> SweepRecord:
    fields = _class_fields(entry, K)
    agg = pool_stats(fields.pop("_per_cycle"))
    return SweepRecord(
        d=entry.d,
        mode="discriminant",
        total_period=sum(fields["periods"]),
        agg_stats=agg,
        agg_tv=distribution_distance(agg),
        max_cycle_tv=max(fields["per_cycle_tv"]),
        **fields,
    )


def sqrt_record_from_entry(n: int, entry: CacheEntry, K: int = config.DIGIT_CAP) -> SweepRecord:
    """Class data of 4n, digit statistics of the period of sqrt(n) alone."""
    fields = _class_fields(entry, K)
    fields.pop("_per_cycle")
    stats = digit_stats(cf_expand(Surd(0, 1, n)), K)
    return SweepRecord(
        d=n,
        mode="sqrt",
        total_period=stats.total,
        agg_stats=stats,
        agg_tv=distribution_distance(stats),
        max_cycle_tv=max(fields["per_cycle_tv"]),
        **fields,
    )


def aggregate_discriminant(d: int, K: int = config.DIGIT_CAP) -> SweepRecord:
    if not is_valid_discriminant(d):
        raise InvalidInputError(f"{d} is not a valid discriminant")
    return record_from_entry(compute_discriminant_data(d), K)


def sqrt_stats(n: int, K: int = config.DIGIT_CAP) -> SqrtStats:
    if n <= 1 or is_square(n):
        raise InvalidInputError(f"{n} is a perfect square: sqrt({n}) has a finite expansion")
    x = Surd(0, 1, n)
    e = cf_expand(x)
    stats = digit_stats(e, K)
    intervals = []
    for i in range(10):
        lo, hi = i / 10, (i + 1) / 10
        intervals.append(IntervalRow(lo=lo, hi=hi, freq=interval_frequency(x, lo, hi),
                                     gauss=gauss_measure(lo, hi)))
    return SqrtStats(
        n=n,
        discriminant=4 * n,
        h_plus=narrow_class_number(4 * n),
        preperiod=list(e.preperiod),
        period=list(e.period),
        period_length=len(e.period),
        stats=stats,
        tv=distribution_distance(stats, "tv"),
        chi2=distribution_distance(stats, "chi2"),
        intervals=intervals,
    )


# ---------------------------------------------------------
# SWEEP
# ---------------------------------------------------------
def candidate_values(cfg: SweepConfig) -> List[Tuple[int, int]]:
    """(d, discriminant) pairs passing the cheap filters, ascending in d."""
    out = []
    for d in range(cfg.d_min, cfg.d_max + 1):
        if cfg.mode == "discriminant":
            if not is_valid_discriminant(d):
                continue
            disc = d
        else:
            if d < 2 or is_square(d):
                continue
            disc = 4 * d
        if cfg.fundamental_only and not is_fundamental_discriminant(disc):
            continue
        out.append((d, disc))
    return out


def _entries(discs: List[int], cache: Optional[CycleCacheManager], pool, jobs: int = 1) -> Iterator[Tuple[CacheEntry, bool]]:
    """Cache entries in input order; misses are computed through the pool."""
    todo = [k for k in discs if cache is None or cache.get(k) is None]
    if pool is None:
        computed = map(compute_discriminant_data, todo)
    else:
        computed = pool.map(compute_discriminant_data, todo,
                            chunksize=max(1, len(todo) // (jobs * 16)))
    computed = iter(computed)
    for k in discs:
        hit = cache.get(k) if cache is not None else None
        if hit is not None:
            yield hit, True
        else:
            yield next(computed), False


def bucket_means(records: List[SweepRecord]) -> List[BucketSummary]:
    """Means over dyadic ranges [2^j, 2^(j+1)) of d."""
    if not records:
        return []
    df = pd.DataFrame({
        "j": [r.d.bit_length() - 1 for r in records],
        "agg_tv": [r.agg_tv for r in records],
        "max_cycle_tv": [r.max_cycle_tv for r in records],
    })
    out = []
    for j, grp in df.groupby("j", sort=True):
        out.append(BucketSummary(
            lo=1 << int(j), hi=1 << (int(j) + 1), count=len(grp),
            mean_agg_tv=float(grp["agg_tv"].mean()),
            mean_max_cycle_tv=float(grp["max_cycle_tv"].mean()),
        ))
    return out


def run_sweep(cfg: SweepConfig) -> SweepSummary:
    candidates = candidate_values(cfg)
    logger.info(f"🚀 Sweep {cfg.mode} d in [{cfg.d_min}, {cfg.d_max}]: {len(candidates)} candidates, "
                f"class cap {cfg.class_cap}, jobs {cfg.jobs}")

    cache = None
    if cfg.cache:
        cache = CycleCacheManager(cfg.cache)
        cache.load()

    jsonl = SweepJSONLWriter(cfg.out_jsonl) if cfg.out_jsonl else None
    csv = SweepCSVManager(cfg.out_csv) if cfg.out_csv else None
    summary = SweepSummary(config=cfg, candidates=len(candidates), records=0)
    new_entries: List[CacheEntry] = []
    complete = False

    pool_ctx = ProcessPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else nullcontext()
    try:
        with pool_ctx as pool:
            stream = _entries([disc for _, disc in candidates], cache, pool, cfg.jobs)
            for (d, _), (entry, hit) in tqdm(zip(candidates, stream), total=len(candidates),
                                             desc="sweep", unit="d", file=sys.stderr, disable=None):
                if hit:
                    summary.cache_hits += 1
                else:
                    summary.cache_misses += 1
                    new_entries.append(entry)
                if len(entry.cycles) > cfg.class_cap:
                    continue
                if cfg.mode == "discriminant":
                    record = record_from_entry(entry, cfg.digit_cap)
                else:
                    record = sqrt_record_from_entry(d, entry, cfg.digit_cap)
                summary.items.append(record)
                if jsonl:
                    jsonl.write(record)
        complete = True
    finally:
        summary.records = len(summary.items)
        if jsonl:
            jsonl.close(complete)
        if csv:
            csv.write_rows((r.csv_row() for r in summary.items), complete)
        if cache is not None:
            cache.append(new_entries)
            if cache.needs_rewrite:
                cache.rewrite()

    summary.buckets = bucket_means(summary.items)
    if not summary.items:
        logger.info("No discriminant in range passed the filters: zero records")
    for b in summary.buckets:
        logger.info(f"bucket [{b.lo}, {b.hi}): n={b.count} mean agg TV={b.mean_agg_tv:.4f} "
                    f"mean max cycle TV={b.mean_max_cycle_tv:.4f}")
    logger.info(f"✅ Sweep done: {summary.records} records, cache hits {summary.cache_hits}, "
                f"misses {summary.cache_misses}")
    return summary
