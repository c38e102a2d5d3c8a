"""
Gauss-Kuzmin Dynamics

- the limiting digit law log2(1 + 1/(k(k+2))) and distances to it
- digit statistics and ergodic averages along exact surd orbits
- the Kuzmin Monte Carlo check for the n-th digit of a uniform random x
- the cross-section return map (y, z) -> ({1/y}, y(1 - yz)) and its
  measure checks on D = {0 < y < 1, 0 < z < 1/(1+y)}
"""
import logging
import math
from collections import Counter
from typing import Annotated, Dict, Iterable, List, Literal, Tuple, Union

import numpy as np
import pandas as pd
from mpmath import mp, mpf
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, model_validator

import config
from surd_core import CFExpansion, InvalidInputError, Surd, cf_states, to_float

logger = logging.getLogger("gk-dynamics")

# Integers that travel through JSON as decimal strings
DecInt = Annotated[int, PlainSerializer(lambda v: str(v), return_type=str, when_used="json")]

BOUNDARY_TOL = 1e-15
MARGIN_TOL = 1e-12


# ---------------------------------------------------------
# GAUSS-KUZMIN LAW
# ---------------------------------------------------------
def gk_mass(k: int) -> float:
    if k < 1:
        raise InvalidInputError(f"digit must be >= 1, got {k}")
    return math.log2(1.0 + 1.0 / (k * (k + 2)))


def gk_tail(K: int) -> float:
    """Mass of digits > K; the partial products telescope to 2(K+1)/(K+2)."""
    return math.log2((K + 2) / (K + 1))


def gauss_measure(lo: float, hi: float) -> float:
    """Gauss measure of [lo, hi] in [0, 1]: (1/ln 2) * integral dx/(1+x)."""
    return math.log2((1.0 + hi) / (1.0 + lo))


# ---------------------------------------------------------
# DIGIT STATISTICS
# ---------------------------------------------------------
class DigitStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    K: int = Field(default=50, ge=1)
    counts: Dict[int, DecInt] = Field(default_factory=dict)
    tail_count: DecInt = 0
    total: DecInt

    @model_validator(mode="after")
    def _check_totals(self):
        if any(k < 1 or k > self.K for k in self.counts):
            raise ValueError(f"digit keys must lie in 1..{self.K}")
        if any(v < 0 for v in self.counts.values()) or self.tail_count < 0:
            raise ValueError("counts must be nonnegative")
        if self.total <= 0 or self.total != sum(self.counts.values()) + self.tail_count:
            raise ValueError("total must be positive and equal the sum of counts plus tail")
        return self

    @classmethod
    def from_counter(cls, counter: Counter, K: int) -> "DigitStats":
        counts = {k: counter[k] for k in sorted(counter) if 1 <= k <= K and counter[k]}
        tail = sum(v for k, v in counter.items() if k > K)
        return cls(K=K, counts=counts, tail_count=tail, total=sum(counter.values()))

    def freq(self, k: int) -> float:
        return self.counts.get(k, 0) / self.total

    @property
    def tail_freq(self) -> float:
        return self.tail_count / self.total


def digit_stats(e: CFExpansion, K: int = config.DIGIT_CAP) -> DigitStats:
    """Histogram over one period; the preperiod never contributes to the limit."""
    return DigitStats.from_counter(Counter(e.period), K)


def pool_stats(stats: Iterable[DigitStats]) -> DigitStats:
    stats = list(stats)
    if not stats:
        raise InvalidInputError("nothing to pool")
    K = stats[0].K
    counter = Counter()
    tail = 0
    for s in stats:
        if s.K != K:
            raise InvalidInputError("cannot pool statistics with different caps")
        counter.update(s.counts)
        tail += s.tail_count
    return DigitStats(
        K=K,
        counts={k: counter[k] for k in sorted(counter)},
        tail_count=tail,
        total=sum(counter.values()) + tail,
    )


Metric = Literal["tv", "chi2"]


def distribution_distance(s: DigitStats, metric: Metric = "tv") -> float:
    """Distance to the Gauss-Kuzmin law truncated at s.K, tail pooled."""
    if metric == "tv":
        dist = sum(abs(s.freq(k) - gk_mass(k)) for k in range(1, s.K + 1))
        return 0.5 * (dist + abs(s.tail_freq - gk_tail(s.K)))
    if metric == "chi2":
        dist = sum((s.freq(k) - gk_mass(k)) ** 2 / gk_mass(k) for k in range(1, s.K + 1))
        return dist + (s.tail_freq - gk_tail(s.K)) ** 2 / gk_tail(s.K)
    raise InvalidInputError(f"unknown metric {metric!r}")


def digit_stats_frame(s: DigitStats) -> pd.DataFrame:
    """Rows k = 1..K plus a '>K' tail row: k, count, freq, gk_mass, abs_diff."""
    rows = []
    for k in range(1, s.K + 1):
        mass = gk_mass(k)
        rows.append({"k": str(k), "count": s.counts.get(k, 0), "freq": s.freq(k),
                     "gk_mass": mass, "abs_diff": abs(s.freq(k) - mass)})
    tail = gk_tail(s.K)
    rows.append({"k": f">{s.K}", "count": s.tail_count, "freq": s.tail_freq,
                 "gk_mass": tail, "abs_diff": abs(s.tail_freq - tail)})
    return pd.DataFrame(rows, columns=["k", "count", "freq", "gk_mass", "abs_diff"])


# ---------------------------------------------------------
# ERGODIC AVERAGES ALONG SURD ORBITS
# ---------------------------------------------------------
class OrbitFunction(BaseModel):
    """Catalog of test functions on [0, 1]."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["one", "indicator", "log1p", "identity"]
    lo: float = 0.0
    hi: float = 1.0

    @model_validator(mode="after")
    def _check_interval(self):
        if self.kind == "indicator" and not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError("indicator interval must satisfy 0 <= lo <= hi <= 1")
        return self

    @classmethod
    def from_id(cls, fid: str) -> "OrbitFunction":
        """'one', 'log1p', 'identity' or 'indicator:<lo>:<hi>'."""
        name, _, rest = fid.partition(":")
        if name in ("one", "log1p", "identity") and not rest:
            return cls(kind=name)
        if name == "indicator":
            try:
                lo, hi = (float(v) for v in rest.split(":"))
            except ValueError:
                raise InvalidInputError(f"bad indicator spec {fid!r}") from None
            return cls(kind="indicator", lo=lo, hi=hi)
        raise InvalidInputError(f"unknown test function {fid!r}")

    def __call__(self, x: float) -> float:
        if self.kind == "one":
            return 1.0
        if self.kind == "indicator":
            return 1.0 if self.lo <= x <= self.hi else 0.0
        if self.kind == "log1p":
            return math.log1p(x)
        return x


def _orbit_values(x0: Surd, f: OrbitFunction) -> Tuple[List[float], int]:
    """f(1/x_j) for the surd iterates x_j; x_j with j >= start repeats."""
    states, start = cf_states(x0)
    return [f(1.0 / to_float(s)) for s in states], start


def ergodic_average(x0: Surd, f: Union[OrbitFunction, str], N: int) -> float:
    """
    (1/N) sum_{k<N} f(T^k y_0) for the Gauss map T and y_0 = frac(x0).

    T^k y_0 = 1/x_{k+1} where x_j are the exact CF iterates of x0; the
    periodic tail is weighted exactly instead of being walked.
    """
    if isinstance(f, str):
        f = OrbitFunction.from_id(f)
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    values, start = _orbit_values(x0, f)
    period = values[start:]
    l = len(period)

    total = sum(values[j] for j in range(1, min(N, start - 1) + 1))
    first = max(1, start)
    if N >= first:
        n_per = N - first + 1
        offset = (first - start) % l
        rotated = period[offset:] + period[:offset]
        total += (n_per // l) * sum(period) + sum(rotated[: n_per % l])
    return total / N


def interval_frequency(x0: Surd, lo: float, hi: float) -> float:
    """#{0 <= n < l : T^n(y_0) in [lo, hi]} / l over one period of the orbit."""
    f = OrbitFunction(kind="indicator", lo=lo, hi=hi)
    values, start = _orbit_values(x0, f)
    period = values[start:]
    return sum(period) / len(period)


# ---------------------------------------------------------
# CROSS-SECTION MAP
# ---------------------------------------------------------
class XPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    y: float
    z: float

    @model_validator(mode="after")
    def _in_domain(self):
        if not (0.0 < self.y < 1.0):
            raise ValueError(f"y = {self.y} outside (0, 1)")
        if not (0.0 < self.z < 1.0 / (1.0 + self.y)):
            raise ValueError(f"z = {self.z} outside (0, 1/(1+y))")
        return self


def xsection_map(p: XPoint) -> XPoint:
    inv = 1.0 / p.y
    if math.isclose(inv, round(inv), rel_tol=0.0, abs_tol=BOUNDARY_TOL):
        raise InvalidInputError(f"1/y = {inv} is an integer: y = {p.y} is on the boundary")
    y_next = inv - math.floor(inv)
    z_next = p.y * (1.0 - p.y * p.z)
    bound = 1.0 / (1.0 + y_next)
    margin = min(y_next, 1.0 - y_next, z_next, bound - z_next)
    if margin < -MARGIN_TOL:
        raise ArithmeticError(f"image ({y_next}, {z_next}) of {p} left the domain by {-margin}")
    # rounding can put z_next on the upper edge when y > 1/2 and z is tiny
    z_next = float(min(max(z_next, np.nextafter(0.0, 1.0)), np.nextafter(bound, 0.0)))
    return XPoint(y=y_next, z=z_next)


def xsection_map_arrays(y: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    inv = 1.0 / y
    return inv - np.floor(inv), y * (1.0 - y * z)


def xsection_jacobian_det(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """det of d(y', z')/d(y, z): lower triangular, (-1/y^2)(-y^2) - 0 * (1 - 2yz)."""
    dy_dy = -1.0 / (y * y)
    dz_dz = -(y * y)
    dy_dz = np.zeros_like(y)
    dz_dy = 1.0 - 2.0 * y * z
    return dy_dy * dz_dz - dy_dz * dz_dy


def sample_domain(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n points uniform (Lebesgue) in D, by rejection; boundary points dropped."""
    ys, zs = [], []
    got = 0
    while got < n:
        m = int((n - got) * 1.5) + 16
        y = rng.random(m)
        z = rng.random(m)
        inv = 1.0 / np.where(y > 0, y, 1.0)
        keep = (y > 0) & (z > 0) & (z < 1.0 / (1.0 + y)) & (np.abs(inv - np.round(inv)) > BOUNDARY_TOL)
        ys.append(y[keep])
        zs.append(z[keep])
        got += int(keep.sum())
    return np.concatenate(ys)[:n], np.concatenate(zs)[:n]


def surd_xsection_orbit(x: Surd, z0: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cross-section orbit whose first coordinate is driven by the exact surd
    iterates (y_k = 1/x_{k+1}); z evolves in double precision.
    """
    states, start = cf_states(x)
    l = len(states) - start

    def state(j):
        return states[j] if j < start else states[start + (j - start) % l]

    ys = np.empty(n)
    zs = np.empty(n)
    z = z0
    for k in range(n):
        y = 1.0 / to_float(state(k + 1))
        ys[k], zs[k] = y, z
        z = y * (1.0 - y * z)
    return ys, zs


class XSectionReport(BaseModel):
    samples: int
    seed: int
    jacobian_max_dev: float
    domain_violations: int
    min_margin: float
    pairs: int
    pair_length: int
    contraction_max_rel_err: float
    orbit_length: int
    bins: int
    marginal_tv: float
    orbit_restarts: int


def _contraction_error(y0: float, z1: float, z2: float, length: int) -> float:
    """
    Relative error between |z1_n - z2_n| and |z1_0 - z2_0| * prod y_i^2.
    The shared y-orbit runs in double; the z-fibres in mpmath with enough
    digits to resolve the contracted difference.
    """
    ys = []
    y = y0
    for _ in range(length):
        ys.append(y)
        inv = 1.0 / y
        y = inv - math.floor(inv)
        if y <= 0.0:
            break
    digits = sum(-2.0 * math.log10(v) for v in ys)
    with mp.workdps(30 + int(math.ceil(digits))):
        a, b, prod = mpf(z1), mpf(z2), mpf(1)
        for v in ys:
            yv = mpf(v)
            a = yv * (1 - yv * a)
            b = yv * (1 - yv * b)
            prod *= yv * yv
        predicted = abs(mpf(z1) - mpf(z2)) * prod
        return float(abs(abs(a - b) / predicted - 1))


def _gauss_marginal_tv(y0: float, z0: float, length: int, bins: int,
                       rng: np.random.Generator) -> Tuple[float, int]:
    ys = np.empty(length)
    y, z = y0, z0
    restarts = 0
    for i in range(length):
        inv = 1.0 / y
        y_next = inv - math.floor(inv)
        z = y * (1.0 - y * z)
        if not 0.0 < y_next < 1.0:
            # float orbit fell onto the boundary; reinject
            y_next = 1.0 - rng.random()
            restarts += 1
        y = y_next
        ys[i] = y
    hist, edges = np.histogram(ys, bins=bins, range=(0.0, 1.0))
    masses = np.log2((1.0 + edges[1:]) / (1.0 + edges[:-1]))
    return 0.5 * float(np.abs(hist / length - masses).sum()), restarts


def xsection_checks(samples: int, seed: int, pairs: int = 1000, pair_length: int = 50,
                    orbit_length: int = 10 ** 6, bins: int = 100,
                    start: Tuple[float, float] = (math.pi - 3.0, 0.1)) -> XSectionReport:
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    seq_jac, seq_dom, seq_pairs, seq_orbit = np.random.SeedSequence(seed).spawn(4)

    y, z = sample_domain(np.random.default_rng(seq_jac), samples)
    jac_dev = float(np.max(np.abs(xsection_jacobian_det(y, z) - 1.0)))

    y, z = sample_domain(np.random.default_rng(seq_dom), samples)
    y1, z1 = xsection_map_arrays(y, z)
    margin = np.minimum.reduce([y1, 1.0 - y1, z1, 1.0 / (1.0 + y1) - z1])
    violations = int(np.count_nonzero(margin < -MARGIN_TOL))

    rng = np.random.default_rng(seq_pairs)
    py, pz1 = sample_domain(rng, pairs)
    pz2 = rng.random(pairs) / (1.0 + py)
    worst = 0.0
    for y0, a, b in zip(py, pz1, pz2):
        if a == b:
            continue
        worst = max(worst, _contraction_error(float(y0), float(a), float(b), pair_length))

    tv, restarts = _gauss_marginal_tv(start[0], start[1], orbit_length, bins,
                                      np.random.default_rng(seq_orbit))
    if restarts:
        logger.warning(f"⚠️ Gauss marginal orbit restarted {restarts} times")

    return XSectionReport(
        samples=samples, seed=seed,
        jacobian_max_dev=jac_dev,
        domain_violations=violations, min_margin=float(margin.min()),
        pairs=pairs, pair_length=pair_length, contraction_max_rel_err=worst,
        orbit_length=orbit_length, bins=bins, marginal_tv=tv, orbit_restarts=restarts,
    )


# ---------------------------------------------------------
# KUZMIN MONTE CARLO
# ---------------------------------------------------------
def kuzmin_montecarlo(n: int, N: int, seed: int, K: int = config.DIGIT_CAP,
                      chunk: int = config.MC_CHUNK) -> DigitStats:
    """
    Histogram of the n-th CF digit of N uniform samples in (0, 1], Gauss map
    in double precision. Chunk i draws from child seed i of SeedSequence(seed),
    so the result depends only on (n, N, seed, chunk).
    """
    if not 1 <= n <= 20:
        raise InvalidInputError(f"digit index must be in 1..20, got {n}")
    if N < 1:
        raise InvalidInputError("sample count must be >= 1")

    counts = np.zeros(K + 1, dtype=np.int64)
    done = 0
    for child in np.random.SeedSequence(seed).spawn(math.ceil(N / chunk)):
        m = min(chunk, N - done)
        x = 1.0 - np.random.default_rng(child).random(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            for _ in range(n - 1):
                inv = 1.0 / x
                x = inv - np.floor(inv)
            digit = np.floor(1.0 / x)
        ok = np.isfinite(digit) & (digit >= 1) & (digit <= K)
        counts += np.bincount(digit[ok].astype(np.int64), minlength=K + 1)
        done += m

    in_range = int(counts[1:].sum())
    return DigitStats(
        K=K,
        counts={k: int(counts[k]) for k in range(1, K + 1) if counts[k]},
        tail_count=N - in_range,
        total=N,
    )
