"""
Surd Core - exact arithmetic for quadratic irrationals (p + sqrt(d)) / q
and the continued-fraction engine built on the integer PQa recurrence.

Everything here is integer arithmetic; the only float is the reporting
helper to_float().
"""
import logging
from dataclasses import dataclass
from math import gcd
from typing import Dict, Iterable, Iterator, List, Tuple

from sympy import divisors

logger = logging.getLogger("surd-core")


class InvalidInputError(ValueError):
    """Raised when an operation's precondition is violated."""


# ---------------------------------------------------------
# INTEGER SQUARE ROOT
# ---------------------------------------------------------
def isqrt(n: int) -> int:
    """Floor of sqrt(n) by Newton iteration, corrected so s*s <= n < (s+1)**2."""
    if n < 0:
        raise InvalidInputError(f"isqrt of negative number {n}")
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + 1) // 2)
    while True:
        y = (x + n // x) // 2
        if y >= x:
            break
        x = y
    while x * x > n:
        x -= 1
    while (x + 1) * (x + 1) <= n:
        x += 1
    return x


def is_square(n: int) -> bool:
    if n < 0:
        return False
    s = isqrt(n)
    return s * s == n


def sign_of(a: int, b: int, d: int) -> int:
    """Exact sign of a + b*sqrt(d) for non-square d > 0 and (a, b) != (0, 0)."""
    if a >= 0 and b >= 0:
        return 1
    if a <= 0 and b <= 0:
        return -1
    # opposite signs: compare a^2 with b^2 d (never equal, sqrt(d) irrational)
    if a > 0:
        return 1 if a * a > b * b * d else -1
    return 1 if b * b * d > a * a else -1


# ---------------------------------------------------------
# DOMAIN TYPES
# ---------------------------------------------------------
@dataclass(frozen=True)
class Surd:
    """(p + sqrt(d)) / q with q | d - p^2. Build through surd_normalize()."""
    p: int
    q: int
    d: int

    def __post_init__(self):
        if self.q == 0:
            raise InvalidInputError("q must be nonzero")
        if self.d <= 0:
            raise InvalidInputError(f"d must be positive, got {self.d}")
        if is_square(self.d):
            raise InvalidInputError(f"d = {self.d} is a perfect square")
        if (self.d - self.p * self.p) % self.q != 0:
            raise InvalidInputError(
                f"({self.p}, {self.q}, {self.d}) is not canonical: q does not divide d - p^2"
            )

    def __repr__(self):
        return f"({self.p}+√{self.d})/{self.q}"

    def to_json(self) -> dict:
        return {"p": str(self.p), "q": str(self.q), "d": str(self.d)}

    @classmethod
    def from_json(cls, data: dict) -> "Surd":
        return surd_normalize(int(data["p"]), int(data["q"]), int(data["d"]))


@dataclass(frozen=True)
class CFExpansion:
    preperiod: Tuple[int, ...]
    period: Tuple[int, ...]

    def __post_init__(self):
        if not self.period:
            raise InvalidInputError("period must be nonempty")

    def digits(self) -> Iterator[int]:
        """Infinite digit stream b_0, b_1, ..."""
        yield from self.preperiod
        while True:
            yield from self.period

    def to_json(self) -> dict:
        return {"preperiod": list(self.preperiod), "period": list(self.period)}


@dataclass(frozen=True)
class IntMatrix2:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if abs(self.det) != 1:
            raise InvalidInputError(f"matrix {self} has determinant {self.det}, expected ±1")

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    def __matmul__(self, other: "IntMatrix2") -> "IntMatrix2":
        return IntMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    @classmethod
    def identity(cls) -> "IntMatrix2":
        return cls(1, 0, 0, 1)

    @classmethod
    def digit(cls, a: int) -> "IntMatrix2":
        """(a, 1; 1, 0), the matrix of x -> a + 1/x."""
        return cls(a, 1, 1, 0)


# ---------------------------------------------------------
# CONSTRUCTION / COMPARISON
# ---------------------------------------------------------
def surd_normalize(p: int, q: int, d: int, reduce: bool = False) -> Surd:
    """
    Canonical Surd equal to (p + sqrt(d)) / q.

    When q does not divide d - p^2 the fraction is rewritten as
    (p|q| + sqrt(d q^2)) / (q|q|). With reduce=True the largest common
    factor g (g | p, g | q, g^2 | d) that keeps q/g | d/g^2 - (p/g)^2 is
    divided out; by default d is kept as given.
    """
    if d <= 0:
        raise InvalidInputError(f"d must be positive, got {d}")
    if q == 0:
        raise InvalidInputError("q must be nonzero")
    if is_square(d):
        raise InvalidInputError(f"d = {d} is a perfect square")

    if (d - p * p) % q != 0:
        m = abs(q)
        p, q, d = p * m, q * m, d * m * m

    if reduce:
        for g in reversed(divisors(gcd(p, q))):
            if g == 1:
                break
            if d % (g * g) == 0 and (d - p * p) % (q * g) == 0:
                p, q, d = p // g, q // g, d // (g * g)
                break
    return Surd(p, q, d)


def surd_sign(x: Surd, u: int, v: int = 1) -> int:
    """Exact sign of x - u/v (v > 0). Never 0."""
    if v <= 0:
        raise InvalidInputError("v must be positive")
    # x - u/v = (p v - u q + v sqrt(d)) / (q v)
    s = sign_of(x.p * v - u * x.q, v, x.d)
    return s if x.q > 0 else -s


def conjugate(x: Surd) -> Surd:
    """(p - sqrt(d)) / q written canonically as (-p + sqrt(d)) / (-q)."""
    return Surd(-x.p, -x.q, x.d)


def conjugate_sign(x: Surd, u: int, v: int = 1) -> int:
    """Exact sign of conjugate(x) - u/v."""
    return surd_sign(conjugate(x), u, v)


def surd_floor(x: Surd) -> int:
    s = isqrt(x.d)
    if x.q > 0:
        return (x.p + s) // x.q
    return (x.p + s + 1) // x.q


def to_float(x: Surd) -> float:
    """Approximate real value, for reporting only."""
    return (x.p + x.d ** 0.5) / x.q


def is_reduced(x: Surd) -> bool:
    """x > 1 and -1 < conjugate(x) < 0."""
    return (
        surd_sign(x, 1) > 0
        and conjugate_sign(x, 0) < 0
        and conjugate_sign(x, -1) > 0
    )


def _is_reduced_state(p: int, q: int, s: int) -> bool:
    # integer form of is_reduced for (p + sqrt(d)) / q with s = isqrt(d)
    return q > 0 and p <= s and p + q > s and q - p <= s


# ---------------------------------------------------------
# CONTINUED FRACTION ENGINE
# ---------------------------------------------------------
def cf_step(x: Surd) -> Tuple[int, Surd]:
    """One PQa step: digit = floor(x), next = 1 / (x - digit)."""
    a = surd_floor(x)
    p_next = a * x.q - x.p
    q_next = (x.d - p_next * p_next) // x.q
    return a, Surd(p_next, q_next, x.d)


def cf_digits(x: Surd) -> Iterator[int]:
    while True:
        a, x = cf_step(x)
        yield a


def _pqa_run(p: int, q: int, d: int) -> Tuple[List[int], List[Tuple[int, int]], int]:
    """Digits and states of the PQa recurrence up to the first repeated reduced state."""
    s = isqrt(d)
    digits: List[int] = []
    states: List[Tuple[int, int]] = []
    seen: Dict[Tuple[int, int], int] = {}
    while True:
        if _is_reduced_state(p, q, s):
            start = seen.get((p, q))
            if start is not None:
                return digits, states, start
            seen[(p, q)] = len(digits)
        a = (p + s) // q if q > 0 else (p + s + 1) // q
        digits.append(a)
        states.append((p, q))
        p = a * q - p
        q = (d - p * p) // q


def cf_expand(x: Surd) -> CFExpansion:
    digits, _, start = _pqa_run(x.p, x.q, x.d)
    return CFExpansion(tuple(digits[:start]), tuple(digits[start:]))


def cf_states(x: Surd) -> Tuple[List[Surd], int]:
    """
    Surd iterates x_0, x_1, ... covering the preperiod and one period,
    plus the index where the periodic regime starts.
    """
    _, states, start = _pqa_run(x.p, x.q, x.d)
    return [Surd(p, q, x.d) for p, q in states], start


def period_matrix(e: CFExpansion) -> IntMatrix2:
    m = IntMatrix2.identity()
    for a in e.period:
        m = m @ IntMatrix2.digit(a)
    return m


def moebius_apply(g: IntMatrix2, x: Surd) -> Surd:
    """(a x + b) / (c x + d) as a canonical Surd over the same d."""
    p, q, d = x.p, x.q, x.d
    alpha = g.a * p + g.b * q
    beta = g.c * p + g.d * q
    # (alpha + a sqrt d) / (beta + c sqrt d), rationalized; sqrt(d) coefficient is q * det
    num = alpha * beta - g.a * g.c * d
    den = beta * beta - g.c * g.c * d
    if q * g.det < 0:
        num, den = -num, -den
    m = abs(q)
    if num % m or den % m:
        raise ArithmeticError(f"non-canonical input {x}")
    return surd_normalize(num // m, den // m, d)


def galois_dual(x: Surd) -> Surd:
    """-1 / conjugate(x); reverses the period of a reduced surd."""
    return moebius_apply(IntMatrix2(0, -1, 1, 0), conjugate(x))


def convergents(digits: Iterable[int], n: int) -> List[Tuple[int, int]]:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    out = []
    p_prev, p_prev2 = 1, 0
    q_prev, q_prev2 = 0, 1
    for a in digits:
        p_k = a * p_prev + p_prev2
        q_k = a * q_prev + q_prev2
        out.append((p_k, q_k))
        if len(out) == n:
            break
        p_prev2, p_prev = p_prev, p_k
        q_prev2, q_prev = q_prev, q_k
    return out
