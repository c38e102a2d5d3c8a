"""
Forms & Classes - indefinite binary quadratic forms ax^2 + bxy + cy^2.

Reduction, rho cycles (one cycle per narrow class, i.e. per closed
geodesic of discriminant d), the fundamental solution of x^2 - d y^2 = 4,
the regulator, and a breadth-first equivalence oracle used by the tests.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from math import gcd
from typing import List, Optional, Set, Tuple

from sympy import divisors, factorint

from surd_core import (
    IntMatrix2,
    InvalidInputError,
    Surd,
    cf_expand,
    is_square,
    isqrt,
    period_matrix,
    surd_normalize,
)

logger = logging.getLogger("forms-classes")


# ---------------------------------------------------------
# DOMAIN TYPES
# ---------------------------------------------------------
@dataclass(frozen=True, order=True)
class QuadForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a == 0 or self.c == 0:
            raise InvalidInputError(f"{self!r}: a and c must be nonzero")
        if gcd(gcd(self.a, self.b), self.c) != 1:
            raise InvalidInputError(f"{self!r} is not primitive")
        disc = self.disc
        if disc <= 0 or is_square(disc):
            raise InvalidInputError(f"{self!r}: discriminant {disc} must be positive and non-square")

    def __repr__(self):
        return f"QuadForm({self.a}, {self.b}, {self.c})"

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def to_json(self) -> List[int]:
        return [self.a, self.b, self.c]

    @classmethod
    def from_json(cls, data) -> "QuadForm":
        a, b, c = data
        return cls(int(a), int(b), int(c))


@dataclass(frozen=True)
class PellSolution:
    """Minimal positive (x, y) with x^2 - d y^2 = 4."""
    d: int
    x: int
    y: int

    @property
    def unit(self) -> Tuple[int, int]:
        """epsilon = (x + y sqrt d) / 2 as its (x, y) pair."""
        return self.x, self.y

    def to_json(self) -> dict:
        return {"d": str(self.d), "x": str(self.x), "y": str(self.y)}


@dataclass(frozen=True)
class ClassCycle:
    forms: Tuple[QuadForm, ...]
    root: Surd
    period: Tuple[int, ...]

    def __len__(self):
        return len(self.forms)

    @property
    def disc(self) -> int:
        return self.forms[0].disc

    def to_json(self) -> List[List[int]]:
        return [f.to_json() for f in self.forms]


# ---------------------------------------------------------
# DISCRIMINANTS
# ---------------------------------------------------------
def is_valid_discriminant(d: int) -> bool:
    return d > 0 and d % 4 in (0, 1) and not is_square(d)


def _require_valid(d: int):
    if not is_valid_discriminant(d):
        raise InvalidInputError(f"{d} is not a valid discriminant (positive, non-square, 0 or 1 mod 4)")


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorint(n).values())


def is_fundamental_discriminant(d: int) -> bool:
    _require_valid(d)
    if d % 4 == 1:
        return _squarefree(d)
    m = d // 4
    return m % 4 in (2, 3) and _squarefree(m)


# ---------------------------------------------------------
# ROOTS / REDUCTION
# ---------------------------------------------------------
def form_root(f: QuadForm) -> Surd:
    """(-b + sqrt(disc)) / (2a), one endpoint of the form's geodesic."""
    return surd_normalize(-f.b, 2 * f.a, f.disc)


def form_reduced_surd(f: QuadForm) -> Surd:
    """
    (b + sqrt(disc)) / (2|c|). Reduced whenever f is, and one CF step of it
    is the reduced surd of rho_step(f).
    """
    return Surd(f.b, 2 * abs(f.c), f.disc)


def is_reduced_form(f: QuadForm) -> bool:
    s = isqrt(f.disc)
    two_a = 2 * abs(f.a)
    # 0 < b < sqrt D and sqrt D - b < 2|a| < sqrt D + b, with sqrt D strictly between s and s+1
    return 0 < f.b <= s and s < two_a + f.b and two_a - f.b <= s


def rho_step(f: QuadForm) -> QuadForm:
    if not is_reduced_form(f):
        raise InvalidInputError(f"{f!r} is not reduced")
    disc = f.disc
    s = isqrt(disc)
    m = 2 * abs(f.c)
    # largest b' <= s with b' = -b mod 2|c|; then sqrt D - 2|c| < b' < sqrt D
    b_next = s - (s + f.b) % m
    return QuadForm(f.c, b_next, (b_next * b_next - disc) // (4 * f.c))


def principal_form(d: int) -> QuadForm:
    """The reduced form (1, b, (b^2 - d)/4) with b maximal below sqrt d."""
    _require_valid(d)
    s = isqrt(d)
    b = s if s % 2 == d % 2 else s - 1
    return QuadForm(1, b, (b * b - d) // 4)


# ---------------------------------------------------------
# ENUMERATION / CYCLES
# ---------------------------------------------------------
def enumerate_reduced_forms(d: int) -> List[QuadForm]:
    """All primitive reduced forms of discriminant d, sorted lexicographically."""
    _require_valid(d)
    s = isqrt(d)
    forms = []
    for b in range(2 - d % 2, s + 1, 2):
        n = (d - b * b) // 4  # = -ac > 0
        for t in divisors(n):
            two_t = 2 * t
            if not (s < two_t + b and two_t - b <= s):
                continue
            if gcd(gcd(t, b), n // t) != 1:
                continue
            forms.append(QuadForm(t, b, -(n // t)))
            forms.append(QuadForm(-t, b, n // t))
    forms.sort()
    return forms


def class_cycles(d: int) -> List[ClassCycle]:
    """Partition of the reduced forms into rho orbits; one cycle per narrow class."""
    forms = enumerate_reduced_forms(d)
    seen: Set[QuadForm] = set()
    cycles = []
    for start in forms:
        if start in seen:
            continue
        orbit = [start]
        f = rho_step(start)
        while f != start:
            orbit.append(f)
            f = rho_step(f)
        seen.update(orbit)
        root = form_reduced_surd(start)
        cycles.append(ClassCycle(tuple(orbit), root, cf_expand(root).period))
    logger.debug(f"d={d}: {len(cycles)} cycles over {len(forms)} reduced forms")
    return cycles


def narrow_class_number(d: int) -> int:
    return len(class_cycles(d))


def cycle_matrix(cycle: ClassCycle) -> IntMatrix2:
    """Product of digit matrices over one full rho cycle (determinant +1)."""
    m = IntMatrix2.identity()
    reps = len(cycle.forms) // len(cycle.period)
    for a in cycle.period * reps:
        m = m @ IntMatrix2.digit(a)
    return m


# ---------------------------------------------------------
# PELL / REGULATOR
# ---------------------------------------------------------
def pell4_fundamental(d: int) -> PellSolution:
    """
    Minimal positive solution of x^2 - d y^2 = 4, read off the period matrix
    of the principal cycle: x is the trace of the automorph of determinant +1.
    """
    _require_valid(d)
    root = form_reduced_surd(principal_form(d))
    e = cf_expand(root)
    m = period_matrix(e)
    if m.det == -1:
        m = m @ m
    x = m.trace
    y2, rem = divmod(x * x - 4, d)
    y = isqrt(y2)
    if rem or y * y != y2:
        raise ArithmeticError(f"trace {x} does not solve x^2 - {d} y^2 = 4")
    return PellSolution(d, x, y)


def has_negative_pell(d: int) -> bool:
    """True iff x^2 - d y^2 = -4 has a solution (odd principal period)."""
    _require_valid(d)
    return len(cf_expand(form_reduced_surd(principal_form(d))).period) % 2 == 1


def wide_class_number(d: int, h_plus: Optional[int] = None) -> int:
    """h = h+ when a unit of norm -1 exists, h+/2 otherwise."""
    if h_plus is None:
        h_plus = narrow_class_number(d)
    return h_plus if has_negative_pell(d) else h_plus // 2


def pell4_bruteforce(d: int, max_y: int = 10 ** 6) -> Optional[PellSolution]:
    """Search y = 1, 2, ... for d y^2 + 4 a perfect square. None past max_y."""
    _require_valid(d)
    for y in range(1, max_y + 1):
        t = d * y * y + 4
        x = isqrt(t)
        if x * x == t:
            return PellSolution(d, x, y)
    return None


def pell_power(sol: PellSolution, k: int) -> Tuple[int, int]:
    """(x_k, y_k) with ((x + y sqrt d)/2)^k = (x_k + y_k sqrt d)/2."""
    x, y = 2, 0
    for _ in range(k):
        x, y = (x * sol.x + sol.d * y * sol.y) // 2, (x * sol.y + y * sol.x) // 2
    return x, y


def regulator_from_pell(sol: PellSolution) -> float:
    """ln((x + y sqrt d)/2), stable for x far beyond float range."""
    # epsilon = x/2 * (1 + sqrt(1 - 4/x^2))
    ratio = 4.0 / sol.x ** 2 if sol.x.bit_length() < 512 else 0.0
    return math.log(sol.x) + math.log1p(math.sqrt(1.0 - ratio)) - math.log(2.0)


def regulator(d: int) -> float:
    return regulator_from_pell(pell4_fundamental(d))


def geodesic_length(d: int) -> float:
    """Hyperbolic length of a closed geodesic of discriminant d."""
    return 2.0 * regulator(d)


# ---------------------------------------------------------
# EQUIVALENCE ORACLE (tests only)
# ---------------------------------------------------------
def completeness_bound(d: int) -> int:
    """
    Coefficient box in which every rho step splits into generator moves.

    Along the moves S, T^j from (a,b,c) to rho(a,b,c) the middle coefficient
    stays in [-b, b'] and the last one is a parabola in j whose extreme value
    is -d/(4c), so |coefficients| <= max(d // 4, isqrt(d)).
    """
    return max(d // 4, isqrt(d)) + 1


def _neighbours(a: int, b: int, c: int):
    yield a, b + 2 * a, a + b + c      # x -> x + y
    yield a, b - 2 * a, a - b + c      # x -> x - y
    yield c, -b, a                     # (x, y) -> (-y, x)


def _explore(start: Tuple[int, int, int], bound: int, target=None):
    """BFS inside |coefficients| <= bound. Returns (visited, pruned, hit)."""
    visited = {start}
    queue = deque([start])
    pruned = False
    while queue:
        node = queue.popleft()
        if node == target:
            return visited, pruned, True
        for nb in _neighbours(*node):
            if max(abs(nb[0]), abs(nb[1]), abs(nb[2])) > bound:
                pruned = True
                continue
            if nb not in visited:
                visited.add(nb)
                queue.append(nb)
    return visited, pruned, False


def equivalence_oracle(f: QuadForm, g: QuadForm, bound: int) -> Optional[bool]:
    """
    True if g is reached from f by SL2(Z) generator moves within the box,
    False when that is conclusive, None when inconclusive.
    """
    if f.disc != g.disc:
        raise InvalidInputError("forms have different discriminants")
    if f == g:
        return True
    _, pruned, hit = _explore(tuple(f.to_json()), bound, tuple(g.to_json()))
    if hit:
        return True
    if not pruned:
        return False
    if is_reduced_form(f) and is_reduced_form(g) and bound >= completeness_bound(f.disc):
        return False
    return None


def oracle_class_count(d: int, bound: Optional[int] = None) -> int:
    """Number of classes the BFS oracle finds among the reduced forms of d."""
    bound = bound or completeness_bound(d)
    remaining = {tuple(f.to_json()) for f in enumerate_reduced_forms(d)}
    classes = 0
    while remaining:
        start = min(remaining)
        visited, _, _ = _explore(start, bound)
        remaining -= visited
        classes += 1
    return classes
