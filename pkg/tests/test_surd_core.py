import math
import random

import pytest

from surd_core import (
    CFExpansion,
    IntMatrix2,
    InvalidInputError,
    Surd,
    cf_digits,
    cf_expand,
    cf_states,
    cf_step,
    conjugate,
    conjugate_sign,
    convergents,
    galois_dual,
    is_reduced,
    is_square,
    isqrt,
    moebius_apply,
    period_matrix,
    surd_floor,
    surd_normalize,
    surd_sign,
    to_float,
)

GOLDEN = Surd(1, 2, 5)
SQRT2 = Surd(0, 1, 2)
SQRT7 = Surd(0, 1, 7)


def random_surds(seed, count, d_max=10 ** 4, pq_max=20):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        d = rng.randint(2, d_max)
        q = rng.randint(-pq_max, pq_max)
        if is_square(d) or q == 0:
            continue
        out.append(surd_normalize(rng.randint(-pq_max, pq_max), q, d))
    return out


# ---------------------------------------------------------
# integer square root
# ---------------------------------------------------------
@pytest.mark.parametrize("n", [0, 1, 2, 3, 4, 15, 16, 17, 99, 10 ** 20 - 1, 10 ** 20, 2 ** 127 + 5])
def test_isqrt_floor_property(n):
    s = isqrt(n)
    assert s * s <= n < (s + 1) * (s + 1)
    assert s == math.isqrt(n)


def test_isqrt_rejects_negative():
    with pytest.raises(InvalidInputError):
        isqrt(-1)


# ---------------------------------------------------------
# normalization / comparison
# ---------------------------------------------------------
def test_normalize_keeps_canonical_triples():
    assert surd_normalize(0, 1, 7) == Surd(0, 1, 7)
    assert surd_normalize(1, 2, 5) == Surd(1, 2, 5)


def test_normalize_scales_by_abs_q():
    x = surd_normalize(1, 3, 2)
    assert x == Surd(3, 9, 18)
    assert to_float(x) == pytest.approx((1 + math.sqrt(2)) / 3)


def test_normalize_reduce_divides_common_content():
    assert surd_normalize(2, 2, 8, reduce=True) == Surd(1, 1, 2)
    # (1 + sqrt 2)/3 is not canonical, so nothing can be divided out
    assert surd_normalize(3, 9, 18, reduce=True) == Surd(3, 9, 18)
    assert surd_normalize(2, 2, 8) == Surd(2, 2, 8)


@pytest.mark.parametrize("p,q,d", [(0, 1, 16), (1, 0, 5), (1, 1, 0), (1, 1, -3)])
def test_normalize_rejects_bad_input(p, q, d):
    with pytest.raises(InvalidInputError):
        surd_normalize(p, q, d)


def test_surd_constructor_enforces_divisibility():
    with pytest.raises(InvalidInputError):
        Surd(1, 3, 2)


def test_surd_constructor_rejects_square_radicand():
    with pytest.raises(InvalidInputError):
        Surd(0, 1, 4)
    with pytest.raises(InvalidInputError):
        Surd.from_json({"p": "1", "q": "3", "d": "49"})


def test_surd_sign_examples():
    assert surd_sign(SQRT2, 1) == 1
    assert conjugate_sign(GOLDEN, 0) == -1
    assert surd_sign(Surd(2, 3, 7), 3, 2) == 1
    assert surd_sign(SQRT2, 3, 2) == -1


def test_surd_sign_matches_float_on_random_grid():
    rng = random.Random(11)
    for x in random_surds(5, 300):
        u, v = rng.randint(-60, 60), rng.randint(1, 9)
        diff = to_float(x) - u / v
        if abs(diff) > 1e-9:
            assert surd_sign(x, u, v) == (1 if diff > 0 else -1)


def test_surd_floor_against_exact_oracle():
    for x in random_surds(7, 500):
        a = surd_floor(x)
        assert surd_sign(x, a) > 0
        assert surd_sign(x, a + 1) < 0


def test_conjugate_value():
    assert to_float(conjugate(GOLDEN)) == pytest.approx((1 - math.sqrt(5)) / 2)


def test_surd_json_round_trip():
    x = Surd(3, 9, 18)
    assert x.to_json() == {"p": "3", "q": "9", "d": "18"}
    assert Surd.from_json(x.to_json()) == x


# ---------------------------------------------------------
# CF engine
# ---------------------------------------------------------
def test_cf_step_examples():
    assert cf_step(SQRT7) == (2, Surd(2, 3, 7))
    assert cf_step(Surd(2, 3, 7)) == (1, Surd(1, 2, 7))
    assert cf_step(GOLDEN) == (1, GOLDEN)


def test_cf_expand_sqrt7():
    e = cf_expand(SQRT7)
    assert e.preperiod == (2,)
    assert e.period == (1, 1, 1, 4)


def test_cf_expand_sqrt2_and_golden():
    assert cf_expand(SQRT2) == CFExpansion((1,), (2,))
    assert cf_expand(GOLDEN) == CFExpansion((), (1,))


def test_cf_digits_stream_matches_expansion():
    stream = cf_digits(SQRT7)
    assert [next(stream) for _ in range(9)] == [2, 1, 1, 1, 4, 1, 1, 1, 4]
    e = cf_expand(SQRT7)
    digits = e.digits()
    assert [next(digits) for _ in range(9)] == [2, 1, 1, 1, 4, 1, 1, 1, 4]


def test_cf_states_start_index():
    states, start = cf_states(SQRT7)
    assert start == 1
    assert states[0] == SQRT7
    assert states[1] == Surd(2, 3, 7)
    assert len(states) == 5


def test_cf_expand_negative_denominator():
    # (1 - sqrt 5)/2 = -1 + 1/((3 + sqrt 5)/2)
    x = conjugate(GOLDEN)
    e = cf_expand(x)
    assert e.preperiod == (-1, 2)
    assert e.period == (1,)


def test_step_soundness_on_random_surds():
    for x in random_surds(3, 200):
        a, y = cf_step(x)
        assert moebius_apply(IntMatrix2.digit(a), y) == x
        assert surd_sign(y, 1) > 0


def test_tail_states_are_reduced_and_bounded():
    for x in random_surds(4, 200):
        states, start = cf_states(x)
        for s in states[start:]:
            assert is_reduced(s)
            assert 0 < s.p <= isqrt(s.d)
            assert 0 < s.q and s.q * s.q < 4 * s.d


# ---------------------------------------------------------
# reduced surds (pure periodicity)
# ---------------------------------------------------------
def test_is_reduced_examples():
    assert is_reduced(GOLDEN)
    assert not is_reduced(SQRT2)
    assert is_reduced(Surd(2, 3, 7))


def test_pure_periodicity_iff_reduced():
    for x in random_surds(2024, 1000):
        assert (cf_expand(x).preperiod == ()) == is_reduced(x)


def test_pure_periodicity_iff_reduced_small_grid():
    for d in range(2, 61):
        if is_square(d):
            continue
        for p in range(-10, 11):
            for q in range(-10, 11):
                if q:
                    x = surd_normalize(p, q, d)
                    assert (cf_expand(x).preperiod == ()) == is_reduced(x), x


def test_galois_dual_reverses_period():
    seen = 0
    for x in random_surds(99, 1000):
        if not is_reduced(x):
            continue
        seen += 1
        dual = galois_dual(x)
        assert is_reduced(dual)
        assert cf_expand(dual).period == tuple(reversed(cf_expand(x).period))
    assert seen > 0


def test_galois_dual_sqrt7_tail():
    x = Surd(2, 3, 7)
    assert cf_expand(galois_dual(x)).period == (4, 1, 1, 1)


# ---------------------------------------------------------
# Moebius action / matrices
# ---------------------------------------------------------
def test_moebius_examples():
    assert moebius_apply(IntMatrix2.identity(), SQRT2) == SQRT2
    assert moebius_apply(IntMatrix2(1, 1, 0, 1), SQRT2) == Surd(1, 1, 2)
    assert moebius_apply(IntMatrix2(0, 1, 1, 0), SQRT2) == Surd(0, 2, 2)
    assert to_float(Surd(0, 2, 2)) == pytest.approx(1 / math.sqrt(2))


def test_moebius_matches_float_evaluation():
    rng = random.Random(8)
    gens = [IntMatrix2(1, 1, 0, 1), IntMatrix2(0, -1, 1, 0), IntMatrix2(2, 1, 1, 0)]
    for x in random_surds(8, 100):
        g = IntMatrix2.identity()
        for _ in range(3):
            g = g @ rng.choice(gens)
        v = to_float(x)
        expected = (g.a * v + g.b) / (g.c * v + g.d)
        assert to_float(moebius_apply(g, x)) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_int_matrix_rejects_bad_determinant():
    with pytest.raises(InvalidInputError):
        IntMatrix2(2, 0, 0, 1)


def test_period_matrix_fixes_reduced_surds():
    for x in random_surds(17, 400):
        if is_reduced(x):
            e = cf_expand(x)
            m = period_matrix(e)
            assert m.det == (-1) ** len(e.period)
            assert moebius_apply(m, x) == x


# ---------------------------------------------------------
# convergents
# ---------------------------------------------------------
def test_convergents_sqrt2():
    conv = convergents(cf_expand(SQRT2).digits(), 3)
    assert conv == [(1, 1), (3, 2), (7, 5)]
    assert 7 * 7 - 2 * 5 * 5 == -1


def test_convergents_golden_fibonacci():
    assert convergents(cf_expand(GOLDEN).digits(), 3) == [(1, 1), (2, 1), (3, 2)]


def test_convergents_single():
    assert convergents(iter([5, 1, 2]), 1) == [(5, 1)]
    with pytest.raises(InvalidInputError):
        convergents(iter([1]), 0)
