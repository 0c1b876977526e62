from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from coalwalsh.kernel import Dyadic, Site, binomial, first_return_prob, p, return_prob

dyadics = st.builds(Dyadic, st.integers(-(10**30), 10**30), st.integers(0, 80))


@pytest.mark.parametrize("a,b,expected", [(0, 0, 1), (4, 2, 6), (3, 5, 0), (5, -1, 0), (40, 20, 137846528820)])
def test_binomial(a, b, expected):
    assert binomial(a, b) == expected


def test_binomial_matches_pascal():
    row = [1]
    for a in range(1, 60):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
        assert [binomial(a, b) for b in range(a + 1)] == row


def test_p_examples():
    assert p(0, 0) == 1
    assert p(3, 1) == Fraction(3, 8)
    assert p(2, 1) == 0
    assert p(1, 3) == 0
    assert p(0, 2) == 0 and p(0, -2) == 0


def test_p_rejects_negative_time():
    with pytest.raises(ValueError):
        p(-1, 0)


@pytest.mark.parametrize("k,expected", [(0, Fraction(1)), (1, Fraction(1, 2)), (3, Fraction(5, 16))])
def test_return_prob(k, expected):
    assert return_prob(k) == expected


def test_first_return_prob_small():
    # first return of a simple walk at time 2: 1/2, at time 4: 1/8
    assert first_return_prob(1) == Fraction(1, 2)
    assert first_return_prob(2) == Fraction(1, 8)


def _support(x):
    return range(-x, x + 1, 2)


@pytest.mark.parametrize("x", range(0, 40))
def test_kernel_identities(x):
    assert all(p(x, y) == p(x, -y) for y in range(-x - 2, x + 3))
    assert sum((p(x, y) for y in _support(x)), Dyadic(0)) == 1
    assert sum((p(x, y) * p(x, y) for y in _support(x)), Dyadic(0)) == return_prob(x)


def test_chapman_kolmogorov():
    for total in range(0, 21):
        for x1 in range(total + 1):
            x2 = total - x1
            for y in range(-total - 1, total + 2):
                conv = sum((p(x1, z) * p(x2, y - z) for z in range(-x1, x1 + 1)), Dyadic(0))
                assert conv == p(total, y)


class TestDyadic:
    def test_canonical_form(self):
        d = Dyadic(12, 5)
        assert (d.numerator, d.exponent) == (3, 3)
        assert (Dyadic(0, 9).numerator, Dyadic(0, 9).exponent) == (0, 0)
        assert Dyadic(3, -2) == 12

    def test_string_round_trip(self):
        assert str(Dyadic(-1, 1)) == "-1/2^1"
        assert Dyadic.parse("-1/2^1") == Dyadic(-1, 1)
        assert Dyadic.parse(" 8/2^4 ") == Dyadic(1, 1)
        with pytest.raises(ValueError):
            Dyadic.parse("1/3")

    def test_float_is_round_to_nearest(self):
        d = Dyadic((1 << 60) + 1, 60)
        assert float(d) == float(Fraction((1 << 60) + 1, 1 << 60))

    def test_rejects_non_dyadic_fraction(self):
        with pytest.raises(ValueError):
            Dyadic.coerce(Fraction(1, 3))

    def test_immutable(self):
        with pytest.raises(AttributeError):
            Dyadic(1).numerator = 3

    @given(dyadics, dyadics)
    def test_add_sub_round_trip(self, a, b):
        assert (a + b) - b == a
        assert (a + b).to_fraction() == a.to_fraction() + b.to_fraction()

    @given(dyadics, dyadics)
    def test_mul_matches_fractions(self, a, b):
        assert (a * b).to_fraction() == a.to_fraction() * b.to_fraction()
        assert a.half().to_fraction() == a.to_fraction() / 2

    @given(dyadics, dyadics)
    def test_results_stay_canonical(self, a, b):
        for v in (a + b, a - b, a * b, a.half(), -a):
            assert v.exponent == 0 or v.numerator % 2 == 1
            assert v.exponent >= 0

    @given(dyadics)
    def test_equal_values_hash_equal(self, a):
        assert hash(a) == hash(Dyadic.coerce(a.to_fraction()))


def test_site_validation_and_index():
    with pytest.raises(ValueError):
        Site(2, 1)
    with pytest.raises(ValueError):
        Site(1, 3)
    order = [Site(x, y) for x in range(6) for y in range(-x, x + 1, 2)]
    assert [s.index() for s in order] == list(range(len(order)))
    assert all(Site.from_index(i) == s for i, s in enumerate(order))
