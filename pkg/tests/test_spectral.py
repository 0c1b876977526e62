from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from coalwalsh.kernel import Dyadic, Site, p, return_prob
from coalwalsh.spectral import (
    SpectralSet,
    TimeSet,
    all_time_sets,
    coefficient,
    enumerate_admissible,
    expected_size,
    gap_factor,
    is_admissible,
    noise_correlation_exact,
    projected_weights,
    q,
    r_cumulative,
    r_distribution,
    size_distribution,
)
from coalwalsh.verify import check_renewal_dp


def test_is_admissible_examples():
    assert is_admissible([(0, 0)], 1)
    assert not is_admissible([(0, 0), (2, 3)], 3)
    assert is_admissible([(1, 1), (3, -1)], 4)
    assert is_admissible([(3, -1), (1, 1)], 4)


@pytest.mark.parametrize(
    "sites,n",
    [
        ([], 3),
        ([(1, 1), (1, -1)], 3),  # repeated time
        ([(0, 0), (1, 1)], 1),  # time beyond horizon
        ([(1, 1), (2, -2)], 3),  # too fast
        ([(0, 0), (1, 0)], 2),  # parity
    ],
)
def test_is_admissible_rejects(sites, n):
    assert not is_admissible(sites, n)


def test_q_examples():
    assert q(SpectralSet([(0, 0)], 5)) == 1
    assert q(SpectralSet([(0, 0), (1, 1)], 2)) == Dyadic(1, 1)
    assert q(SpectralSet([(0, 0), (2, 0)], 3)) == 0


@pytest.mark.parametrize(
    "n,sites,d",
    [
        (1, [(0, 0)], Dyadic(1)),
        (2, [(0, 0), (1, -1)], Dyadic(-1, 1)),
        (2, [(1, 1)], Dyadic(1, 1)),
        (2, [(1, -1)], Dyadic(1, 1)),
        (2, [(0, 0), (1, 1)], Dyadic(1, 1)),
        (2, [], Dyadic(0)),
    ],
)
def test_coefficient_examples(n, sites, d):
    assert coefficient(sites, n).d == d


@pytest.mark.parametrize("sites", [[(3, 1)], [(1, 3)], [(2, 1)]])
def test_coefficient_rejects_sites_outside_index_set(sites):
    with pytest.raises(ValueError):
        coefficient(sites, 3)


def test_enumerate_small():
    assert [S.pairs for S in enumerate_admissible(1)] == [[[0, 0]]]
    n2 = {tuple(map(tuple, S.pairs)) for S in enumerate_admissible(2)}
    assert n2 == {((0, 0),), ((1, -1),), ((1, 1),), ((0, 0), (1, -1)), ((0, 0), (1, 1))}
    with pytest.raises(ValueError):
        list(enumerate_admissible(9))


@pytest.mark.parametrize("n", range(1, 5))
def test_enumeration_matches_filtered_subsets(n):
    sites = [(x, y) for x in range(n) for y in range(-x, x + 1, 2)]
    filtered = set()
    for m in range(1, len(sites) + 1):
        for combo in combinations(sites, m):
            if is_admissible(combo, n):
                filtered.add(tuple(sorted(combo)))
    listed = [tuple(map(tuple, S.pairs)) for S in enumerate_admissible(n)]
    assert len(listed) == len(set(listed))
    assert set(listed) == filtered
    assert listed == sorted(listed)


@pytest.mark.parametrize("n", range(1, 7))
def test_parseval_formula_side(n):
    assert sum(S.coefficient().squared for S in enumerate_admissible(n)) == 1


@pytest.mark.parametrize("n", range(1, 7))
def test_projection_consistency(n):
    proj = projected_weights(n)
    for R in all_time_sets(n):
        assert proj.get(R.xs, 0) == r_distribution(R)


def test_r_distribution_examples():
    assert r_distribution(TimeSet((0,), 2)) == Fraction(1, 2)
    assert r_distribution(TimeSet((1,), 2)) == Fraction(1, 4)
    assert r_distribution(TimeSet((0, 1), 2)) == Fraction(1, 4)
    assert r_distribution(TimeSet((2,), 3)) == Fraction(1, 8)


@pytest.mark.parametrize("n", range(1, 13))
def test_r_distribution_sums_to_one(n):
    assert sum(r_distribution(R) for R in all_time_sets(n)) == 1


@pytest.mark.parametrize("n", range(1, 11))
def test_cumulative_consistency(n):
    by_max = [Fraction(0)] * n
    for R in all_time_sets(n):
        by_max[R.xs[-1]] += r_distribution(R)
    total = Fraction(0)
    for k in range(n):
        total += by_max[k]
        assert total == r_cumulative(k, n)


def test_r_cumulative_examples():
    assert r_cumulative(0, 2) == Fraction(1, 2)
    assert r_cumulative(2, 5) == Fraction(3, 5)
    assert r_cumulative(6, 7) == 1
    with pytest.raises(ValueError):
        r_cumulative(3, 3)


def test_time_set_validation():
    with pytest.raises(ValueError):
        TimeSet((), 3)
    with pytest.raises(ValueError):
        TimeSet((1, 1), 3)
    with pytest.raises(ValueError):
        TimeSet((0, 3), 3)


@st.composite
def admissible_sets(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    x = draw(st.integers(0, n - 1))
    y = draw(st.sampled_from(range(-x, x + 1, 2)))
    sites = [(x, y)]
    while x < n - 1 and draw(st.booleans()):
        x2 = draw(st.integers(x + 1, n - 1))
        d = draw(st.sampled_from(range(-(x2 - x), x2 - x + 1, 2)))
        y2 = y + d
        if abs(y2) > x2:
            break
        x, y = x2, y2
        sites.append((x, y))
    return SpectralSet(sites, n)


@given(admissible_sets(), st.integers(-40, 40))
def test_q_is_shift_invariant(S, delta):
    shifted = [(x, y + 2 * delta) for x, y in S.pairs]
    assert q(shifted) == q(S)


@given(admissible_sets())
def test_coefficient_is_product_formula(S):
    x1, y1 = S.pairs[0]
    assert S.coefficient().d == p(x1, y1) * q(S)
    assert 0 <= S.coefficient().squared <= 1


@given(admissible_sets())
def test_spectral_set_json(S):
    obj = S.to_json()
    assert obj["n"] == S.n and obj["sites"] == S.pairs
    assert Dyadic.parse(obj["d"]) == S.coefficient().d


@pytest.mark.parametrize("dx", range(1, 31))
def test_gap_normalization(dx):
    total = sum((gap_factor(dx, d) ** 2 for d in range(-dx, dx + 1, 2)), Dyadic(0))
    assert total == return_prob(dx - 1) - return_prob(dx)


def test_telescoping_exact():
    u = [return_prob(x).to_fraction() for x in range(1001)]
    running = Fraction(0)
    for x in range(1, 1001):
        running += u[x - 1] - u[x]
        assert running + u[x] == 1


def test_telescoping_float():
    from coalwalsh.spectral import _float_return_probs

    u, g = _float_return_probs(1001)
    import numpy as np

    assert np.all(np.abs(np.cumsum(g) + u - 1) < 1e-12)


def test_size_distribution_examples():
    assert size_distribution(1) == [1]
    assert size_distribution(2) == [Fraction(3, 4), Fraction(1, 4)]
    assert expected_size(1) == 1
    assert expected_size(2) == Fraction(5, 4)


@pytest.mark.parametrize("n", range(1, 13))
def test_size_distribution_matches_time_sets(n):
    by_size = [Fraction(0)] * n
    for R in all_time_sets(n):
        by_size[len(R) - 1] += r_distribution(R)
    dist = size_distribution(n)
    assert dist == by_size
    assert sum(m * w for m, w in enumerate(dist, start=1)) == expected_size(n)


@pytest.mark.parametrize("n", [1, 5, 30, 64])
def test_float_mode_tracks_exact(n):
    exact = size_distribution(n, exact=True)
    approx = size_distribution(n, exact=False)
    assert max(abs(float(a) - b) for a, b in zip(exact, approx)) < 1e-12
    assert abs(float(expected_size(n, exact=True)) - expected_size(n, exact=False)) < 1e-12
    for eps in (0.0, 0.025, 0.3):
        e = noise_correlation_exact(n, eps, exact=True)
        assert abs(float(e) - noise_correlation_exact(n, eps, exact=False)) < 1e-12


def test_float_size_distribution_normalizes():
    for n in (65, 500, 3000):
        assert abs(sum(size_distribution(n)) - 1) < 1e-12


def test_noise_examples():
    for n in (1, 2, 7):
        assert noise_correlation_exact(n, 0) == 1
        assert noise_correlation_exact(n, Fraction(1, 2)) == 0
    assert noise_correlation_exact(2, Fraction(1, 4)) == Fraction(7, 16)
    assert noise_correlation_exact(2, "1/4") == Fraction(7, 16)


@pytest.mark.parametrize("eps", [-0.1, 0.6, "3/4"])
def test_noise_rejects_eps(eps):
    with pytest.raises(ValueError):
        noise_correlation_exact(3, eps)


@pytest.mark.parametrize("n", range(1, 7))
def test_renewal_dps_match_enumeration(n):
    result = check_renewal_dp(n)
    assert result.passed and not result.skipped, result.detail


@settings(max_examples=40)
@given(st.integers(1, 40), st.fractions(0, Fraction(1, 2)), st.fractions(0, Fraction(1, 2)))
def test_noise_dp_strictly_decreasing(n, a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    assert noise_correlation_exact(n, lo) > noise_correlation_exact(n, hi)


@pytest.mark.parametrize("n", range(1, 9))
def test_noise_equals_spectral_sum(n):
    lam = Fraction(1, 3)
    eps = (1 - lam) / 2
    direct = sum(S.coefficient().squared * lam ** len(S) for S in enumerate_admissible(n))
    assert noise_correlation_exact(n, eps) == direct
