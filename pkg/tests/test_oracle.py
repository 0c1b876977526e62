import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coalwalsh.kernel import Dyadic, Site
from coalwalsh.oracle import (
    FullTransform,
    SignArray,
    brute_force_transform,
    conditional_oracle,
    index_set_size,
    conditional_closed_form,
    mask_to_sites,
    memory_estimate,
    site_order,
    sites_to_mask,
    walk_endpoint,
)
from coalwalsh.spectral import SpectralSet, coefficient, is_admissible
from coalwalsh.verify import check_conditional_second_moment, check_conditional_closed_form, check_oracle_formula


def test_site_order_is_row_major_bijection():
    order = site_order(4)
    assert order[:4] == [Site(0, 0), Site(1, -1), Site(1, 1), Site(2, -2)]
    assert len(order) == index_set_size(4) == 10
    for mask in (0, 1, 0b1010010110, (1 << 10) - 1):
        assert sites_to_mask(mask_to_sites(mask, 4)) == mask


def test_walk_endpoint_examples():
    assert walk_endpoint(SignArray.from_signs(1, {(0, 0): 1})) == 1
    assert walk_endpoint(SignArray.from_signs(2, {(0, 0): 1, (1, 1): -1})) == 0
    assert walk_endpoint(SignArray.from_signs(2, {(0, 0): 1, (1, 1): -1, (1, -1): 1})) == 0


def test_second_moment_is_n():
    n = 4
    total = sum(walk_endpoint(SignArray(n, bits)) ** 2 for bits in range(1 << index_set_size(n)))
    assert Fraction(total, 1 << index_set_size(n)) == 4


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << index_set_size(n)) - 1))))
def test_walk_endpoint_ignores_off_path_signs(case):
    n, bits = case
    tau = SignArray(n, bits)
    path = [0]
    for x in range(n):
        path.append(path[-1] + tau.sign(x, path[-1]))
    assert walk_endpoint(tau) == path[-1]
    assert abs(path[-1]) <= n and (path[-1] - n) % 2 == 0
    for site in site_order(n):
        if site.y != path[site.x]:
            assert walk_endpoint(tau.flipped(1 << site.index())) == path[-1]


def test_sign_array_validation():
    with pytest.raises(ValueError):
        SignArray(2, 1 << 3)
    with pytest.raises(ValueError):
        SignArray.from_signs(2, {(2, 0): -1})
    assert SignArray(2, 0b101).to_array().tolist() == [-1, 1, -1]


def test_transform_n1_and_n2():
    T1 = brute_force_transform(1)
    assert [T1.value(m) for m in range(2)] == [0, 1]
    T2 = brute_force_transform(2)
    table = {
        ((0, 0),): Dyadic(1),
        ((1, 1),): Dyadic(1, 1),
        ((1, -1),): Dyadic(1, 1),
        ((0, 0), (1, 1)): Dyadic(1, 1),
        ((0, 0), (1, -1)): Dyadic(-1, 1),
    }
    for mask in range(8):
        key = tuple((s.x, s.y) for s in mask_to_sites(mask, 2))
        assert T2.value(mask) == table.get(key, 0)


@pytest.mark.parametrize("n", range(1, 6))
def test_oracle_equals_formula(n, backend):
    T = brute_force_transform(n, backend=backend)
    assert T.value(0) == 0
    assert T.parseval_sum() == 1
    result = check_oracle_formula(n, T)
    assert result.passed, result.detail


def test_non_admissible_masks_vanish():
    n = 4
    T = brute_force_transform(n)
    order = site_order(n)
    for mask in range(len(T)):
        sites = [order[i] for i in range(len(order)) if mask >> i & 1]
        if not is_admissible(sites, n):
            assert T.raw[mask] == 0


def test_backends_agree_at_n6():
    a = brute_force_transform(6, backend="numba")
    b = brute_force_transform(6, backend="numpy")
    assert np.array_equal(a.raw, b.raw)
    assert a.parseval_sum() == 1


def test_refuses_large_n_with_cost():
    with pytest.raises(ValueError, match="MiB"):
        brute_force_transform(7)
    assert memory_estimate(7) == 8 << 28


def test_dump_round_trip(tmp_path):
    T = brute_force_transform(3)
    path = tmp_path / "t.bin"
    T.dump(path)
    U = FullTransform.load(path)
    assert (U.n, U.exponent) == (T.n, T.exponent)
    assert np.array_equal(U.raw, T.raw)
    blob = path.read_bytes()
    assert blob[:4] == b"CWFT"
    assert len(blob) == 4 + 16 + 8 * 6 + 8 * (1 << 6)


def test_json_export(tmp_path):
    obj = brute_force_transform(2).to_json()
    assert obj["site_order"] == [[0, 0], [1, -1], [1, 1]]
    assert [Dyadic.parse(d) for d in obj["d"]][1] == 1
    json.dumps(obj)
    with pytest.raises(ValueError):
        brute_force_transform(5).to_json()


def test_conditional_oracle_examples():
    plus = SignArray.from_signs(1, {(0, 0): 1})
    minus = SignArray.from_signs(1, {(0, 0): -1})
    S = SpectralSet([(1, 1)], 2)
    assert conditional_oracle(S, 0, plus) == 1
    assert conditional_oracle(S, 0, minus) == 0
    assert conditional_closed_form(S, 0, 1) == 1
    assert conditional_closed_form(S, 0, -1) == 0


def test_conditional_oracle_errors():
    prefix = SignArray(1, 0)
    with pytest.raises(ValueError):
        conditional_oracle((3, [(0, 0)]), 0, prefix)
    with pytest.raises(ValueError):
        conditional_oracle((3, [(2, 0)]), 0, SignArray(2, 0))
    with pytest.raises(ValueError):
        conditional_oracle((6, [(5, 1)]), 0, prefix)


@pytest.mark.parametrize("n", range(2, 5))
def test_conditional_closed_form_exhaustive(n):
    result = check_conditional_closed_form(n)
    assert result.passed and not result.skipped, result.detail


@pytest.mark.parametrize("n", range(2, 5))
def test_conditional_second_moment(n):
    result = check_conditional_second_moment(n)
    assert result.passed and not result.skipped, result.detail


def test_conditional_oracle_on_admissible_set_at_n5():
    n, k = 5, 1
    for sites in ([(2, 0), (4, 2)], [(3, -1)], [(2, 2), (3, 1), (4, 0)]):
        S = SpectralSet(sites, n)
        for bits in range(1 << index_set_size(k + 1)):
            prefix = SignArray(k + 1, bits)
            assert conditional_oracle(S, k, prefix) == conditional_closed_form(S, k, walk_endpoint(prefix))
