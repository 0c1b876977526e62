"""Exact certification checks shared by ``coalwalsh verify`` and the test suite.

Each check returns a :class:`CheckResult`; none raises on a failed identity.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .kernel import first_return_prob
from .oracle import (
    ORACLE_LIMIT,
    SignArray,
    brute_force_transform,
    conditional_oracle,
    index_set_size,
    conditional_closed_form,
    site_order,
    walk_endpoint,
)
from .sampler import WALK_ENUM_LIMIT, walk_zero_mixture
from .spectral import (
    SpectralSet,
    all_time_sets,
    coefficient,
    enumerate_admissible,
    gap_factor,
    is_admissible,
    noise_correlation_exact,
    projected_weights,
    r_cumulative,
    r_distribution,
    size_distribution,
)

CONDITIONAL_LIMIT = 4
CUMULATIVE_LIMIT = 10
DIRECT_MASK_LIMIT = 1 << 15


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    skipped: bool = False

    def to_json(self) -> dict:
        """Reportable fields; wall time is left out so reports stay reproducible."""
        return {
            "name": self.name,
            "passed": self.passed,
            "skipped": self.skipped,
            "detail": self.detail,
        }


def _timed(name, fn, *args):
    t0 = time.perf_counter()
    passed, detail = fn(*args)
    return CheckResult(name, passed, detail, time.perf_counter() - t0)


def _skip(name, why):
    return CheckResult(name, True, why, 0.0, skipped=True)


# --------------------------------------------------------------------------


def _oracle_vs_formula(n, transform=None):
    T = transform or brute_force_transform(n)
    N = index_set_size(n)
    if len(T) <= DIRECT_MASK_LIMIT:
        order = site_order(n)
        for mask in range(len(T)):
            sites = [order[i] for i in range(N) if mask >> i & 1]
            if T.value(mask) != coefficient(sites, n).d:
                return False, f"mask {mask}: oracle {T.value(mask)} vs formula {coefficient(sites, n).d}"
        return True, f"all {len(T)} subsets agree"
    expected = np.zeros(len(T), np.int64)
    for S in enumerate_admissible(n):
        d = S.coefficient().d
        expected[S.mask()] = d.numerator << (N - d.exponent)
    bad = np.flatnonzero(expected != T.raw)
    if bad.size:
        return False, f"{bad.size} masks disagree, first {int(bad[0])}"
    return True, f"all {len(T)} subsets agree"


def check_oracle_formula(n, transform=None):
    if n > ORACLE_LIMIT:
        return _skip("oracle_vs_formula", f"n={n} above oracle bound {ORACLE_LIMIT}")
    return _timed("oracle_vs_formula", _oracle_vs_formula, n, transform)


def _parseval(n, transform=None):
    formula = sum(S.coefficient().squared for S in enumerate_admissible(n))
    if formula != 1:
        return False, f"formula side sums to {formula}"
    if n <= ORACLE_LIMIT:
        oracle = (transform or brute_force_transform(n)).parseval_sum()
        if oracle != 1:
            return False, f"oracle side sums to {oracle}"
        return True, "formula and oracle sides sum to 1"
    return True, "formula side sums to 1"


def check_parseval(n, transform=None):
    return _timed("parseval", _parseval, n, transform)


def _projection(n):
    proj = projected_weights(n)
    for R in all_time_sets(n):
        if proj.get(R.xs, Fraction(0)) != r_distribution(R):
            return False, f"R={R.xs}: projected {proj.get(R.xs, 0)} vs law {r_distribution(R)}"
    return True, f"all {2**n - 1} time sets agree"


def check_projection(n):
    return _timed("projection_law", _projection, n)


def _cumulative(n):
    by_max = [Fraction(0)] * n
    for R in all_time_sets(n):
        by_max[R.xs[-1]] += r_distribution(R)
    total = Fraction(0)
    for k in range(n):
        total += by_max[k]
        if total != r_cumulative(k, n):
            return False, f"k={k}: {total} vs {r_cumulative(k, n)}"
    return True, f"P(R in [0,k]) = (k+1)/{n} for all k"


def check_cumulative(n):
    if n > CUMULATIVE_LIMIT:
        return _skip("cumulative_law", f"n={n} above {CUMULATIVE_LIMIT}")
    return _timed("cumulative_law", _cumulative, n)


def _conditional_closed_form_check(n):
    N = index_set_size(n)
    order = site_order(n)
    checked = 0
    for k in range(n - 1):
        low = index_set_size(k + 1)
        later = order[low:]
        for bits in range(1 << low):
            prefix = SignArray(k + 1, bits)
            w_next = walk_endpoint(prefix)
            if conditional_oracle((n, []), k, prefix) != w_next:
                return False, f"E[W(n) | prefix] != W(k+1) at k={k}, prefix={bits}"
            for smask in range(1, 1 << (N - low)):
                sites = [later[i] for i in range(N - low) if smask >> i & 1]
                got = conditional_oracle((n, sites), k, prefix)
                if is_admissible(sites, n):
                    want = conditional_closed_form(SpectralSet(sites, n), k, w_next)
                else:
                    want = 0
                if got != want:
                    return False, f"k={k}, prefix={bits}, S={[(s.x, s.y) for s in sites]}: {got} vs {want}"
                checked += 1
    return True, f"{checked} (S, k, prefix) triples agree"


def _conditional_second_moment_check(n, transform=None):
    """Sum of squared coefficients over S1 in E equals the conditional second moment."""
    T = transform or brute_force_transform(n)
    N = index_set_size(n)
    order = site_order(n)
    for k in range(n - 1):
        low = index_set_size(k + 1)
        for tmask in range(0, 1 << (N - low)):
            tsites = [order[low + i] for i in range(N - low) if tmask >> i & 1]
            lhs = sum(T.value(s1 | (tmask << low)).to_fraction() ** 2 for s1 in range(1 << low)) / n
            second = sum(
                conditional_oracle((n, tsites), k, SignArray(k + 1, bits)).to_fraction() ** 2
                for bits in range(1 << low)
            )
            rhs = second / (n << low)
            if lhs != rhs:
                return False, f"k={k}, T={tmask}: {lhs} vs {rhs}"
    return True, "conditional second moments match coefficient sums"


def check_conditional_closed_form(n):
    if n > CONDITIONAL_LIMIT:
        return _skip("conditional_closed_form", f"exhaustive check limited to n <= {CONDITIONAL_LIMIT}")
    return _timed("conditional_closed_form", _conditional_closed_form_check, n)


def check_conditional_second_moment(n, transform=None):
    if n > CONDITIONAL_LIMIT:
        return _skip("conditional_second_moment", f"exhaustive check limited to n <= {CONDITIONAL_LIMIT}")
    return _timed("conditional_second_moment", _conditional_second_moment_check, n, transform)


def _walk_zeros(n):
    mix = walk_zero_mixture(n)
    for R in all_time_sets(n):
        if mix.get(R.xs, Fraction(0)) != r_distribution(R):
            return False, f"R={R.xs}: walk zeros {mix.get(R.xs, 0)} vs law {r_distribution(R)}"
    return True, f"all {2**n - 1} time sets agree"


def check_walk_zeros(n):
    if n - 1 > WALK_ENUM_LIMIT:
        return _skip("walk_zero_law", f"n={n} above walk enumeration bound")
    return _timed("walk_zero_law", _walk_zeros, n)


_DP_EPS = (Fraction(0), Fraction(1, 10), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2))


def _renewal_dp(n):
    by_size = [Fraction(0)] * n
    for S in enumerate_admissible(n):
        by_size[len(S) - 1] += S.coefficient().squared
    dp = size_distribution(n, exact=True)
    if dp != by_size:
        return False, "size distribution DP differs from enumeration"
    for eps in _DP_EPS:
        lam = 1 - 2 * eps
        direct = sum(w * lam ** (m + 1) for m, w in enumerate(by_size))
        if noise_correlation_exact(n, eps, exact=True) != direct:
            return False, f"noise DP differs from enumeration at eps={eps}"
    return True, "size and noise DPs match enumeration"


def check_renewal_dp(n):
    if n > 6:
        return _skip("renewal_dp", "enumeration check limited to n <= 6")
    return _timed("renewal_dp", _renewal_dp, n)


def _gap_normalization(max_gap):
    for dx in range(1, max_gap + 1):
        total = sum(gap_factor(dx, d) ** 2 for d in range(-dx, dx + 1, 2))
        if total != first_return_prob(dx):
            return False, f"gap {dx}: {total} vs {first_return_prob(dx)}"
    return True, f"gaps 1..{max_gap} normalize"


def check_gap_normalization(max_gap=30):
    return _timed("gap_normalization", _gap_normalization, max_gap)


def run_suite(n: int, oracle: bool = True) -> list[CheckResult]:
    """All exact checks applicable at horizon ``n``.

    ``oracle=False`` skips the brute-force comparisons.
    """
    results = []
    transform = brute_force_transform(n) if oracle and n <= ORACLE_LIMIT else None
    if oracle:
        results.append(check_oracle_formula(n, transform))
    if n <= 8:
        results.append(check_parseval(n, transform))
        results.append(check_projection(n))
    results.append(check_cumulative(n))
    if oracle:
        results.append(check_conditional_closed_form(n))
        results.append(check_conditional_second_moment(n, transform))
    results.append(check_walk_zeros(n))
    results.append(check_renewal_dp(n))
    results.append(check_gap_normalization())
    return results
