"""Fourier-Walsh coefficients of the rescaled endpoint and the laws they induce.

``xi = W(n) / sqrt(n)``; every coefficient is ``d / sqrt(n)`` with ``d`` a
dyadic rational, so this module works with ``d`` and leaves the global
``n**-0.5`` factor implicit. Squared weights ``d**2 / n`` are
:class:`fractions.Fraction`.

Distribution-level quantities (``size_distribution``, ``expected_size``,
``noise_correlation_exact``) run exact for ``n <= EXACT_LIMIT`` and in
double precision above, unless ``exact=`` is given explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .kernel import ONE, ZERO, Dyadic, Site, binomial, p, return_prob

EXACT_LIMIT = 64
ENUMERATION_LIMIT = 8

__all__ = [
    "SpectralSet",
    "TimeSet",
    "SpectralWeight",
    "is_admissible",
    "q",
    "gap_factor",
    "coefficient",
    "enumerate_admissible",
    "projected_weights",
    "r_distribution",
    "r_cumulative",
    "all_time_sets",
    "size_distribution",
    "expected_size",
    "noise_correlation_exact",
    "arithmetic_mode",
]


def _as_site(s) -> Site:
    return s if isinstance(s, Site) else Site(int(s[0]), int(s[1]))


def _sorted_pairs(sites) -> list[tuple[int, int]]:
    return sorted((int(s[0]), int(s[1])) if not isinstance(s, Site) else (s.x, s.y) for s in sites)


def is_admissible(sites: Iterable, n: int) -> bool:
    """True iff the sites (in any order) form a set with nonzero-coefficient support shape.

    That is: nonempty, distinct ascending times in ``[0, n)``, every point a
    lattice site with ``|y_1| <= x_1``, and consecutive positions moving no
    faster than one unit per time step.
    """
    pts = _sorted_pairs(sites)
    if not pts or n < 1:
        return False
    prev = None
    for x, y in pts:
        if x < 0 or x >= n or abs(y) > x or (x + y) % 2:
            return False
        if prev is not None:
            px, py = prev
            if x == px or abs(y - py) > x - px:
                return False
        prev = (x, y)
    return True


@dataclass(frozen=True)
class TimeSet:
    """Projection of a spectral set onto the time axis."""

    xs: tuple[int, ...]
    n: int

    def __post_init__(self):
        xs = tuple(int(x) for x in self.xs)
        object.__setattr__(self, "xs", xs)
        if not xs:
            raise ValueError("time set must be nonempty")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"times must be strictly ascending: {xs}")
        if xs[0] < 0 or xs[-1] >= self.n:
            raise ValueError(f"times must lie in [0, {self.n})")

    def __len__(self):
        return len(self.xs)

    def mask(self) -> int:
        return sum(1 << x for x in self.xs)


@dataclass(frozen=True)
class SpectralWeight:
    """Coefficient ``xi_hat(S) = d / sqrt(n)``."""

    d: Dyadic
    n: int

    @property
    def value(self) -> float:
        return float(self.d) / self.n**0.5

    @property
    def squared(self) -> Fraction:
        """``xi_hat(S)**2`` as an exact rational."""
        return self.d.to_fraction() ** 2 / self.n


@dataclass(frozen=True)
class SpectralSet:
    """An admissible site set, ascending in time."""

    sites: tuple[Site, ...]
    n: int

    def __post_init__(self):
        sites = tuple(sorted(_as_site(s) for s in self.sites))
        object.__setattr__(self, "sites", sites)
        if not is_admissible(sites, self.n):
            raise ValueError(f"not admissible for n={self.n}: {[(s.x, s.y) for s in sites]}")

    @classmethod
    def _trusted(cls, pairs, n):
        obj = object.__new__(cls)
        object.__setattr__(obj, "sites", tuple(Site(x, y) for x, y in pairs))
        object.__setattr__(obj, "n", n)
        return obj

    def __len__(self):
        return len(self.sites)

    @property
    def times(self) -> TimeSet:
        return TimeSet(tuple(s.x for s in self.sites), self.n)

    @property
    def pairs(self) -> list[list[int]]:
        return [[s.x, s.y] for s in self.sites]

    def coefficient(self) -> SpectralWeight:
        first = self.sites[0]
        return SpectralWeight(p(first.x, first.y) * q(self), self.n)

    def mask(self) -> int:
        """Bitmask over the row-major site ordering."""
        return sum(1 << s.index() for s in self.sites)

    def shifted(self, delta: int) -> "SpectralSet":
        return SpectralSet(tuple((s.x, s.y + delta) for s in self.sites), self.n)

    def to_json(self) -> dict:
        w = self.coefficient()
        return {"n": self.n, "sites": self.pairs, "d": str(w.d), "weight": float(w.squared)}


@lru_cache(maxsize=4096)
def gap_factor(dx: int, dy: int) -> Dyadic:
    """One factor of ``q``: ``(p(dx-1, dy-1) - p(dx-1, dy+1)) / 2`` for a time gap ``dx >= 1``."""
    if dx < 1:
        raise ValueError("time gap must be positive")
    return (p(dx - 1, dy - 1) - p(dx - 1, dy + 1)).half()


def q(S) -> Dyadic:
    """Product of gap factors over consecutive sites; 1 for a single site.

    Only differences enter, so raw ``(x, y)`` chains outside the cone are
    accepted too; the value is invariant under a common vertical shift.
    """
    if isinstance(S, SpectralSet):
        pts = [(s.x, s.y) for s in S.sites]
    else:
        pts = sorted((s.x, s.y) if isinstance(s, Site) else (int(s[0]), int(s[1])) for s in S)
    out = ONE
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        out = out * gap_factor(bx - ax, by - ay)
        if not out:
            return ZERO
    return out


def coefficient(sites: Sequence, n: int) -> SpectralWeight:
    """``xi_hat(S)`` for any subset ``S`` of the index set.

    Raises ``ValueError`` if a site lies outside the index set; returns
    ``d = 0`` for the empty set and for every non-admissible set.
    """
    pts = []
    for s in sites:
        x, y = (s.x, s.y) if isinstance(s, Site) else (int(s[0]), int(s[1]))
        if x < 0 or x >= n or abs(y) > x or (x + y) % 2:
            raise ValueError(f"site ({x}, {y}) is outside the index set for n={n}")
        pts.append((x, y))
    if not is_admissible(pts, n):
        return SpectralWeight(ZERO, n)
    pts.sort()
    x1, y1 = pts[0]
    return SpectralWeight(p(x1, y1) * q(pts), n)


def enumerate_admissible(n: int, limit: int = ENUMERATION_LIMIT) -> Iterator[SpectralSet]:
    """Every admissible set for horizon ``n``, each once, in lexicographic order of site lists."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > limit:
        raise ValueError(f"enumeration for n={n} exceeds the bound {limit}; the count grows exponentially")

    def extend(chain):
        yield SpectralSet._trusted(chain, n)
        x, y = chain[-1]
        for x2 in range(x + 1, n):
            reach = x2 - x
            for y2 in range(max(-x2, y - reach), min(x2, y + reach) + 1, 2):
                chain.append((x2, y2))
                yield from extend(chain)
                chain.pop()

    for x in range(n):
        for y in range(-x, x + 1, 2):
            yield from extend([(x, y)])


def projected_weights(n: int, limit: int = ENUMERATION_LIMIT) -> dict[tuple[int, ...], Fraction]:
    """Spectral mass summed per time projection, by enumeration."""
    out: dict[tuple[int, ...], Fraction] = {}
    for S in enumerate_admissible(n, limit):
        w = S.coefficient().squared
        if w:
            key = tuple(s.x for s in S.sites)
            out[key] = out.get(key, Fraction(0)) + w
    return out


def r_distribution(R) -> Fraction:
    """Exact probability that the time projection of the spectral set equals ``R``."""
    if not isinstance(R, TimeSet):
        raise TypeError("expected a TimeSet")
    xs = R.xs
    prob = return_prob(xs[0])
    for a, b in zip(xs, xs[1:]):
        prob = prob * (return_prob(b - a - 1) - return_prob(b - a))
    return prob.to_fraction() / R.n


def r_cumulative(k: int, n: int) -> Fraction:
    """Probability that every projected time is at most ``k``: ``(k + 1) / n``."""
    if not 0 <= k < n:
        raise ValueError(f"k must lie in [0, {n})")
    return Fraction(k + 1, n)


def all_time_sets(n: int) -> Iterator[TimeSet]:
    """Nonempty subsets of ``[0, n)``, ordered by bitmask."""
    for mask in range(1, 1 << n):
        yield TimeSet(tuple(x for x in range(n) if mask >> x & 1), n)


def arithmetic_mode(n: int, exact: bool | None = None) -> str:
    if exact is None:
        exact = n <= EXACT_LIMIT
    return "exact" if exact else "float"


# --------------------------------------------------------------------------
# renewal dynamic programs
#
# Reading the projected set downward from its maximum (uniform on [0, n)),
# consecutive gaps are i.i.d. with law g(j) = p(2j-2, 0) - p(2j, 0), and a
# gap longer than the remaining distance x has probability p(2x, 0).


def _scaled_return_counts(n):
    """``u[x] = 4**x p(2x, 0)`` and ``g[j] = 4**j g(j)`` as Python ints."""
    u = [binomial(2 * x, x) for x in range(n)]
    g = [0] + [4 * u[j - 1] - u[j] for j in range(1, n)]
    return u, g


def _float_return_probs(n):
    j = np.arange(1, max(n, 1), dtype=np.float64)
    u = np.ones(max(n, 1))
    u[1:] = np.cumprod((2 * j - 1) / (2 * j))
    g = np.zeros_like(u)
    g[1:] = u[:-1] / (2 * j)
    return u[:n], g[:n]


def _check_n(n):
    if n < 1:
        raise ValueError("n must be at least 1")


def size_distribution(n: int, exact: bool | None = None) -> list:
    """Law of the number of projected times; entry ``m - 1`` is ``P(|R| = m)``."""
    _check_n(n)
    if arithmetic_mode(n, exact) == "exact":
        u, g = _scaled_return_counts(n)
        # D[x][m] = 4**x * P(m zeros at or below top x | top at x)
        D = [[0] * (n + 1) for _ in range(n)]
        for x in range(n):
            row = D[x]
            row[1] = u[x]
            for j in range(1, x + 1):
                gj = g[j]
                prev = D[x - j]
                for m in range(1, x - j + 2):
                    if prev[m]:
                        row[m + 1] += gj * prev[m]
        denom = n * 4 ** (n - 1)
        return [Fraction(sum(D[x][m] * 4 ** (n - 1 - x) for x in range(n)), denom) for m in range(1, n + 1)]

    u, g = _float_return_probs(n)
    size = 1 << int(np.ceil(np.log2(2 * n)))
    g_hat = np.fft.rfft(g, size)
    a = u.copy()
    out = np.zeros(n)
    remaining = 1.0
    for m in range(1, n + 1):
        out[m - 1] = max(a.sum(), 0.0) / n
        remaining -= out[m - 1]
        if remaining < 1e-17 or m == n:
            break
        a = np.fft.irfft(np.fft.rfft(a, size) * g_hat, size)[:n]
        np.maximum(a, 0.0, out=a)
    return out.tolist()


def expected_size(n: int, exact: bool | None = None):
    """Mean number of projected times, ``(1/n) sum_j (n - j) p(2j, 0)``."""
    _check_n(n)
    if arithmetic_mode(n, exact) == "exact":
        total = sum((n - j) * return_prob(j).to_fraction() for j in range(n))
        return total / n
    u, _ = _float_return_probs(n)
    return float(np.dot(n - np.arange(n), u) / n)


def _validate_eps(eps):
    if isinstance(eps, str):
        eps = Fraction(eps)
    if not 0 <= eps <= Fraction(1, 2):
        raise ValueError("eps must lie in [0, 1/2]")
    return eps


def noise_correlation_exact(n: int, eps, exact: bool | None = None):
    """``E[xi * xi_eps]`` where ``xi_eps`` sees each sign flipped with probability ``eps``.

    Equals ``E[(1 - 2 eps) ** |R|]`` because the spectral set and its
    projection have the same size. In exact mode ``eps`` is converted to a
    Fraction without rounding (floats keep their binary value).
    """
    _check_n(n)
    eps = _validate_eps(eps)
    if arithmetic_mode(n, exact) == "exact":
        lam = 1 - 2 * Fraction(eps)
        u = [return_prob(x).to_fraction() for x in range(n)]
        g = [Fraction(0)] + [u[j - 1] - u[j] for j in range(1, n)]
        h = []
        for x in range(n):
            acc = u[x]
            for j in range(1, x + 1):
                acc += g[j] * h[x - j]
            h.append(lam * acc)
        return sum(h) / n
    lam = 1.0 - 2.0 * float(eps)
    u, g = _float_return_probs(n)
    h = np.zeros(n)
    for x in range(n):
        h[x] = lam * (u[x] + np.dot(g[1 : x + 1], h[x - 1 :: -1] if x else h[:0]))
    return float(h.sum() / n)
