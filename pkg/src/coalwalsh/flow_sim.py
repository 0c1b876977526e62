"""Monte Carlo simulation of the coalescing flow and of its noise sensitivity."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt
from typing import Sequence

import numpy as np

from . import _kernels
from .oracle import SignArray, index_set_size
from .rng import SeededSource

BOUNDARIES = ("unbounded", "reflect")
_FLIP_TAG = 0xF1
_LAYER_TAG = 0x1000


@dataclass(frozen=True)
class GridSpec:
    """Time extent ``length``; in ``reflect`` mode positions live in ``[0, width]``."""

    length: int
    width: int | None = None
    boundary: str = "unbounded"

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be at least 1")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.boundary == "reflect" and (self.width is None or self.width < 1):
            raise ValueError("a reflecting band needs width >= 1")

    @property
    def bounded(self) -> bool:
        return self.boundary == "reflect"

    def to_json(self) -> dict:
        return {"length": self.length, "width": self.width, "boundary": self.boundary}


@dataclass
class FlowResult:
    """Trajectories of every start through one shared sign array.

    ``trajectories[i, x]`` is meaningful for ``x >= starts[i][0]`` only.
    ``merge_times[i, j]`` is the first common time at which walks ``i``
    and ``j`` occupy the same position, or -1 if they never meet.
    """

    grid: GridSpec
    starts: list[tuple[int, int]]
    trajectories: np.ndarray
    merge_times: np.ndarray
    eps_levels: tuple[float, ...] = ()
    metadata: dict = field(default_factory=dict)

    def path(self, i: int) -> np.ndarray:
        return self.trajectories[i, self.starts[i][0] :]

    def endpoints(self) -> np.ndarray:
        return self.trajectories[:, -1]

    def coalescence_ok(self) -> bool:
        for i in range(len(self.starts)):
            for j in range(i + 1, len(self.starts)):
                t = self.merge_times[i, j]
                if t >= 0 and not np.array_equal(self.trajectories[i, t:], self.trajectories[j, t:]):
                    return False
        return True

    def csv_rows(self):
        for i, (x0, _) in enumerate(self.starts):
            for x in range(x0, self.grid.length + 1):
                yield i, x, int(self.trajectories[i, x])


def _merge_times(starts, traj):
    k = len(starts)
    out = np.full((k, k), -1, np.int64)
    for i in range(k):
        out[i, i] = starts[i][0]
        for j in range(i + 1, k):
            t0 = max(starts[i][0], starts[j][0])
            hit = np.flatnonzero(traj[i, t0:] == traj[j, t0:])
            if hit.size:
                out[i, j] = out[j, i] = t0 + hit[0]
    return out


def _normalize_starts(grid: GridSpec, starts) -> list[tuple[int, int]]:
    out = []
    for s in starts:
        x0, y0 = (0, int(s)) if np.ndim(s) == 0 else (int(s[0]), int(s[1]))
        if not 0 <= x0 <= grid.length:
            raise ValueError(f"start time {x0} outside [0, {grid.length}]")
        if (x0 + y0) % 2:
            raise ValueError(f"start ({x0}, {y0}) is off the lattice (x + y must be even)")
        if grid.bounded and not 0 <= y0 <= grid.width:
            raise ValueError(f"start position {y0} outside the band [0, {grid.width}]")
        out.append((x0, y0))
    return out


def lattice_starts(grid: GridSpec, rows: int = 4, cols: int = 3) -> list[tuple[int, int]]:
    """Evenly spaced ``rows x cols`` lattice of start points (start times x heights).

    Times are ``length * i / rows``. In a band the heights sit at interior
    quantiles ``width * (j+1) / (cols+1)``; unbounded grids centre them on 0
    four units apart. Heights are nudged by one unit where needed to land on
    the even sublattice.
    """
    starts = []
    for i in range(rows):
        x0 = grid.length * i // rows
        for j in range(cols):
            if grid.bounded:
                y0 = round(grid.width * (j + 1) / (cols + 1))
            else:
                y0 = 4 * j - 2 * (cols - 1)
            if (x0 + y0) % 2:
                y0 += -1 if grid.bounded and y0 >= grid.width else 1
            starts.append((x0, y0))
    return starts


def layer_streams(src: SeededSource, levels: int) -> list[int]:
    return [src.derive(_LAYER_TAG + l).stream for l in range(levels)]


def simulate_flow(grid: GridSpec, starts: Sequence, src: SeededSource, eps_levels: Sequence[float] = (), backend=None) -> FlowResult:
    """Coalescing walks from ``starts`` through the array perturbed by every layer in ``eps_levels``.

    Starts are positions at time 0 or ``(x0, y0)`` pairs. Signs are keyed by
    site, so no array is materialized. In a reflecting band a walk on a wall
    steps inward without reading a sign.
    """
    norm = _normalize_starts(grid, starts)
    for e in eps_levels:
        if not 0 <= e <= 1:
            raise ValueError("flip probabilities must lie in [0, 1]")
    sx = [s[0] for s in norm]
    sy = [s[1] for s in norm]
    traj = _kernels.flow(
        grid.length,
        grid.width or 0,
        grid.bounded,
        sx,
        sy,
        src.seed,
        src.stream,
        layer_streams(src, len(eps_levels)) or [0],
        list(eps_levels) or [0.0],
        len(eps_levels),
        backend,
    )
    return FlowResult(
        grid,
        norm,
        traj,
        _merge_times(norm, traj),
        tuple(eps_levels),
        {"seed": src.seed, "stream": src.stream, "boundary": grid.boundary},
    )


def simulate_panels(grid: GridSpec, starts: Sequence, src: SeededSource, eps_list: Sequence[float], backend=None) -> list[FlowResult]:
    """One flow per prefix of ``eps_list``: panel ``k`` applies flip layers ``0..k`` cumulatively."""
    return [simulate_flow(grid, starts, src, eps_list[: k + 1], backend) for k in range(len(eps_list))]


def perturb(tau, eps: float, src: SeededSource):
    """Flip each sign independently with probability ``eps``.

    Accepts a :class:`SignArray` or a numpy array of +-1; the flip of entry
    ``i`` (site index, or flat position) is decided by ``src.uniform(0, i)``.
    """
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    if isinstance(tau, SignArray):
        flips = 0
        for i in range(index_set_size(tau.n)):
            if src.uniform(0, i) < eps:
                flips |= 1 << i
        return tau.flipped(flips)
    arr = np.asarray(tau)
    count = arr.size
    u = np.array([src.uniform(0, i) for i in range(count)]).reshape(arr.shape)
    return np.where(u < eps, -arr, arr).astype(arr.dtype)


@dataclass(frozen=True)
class NoiseReport:
    n: int
    eps: float
    trials: int
    estimate: float
    stderr: float
    seed: int = 0
    stream: int = 0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "eps": self.eps,
            "trials": self.trials,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "seed": self.seed,
            "stream": self.stream,
        }


def noise_endpoints(n: int, eps: float, trials: int, src: SeededSource, first: int = 0, chunk: int = 1 << 16, backend=None):
    """``(W, W_eps)`` per trial, generated lazily along both paths."""
    flip_stream = src.derive(_FLIP_TAG).stream
    w0, w1 = [], []
    for start in range(first, first + trials, chunk):
        a, b = _kernels.noise_pairs(n, start, min(chunk, first + trials - start), src.seed, src.stream, flip_stream, eps, backend)
        w0.append(a)
        w1.append(b)
    return np.concatenate(w0), np.concatenate(w1)


def noise_correlation_mc(n: int, eps: float, trials: int, src: SeededSource, chunk: int = 1 << 16, backend=None) -> NoiseReport:
    """Monte Carlo ``E[xi * xi_eps]`` with common random numbers.

    Sums are accumulated in exact integers, so the report is a function of
    ``(n, eps, trials, src)`` alone, whatever the chunking or thread count.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    w0, w1 = noise_endpoints(n, eps, trials, src, chunk=chunk, backend=backend)
    prod = w0 * w1
    s1 = int(prod.sum())
    s2 = sum(int(v) * int(v) for v in prod)
    mean = Fraction(s1, n * trials)
    if trials > 1:
        var = (Fraction(s2, n * n) - trials * mean * mean) / (trials - 1)
        stderr = sqrt(float(var) / trials)
    else:
        stderr = float("inf")
    return NoiseReport(n, float(eps), trials, float(mean), stderr, src.seed, src.stream)
