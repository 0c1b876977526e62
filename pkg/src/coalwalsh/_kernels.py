"""Hot loops, each in a numba and a pure-numpy flavour.

Public entry points take ``backend=None|"numba"|"numpy"``; ``None`` follows
:func:`coalwalsh._accel.default_backend`. Both flavours return identical
arrays (integer outputs, or floats produced by the same operations).

Sign convention shared by every kernel: a hash (or mask bit) value of 0
means ``+1``, 1 means ``-1``.
"""
import numpy as np

from . import _accel
from ._accel import njit, prange
from .rng import G0, G1, G2, G3, M1, M2, S11, S27, S30, S31, S32, S63, Y_OFFSET, INV_2_53, hash4_np


# compiled twins of rng.fmix / rng.hash4; numba cannot call the plain functions
@njit
def _fmix_nb(z):
    z = z ^ (z >> S30)
    z = z * M1
    z = z ^ (z >> S27)
    z = z * M2
    return z ^ (z >> S31)


@njit
def _hash4_nb(seed, stream, hi, lo):
    h = _fmix_nb(seed + G0)
    h = _fmix_nb(h ^ (stream + G1))
    h = _fmix_nb(h ^ (hi + G2))
    return _fmix_nb(h ^ (lo + G3))


# --------------------------------------------------------------------------
# W(n) over every sign array


@njit
def _endpoint_table_nb(n):
    size = 1 << (n * (n + 1) // 2)
    out = np.empty(size, np.int64)
    for mask in range(size):
        w = 0
        for x in range(n):
            idx = x * (x + 1) // 2 + (w + x) // 2
            if (mask >> idx) & 1:
                w -= 1
            else:
                w += 1
        out[mask] = w
    return out


def _endpoint_table_np(n):
    masks = np.arange(1 << (n * (n + 1) // 2), dtype=np.int64)
    w = np.zeros_like(masks)
    for x in range(n):
        idx = x * (x + 1) // 2 + (w + x) // 2
        w += 1 - 2 * ((masks >> idx) & 1)
    return w


def endpoint_table(n, backend=None):
    """``W(n)`` for every sign array of horizon ``n``, indexed by mask."""
    if _accel.resolve(backend) == "numba":
        return _endpoint_table_nb(n)
    return _endpoint_table_np(n)


# --------------------------------------------------------------------------
# fast Walsh-Hadamard transform, integer, in place


@njit
def _fwht_nb(a):
    size = a.shape[0]
    h = 1
    while h < size:
        for i in range(0, size, 2 * h):
            for j in range(i, i + h):
                u = a[j]
                v = a[j + h]
                a[j] = u + v
                a[j + h] = u - v
        h *= 2
    return a


def _fwht_np(a):
    size = a.shape[0]
    h = 1
    while h < size:
        view = a.reshape(-1, 2, h)
        u = view[:, 0, :].copy()
        v = view[:, 1, :]
        view[:, 0, :] += v
        view[:, 1, :] = u - v
        h *= 2
    return a


def fwht(a, backend=None):
    """Unnormalized transform ``H[s] = sum_m a[m] (-1)^popcount(m & s)``, in place."""
    size = a.shape[0]
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    if _accel.resolve(backend) == "numba":
        return _fwht_nb(a)
    return _fwht_np(a)


# --------------------------------------------------------------------------
# zero sets of the doubled-speed walk


@njit
def _walk_zero_counts_nb(xm):
    steps = 2 * xm
    counts = np.zeros(1 << xm, np.int64)
    for path in range(1 << steps):
        v = 0
        zm = 0
        for s in range(steps):
            if (path >> s) & 1:
                v += 1
            else:
                v -= 1
            if s % 2 == 1 and v == 0:
                zm |= 1 << (xm - (s + 1) // 2)
        counts[zm] += 1
    return counts


def _walk_zero_counts_np(xm):
    steps = 2 * xm
    paths = np.arange(1 << steps, dtype=np.int64)
    v = np.zeros_like(paths)
    zm = np.zeros_like(paths)
    for s in range(steps):
        v += 2 * ((paths >> s) & 1) - 1
        if s % 2 == 1:
            zm |= np.where(v == 0, 1 << (xm - (s + 1) // 2), 0)
    return np.bincount(zm, minlength=1 << xm).astype(np.int64)


def walk_zero_counts(xm, backend=None):
    """Path counts (out of ``4**xm``) per zero-set bitmask over ``x in [0, xm)``."""
    if _accel.resolve(backend) == "numba":
        return _walk_zero_counts_nb(xm)
    return _walk_zero_counts_np(xm)


# --------------------------------------------------------------------------
# lazily generated sign arrays


@njit
def _site_key(x, y):
    return (np.uint64(x) << S32) | np.uint64(y + np.int64(Y_OFFSET))


@njit
def _flipped(seed, flip_streams, eps_levels, level, hi, key):
    flips = 0
    for l in range(level):
        f = _hash4_nb(seed, flip_streams[l], hi, key)
        if float(f >> S11) * INV_2_53 < eps_levels[l]:
            flips += 1
    return flips % 2 == 1


@njit(parallel=True)
def _noise_pairs_nb(n, first, trials, seed, stream, flip_stream, eps):
    w0 = np.empty(trials, np.int64)
    w1 = np.empty(trials, np.int64)
    for t in prange(trials):
        hi = np.uint64(first + t)
        w = 0
        for x in range(n):
            h = _hash4_nb(seed, stream, hi, _site_key(x, w))
            if h >> S63:
                w -= 1
            else:
                w += 1
        w0[t] = w
        w = 0
        for x in range(n):
            key = _site_key(x, w)
            neg = (_hash4_nb(seed, stream, hi, key) >> S63) == 1
            f = _hash4_nb(seed, flip_stream, hi, key)
            if float(f >> S11) * INV_2_53 < eps:
                neg = not neg
            if neg:
                w -= 1
            else:
                w += 1
        w1[t] = w
    return w0, w1


def _site_key_np(x, y):
    return (np.uint64(x) << S32) | (y + np.int64(Y_OFFSET)).astype(np.uint64)


def _noise_pairs_np(n, first, trials, seed, stream, flip_stream, eps):
    hi = np.arange(first, first + trials, dtype=np.uint64)
    w0 = np.zeros(trials, np.int64)
    for x in range(n):
        h = hash4_np(seed, stream, hi, _site_key_np(x, w0))
        w0 += 1 - 2 * (h >> S63).astype(np.int64)
    w1 = np.zeros(trials, np.int64)
    for x in range(n):
        key = _site_key_np(x, w1)
        neg = (hash4_np(seed, stream, hi, key) >> S63).astype(bool)
        f = hash4_np(seed, flip_stream, hi, key)
        neg ^= (f >> S11).astype(np.float64) * INV_2_53 < eps
        w1 += 1 - 2 * neg.astype(np.int64)
    return w0, w1


def noise_pairs(n, first, trials, seed, stream, flip_stream, eps, backend=None):
    """Endpoints ``(W, W_eps)`` for trials ``first .. first+trials-1``.

    Trial ``t`` reads base sign ``(x, y)`` from ``hash(seed, stream, t, key)``
    and its flip decision from ``hash(seed, flip_stream, t, key)``, so both
    passes see the same base array without materializing it.
    """
    args = (int(n), int(first), int(trials), np.uint64(seed), np.uint64(stream), np.uint64(flip_stream), float(eps))
    if _accel.resolve(backend) == "numba":
        return _noise_pairs_nb(*args)
    return _noise_pairs_np(*args)


@njit
def _flow_nb(length, width, bounded, sx, sy, seed, stream, flip_streams, eps_levels, level):
    k = sx.shape[0]
    traj = np.zeros((k, length + 1), np.int64)
    zero = np.uint64(0)
    for i in range(k):
        y = sy[i]
        traj[i, sx[i]] = y
        for x in range(sx[i], length):
            if bounded and y <= 0:
                y = 1
            elif bounded and y >= width:
                y = width - 1
            else:
                key = _site_key(x, y)
                neg = (_hash4_nb(seed, stream, zero, key) >> S63) == 1
                if _flipped(seed, flip_streams, eps_levels, level, zero, key):
                    neg = not neg
                if neg:
                    y -= 1
                else:
                    y += 1
            traj[i, x + 1] = y
    return traj


def _flow_np(length, width, bounded, sx, sy, seed, stream, flip_streams, eps_levels, level):
    k = sx.shape[0]
    traj = np.zeros((k, length + 1), np.int64)
    y = sy.astype(np.int64).copy()
    traj[np.arange(k), sx] = y
    zero = np.zeros(k, np.uint64)
    for x in range(length):
        active = sx <= x
        key = _site_key_np(x, y)
        neg = (hash4_np(seed, stream, zero, key) >> S63).astype(bool)
        for l in range(level):
            f = hash4_np(seed, flip_streams[l], zero, key)
            neg ^= (f >> S11).astype(np.float64) * INV_2_53 < eps_levels[l]
        step = 1 - 2 * neg.astype(np.int64)
        if bounded:
            step = np.where(y <= 0, 1, np.where(y >= width, -1, step))
        y = np.where(active, y + step, y)
        traj[active, x + 1] = y[active]
    return traj


def flow(length, width, bounded, sx, sy, seed, stream, flip_streams, eps_levels, level, backend=None):
    """Trajectories of walks started at ``(sx[i], sy[i])`` through one shared array.

    The array at perturbation ``level`` is the base array with the first
    ``level`` flip layers applied; sites are keyed by ``(x, y)`` only, so
    walks landing on the same site read the same sign and coalesce.
    """
    args = (
        int(length),
        int(width),
        bool(bounded),
        np.asarray(sx, np.int64),
        np.asarray(sy, np.int64),
        np.uint64(seed),
        np.uint64(stream),
        np.asarray(flip_streams, np.uint64),
        np.asarray(eps_levels, np.float64),
        int(level),
    )
    if _accel.resolve(backend) == "numba":
        return _flow_nb(*args)
    return _flow_np(*args)


# --------------------------------------------------------------------------
# R sampling through the backward doubled-speed walk


@njit
def _sample_r_nb(n, first, count, seed, stream):
    xms = np.empty(count, np.int64)
    member = np.zeros((count, n), np.bool_)
    zero = np.uint64(0)
    for i in range(count):
        idx = np.uint64(first + i)
        xm = np.int64(_hash4_nb(seed, stream, idx, zero) % np.uint64(n))
        xms[i] = xm
        member[i, xm] = True
        v = 0
        h = zero
        for s in range(2 * xm):
            if s % 64 == 0:
                h = _hash4_nb(seed, stream, idx, np.uint64(1 + s // 64))
            if (h >> np.uint64(s % 64)) & np.uint64(1):
                v += 1
            else:
                v -= 1
            if s % 2 == 1 and v == 0:
                member[i, xm - (s + 1) // 2] = True
    return xms, member


def _sample_r_np(n, first, count, seed, stream):
    idx = np.arange(first, first + count, dtype=np.uint64)
    xms = (hash4_np(seed, stream, idx, np.zeros(count, np.uint64)) % np.uint64(n)).astype(np.int64)
    member = np.zeros((count, n), np.bool_)
    rows = np.arange(count)
    member[rows, xms] = True
    v = np.zeros(count, np.int64)
    h = np.zeros(count, np.uint64)
    steps = 2 * int(xms.max()) if count else 0
    for s in range(steps):
        if s % 64 == 0:
            h = hash4_np(seed, stream, idx, np.full(count, 1 + s // 64, np.uint64))
        active = s < 2 * xms
        bit = ((h >> np.uint64(s % 64)) & np.uint64(1)).astype(np.int64)
        v = np.where(active, v + 2 * bit - 1, v)
        if s % 2 == 1:
            hit = active & (v == 0)
            member[rows[hit], xms[hit] - (s + 1) // 2] = True
    return xms, member


def sample_r(n, first, count, seed, stream, backend=None):
    """Maximal elements and membership matrix for samples ``first .. first+count-1``."""
    args = (int(n), int(first), int(count), np.uint64(seed), np.uint64(stream))
    if _accel.resolve(backend) == "numba":
        return _sample_r_nb(*args)
    return _sample_r_np(*args)
