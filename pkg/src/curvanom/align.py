"""Unequal-length curve dissimilarity, reference curves and realignment.

A short curve of ``n`` samples is compared with a longer one of ``m``
samples by padding the short one with ``m`` copies of its first value on the
left and ``m`` copies of its last value on the right, then sliding an
``m``-sample window over the padded curve. Window offsets are 1-based and
run from 1 to ``n + m + 1``; offset ``m + 1`` puts the window start on the
first original sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .series import BivariateSegment, as_curve

DEFAULT_MEDOID_CAP = 1000


@dataclass(frozen=True)
class ExtendedCurve:
    values: np.ndarray
    core_start: int  # 0-based, inclusive
    core_end: int  # 0-based, inclusive

    @property
    def core(self) -> np.ndarray:
        return self.values[self.core_start : self.core_end + 1]


def extend(curve, pad: int, left_context=None, right_context=None) -> ExtendedCurve:
    """Pad ``curve`` with ``pad`` samples on each side.

    Without context the padding repeats the first and last values. A
    ``left_context`` (the samples that preceded the segment in its source
    series) or ``right_context`` (the samples that followed it) is used
    instead where available; if it is shorter than ``pad`` its outermost
    value is repeated.
    """
    x = as_curve(curve)
    if pad < 1:
        raise ValueError(f"pad must be positive, got {pad}")
    left = _side_pad(x[0], pad, left_context, from_end=True)
    right = _side_pad(x[-1], pad, right_context, from_end=False)
    values = np.concatenate([left, x, right])
    values.setflags(write=False)
    return ExtendedCurve(values, pad, pad + x.size - 1)


def _side_pad(edge_value, pad, context, from_end):
    if context is None or len(context) == 0:
        return np.full(pad, edge_value)
    ctx = np.asarray(context, dtype=np.float64)
    if from_end:
        ctx = ctx[-pad:]
        return np.concatenate([np.full(pad - ctx.size, ctx[0]), ctx])
    ctx = ctx[:pad]
    return np.concatenate([ctx, np.full(pad - ctx.size, ctx[-1])])


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

@numba.njit(cache=True)
def _ssd_profile_ordered(ext, b):
    """Squared window distances, each summed over the window in sample order.

    Identical windows therefore produce bit-identical sums, which keeps the
    first-offset tie rule exact.
    """
    width = b.shape[0]
    n_off = ext.shape[0] - width + 1
    out = np.empty(n_off)
    for start in range(n_off):
        s = 0.0
        for j in range(width):
            d = ext[start + j] - b[j]
            s += d * d
        out[start] = s
    return out


@numba.njit(cache=True)
def _ssd_at(a, b, offsets):
    """Squared window distances at the 0-based offsets ``offsets``.

    Padding contributions come from prefix/suffix sums of non-negative
    terms and the overlap is summed directly, so no cancellation occurs.
    """
    n_a = a.shape[0]
    n_b = b.shape[0]
    first = a[0]
    last = a[n_a - 1]
    left = np.zeros(n_b + 1)  # left[m] = sum_{j<m} (first - b_j)^2
    for j in range(n_b):
        d = first - b[j]
        left[j + 1] = left[j] + d * d
    right = np.zeros(n_b + 1)  # right[m] = sum_{j>=m} (last - b_j)^2
    for j in range(n_b - 1, -1, -1):
        d = last - b[j]
        right[j] = right[j + 1] + d * d
    out = np.empty(offsets.shape[0])
    for m in range(offsets.shape[0]):
        k = offsets[m] - n_b  # window sample j sits over core sample j + k
        n_left = min(max(-k, 0), n_b)
        start_right = min(max(n_a - k, 0), n_b)
        s = left[n_left] + right[start_right]
        for j in range(n_left, start_right):
            d = a[j + k] - b[j]
            s += d * d
        out[m] = s
    return out


@numba.njit(cache=True)
def _ssd_profile(a, b):
    """Squared window distances for every offset, in O(len(a) * len(b))."""
    return _ssd_at(a, b, np.arange(a.shape[0] + b.shape[0] + 1))


@numba.njit(cache=True)
def _pair_diss(a, b):
    la = a.shape[0]
    lb = b.shape[0]
    if la < lb:
        best = _ssd_profile(a, b).min()
        return math.sqrt(best) / (2.0 * lb)
    if lb < la:
        best = _ssd_profile(b, a).min()
        return math.sqrt(best) / (2.0 * la)
    best = min(_ssd_profile(a, b).min(), _ssd_profile(b, a).min())
    return math.sqrt(best) / (2.0 * la)


# FFT screening slack, relative to the energy of the compared curves
_SCREEN_RTOL = 1e-9


class _Spectra:
    """Cached forward FFTs (of each curve and its reversal) at one size."""

    def __init__(self, curves):
        self.curves = curves
        longest = max(c.size for c in curves)
        self.nfft = 1 << int(math.ceil(math.log2(2 * longest)))
        self.fwd = [np.fft.rfft(c, self.nfft) for c in curves]
        self.rev = [np.fft.rfft(c[::-1], self.nfft) for c in curves]
        self.sq_cum = [np.concatenate([[0.0], np.cumsum(c * c)]) for c in curves]

    def min_ssd(self, i, j):
        """Exact minimum squared window distance with curve ``i`` padded."""
        a, b = self.curves[i], self.curves[j]
        n_a, n_b = a.size, b.size
        conv = np.fft.irfft(self.fwd[i] * self.rev[j], self.nfft)
        k = np.arange(-n_b, n_a + 1)
        cross = np.zeros(k.size)
        inner = slice(1, k.size - 1)
        cross[inner] = conv[n_b - 1 + k[inner]]
        a_lo, a_hi = np.maximum(0, k), np.minimum(n_a, n_b + k)
        b_lo, b_hi = np.maximum(0, -k), np.minimum(n_b, n_a - k)
        ca, cb = self.sq_cum[i], self.sq_cum[j]
        overlap = (ca[a_hi] - ca[a_lo]) + (cb[b_hi] - cb[b_lo]) - 2.0 * cross
        n_left = np.clip(-k, 0, n_b)
        start_right = np.clip(n_a - k, 0, n_b)
        d_first = np.concatenate([[0.0], np.cumsum((a[0] - b) ** 2)])
        d_last = np.concatenate([np.cumsum(((a[-1] - b) ** 2)[::-1])[::-1], [0.0]])
        approx = d_first[n_left] + d_last[start_right] + overlap
        energy = ca[-1] + cb[-1] + n_b * (a[0] ** 2 + a[-1] ** 2)
        tol = _SCREEN_RTOL * energy
        cand = np.flatnonzero(approx <= approx.min() + tol)
        return float(_ssd_at(a, b, cand).min())


def _pairwise(curves):
    spectra = _Spectra(curves)
    n = len(curves)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            li, lj = curves[i].size, curves[j].size
            if li < lj:
                best, length = spectra.min_ssd(i, j), lj
            elif lj < li:
                best, length = spectra.min_ssd(j, i), li
            else:
                best, length = min(spectra.min_ssd(i, j), spectra.min_ssd(j, i)), li
            d = math.sqrt(best) / (2.0 * length)
            out[i, j] = d
            out[j, i] = d
    return out


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------

def diss_profile(short, long) -> np.ndarray:
    """Normalized distance ``||window - long|| / (2 len(long))`` at every offset.

    ``short`` is padded by ``len(long)`` on each side; it need not actually
    be the shorter curve.
    """
    a, b = as_curve(short), as_curve(long)
    return np.sqrt(_ssd_profile(a, b)) / (2.0 * b.size)


def diss(a, b) -> float:
    """Dissimilarity between two curves of possibly different lengths.

    The shorter curve is padded and slid along the longer one; the result
    is the smallest normalized Euclidean window distance. For equal lengths
    both paddings are tried and the smaller value kept, which makes the
    measure symmetric.

    Examples
    --------
    >>> round(diss([0.0, 0.0, 0.0], [1.0] * 5), 4)
    0.2236
    """
    return float(_pair_diss(as_curve(a), as_curve(b)))


def pairwise_diss(curves) -> np.ndarray:
    """Symmetric matrix of :func:`diss` over a list of curves."""
    arrs = [as_curve(c) for c in curves]
    if not arrs:
        return np.zeros((0, 0))
    return _pairwise(arrs)


@dataclass(frozen=True)
class ReferenceCurve:
    cluster_label: int
    values: np.ndarray
    source_segment_id: str
    diss_sum: float = 0.0

    @property
    def length(self) -> int:
        return int(self.values.size)


def reference_curve(cluster_curves, cluster_label: int = 0, cap: int = DEFAULT_MEDOID_CAP,
                    seed: int = 0) -> ReferenceCurve:
    """Medoid of a cluster under :func:`diss`.

    Parameters
    ----------
    cluster_curves : list of (id, curve)
        Cluster members.
    cluster_label : int
        Stored on the result.
    cap : int
        Clusters larger than this are represented by a seeded random
        subsample of ``cap`` members, among which the medoid is chosen.
    seed : int
        Seed for that subsample.

    Ties on the dissimilarity sum go to the lowest segment id.
    """
    members = sorted(((str(i), as_curve(c)) for i, c in cluster_curves), key=lambda m: m[0])
    if not members:
        raise ValueError("reference curve of an empty cluster")
    if len(members) > cap:
        rng = np.random.default_rng([seed, cluster_label])
        keep = np.sort(rng.choice(len(members), size=cap, replace=False))
        members = [members[i] for i in keep]
    if len(members) == 1:
        sid, curve = members[0]
        return ReferenceCurve(cluster_label, curve, sid, 0.0)
    d = pairwise_diss([c for _, c in members])
    sums = d.sum(axis=1)
    best = int(np.argmin(sums))
    sid, curve = members[best]
    return ReferenceCurve(cluster_label, curve, sid, float(sums[best]))


@dataclass(frozen=True)
class AlignedSegment:
    segment_id: str
    x_aligned: np.ndarray
    y_aligned: np.ndarray
    offset: int  # 1-based window offset
    distance: float  # normalized window distance at that offset


def best_offset(x, reference) -> tuple[int, float]:
    """1-based offset of the window of padded ``x`` closest to ``reference``.

    The first offset wins on ties.
    """
    ref = as_curve(reference)
    ext = extend(x, ref.size).values
    ssd = _ssd_profile_ordered(ext, ref)
    start = int(np.argmin(ssd))
    return start + 1, math.sqrt(ssd[start]) / (2.0 * ref.size)


def realign(segment: BivariateSegment, rc: ReferenceCurve, x_context=None, y_context=None) -> AlignedSegment:
    """Translate, complete and cut ``segment`` onto the reference curve's time axis.

    X is padded on both sides by the reference length and the best-matching
    window of that length is kept; Y is padded the same way and cut at the
    same offset.

    ``x_context`` and ``y_context`` are optional ``(before, after)`` pairs of
    neighbouring samples from the source series, used as padding instead of
    repeated end values.
    """
    width = rc.length
    xl, xr = x_context if x_context is not None else (None, None)
    yl, yr = y_context if y_context is not None else (None, None)
    ext_x = extend(segment.x, width, xl, xr).values
    ext_y = extend(segment.y, width, yl, yr).values
    ssd = _ssd_profile_ordered(ext_x, rc.values)
    start = int(np.argmin(ssd))
    xa = ext_x[start : start + width].copy()
    ya = ext_y[start : start + width].copy()
    xa.setflags(write=False)
    ya.setflags(write=False)
    return AlignedSegment(segment.id, xa, ya, start + 1, math.sqrt(ssd[start]) / (2.0 * width))
