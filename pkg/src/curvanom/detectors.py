"""Confidence-tube (CT) and conditional-quantile (CQ) detectors.

Both work on the aligned curves of one cluster and one channel. All
quantiles are nearest-rank: the quantile of level ``p`` over ``n`` values is
the sorted value at 1-based rank ``ceil(p * n)``, clamped to ``[1, n]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .series import as_curve, fmt

DEFAULT_ALPHA = 0.05
DEFAULT_CT_RUN = 0.10
DEFAULT_CQ_THRESHOLD = 0.10
DEFAULT_N_BINS = 20
DEFAULT_MIN_BIN_COUNT = 30

# products like 0.1 * 30 land a hair above the integer in binary
_RANK_EPS = 1e-9


def nearest_rank(p: float, n: int) -> int:
    """1-based nearest-rank index for level ``p`` among ``n`` sorted values."""
    return min(max(math.ceil(p * n - _RANK_EPS), 1), n)


def nearest_rank_quantile(sorted_values, p: float, axis: int = 0):
    """Nearest-rank quantile of already-sorted values along ``axis``."""
    sv = np.asarray(sorted_values)
    r = nearest_rank(p, sv.shape[axis])
    return np.take(sv, r - 1, axis=axis)


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _stack(curves) -> np.ndarray:
    arrs = [as_curve(c) for c in curves]
    if len(arrs) < 2:
        raise ValueError(f"need at least 2 curves, got {len(arrs)}")
    lengths = {a.size for a in arrs}
    if len(lengths) != 1:
        raise ValueError(f"aligned curves must share one length, got {sorted(lengths)}")
    return np.vstack(arrs)


@dataclass(frozen=True)
class DetectionVerdict:
    segment_id: str
    channel: str
    method: str
    is_anomaly: bool
    score: float
    violation_mask: np.ndarray = field(repr=False)


def longest_run(mask) -> int:
    """Length of the longest stretch of consecutive ``True`` values."""
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return 0
    padded = np.concatenate([[False], m, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return int((edges[1::2] - edges[::2]).max())


# --------------------------------------------------------------------------
# CT
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfidenceTube:
    cluster_label: int
    channel: str
    alpha: float
    lower: np.ndarray
    upper: np.ndarray

    @property
    def length(self) -> int:
        return int(self.lower.size)


def fit_ct(aligned_curves, alpha: float = DEFAULT_ALPHA, cluster_label: int = 0,
           channel: str = "X") -> ConfidenceTube:
    """Pointwise nearest-rank ``alpha/2`` and ``1 - alpha/2`` quantiles.

    Examples
    --------
    >>> curves = [[v, v] for v in range(1, 101)]
    >>> tube = fit_ct(curves, alpha=0.05)
    >>> tube.lower.tolist(), tube.upper.tolist()
    ([3.0, 3.0], [98.0, 98.0])
    """
    _check_alpha(alpha)
    sv = np.sort(_stack(aligned_curves), axis=0)
    lower = nearest_rank_quantile(sv, alpha / 2)
    upper = nearest_rank_quantile(sv, 1 - alpha / 2)
    return ConfidenceTube(cluster_label, channel, alpha, lower, upper)


def detect_ct(curve, tube: ConfidenceTube, run_fraction: float = DEFAULT_CT_RUN,
              segment_id: str = "") -> DetectionVerdict:
    """Flag ``curve`` if it leaves the tube for a long enough consecutive stretch.

    The score is the longest out-of-tube run divided by the tube length;
    the curve is anomalous when that run covers at least
    ``ceil(run_fraction * length)`` samples.
    """
    x = as_curve(curve)
    if x.size != tube.length:
        raise ValueError(f"curve has {x.size} samples, tube has {tube.length}")
    mask = (x < tube.lower) | (x > tube.upper)
    run = longest_run(mask)
    needed = nearest_rank(run_fraction, x.size)
    return DetectionVerdict(segment_id, tube.channel, "CT", run >= needed,
                            run / x.size, mask)


# --------------------------------------------------------------------------
# CQ
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionalQuantileTable:
    """Bounds on ``value(t)`` given the bin of ``value(t - lag)``.

    ``edges`` has ``n_bins + 1`` entries: the training minimum, the
    ``n_bins - 1`` inner edges and the training maximum. Bin ``b`` holds
    lagged values in ``[edges[b], edges[b + 1])`` (the last bin is closed);
    at lookup time values outside the training range fall into the first or
    last bin.
    """

    cluster_label: int
    channel: str
    alpha: float
    edges: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    lag: int = 1

    @property
    def n_bins(self) -> int:
        return int(self.lower.size)

    def bin_of(self, values) -> np.ndarray:
        inner = self.edges[1:-1]
        return np.searchsorted(inner, np.asarray(values, dtype=np.float64), side="right")


def transition_pairs(curves, lag: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Pool ``(value(t - lag), value(t))`` over all curves."""
    if lag < 1:
        raise ValueError(f"lag must be positive, got {lag}")
    prev, cur = [], []
    for c in curves:
        x = as_curve(c)
        prev.append(x[:-lag])
        cur.append(x[lag:])
    return np.concatenate(prev), np.concatenate(cur)


def equal_frequency_edges(sorted_prev: np.ndarray, n_bins: int) -> np.ndarray:
    """Inner bin edges splitting sorted values into ``n_bins`` equal-count groups.

    Candidate edges are the values at sorted positions ``floor(b N / n_bins)``;
    duplicates and edges equal to the minimum are dropped, so tied values
    never straddle two bins.
    """
    n = sorted_prev.size
    cand = [sorted_prev[(b * n) // n_bins] for b in range(1, n_bins)]
    return np.unique([e for e in cand if e > sorted_prev[0]])


def merge_small_bins(inner: np.ndarray, counts: np.ndarray, min_count: int):
    """Merge adjacent bins left to right until every bin holds ``min_count`` pairs.

    A short trailing remainder is folded into the last complete bin.
    """
    keep, acc = [], 0
    for b in range(counts.size):
        acc += int(counts[b])
        if acc >= min_count:
            keep.append(b)  # bin b closes a merged group
            acc = 0
    if not keep:
        return np.zeros(0), np.array([int(counts.sum())])
    if acc:
        keep[-1] = counts.size - 1
    new_inner = np.array([inner[b] for b in keep[:-1]])
    bounds = [0] + [b + 1 for b in keep]
    new_counts = np.array([int(counts[lo:hi].sum()) for lo, hi in zip(bounds[:-1], bounds[1:])])
    return new_inner, new_counts


def fit_cq(aligned_curves, alpha: float = DEFAULT_ALPHA, n_bins: int = DEFAULT_N_BINS,
           min_bin_count: int = DEFAULT_MIN_BIN_COUNT, cluster_label: int = 0,
           channel: str = "X", lag: int = 1) -> ConditionalQuantileTable:
    """Estimate conditional bounds of a value given its lagged predecessor.

    Pairs are pooled over all curves and instants, binned on the lagged
    value by equal frequency, small bins merged with their right-hand
    neighbours, and each bin reduced to nearest-rank ``alpha/2`` and
    ``1 - alpha/2`` quantiles of the current value.
    """
    _check_alpha(alpha)
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    arr = _stack(aligned_curves)
    prev, cur = transition_pairs(arr, lag)
    if prev.size < 2 * min_bin_count:
        raise ValueError(
            f"{prev.size} transition pairs, need at least {2 * min_bin_count}"
        )
    order = np.lexsort((cur, prev))
    prev, cur = prev[order], cur[order]
    inner = equal_frequency_edges(prev, n_bins)
    counts = np.bincount(np.searchsorted(inner, prev, side="right"), minlength=inner.size + 1)
    inner, counts = merge_small_bins(inner, counts, min_bin_count)
    which = np.searchsorted(inner, prev, side="right")
    lower = np.empty(counts.size)
    upper = np.empty(counts.size)
    for b in range(counts.size):
        vals = np.sort(cur[which == b])
        lower[b] = nearest_rank_quantile(vals, alpha / 2)
        upper[b] = nearest_rank_quantile(vals, 1 - alpha / 2)
    edges = np.concatenate([[prev[0]], inner, [prev[-1]]])
    return ConditionalQuantileTable(cluster_label, channel, alpha, edges, lower, upper,
                                    counts, lag)


def detect_cq(curve, table: ConditionalQuantileTable,
              threshold: float = DEFAULT_CQ_THRESHOLD, segment_id: str = "") -> DetectionVerdict:
    """Flag ``curve`` if too many of its transitions leave the conditional bounds.

    The score is the fraction of violating transitions; the curve is
    anomalous when it exceeds ``threshold``.
    """
    x = as_curve(curve)
    lag = table.lag
    if x.size <= lag:
        raise ValueError(f"curve of {x.size} samples has no lag-{lag} transition")
    b = table.bin_of(x[:-lag])
    nxt = x[lag:]
    mask = (nxt < table.lower[b]) | (nxt > table.upper[b])
    score = float(mask.mean())
    return DetectionVerdict(segment_id, table.channel, "CQ", score > threshold, score, mask)


# --------------------------------------------------------------------------
# CSV export
# --------------------------------------------------------------------------

def write_tubes_csv(path, tubes):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "channel", "t", "lower", "upper"])
        for tube in tubes:
            for t in range(tube.length):
                w.writerow([tube.cluster_label, tube.channel, t + 1,
                            fmt(tube.lower[t]), fmt(tube.upper[t])])


def write_cq_tables_csv(path, tables):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "channel", "bin_lo", "bin_hi", "lower", "upper", "count"])
        for tab in tables:
            for b in range(tab.n_bins):
                w.writerow([tab.cluster_label, tab.channel, fmt(tab.edges[b]),
                            fmt(tab.edges[b + 1]), fmt(tab.lower[b]), fmt(tab.upper[b]),
                            int(tab.counts[b])])


def read_tubes_csv(path, alpha: float = DEFAULT_ALPHA) -> list[ConfidenceTube]:
    grouped: dict[tuple[int, str], list] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (int(rec["cluster"]), rec["channel"])
            grouped.setdefault(key, []).append(
                (int(rec["t"]), float(rec["lower"]), float(rec["upper"])))
    out = []
    for (cl, ch), rows in sorted(grouped.items()):
        rows.sort()
        out.append(ConfidenceTube(cl, ch, alpha, np.array([r[1] for r in rows]),
                                  np.array([r[2] for r in rows])))
    return out
