"""Slow, obviously-correct reference implementations used by the tests.

Everything here is plain Python over lists so that it shares no code path
with the vectorised / compiled library implementations.
"""

from __future__ import annotations

import itertools
import math


def features(curve):
    xs = [float(v) for v in curve]
    n = len(xs)
    half = n // 2

    def mean(v):
        return sum(v) / len(v)

    def var(v):
        m = mean(v)
        return sum((a - m) ** 2 for a in v) / len(v)

    s = sorted(xs)
    med = s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2
    first, second = xs[:half], xs[half:]
    return [float(n), xs[(n + 1) // 2 - 1], med, mean(xs), var(xs),
            mean(first), mean(second), var(first), var(second)]


def extended(curve, pad):
    xs = list(curve)
    return [xs[0]] * pad + xs + [xs[-1]] * pad


def window_distances(short, long):
    """Normalised distance of every window of the padded ``short`` to ``long``."""
    width = len(long)
    ext = extended(short, width)
    out = []
    for start in range(len(short) + width + 1):
        win = ext[start:start + width]
        out.append(math.sqrt(sum((a - b) ** 2 for a, b in zip(win, long))) / (2 * width))
    return out


def diss(a, b):
    a, b = list(a), list(b)
    if len(a) < len(b):
        return min(window_distances(a, b))
    if len(b) < len(a):
        return min(window_distances(b, a))
    return min(min(window_distances(a, b)), min(window_distances(b, a)))


def medoid(ids, curves):
    """``(id, sum)`` of the member with the smallest dissimilarity sum, lowest id on ties."""
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    best = None
    for i in order:
        s = sum(diss(curves[i], curves[j]) for j in range(len(ids)) if j != i)
        if best is None or s < best[1]:
            best = (ids[i], s)
    return best


def within_ss(points, groups):
    total = 0.0
    for g in groups:
        pts = [points[i] for i in g]
        dim = len(pts[0])
        c = [sum(p[d] for p in pts) / len(pts) for d in range(dim)]
        total += sum(sum((p[d] - c[d]) ** 2 for d in range(dim)) for p in pts)
    return total


def set_partitions(items, k):
    """All partitions of ``items`` into exactly ``k`` non-empty blocks."""
    items = list(items)
    if k == 1:
        yield [items]
        return
    if len(items) == k:
        yield [[i] for i in items]
        return
    if len(items) < k:
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest, k - 1):
        yield [[head]] + part
    for part in set_partitions(rest, k):
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1:]


def best_partition(points, k):
    """Partition of ``points`` into ``k`` blocks with least within-block sum of squares."""
    best = None
    for part in set_partitions(range(len(points)), k):
        ss = within_ss(points, part)
        if best is None or ss < best[0] - 1e-12:
            best = (ss, part)
    return best


def nearest_rank_value(values, p):
    s = sorted(values)
    n = len(s)
    # ranks are 1-based; the epsilon absorbs binary noise in p * n
    r = min(max(math.ceil(p * n - 1e-9), 1), n)
    return s[r - 1]


def cq_table(pairs, alpha, n_bins, min_count):
    """Equal-frequency binning of the lagged value, left-to-right merging, per-bin quantiles.

    Returns ``(inner_edges, [(lower, upper, count), ...])``.
    """
    pairs = sorted(pairs)
    prevs = [p for p, _ in pairs]
    n = len(pairs)
    cand = [prevs[(b * n) // n_bins] for b in range(1, n_bins)]
    inner = sorted({e for e in cand if e > prevs[0]})

    def bin_index(v, edges):
        return sum(1 for e in edges if v >= e)

    bins = [[] for _ in range(len(inner) + 1)]
    for p, c in pairs:
        bins[bin_index(p, inner)].append(c)
    # merge left to right until each group holds min_count pairs
    groups, acc, acc_edges = [], [], []
    for b, vals in enumerate(bins):
        acc.extend(vals)
        if len(acc) >= min_count:
            groups.append(acc)
            acc_edges.append(b)
            acc = []
    if acc:
        groups[-1].extend(acc)
        acc_edges[-1] = len(bins) - 1
    merged_inner = [inner[b] for b in acc_edges[:-1]]
    rows = [(nearest_rank_value(g, alpha / 2), nearest_rank_value(g, 1 - alpha / 2), len(g))
            for g in groups]
    return merged_inner, rows


def longest_run(mask):
    best = cur = 0
    for m in mask:
        cur = cur + 1 if m else 0
        best = max(best, cur)
    return best


def confusion(verdicts, truth):
    """``{(D|ND, A|NA): count}`` from parallel boolean lists."""
    out = {k: 0 for k in itertools.product(("D", "ND"), ("A", "NA"))}
    for v, t in zip(verdicts, truth):
        out[("D" if v else "ND", "A" if t else "NA")] += 1
    return out


# 40 hand-listed (previous, current) pairs with ties in both coordinates
PAIRS_40 = [
    (1.0, 1.2), (1.0, 0.9), (1.0, 1.1), (1.5, 1.6), (1.5, 1.4), (2.0, 2.3), (2.0, 2.1),
    (2.0, 1.8), (2.0, 2.0), (2.5, 2.4), (3.0, 3.5), (3.0, 2.9), (3.0, 3.1), (3.2, 3.0),
    (3.5, 3.6), (3.5, 3.9), (4.0, 4.4), (4.0, 3.8), (4.0, 4.0), (4.0, 4.1), (4.5, 4.7),
    (5.0, 5.5), (5.0, 4.6), (5.0, 5.1), (5.0, 5.0), (5.5, 5.2), (6.0, 6.6), (6.0, 5.7),
    (6.0, 6.1), (6.5, 6.4), (7.0, 7.7), (7.0, 6.8), (7.0, 7.2), (7.5, 7.3), (8.0, 8.8),
    (8.0, 7.6), (8.0, 8.1), (9.0, 9.9), (9.0, 8.5), (10.0, 10.0),
]


# ten segments over two clusters, with CT verdicts per channel
_N, _X, _Y, _B = "Normal", "AnomalousX", "AnomalousY", "AnomalousBoth"
FIXTURE_LABELS = {"a": _N, "b": _X, "c": _Y, "d": _B, "e": _N, "f": _N, "g": _B, "h": _X, "i": _N,
                  "j": _Y}
FIXTURE_CLUSTER = {"a": 1, "b": 1, "c": 1, "d": 1, "e": 1, "f": 2, "g": 2, "h": 2, "i": 2, "j": 2}
FIXTURE_FLAGS = {  # id: (X flagged, Y flagged)
    "a": (True, False), "b": (True, False), "c": (False, False), "d": (True, True),
    "e": (False, True), "f": (False, False), "g": (True, False), "h": (False, True),
    "i": (True, True), "j": (False, True),
}
# counted by hand from the tables above, as (D&A, ND&A, D&NA, ND&NA)
FIXTURE_EXPECTED = {
    ("X", 1): (2, 0, 1, 2),  # atypical b,d ; false alarm a
    ("Y", 1): (1, 1, 1, 2),  # atypical c,d (d caught) ; false alarm e
    ("Both", 1): (1, 0, 0, 4),
    ("X", 2): (1, 1, 1, 2),  # atypical g,h (g caught) ; false alarm i
    ("Y", 2): (1, 1, 2, 1),  # atypical g,j (j caught) ; false alarms h,i
    ("Both", 2): (0, 1, 1, 3),
}
