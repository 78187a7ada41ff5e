"""Segments, datasets and key-variable feature extraction.

A curve is stored as a read-only 1-D ``float64`` array; :func:`as_curve`
is the single entry point that enforces the curve invariants (at least two
samples, all finite).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

N_FEATURES = 9

FEATURE_NAMES = (
    "length",
    "midpoint",
    "median",
    "mean",
    "variance",
    "mean_first_half",
    "mean_second_half",
    "variance_first_half",
    "variance_second_half",
)


class Label(str, enum.Enum):
    """Ground-truth status of a bivariate segment."""

    NORMAL = "Normal"
    ANOMALOUS_X = "AnomalousX"
    ANOMALOUS_Y = "AnomalousY"
    ANOMALOUS_BOTH = "AnomalousBoth"

    @property
    def x_atypical(self) -> bool:
        return self in (Label.ANOMALOUS_X, Label.ANOMALOUS_BOTH)

    @property
    def y_atypical(self) -> bool:
        return self in (Label.ANOMALOUS_Y, Label.ANOMALOUS_BOTH)


def as_curve(values) -> np.ndarray:
    """Validate ``values`` and return them as a read-only float array.

    Raises
    ------
    ValueError
        If the input is not one-dimensional, has fewer than two samples or
        contains a non-finite value.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"curve must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(f"curve needs at least 2 samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("curve contains NaN or infinite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BivariateSegment:
    """One (X, Y) pair; X is the key variable."""

    id: str
    x: np.ndarray
    y: np.ndarray
    ground_truth: Label | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", as_curve(self.x))
        object.__setattr__(self, "y", as_curve(self.y))
        if self.x.size != self.y.size:
            raise ValueError(
                f"segment {self.id!r}: x has {self.x.size} samples, y has {self.y.size}"
            )
        if self.ground_truth is not None and not isinstance(self.ground_truth, Label):
            object.__setattr__(self, "ground_truth", Label(self.ground_truth))

    @property
    def length(self) -> int:
        return int(self.x.size)


@dataclass
class Dataset:
    segments: list[BivariateSegment]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for seg in self.segments:
            if seg.id in seen:
                raise ValueError(f"duplicate segment id {seg.id!r}")
            seen.add(seg.id)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.segments]

    def by_id(self) -> dict[str, BivariateSegment]:
        return {s.id: s for s in self.segments}

    def labels(self) -> dict[str, Label]:
        return {s.id: s.ground_truth for s in self.segments if s.ground_truth is not None}


def extract_features(curve) -> np.ndarray:
    """Summarize a key-variable curve by a fixed-length feature vector.

    The entries follow :data:`FEATURE_NAMES`. The first half holds the
    first ``floor(l/2)`` samples, the midpoint is the sample at 1-based
    position ``ceil(l/2)`` and every variance uses divisor ``n``.

    Examples
    --------
    >>> extract_features([1, 2, 3, 4]).tolist()
    [4.0, 2.0, 2.5, 2.5, 1.25, 1.5, 3.5, 0.25, 0.25]
    """
    x = as_curve(curve)
    n = x.size
    half = n // 2
    first, second = x[:half], x[half:]
    return np.array(
        [
            float(n),
            x[math.ceil(n / 2) - 1],
            np.median(x),
            x.mean(),
            x.var(),
            first.mean(),
            second.mean(),
            first.var(),
            second.var(),
        ]
    )


def feature_matrix(curves: Iterable) -> np.ndarray:
    rows = [extract_features(c) for c in curves]
    if not rows:
        raise ValueError("no curves given")
    return np.vstack(rows)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map ``z = (f - mean) / std``.

    Zero-variance columns carry ``std == 0`` and map to zero.
    """

    mean: np.ndarray
    std: np.ndarray

    def transform(self, features) -> np.ndarray:
        f = np.atleast_2d(np.asarray(features, dtype=np.float64))
        scale = np.where(self.std > 0, self.std, 1.0)
        z = (f - self.mean) / scale
        z[:, self.std == 0] = 0.0
        return z

    def inverse(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        return z * self.std + self.mean


def standardize_features(features) -> tuple[np.ndarray, Standardizer]:
    """Z-score each feature column.

    Parameters
    ----------
    features : array_like, shape (n, M)
        One row per curve.

    Returns
    -------
    z : numpy.ndarray, shape (n, M)
        Standardized features; columns with zero variance are all zero.
    standardizer : Standardizer
        The fitted column means and (population) standard deviations.
    """
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if f.shape[0] == 0:
        raise ValueError("cannot standardize an empty feature list")
    mean = f.mean(axis=0)
    std = f.std(axis=0)
    # Constant columns can yield a tiny non-zero std from rounding.
    std = np.where(np.all(f == f[0], axis=0), 0.0, std)
    st = Standardizer(mean=mean, std=std)
    return st.transform(f), st


# --------------------------------------------------------------------------
# CSV persistence
# --------------------------------------------------------------------------

def fmt(value: float) -> str:
    """Shortest round-trip text for a float."""
    return repr(float(value))


def write_segments_csv(path, segments: Sequence[BivariateSegment], with_labels: bool = True):
    """Write segments in long format ``id,t,x,y[,label]``, sorted by (id, t)."""
    with_labels = with_labels and any(s.ground_truth is not None for s in segments)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "t", "x", "y", "label"] if with_labels else ["id", "t", "x", "y"])
        for seg in sorted(segments, key=lambda s: s.id):
            lab = seg.ground_truth.value if seg.ground_truth is not None else ""
            for t in range(seg.length):
                row = [seg.id, t + 1, fmt(seg.x[t]), fmt(seg.y[t])]
                if with_labels:
                    row.append(lab)
                w.writerow(row)


def read_segments_csv(path, labels: dict[str, Label] | None = None) -> Dataset:
    """Read a long-format segment CSV.

    Labels come from the optional ``label`` column, overridden by the
    ``labels`` mapping when one is given.
    """
    rows: dict[str, list[tuple[int, float, float]]] = {}
    seg_labels: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"id", "t", "x", "y"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            sid = rec["id"]
            rows.setdefault(sid, []).append((int(rec["t"]), float(rec["x"]), float(rec["y"])))
            if rec.get("label"):
                seg_labels[sid] = rec["label"]
    segments = []
    for sid in sorted(rows):
        pts = sorted(rows[sid])
        ts = [p[0] for p in pts]
        if ts != list(range(1, len(ts) + 1)):
            raise ValueError(f"{path}: segment {sid!r} has non-contiguous t values")
        lab = None
        if labels is not None and sid in labels:
            lab = labels[sid]
        elif sid in seg_labels:
            lab = Label(seg_labels[sid])
        segments.append(
            BivariateSegment(sid, [p[1] for p in pts], [p[2] for p in pts], lab)
        )
    return Dataset(segments, {"source": Path(path).name})


def write_labels_csv(path, segments: Sequence[BivariateSegment], anomaly_types: dict[str, str]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "ground_truth", "anomaly_type"])
        for seg in sorted(segments, key=lambda s: s.id):
            lab = seg.ground_truth or Label.NORMAL
            w.writerow([seg.id, lab.value, anomaly_types.get(seg.id, "None")])


def read_labels_csv(path) -> dict[str, Label]:
    with open(path, newline="") as fh:
        return {rec["id"]: Label(rec["ground_truth"]) for rec in csv.DictReader(fh)}
