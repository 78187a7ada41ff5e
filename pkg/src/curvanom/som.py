"""Self-organizing map on feature vectors, grouped into superclasses.

Training is a classical online Kohonen map on a rectangular grid. Code
vectors are then merged by Ward agglomeration; the number of superclasses
is either forced or chosen from the explained-variance curve.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

SOM_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SomConfig:
    grid_rows: int = 10
    grid_cols: int = 10
    epochs: int = 20
    initial_learning_rate: float = 0.5
    initial_radius: float | None = None  # half the larger grid dimension
    final_learning_rate: float = 0.01
    final_radius: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.grid_rows < 1 or self.grid_cols < 1 or self.grid_rows * self.grid_cols < 2:
            raise ValueError("SOM grid needs at least 2 units")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not 0 < self.initial_learning_rate <= 1:
            raise ValueError("initial_learning_rate must lie in (0, 1]")
        if self.initial_radius is not None and self.initial_radius <= 0:
            raise ValueError("initial_radius must be positive")
        if not 0 < self.final_learning_rate <= self.initial_learning_rate:
            raise ValueError("final_learning_rate must lie in (0, initial_learning_rate]")
        if self.final_radius <= 0:
            raise ValueError("final_radius must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_units(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def radius0(self) -> float:
        if self.initial_radius is not None:
            return float(self.initial_radius)
        return max(self.grid_rows, self.grid_cols) / 2.0


@dataclass
class Codebook:
    code_vectors: np.ndarray  # (n_units, M)
    unit_coordinates: np.ndarray  # (n_units, 2) as (row, col)

    @property
    def n_units(self) -> int:
        return self.code_vectors.shape[0]

    def bmu(self, features) -> np.ndarray:
        """Index of the best-matching unit for each row of ``features``.

        Ties go to the lowest unit index.
        """
        f = np.atleast_2d(np.asarray(features, dtype=np.float64))
        d2 = ((f[:, None, :] - self.code_vectors[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    def quantization_error(self, features) -> float:
        f = np.atleast_2d(np.asarray(features, dtype=np.float64))
        d = np.linalg.norm(f - self.code_vectors[self.bmu(f)], axis=1)
        return float(d.mean())


def grid_coordinates(rows: int, cols: int) -> np.ndarray:
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.column_stack([r, c]).astype(np.float64)


def _initial_codebook(data: np.ndarray, config: SomConfig, rng: np.random.Generator):
    n = data.shape[0]
    idx = rng.choice(n, size=config.n_units, replace=config.n_units > n)
    return data[idx].copy()


def train_som(features, config: SomConfig = SomConfig()) -> Codebook:
    """Train an online SOM.

    Code vectors start as a seeded sample of the inputs. Each epoch visits
    the inputs in a fresh seeded order; the learning rate and the Gaussian
    neighborhood radius decay linearly, per update, from their initial
    values to ``final_learning_rate`` and ``final_radius`` (0.01 and 1.0 by
    default).
    """
    data = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = data.shape[0]
    if n < 2:
        raise ValueError(f"SOM training needs at least 2 feature vectors, got {n}")
    rng = np.random.default_rng(config.seed)
    coords = grid_coordinates(config.grid_rows, config.grid_cols)
    # squared grid distances between every pair of units
    grid_d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    w = _initial_codebook(data, config, rng)

    total = config.epochs * n
    lr0, r0 = config.initial_learning_rate, config.radius0
    lr1, r1 = config.final_learning_rate, config.final_radius
    step = 0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            frac = step / (total - 1) if total > 1 else 1.0
            lr = lr0 + (lr1 - lr0) * frac
            radius = r0 + (r1 - r0) * frac
            v = data[i]
            bmu = int(np.argmin(((w - v) ** 2).sum(axis=1)))
            h = np.exp(-grid_d2[bmu] / (2.0 * radius * radius))
            w += (lr * h)[:, None] * (v - w)
            step += 1
    return Codebook(code_vectors=w, unit_coordinates=coords)


# --------------------------------------------------------------------------
# Ward agglomeration of code vectors
# --------------------------------------------------------------------------

@dataclass
class MergeStep:
    """One agglomeration: clusters ``a`` and ``b`` (scipy-style ids) form ``new``."""

    a: int
    b: int
    new: int
    cost: float  # increase of within-cluster sum of squares
    size: int


def ward_merges(vectors) -> list[MergeStep]:
    """Full Ward merge sequence of ``vectors``.

    Each step merges the pair of active clusters with the smallest increase
    in within-cluster sum of squares, ``n_a n_b / (n_a + n_b) ||c_a - c_b||^2``.
    Exact ties go to the pair whose smallest member units are lowest.
    Original points are ids ``0..n-1``; the cluster built at step ``s``
    gets id ``n + s``.
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    n = v.shape[0]
    centroid = {i: v[i].copy() for i in range(n)}
    size = {i: 1 for i in range(n)}
    rep = {i: i for i in range(n)}  # smallest member unit
    active = list(range(n))
    merges: list[MergeStep] = []
    for step in range(n - 1):
        cent = np.array([centroid[c] for c in active])
        sz = np.array([size[c] for c in active], dtype=np.float64)
        reps = np.array([rep[c] for c in active])
        d2 = ((cent[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
        costs = sz[:, None] * sz[None, :] / (sz[:, None] + sz[None, :]) * d2
        iu, ju = np.triu_indices(len(active), k=1)
        flat = costs[iu, ju]
        cost = float(flat.min())
        cand = np.flatnonzero(flat == cost)
        lo = np.minimum(reps[iu[cand]], reps[ju[cand]])
        hi = np.maximum(reps[iu[cand]], reps[ju[cand]])
        pick = cand[np.lexsort((hi, lo))[0]]
        a, b = active[iu[pick]], active[ju[pick]]
        if rep[a] > rep[b]:
            a, b = b, a
        new = n + step
        na, nb = size[a], size[b]
        centroid[new] = (na * centroid[a] + nb * centroid[b]) / (na + nb)
        size[new] = na + nb
        rep[new] = min(rep[a], rep[b])
        active = [c for c in active if c not in (a, b)] + [new]
        merges.append(MergeStep(a=a, b=b, new=new, cost=cost, size=na + nb))
    return merges


def cut_merges(n: int, merges: list[MergeStep], k: int) -> np.ndarray:
    """Labels ``1..k`` after replaying the first ``n - k`` merges.

    Labels are numbered by the lowest unit index of each group.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    members = {i: [i] for i in range(n)}
    for m in merges[: n - k]:
        members[m.new] = members.pop(m.a) + members.pop(m.b)
    groups = sorted(members.values(), key=min)
    labels = np.empty(n, dtype=np.int64)
    for lab, g in enumerate(groups, start=1):
        labels[g] = lab
    return labels


def hac_superclusters(codebook: Codebook, k: int, merges=None) -> np.ndarray:
    """Cut the Ward dendrogram of the code vectors into ``k`` superclasses.

    Returns an array mapping unit index to a label in ``1..k``.
    """
    n = codebook.n_units
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if merges is None:
        merges = ward_merges(codebook.code_vectors)
    return cut_merges(n, merges, k)


def explained_variance(codebook: Codebook, labels) -> float:
    """Between-cluster over total sum of squares of the code vectors.

    A zero total sum of squares counts as fully explained.
    """
    v = codebook.code_vectors
    labels = np.asarray(labels)
    centered = v - v.mean(axis=0)
    total = float((centered**2).sum())
    if len(np.unique(labels)) == v.shape[0]:
        return 1.0
    if total == 0.0:
        return 1.0
    within = 0.0
    for lab in np.unique(labels):
        grp = v[labels == lab]
        within += float(((grp - grp.mean(axis=0)) ** 2).sum())
    return min(1.0, max(0.0, 1.0 - within / total))


# rounding slack when comparing explained variance with the threshold
_EV_TOL = 1e-12


def explained_variance_curve(codebook: Codebook, merges=None) -> np.ndarray:
    """Explained variance for every cut ``k = 1..n_units`` (index ``k - 1``)."""
    n = codebook.n_units
    if merges is None:
        merges = ward_merges(codebook.code_vectors)
    return np.array(
        [explained_variance(codebook, cut_merges(n, merges, k)) for k in range(1, n + 1)]
    )


def choose_k(codebook: Codebook, threshold: float = 0.80, merges=None) -> int:
    """Smallest superclass count whose explained variance reaches ``threshold``."""
    n = codebook.n_units
    if merges is None:
        merges = ward_merges(codebook.code_vectors)
    for k in range(1, n + 1):
        if explained_variance(codebook, cut_merges(n, merges, k)) >= threshold - _EV_TOL:
            return k
    return n


@dataclass
class ClusterAssignment:
    unit_of_segment: dict[str, int]
    supercluster_of_unit: dict[int, int]
    n_clusters: int
    cluster_of_segment: dict[str, int] = field(default_factory=dict)

    def sizes(self) -> dict[int, int]:
        out = {c: 0 for c in range(1, self.n_clusters + 1)}
        for c in self.cluster_of_segment.values():
            out[c] += 1
        return out

    def members(self, cluster: int) -> list[str]:
        return sorted(s for s, c in self.cluster_of_segment.items() if c == cluster)


def assign(ids, features, codebook: Codebook, unit_labels) -> ClusterAssignment:
    """Map each segment to the superclass of its best-matching unit.

    Superclasses are renumbered ``1..I`` by decreasing segment count; equal
    counts keep the order of the incoming labels.
    """
    ids = list(ids)
    unit_labels = np.asarray(unit_labels)
    bmus = codebook.bmu(features) if ids else np.zeros(0, dtype=int)
    raw = unit_labels[bmus]
    old_labels = sorted(set(unit_labels.tolist()))
    counts = {lab: int((raw == lab).sum()) for lab in old_labels}
    order = sorted(old_labels, key=lambda lab: (-counts[lab], lab))
    relabel = {old: new for new, old in enumerate(order, start=1)}
    unit_of_segment = {sid: int(u) for sid, u in zip(ids, bmus)}
    return ClusterAssignment(
        unit_of_segment=unit_of_segment,
        supercluster_of_unit={u: relabel[int(lab)] for u, lab in enumerate(unit_labels)},
        n_clusters=len(old_labels),
        cluster_of_segment={sid: relabel[int(lab)] for sid, lab in zip(ids, raw)},
    )


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def save_model(path, codebook: Codebook, assignment: ClusterAssignment, standardizer,
               config: SomConfig, merges: list[MergeStep], ev_curve=None):
    """Write the cluster model as versioned JSON.

    Keys: ``format_version``, ``som_config``, ``feature_mean``, ``feature_std``,
    ``code_vectors``, ``unit_coordinates``, ``supercluster_of_unit``,
    ``n_clusters``, ``merges`` (``[a, b, new, cost, size]`` rows) and
    optionally ``explained_variance`` (index ``k - 1``).
    """
    doc = {
        "format_version": SOM_FORMAT_VERSION,
        "som_config": asdict(config),
        "feature_mean": standardizer.mean.tolist(),
        "feature_std": standardizer.std.tolist(),
        "code_vectors": codebook.code_vectors.tolist(),
        "unit_coordinates": codebook.unit_coordinates.tolist(),
        "supercluster_of_unit": [assignment.supercluster_of_unit[u]
                                 for u in range(codebook.n_units)],
        "n_clusters": assignment.n_clusters,
        "merges": [[m.a, m.b, m.new, m.cost, m.size] for m in merges],
    }
    if ev_curve is not None:
        doc["explained_variance"] = [float(e) for e in ev_curve]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Inverse of :func:`save_model`; returns ``(codebook, unit_labels, standardizer, doc)``."""
    from .series import Standardizer

    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != SOM_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format {doc.get('format_version')!r}")
    cb = Codebook(np.array(doc["code_vectors"]), np.array(doc["unit_coordinates"]))
    st = Standardizer(np.array(doc["feature_mean"]), np.array(doc["feature_std"]))
    return cb, np.array(doc["supercluster_of_unit"]), st, doc
