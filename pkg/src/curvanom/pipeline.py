"""End-to-end pipeline: features, clustering, alignment, detection, evaluation.

Each stage reads and writes plain files in a run directory so that stages
can be re-run on their own:

==========================  ===================================================
``features.csv``            ``id`` plus the raw key-variable features
``som_model.json``          codebook, standardizer, superclasses, merge sequence
``clusters.csv``            ``id,cluster``
``reference_curves.csv``    ``cluster,t,value``
``reference_index.csv``     ``cluster,source_segment_id,length,size``
``alignment.csv``           ``id,cluster,offset,distance``
``aligned.csv``             ``id,cluster,t,x,y``
``tubes.csv``               ``cluster,channel,t,lower,upper``
``cq_tables.csv``           ``cluster,channel,bin_lo,bin_hi,lower,upper,count``
``verdicts.csv``            ``id,cluster,channel,method,score,is_anomaly``
``confusion.csv``           ``method,scope,cluster,row,D,ND,T``
``manifest.json``           config, config hash, seeds and artifact checksums
``timings.json``            wall-clock seconds per stage
==========================  ===================================================
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import align, detectors, series, simgen, som
from .series import Dataset, Label, fmt

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
CHANNELS = ("X", "Y")
SCOPES = ("X", "Y", "Both")
METHODS = ("CT", "CQ")


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float = detectors.DEFAULT_ALPHA
    ct_run_threshold: float = detectors.DEFAULT_CT_RUN
    cq_violation_threshold: float = detectors.DEFAULT_CQ_THRESHOLD
    explained_variance_threshold: float = 0.80
    n_clusters: int | None = None  # forces the superclass count when set
    som: som.SomConfig = som.SomConfig()
    cq_bins: int = detectors.DEFAULT_N_BINS
    cq_min_bin_count: int = detectors.DEFAULT_MIN_BIN_COUNT
    cq_lag: int = 1
    medoid_cap: int = align.DEFAULT_MEDOID_CAP
    generator: simgen.GeneratorConfig = simgen.GeneratorConfig(n_signals=500, n_anomalies=25)
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha", "ct_run_threshold", "cq_violation_threshold",
                     "explained_variance_threshold"):
            v = getattr(self, name)
            if not 0 < v < 1 and not (name == "explained_variance_threshold" and v == 1):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.n_clusters is not None and self.n_clusters < 1:
            raise ValueError("n_clusters must be positive")
        if self.cq_bins < 1 or self.cq_min_bin_count < 1 or self.cq_lag < 1:
            raise ValueError("CQ binning parameters must be positive")
        if self.medoid_cap < 1:
            raise ValueError("medoid_cap must be positive")

    @property
    def som_config(self) -> som.SomConfig:
        return dataclasses.replace(self.som, seed=self.seed)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return json.loads(json.dumps(d))

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "som" in d:
            d["som"] = som.SomConfig(**d["som"])
        if "generator" in d:
            d["generator"] = simgen.GeneratorConfig.from_dict(d["generator"])
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path) -> PipelineConfig:
    with open(path) as fh:
        return PipelineConfig.from_dict(json.load(fh))


def save_config(path, cfg: PipelineConfig):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


# --------------------------------------------------------------------------
# clustering
# --------------------------------------------------------------------------

@dataclass
class ClusterResult:
    features: np.ndarray
    standardizer: series.Standardizer
    codebook: som.Codebook
    merges: list
    ev_curve: np.ndarray
    k: int
    assignment: som.ClusterAssignment


def cluster_stage(dataset: Dataset, cfg: PipelineConfig) -> ClusterResult:
    feats = series.feature_matrix(s.x for s in dataset)
    z, st = series.standardize_features(feats)
    cb = som.train_som(z, cfg.som_config)
    merges = som.ward_merges(cb.code_vectors)
    ev = som.explained_variance_curve(cb, merges)
    if cfg.n_clusters is not None:
        k = min(cfg.n_clusters, cb.n_units)
    else:
        k = som.choose_k(cb, cfg.explained_variance_threshold, merges)
    unit_labels = som.cut_merges(cb.n_units, merges, k)
    asg = som.assign(dataset.ids, z, cb, unit_labels)
    logger.info("clustered %d segments into %d superclasses", len(dataset), k)
    return ClusterResult(feats, st, cb, merges, ev, k, asg)


def write_cluster_outputs(run_dir: Path, ds: Dataset, res: ClusterResult, cfg: PipelineConfig):
    with open(run_dir / "features.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", *series.FEATURE_NAMES])
        for sid, row in zip(ds.ids, res.features):
            w.writerow([sid, *(fmt(v) for v in row)])
    som.save_model(run_dir / "som_model.json", res.codebook, res.assignment, res.standardizer,
                   cfg.som_config, res.merges, res.ev_curve)
    write_clusters_csv(run_dir / "clusters.csv", res.assignment.cluster_of_segment)


def write_clusters_csv(path, cluster_of_segment: dict[str, int]):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "cluster"])
        for sid in sorted(cluster_of_segment):
            w.writerow([sid, cluster_of_segment[sid]])


def read_clusters_csv(path) -> dict[str, int]:
    with open(path, newline="") as fh:
        return {r["id"]: int(r["cluster"]) for r in csv.DictReader(fh)}


# --------------------------------------------------------------------------
# alignment
# --------------------------------------------------------------------------

@dataclass
class AlignResult:
    references: dict[int, align.ReferenceCurve]
    aligned: dict[str, align.AlignedSegment]
    cluster_of_segment: dict[str, int]

    def cluster_members(self, cluster: int) -> list[str]:
        return sorted(s for s, c in self.cluster_of_segment.items() if c == cluster)

    @property
    def clusters(self) -> list[int]:
        return sorted(set(self.cluster_of_segment.values()))


def align_stage(dataset: Dataset, cluster_of_segment: dict[str, int],
                cfg: PipelineConfig) -> AlignResult:
    segs = dataset.by_id()
    missing = set(segs) - set(cluster_of_segment)
    if missing:
        raise ValueError(f"{len(missing)} segments have no cluster, e.g. {sorted(missing)[0]!r}")
    refs, aligned = {}, {}
    for cl in sorted(set(cluster_of_segment.values())):
        ids = sorted(s for s, c in cluster_of_segment.items() if c == cl and s in segs)
        rc = align.reference_curve([(s, segs[s].x) for s in ids], cl, cfg.medoid_cap, cfg.seed)
        refs[cl] = rc
        for s in ids:
            aligned[s] = align.realign(segs[s], rc)
        logger.info("cluster %d: %d members, reference %s (length %d)", cl, len(ids),
                    rc.source_segment_id, rc.length)
    return AlignResult(refs, aligned, {s: c for s, c in cluster_of_segment.items() if s in segs})


def write_align_outputs(run_dir: Path, res: AlignResult):
    with open(run_dir / "reference_curves.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["cluster", "t", "value"])
        for cl, rc in sorted(res.references.items()):
            for t, v in enumerate(rc.values, start=1):
                w.writerow([cl, t, fmt(v)])
    with open(run_dir / "reference_index.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["cluster", "source_segment_id", "length", "size"])
        for cl, rc in sorted(res.references.items()):
            w.writerow([cl, rc.source_segment_id, rc.length, len(res.cluster_members(cl))])
    with open(run_dir / "alignment.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "cluster", "offset", "distance"])
        for sid in sorted(res.aligned):
            a = res.aligned[sid]
            w.writerow([sid, res.cluster_of_segment[sid], a.offset, fmt(a.distance)])
    write_aligned_csv(run_dir / "aligned.csv", res)


def write_aligned_csv(path, res: AlignResult):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "cluster", "t", "x", "y"])
        for sid in sorted(res.aligned):
            a, cl = res.aligned[sid], res.cluster_of_segment[sid]
            for t in range(a.x_aligned.size):
                w.writerow([sid, cl, t + 1, fmt(a.x_aligned[t]), fmt(a.y_aligned[t])])


def read_aligned_csv(path) -> AlignResult:
    rows: dict[str, list] = {}
    clusters: dict[str, int] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(r["id"], []).append((int(r["t"]), float(r["x"]), float(r["y"])))
            clusters[r["id"]] = int(r["cluster"])
    aligned = {}
    for sid, pts in rows.items():
        pts.sort()
        aligned[sid] = align.AlignedSegment(sid, np.array([p[1] for p in pts]),
                                            np.array([p[2] for p in pts]), 0, float("nan"))
    return AlignResult({}, aligned, clusters)


# --------------------------------------------------------------------------
# detection
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VerdictRow:
    id: str
    cluster: int
    channel: str  # X, Y or Both
    method: str  # CT or CQ
    score: float
    is_anomaly: bool


@dataclass
class DetectResult:
    tubes: list[detectors.ConfidenceTube] = field(default_factory=list)
    tables: list[detectors.ConditionalQuantileTable] = field(default_factory=list)
    verdicts: list[VerdictRow] = field(default_factory=list)
    masks: dict[tuple[str, str, str], np.ndarray] = field(default_factory=dict)


def _channel_curves(res: AlignResult, ids, channel):
    attr = "x_aligned" if channel == "X" else "y_aligned"
    return [getattr(res.aligned[s], attr) for s in ids]


def detect_stage(res: AlignResult, cfg: PipelineConfig, methods=METHODS) -> DetectResult:
    """Fit CT/CQ per cluster and channel and score every member.

    Clusters too small to fit a detector get non-anomalous verdicts with
    score 0. The Both channel flags a segment when X and Y are both flagged
    by the same method; its score is the smaller of the two channel scores.
    """
    out = DetectResult()
    for cl in res.clusters:
        ids = res.cluster_members(cl)
        per: dict[tuple[str, str], dict[str, detectors.DetectionVerdict]] = {}
        for ch in CHANNELS:
            curves = _channel_curves(res, ids, ch)
            if "CT" in methods:
                per[("CT", ch)] = _run_ct(out, curves, ids, cl, ch, cfg)
            if "CQ" in methods:
                per[("CQ", ch)] = _run_cq(out, curves, ids, cl, ch, cfg)
        for m in METHODS:
            if m not in methods:
                continue
            for ch in CHANNELS:
                for s in ids:
                    v = per[(m, ch)][s]
                    out.verdicts.append(VerdictRow(s, cl, ch, m, v.score, v.is_anomaly))
            for s in ids:
                vx, vy = per[(m, "X")][s], per[(m, "Y")][s]
                out.verdicts.append(VerdictRow(s, cl, "Both", m, min(vx.score, vy.score),
                                               vx.is_anomaly and vy.is_anomaly))
    out.verdicts.sort(key=lambda v: (v.id, METHODS.index(v.method), SCOPES.index(v.channel)))
    return out


def _blank(ids, ch, method):
    return {s: detectors.DetectionVerdict(s, ch, method, False, 0.0, np.zeros(0, bool))
            for s in ids}


def _run_ct(out, curves, ids, cl, ch, cfg):
    if len(curves) < 2:
        logger.warning("cluster %d has %d member(s); CT skipped", cl, len(curves))
        return _blank(ids, ch, "CT")
    tube = detectors.fit_ct(curves, cfg.alpha, cl, ch)
    out.tubes.append(tube)
    verdicts = {}
    for s, c in zip(ids, curves):
        v = detectors.detect_ct(c, tube, cfg.ct_run_threshold, s)
        verdicts[s] = v
        out.masks[(s, ch, "CT")] = v.violation_mask
    return verdicts


def _run_cq(out, curves, ids, cl, ch, cfg):
    try:
        table = detectors.fit_cq(curves, cfg.alpha, cfg.cq_bins, cfg.cq_min_bin_count, cl, ch,
                                 cfg.cq_lag)
    except ValueError as exc:
        logger.warning("cluster %d channel %s: CQ skipped (%s)", cl, ch, exc)
        return _blank(ids, ch, "CQ")
    out.tables.append(table)
    verdicts = {}
    for s, c in zip(ids, curves):
        v = detectors.detect_cq(c, table, cfg.cq_violation_threshold, s)
        verdicts[s] = v
        out.masks[(s, ch, "CQ")] = v.violation_mask
    return verdicts


def write_verdicts_csv(path, verdicts):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "cluster", "channel", "method", "score", "is_anomaly"])
        for v in verdicts:
            w.writerow([v.id, v.cluster, v.channel, v.method, fmt(v.score), int(v.is_anomaly)])


def read_verdicts_csv(path) -> list[VerdictRow]:
    with open(path, newline="") as fh:
        return [VerdictRow(r["id"], int(r["cluster"]), r["channel"], r["method"],
                           float(r["score"]), r["is_anomaly"] in ("1", "True", "true"))
                for r in csv.DictReader(fh)]


def write_detect_outputs(run_dir: Path, res: DetectResult):
    detectors.write_tubes_csv(run_dir / "tubes.csv", res.tubes)
    detectors.write_cq_tables_csv(run_dir / "cq_tables.csv", res.tables)
    write_verdicts_csv(run_dir / "verdicts.csv", res.verdicts)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Detected/not-detected crossed with atypical/normal for one cluster and scope."""

    method: str
    scope: str
    cluster: int
    d_a: int
    nd_a: int
    d_na: int
    nd_na: int

    @property
    def atypical(self) -> int:
        return self.d_a + self.nd_a

    @property
    def normal(self) -> int:
        return self.d_na + self.nd_na

    @property
    def detected(self) -> int:
        return self.d_a + self.d_na

    @property
    def not_detected(self) -> int:
        return self.nd_a + self.nd_na

    @property
    def total(self) -> int:
        return self.atypical + self.normal

    @property
    def false_alarms(self) -> int:
        return self.d_na

    def rows(self):
        """``(row, D, ND, T)`` tuples for the A, NA and T rows."""
        return [("A", self.d_a, self.nd_a, self.atypical),
                ("NA", self.d_na, self.nd_na, self.normal),
                ("T", self.detected, self.not_detected, self.total)]


def scope_atypical(label: Label, scope: str) -> bool:
    if scope == "X":
        return label.x_atypical
    if scope == "Y":
        return label.y_atypical
    return label is Label.ANOMALOUS_BOTH


def evaluate(verdicts, labels: dict[str, Label]) -> list[ConfusionMatrix]:
    """Confusion matrices per method, scope and cluster.

    The X scope counts AnomalousX and AnomalousBoth as atypical, the Y scope
    AnomalousY and AnomalousBoth, the Both scope AnomalousBoth only.
    """
    unlabeled = sorted({v.id for v in verdicts} - set(labels))
    if unlabeled:
        raise ValueError(f"{len(unlabeled)} verdicts have no label, e.g. {unlabeled[0]!r}")
    cells: dict[tuple[str, str, int], list[int]] = {}
    for v in verdicts:
        key = (v.method, v.channel, v.cluster)
        c = cells.setdefault(key, [0, 0, 0, 0])
        atyp = scope_atypical(labels[v.id], v.channel)
        c[(0 if v.is_anomaly else 1) + (0 if atyp else 2)] += 1
    out = [ConfusionMatrix(m, s, cl, *c) for (m, s, cl), c in cells.items()]
    out.sort(key=lambda cm: (METHODS.index(cm.method), SCOPES.index(cm.scope), cm.cluster))
    return out


def write_confusion_csv(path, matrices):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["method", "scope", "cluster", "row", "D", "ND", "T"])
        for cm in matrices:
            for row in cm.rows():
                w.writerow([cm.method, cm.scope, cm.cluster, *row])


def read_confusion_csv(path) -> list[ConfusionMatrix]:
    acc: dict[tuple[str, str, int], dict[str, tuple[int, int]]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (r["method"], r["scope"], int(r["cluster"]))
            acc.setdefault(key, {})[r["row"]] = (int(r["D"]), int(r["ND"]))
    out = []
    for (m, s, cl), rows in acc.items():
        out.append(ConfusionMatrix(m, s, cl, rows["A"][0], rows["A"][1],
                                   rows["NA"][0], rows["NA"][1]))
    out.sort(key=lambda cm: (METHODS.index(cm.method), SCOPES.index(cm.scope), cm.cluster))
    return out


def false_alarm_totals(matrices) -> dict[str, dict[str, int]]:
    """False alarms summed over clusters, as ``{method: {scope: count}}``."""
    out = {m: {s: 0 for s in SCOPES} for m in METHODS}
    for cm in matrices:
        out[cm.method][cm.scope] += cm.false_alarms
    return out


def recall_totals(matrices) -> dict[str, dict[str, tuple[int, int]]]:
    """``(detected, total)`` atypical counts summed over clusters."""
    out = {m: {s: (0, 0) for s in SCOPES} for m in METHODS}
    for cm in matrices:
        d, t = out[cm.method][cm.scope]
        out[cm.method][cm.scope] = (d + cm.d_a, t + cm.atypical)
    return out


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Timer:
    def __init__(self):
        self.times: dict[str, float] = {}

    def run(self, stage, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(stage, f"{type(exc).__name__}: {exc}") from exc
        self.times[stage] = round(self.times.get(stage, 0.0) + time.perf_counter() - t0, 3)
        return result


def write_manifest(run_dir: Path, cfg: PipelineConfig, extra: dict | None = None,
                   timings: dict | None = None):
    """Write ``manifest.json`` (deterministic) and ``timings.json``.

    The manifest lists every artifact present in the run directory with
    its SHA-256, so two runs with the same inputs produce identical
    manifests. Wall-clock timings live in a separate file.
    """
    artifacts = {}
    for p in sorted(run_dir.iterdir()):
        if p.is_file() and p.name not in ("manifest.json", "timings.json"):
            artifacts[p.name] = _sha256(p)
    doc = {
        "manifest_version": MANIFEST_VERSION,
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "artifacts": artifacts,
    }
    doc.update(extra or {})
    with open(run_dir / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if timings is not None:
        with open(run_dir / "timings.json", "w") as fh:
            json.dump(timings, fh, indent=2, sort_keys=True)
            fh.write("\n")


def simulate(cfg: PipelineConfig, out_dir) -> Dataset:
    """Generate the benchmark and write ``segments.csv``, ``labels.csv`` and ``generator.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = simgen.generate(cfg.generator)
    series.write_segments_csv(out / "segments.csv", ds.segments)
    series.write_labels_csv(out / "labels.csv", ds.segments, json.loads(ds.metadata["anomaly_types"]))
    with open(out / "generator.json", "w") as fh:
        json.dump({"config": cfg.generator.to_dict(), "seed": cfg.generator.seed,
                   "config_digest": ds.metadata["config_digest"],
                   "anomaly_ids": ds.metadata["anomaly_ids"].split(",") if ds.metadata["anomaly_ids"] else []},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ds


@dataclass
class RunResult:
    run_dir: Path
    dataset: Dataset
    clusters: ClusterResult
    alignment: AlignResult
    detection: DetectResult
    confusion: list[ConfusionMatrix] | None
    timings: dict[str, float]


def run_pipeline(cfg: PipelineConfig, out_dir, dataset: Dataset | None = None,
                 input_path=None, labels: dict[str, Label] | None = None,
                 methods=METHODS) -> RunResult:
    """Run every stage and persist the artifacts in ``out_dir``.

    The input is ``dataset``, else the segment CSV at ``input_path``, else a
    freshly simulated benchmark (written to ``out_dir`` as well). Confusion
    matrices are produced when labels are known.
    """
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    timer = _Timer()
    if dataset is None:
        if input_path is not None:
            dataset = timer.run("load", series.read_segments_csv, input_path, labels)
        else:
            dataset = timer.run("simulate", simulate, cfg, run_dir)
    if len(dataset) < 2:
        raise PipelineError("load", "need at least 2 segments")
    if labels is None:
        labels = dataset.labels() if len(dataset.labels()) == len(dataset) else None

    cres = timer.run("cluster", cluster_stage, dataset, cfg)
    timer.run("cluster", write_cluster_outputs, run_dir, dataset, cres, cfg)
    ares = timer.run("align", align_stage, dataset, cres.assignment.cluster_of_segment, cfg)
    timer.run("align", write_align_outputs, run_dir, ares)
    dres = timer.run("detect", detect_stage, ares, cfg, methods)
    timer.run("detect", write_detect_outputs, run_dir, dres)
    confusion = None
    if labels is not None:
        confusion = timer.run("evaluate", evaluate, dres.verdicts, labels)
        write_confusion_csv(run_dir / "confusion.csv", confusion)
    timer.run("report", report, run_dir)
    write_manifest(run_dir, cfg, {"n_segments": len(dataset), "n_clusters": cres.k},
                   timer.times)
    return RunResult(run_dir, dataset, cres, ares, dres, confusion, timer.times)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

def report(run_dir) -> str:
    """Write ``summary.txt``, ``plot_curves.csv`` and ``plot_tubes.csv``.

    Needs ``clusters.csv``, ``reference_index.csv``, ``aligned.csv`` and
    ``verdicts.csv``; ``confusion.csv`` is used when present. Returns the
    summary text.
    """
    run = Path(run_dir)
    needed = ["clusters.csv", "reference_index.csv", "aligned.csv", "verdicts.csv"]
    missing = [n for n in needed if not (run / n).exists()]
    if missing:
        raise FileNotFoundError(f"{run}: missing artifacts {missing}")
    clusters = read_clusters_csv(run / "clusters.csv")
    with open(run / "reference_index.csv", newline="") as fh:
        ref_index = {int(r["cluster"]): r for r in csv.DictReader(fh)}
    verdicts = read_verdicts_csv(run / "verdicts.csv")
    confusion = read_confusion_csv(run / "confusion.csv") if (run / "confusion.csv").exists() else None

    flagged: dict[tuple[str, str], bool] = {(v.id, v.method + "_" + v.channel): v.is_anomaly
                                             for v in verdicts}
    lines = [f"segments: {len(clusters)}",
             f"clusters: {len(set(clusters.values()))}", ""]
    fa_by = {}
    if confusion is not None:
        for cm in confusion:
            fa_by[(cm.method, cm.scope, cm.cluster)] = cm
    for cl in sorted(set(clusters.values())):
        ids = [s for s, c in clusters.items() if c == cl]
        ref = ref_index.get(cl, {})
        lines.append(f"[cluster {cl}] size={len(ids)} length={ref.get('length', '?')} "
                     f"reference={ref.get('source_segment_id', '?')}")
        for m in METHODS:
            counts = {s: sum(flagged.get((i, f"{m}_{s}"), False) for i in ids) for s in SCOPES}
            text = "  ".join(f"{s}={counts[s]}" for s in SCOPES)
            lines.append(f"  {m} detections: {text}")
            if confusion is not None:
                fa = "  ".join(f"{s}={fa_by[(m, s, cl)].false_alarms}"
                               for s in SCOPES if (m, s, cl) in fa_by)
                lines.append(f"  {m} false alarms: {fa}")
    if confusion is not None:
        tot = false_alarm_totals(confusion)
        rec = recall_totals(confusion)
        lines.append("")
        for m in METHODS:
            lines.append(f"{m} total false alarms: " +
                         "  ".join(f"{s}={tot[m][s]}" for s in SCOPES) +
                         f"  all={sum(tot[m].values())}")
            lines.append(f"{m} detected atypical: " +
                         "  ".join(f"{s}={rec[m][s][0]}/{rec[m][s][1]}" for s in SCOPES))
    text = "\n".join(lines) + "\n"
    (run / "summary.txt").write_text(text)

    flag_cols = [f"{m}_{c}" for m in METHODS for c in CHANNELS]
    with open(run / "aligned.csv", newline="") as src, \
            open(run / "plot_curves.csv", "w", newline="") as dst:
        w = _writer(dst)
        w.writerow(["id", "cluster", "t", "x", "y", *(c.lower() for c in flag_cols)])
        for r in csv.DictReader(src):
            w.writerow([r["id"], r["cluster"], r["t"], r["x"], r["y"],
                        *(int(flagged.get((r["id"], c), False)) for c in flag_cols)])
    refs: dict[int, list[str]] = {}
    if (run / "reference_curves.csv").exists():
        with open(run / "reference_curves.csv", newline="") as fh:
            for r in csv.DictReader(fh):
                refs.setdefault(int(r["cluster"]), []).append(r["value"])
    with open(run / "plot_tubes.csv", "w", newline="") as dst:
        w = _writer(dst)
        w.writerow(["cluster", "channel", "t", "lower", "upper", "reference"])
        if (run / "tubes.csv").exists():
            with open(run / "tubes.csv", newline="") as src:
                for r in csv.DictReader(src):
                    cl, t = int(r["cluster"]), int(r["t"])
                    ref = refs.get(cl, [])
                    ref_v = ref[t - 1] if r["channel"] == "X" and t <= len(ref) else ""
                    w.writerow([cl, r["channel"], t, r["lower"], r["upper"], ref_v])
    return text
