"""Command-line entry point.

Subcommands mirror the pipeline stages. ``run`` does everything; ``cluster``,
``align``, ``detect``, ``evaluate`` and ``report`` each read the previous
stage's files from the run directory given by ``--out``, so any stage can be
re-run on its own.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import pipeline, series
from .pipeline import PipelineConfig, PipelineError

_METHODS = {"ct": ("CT",), "cq": ("CQ",), "both": ("CT", "CQ")}

# flag -> PipelineConfig field
_OVERRIDES = {
    "alpha": "alpha",
    "ct_run": "ct_run_threshold",
    "cq_threshold": "cq_violation_threshold",
    "ev_threshold": "explained_variance_threshold",
    "k": "n_clusters",
    "cq_bins": "cq_bins",
    "cq_min_bin_count": "cq_min_bin_count",
    "medoid_cap": "medoid_cap",
}


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON pipeline config")
    p.add_argument("--seed", type=int, help="seed for the generator, SOM and subsampling")
    p.add_argument("--alpha", type=float, help="tube / quantile level")
    p.add_argument("--ct-run", type=float, help="CT run length as a fraction of the curve")
    p.add_argument("--cq-threshold", type=float, help="CQ violating-pair fraction")
    p.add_argument("--ev-threshold", type=float, help="explained-variance target for choosing k")
    p.add_argument("--k", type=int, help="force the number of clusters")
    p.add_argument("--cq-bins", type=int, help="CQ equal-frequency bins before merging")
    p.add_argument("--cq-min-bin-count", type=int, help="minimum pairs per CQ bin")
    p.add_argument("--medoid-cap", type=int, help="subsample size for large clusters")


def _config(args) -> PipelineConfig:
    cfg = pipeline.load_config(args.config) if args.config else PipelineConfig()
    changes = {field: getattr(args, flag) for flag, field in _OVERRIDES.items()
               if getattr(args, flag, None) is not None}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
        changes["generator"] = dataclasses.replace(cfg.generator, seed=args.seed)
    for flag in ("n_signals", "n_anomalies"):
        if getattr(args, flag, None) is not None:
            gen = changes.get("generator", cfg.generator)
            changes["generator"] = dataclasses.replace(gen, **{flag: getattr(args, flag)})
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _labels(path):
    return series.read_labels_csv(path) if path else None


def _load_dataset(path, labels=None):
    return series.read_segments_csv(path, labels)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args):
    cfg = _config(args)
    ds = pipeline.simulate(cfg, _out(args))
    n_anom = sum(lab is not series.Label.NORMAL for lab in ds.labels().values())
    print(f"wrote {len(ds)} segments ({n_anom} atypical) to {args.out}")


def cmd_run(args):
    cfg = _config(args)
    out = _out(args)
    labels = _labels(args.labels)
    res = pipeline.run_pipeline(cfg, out, input_path=args.input, labels=labels,
                                methods=_METHODS[args.method])
    print((out / "summary.txt").read_text(), end="")
    print(f"artifacts in {res.run_dir}")


def cmd_cluster(args):
    cfg = _config(args)
    out = _out(args)
    ds = _stage("load", _load_dataset, args.input)
    res = _stage("cluster", pipeline.cluster_stage, ds, cfg)
    _stage("cluster", pipeline.write_cluster_outputs, out, ds, res, cfg)
    sizes = res.assignment.sizes()
    print(f"{res.k} clusters: " + ", ".join(f"{c}:{sizes[c]}" for c in sorted(sizes)))


def cmd_align(args):
    cfg = _config(args)
    out = _out(args)
    ds = _stage("load", _load_dataset, args.input)
    clusters_path = Path(args.clusters) if args.clusters else out / "clusters.csv"
    clusters = _stage("align", pipeline.read_clusters_csv, clusters_path)
    res = _stage("align", pipeline.align_stage, ds, clusters, cfg)
    _stage("align", pipeline.write_align_outputs, out, res)
    for cl, rc in sorted(res.references.items()):
        print(f"cluster {cl}: reference {rc.source_segment_id} (length {rc.length})")


def cmd_detect(args):
    cfg = _config(args)
    out = _out(args)
    aligned_path = Path(args.aligned) if args.aligned else out / "aligned.csv"
    ares = _stage("detect", pipeline.read_aligned_csv, aligned_path)
    res = _stage("detect", pipeline.detect_stage, ares, cfg, _METHODS[args.method])
    _stage("detect", pipeline.write_detect_outputs, out, res)
    flagged = sum(v.is_anomaly for v in res.verdicts if v.channel != "Both")
    print(f"{len(res.verdicts)} verdicts, {flagged} single-channel detections")


def cmd_evaluate(args):
    out = _out(args)
    verdicts_path = Path(args.verdicts) if args.verdicts else out / "verdicts.csv"
    verdicts = _stage("evaluate", pipeline.read_verdicts_csv, verdicts_path)
    labels = _stage("evaluate", series.read_labels_csv, args.labels)
    matrices = _stage("evaluate", pipeline.evaluate, verdicts, labels)
    pipeline.write_confusion_csv(out / "confusion.csv", matrices)
    tot = pipeline.false_alarm_totals(matrices)
    for m in pipeline.METHODS:
        if any(cm.method == m for cm in matrices):
            print(f"{m} false alarms: " + " ".join(f"{s}={tot[m][s]}" for s in pipeline.SCOPES))


def cmd_report(args):
    text = _stage("report", pipeline.report, args.out)
    print(text, end="")


def _stage(name, fn, *a):
    try:
        return fn(*a)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvanom", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate the synthetic benchmark")
    _add_config_flags(p)
    p.add_argument("--n-signals", type=int)
    p.add_argument("--n-anomalies", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run every stage")
    _add_config_flags(p)
    p.add_argument("--n-signals", type=int)
    p.add_argument("--n-anomalies", type=int)
    p.add_argument("--in", dest="input", help="segments CSV (simulated when omitted)")
    p.add_argument("--labels", help="labels CSV for evaluation")
    p.add_argument("--method", choices=sorted(_METHODS), default="both")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cluster", help="features, SOM and superclasses")
    _add_config_flags(p)
    p.add_argument("--in", dest="input", required=True, help="segments CSV")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("align", help="reference curves and realignment")
    _add_config_flags(p)
    p.add_argument("--in", dest="input", required=True, help="segments CSV")
    p.add_argument("--clusters", help="clusters CSV (default: <out>/clusters.csv)")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("detect", help="fit tubes / CQ tables and score segments")
    _add_config_flags(p)
    p.add_argument("--aligned", help="aligned CSV (default: <out>/aligned.csv)")
    p.add_argument("--method", choices=sorted(_METHODS), default="both")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="confusion matrices against ground truth")
    p.add_argument("--labels", required=True, help="labels CSV")
    p.add_argument("--verdicts", help="verdicts CSV (default: <out>/verdicts.csv)")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="summary and plot-data files")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
