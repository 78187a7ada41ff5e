"""Atypical-curve detection for sets of bivariate, unequal-length segments.

The key variable ``x`` of every segment is summarised by a few numerical
features, clustered with a self-organizing map whose code vectors are grouped
by Ward agglomeration, realigned onto each cluster's medoid curve, and then
screened by two detectors: pointwise confidence tubes (CT) and lag-1
conditional quantiles (CQ).
"""

from .align import (AlignedSegment, ReferenceCurve, best_offset, diss, diss_profile, extend,
                    pairwise_diss, realign, reference_curve)
from .detectors import (ConditionalQuantileTable, ConfidenceTube, DetectionVerdict, detect_cq,
                        detect_ct, fit_cq, fit_ct)
from .pipeline import (ConfusionMatrix, PipelineConfig, PipelineError, evaluate, report,
                       run_pipeline, simulate)
from .series import (BivariateSegment, Dataset, Label, extract_features, read_segments_csv,
                     standardize_features, write_segments_csv)
from .simgen import GeneratorConfig, generate
from .som import Codebook, SomConfig, choose_k, explained_variance, hac_superclusters, train_som

__version__ = "0.1.0"

__all__ = [
    "AlignedSegment", "BivariateSegment", "Codebook", "ConditionalQuantileTable",
    "ConfidenceTube", "ConfusionMatrix", "Dataset", "DetectionVerdict", "GeneratorConfig",
    "Label", "PipelineConfig", "PipelineError", "ReferenceCurve", "SomConfig", "best_offset",
    "choose_k", "detect_cq", "detect_ct", "diss", "diss_profile", "evaluate",
    "explained_variance", "extend", "extract_features", "fit_cq", "fit_ct", "generate",
    "hac_superclusters", "pairwise_diss", "read_segments_csv", "realign", "reference_curve",
    "report", "run_pipeline", "simulate", "standardize_features", "train_som",
    "write_segments_csv",
]
