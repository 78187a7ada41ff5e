"""Acceptance suite.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts. The desk benchmark (500 signals, 25 atypical, seed 0,
library defaults) is run once per module and shared by several criteria.
"""

import itertools
import math
import time

import numpy as np
import pytest

import oracles
from curvanom import pipeline
from curvanom.align import diss, extend, reference_curve
from curvanom.detectors import fit_cq, fit_ct
from curvanom.pipeline import PipelineConfig, VerdictRow, evaluate, run_pipeline
from curvanom.series import Label

ALPHA = 0.05
RUNTIME_LIMIT_S = 300.0
RECALL_FLOOR = 0.60
CQ_VS_CT_X_RATIO = 0.50
DISS_TOL = 1e-12
NESTING_ALPHAS = (0.01, 0.05, 0.2)

pytestmark = pytest.mark.slow


def _line(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    cfg = PipelineConfig()
    assert (cfg.generator.n_signals, cfg.generator.n_anomalies) == (500, 25)
    assert cfg.alpha == ALPHA and cfg.ct_run_threshold == 0.10
    assert cfg.cq_violation_threshold == 0.10
    start = time.perf_counter()
    res = run_pipeline(cfg, tmp_path_factory.mktemp("desk"))
    return res, time.perf_counter() - start


def test_criterion_1_cq_fewer_false_alarms(desk, capsys):
    res, elapsed = desk
    tot = pipeline.false_alarm_totals(res.confusion)
    ct_all, cq_all = sum(tot["CT"].values()), sum(tot["CQ"].values())
    ok = (ct_all > cq_all and tot["CQ"]["X"] <= CQ_VS_CT_X_RATIO * tot["CT"]["X"]
          and elapsed <= RUNTIME_LIMIT_S)
    _line(capsys, 1, ok, f"CT={dict(tot['CT'])} CQ={dict(tot['CQ'])} "
                         f"total {ct_all} vs {cq_all}, runtime {elapsed:.1f}s")
    assert ct_all > cq_all
    assert tot["CQ"]["X"] <= CQ_VS_CT_X_RATIO * tot["CT"]["X"]
    assert elapsed <= RUNTIME_LIMIT_S


def test_criterion_2_recall_floor(desk, capsys):
    res, _ = desk
    rec = pipeline.recall_totals(res.confusion)
    rates, parts = {}, []
    for m in pipeline.METHODS:
        hit = rec[m]["X"][0] + rec[m]["Y"][0]
        injected = rec[m]["X"][1] + rec[m]["Y"][1]
        rates[m] = hit / injected if injected else 1.0
        parts.append(f"{m} X={rec[m]['X'][0]}/{rec[m]['X'][1]} Y={rec[m]['Y'][0]}/{rec[m]['Y'][1]}"
                     f" pooled={rates[m]:.2f}")
    ok = all(r >= RECALL_FLOOR for r in rates.values())
    _line(capsys, 2, ok, "; ".join(parts) + f"; floor {RECALL_FLOOR}")
    for m, r in rates.items():
        assert r >= RECALL_FLOOR, f"{m} recall {r:.2f}"


def test_criterion_3_diss_oracle(capsys):
    rng = np.random.default_rng(2024)
    worst, symmetric, self_zero = 0.0, True, True
    for i in range(200):
        la = int(rng.integers(2, 51))
        lb = la if i % 10 == 0 else int(rng.integers(2, 51))
        a, b = rng.normal(0, 10, la), rng.normal(0, 10, lb)
        worst = max(worst, abs(diss(a, b) - oracles.diss(a, b)))
        symmetric &= diss(a, b) == diss(b, a)
        self_zero &= diss(a, a) == 0.0 and diss(b, b) == 0.0
    ok = worst <= DISS_TOL and symmetric and self_zero
    _line(capsys, 3, ok, f"max |diss - oracle| = {worst:.2e}, symmetric={symmetric}, "
                         f"self-zero={self_zero}")
    assert worst <= DISS_TOL and symmetric and self_zero


def test_criterion_4_medoid_oracle(capsys):
    rng = np.random.default_rng(77)
    mismatches = 0
    for c in range(50):
        n = int(rng.integers(1, 9))
        ids = [f"m{c}_{i}" for i in range(n)]
        curves = [rng.normal(size=int(rng.integers(2, 16))) for _ in ids]
        rc = reference_curve(list(zip(ids, curves)), cluster_label=c)
        best_id, best_sum = oracles.medoid(ids, curves)
        if rc.source_segment_id != best_id or abs(rc.diss_sum - best_sum) > DISS_TOL:
            mismatches += 1
    _line(capsys, 4, mismatches == 0, f"{mismatches}/50 clusters disagree with brute force")
    assert mismatches == 0


def test_criterion_5_alignment_invariants(desk, capsys):
    res, _ = desk
    segs = res.dataset.by_id()
    bad_len = bad_ref = bad_offset = 0
    for cl in res.alignment.clusters:
        rc = res.alignment.references[cl]
        for sid in res.alignment.cluster_members(cl):
            a = res.alignment.aligned[sid]
            bad_len += not (a.x_aligned.size == a.y_aligned.size == rc.length)
            window = slice(a.offset - 1, a.offset - 1 + rc.length)
            seg = segs[sid]
            bad_offset += not (np.array_equal(a.x_aligned, extend(seg.x, rc.length).values[window])
                               and np.array_equal(a.y_aligned, extend(seg.y, rc.length).values[window]))
        src = res.alignment.aligned[rc.source_segment_id]
        bad_ref += not np.array_equal(src.x_aligned, rc.values)
    n = len(res.alignment.aligned)
    ok = bad_len == bad_ref == bad_offset == 0
    _line(capsys, 5, ok, f"{n} segments: wrong length {bad_len}, reference not reproduced "
                         f"{bad_ref}, x/y offset mismatch {bad_offset}")
    assert ok


def _aligned_by_cluster(res):
    for cl in res.alignment.clusters:
        ids = res.alignment.cluster_members(cl)
        if len(ids) < 2:
            continue
        for ch, attr in (("X", "x_aligned"), ("Y", "y_aligned")):
            yield cl, ch, np.stack([getattr(res.alignment.aligned[s], attr) for s in ids])


def test_criterion_6_ct_coverage_and_nesting(desk, capsys):
    res, _ = desk
    worst_excess, nest_fail, checked = -math.inf, 0, 0
    for cl, ch, curves in _aligned_by_cluster(res):
        n = curves.shape[0]
        tube = fit_ct(curves, ALPHA, cl, ch)
        outside = ((curves < tube.lower) | (curves > tube.upper)).mean(axis=0)
        worst_excess = max(worst_excess, float((outside - (ALPHA + 2 / n)).max()))
        tubes = [fit_ct(curves, a, cl, ch) for a in NESTING_ALPHAS]
        for wide, narrow in itertools.pairwise(tubes):
            nest_fail += not (np.all(wide.lower <= narrow.lower) and np.all(narrow.upper <= wide.upper))
        checked += 1
    ok = worst_excess <= 0 and nest_fail == 0 and checked > 0
    _line(capsys, 6, ok, f"{checked} cluster-channels, max(outside - (alpha + 2/n)) = "
                         f"{worst_excess:.4f}, nesting failures {nest_fail}")
    assert ok


def test_criterion_7_cq_table_oracle(capsys):
    pairs = oracles.PAIRS_40
    tab = fit_cq([[p, c] for p, c in pairs], alpha=0.1, n_bins=4, min_bin_count=5)
    inner, rows = oracles.cq_table(pairs, 0.1, 4, 5)
    ok = (len(pairs) == 40
          and tab.edges[1:-1].tolist() == inner
          and tab.lower.tolist() == [r[0] for r in rows]
          and tab.upper.tolist() == [r[1] for r in rows]
          and tab.counts.tolist() == [r[2] for r in rows])
    _line(capsys, 7, ok, f"edges {tab.edges.tolist()}, counts {tab.counts.tolist()}")
    assert ok


def test_criterion_8_determinism(desk, tmp_path, capsys):
    res, _ = desk
    run_pipeline(PipelineConfig(), tmp_path)
    same = {name: (tmp_path / name).read_bytes() == (res.run_dir / name).read_bytes()
            for name in ("verdicts.csv", "manifest.json")}
    ok = all(same.values())
    _line(capsys, 8, ok, ", ".join(f"{k} identical={v}" for k, v in same.items()))
    assert ok


def test_criterion_9_confusion_consistency(desk, capsys):
    res, _ = desk
    labels = res.dataset.labels()
    clusters = res.clusters.assignment.cluster_of_segment
    bad = 0
    for cm in res.confusion:
        members = [s for s, c in clusters.items() if c == cm.cluster]
        atypical = sum(pipeline.scope_atypical(labels[s], cm.scope) for s in members)
        rows = cm.rows()
        bad += not (cm.total == len(members) and cm.atypical == atypical
                    and rows[0][1] + rows[0][2] == rows[0][3]
                    and rows[1][1] + rows[1][2] == rows[1][3])
    fixture_labels = {s: Label(v) for s, v in oracles.FIXTURE_LABELS.items()}
    verdicts = []
    for sid, (fx, fy) in oracles.FIXTURE_FLAGS.items():
        cl = oracles.FIXTURE_CLUSTER[sid]
        verdicts += [VerdictRow(sid, cl, "X", "CT", float(fx), fx),
                     VerdictRow(sid, cl, "Y", "CT", float(fy), fy),
                     VerdictRow(sid, cl, "Both", "CT", float(fx and fy), fx and fy)]
    got = {(cm.scope, cm.cluster): (cm.d_a, cm.nd_a, cm.d_na, cm.nd_na)
           for cm in evaluate(verdicts, fixture_labels)}
    fixture_ok = got == oracles.FIXTURE_EXPECTED
    ok = bad == 0 and fixture_ok
    _line(capsys, 9, ok, f"{len(res.confusion)} benchmark matrices, {bad} inconsistent; "
                         f"10-segment fixture matches={fixture_ok}")
    assert ok
