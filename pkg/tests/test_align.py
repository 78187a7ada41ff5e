import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from curvanom.align import (_pair_diss, best_offset, diss, diss_profile, extend, pairwise_diss,
                            realign, reference_curve)
from curvanom.series import BivariateSegment

short_curves = arrays(np.float64, st.integers(2, 30),
                      elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False))


def test_extend_examples():
    ext = extend([1.0, 2.0, 3.0], 2)
    assert ext.values.tolist() == [1, 1, 1, 2, 3, 3, 3]
    assert ext.core.tolist() == [1, 2, 3]
    assert (ext.core_start, ext.core_end) == (2, 4)
    assert extend([4.0, 4.0], 3).values.tolist() == [4.0] * 8


def test_extend_with_context():
    ext = extend([5.0, 6.0], 3, left_context=[1.0, 2.0], right_context=[7.0, 8.0, 9.0, 10.0])
    assert ext.values.tolist() == [1, 1, 2, 5, 6, 7, 8, 9]


def test_extend_rejects_bad_pad():
    with pytest.raises(ValueError):
        extend([1.0, 2.0], 0)


def test_diss_constant_example():
    expected = math.sqrt(5) / 10
    assert oracles.diss([0.0] * 3, [1.0] * 5) == pytest.approx(expected, abs=1e-15)
    assert diss([0.0] * 3, [1.0] * 5) == pytest.approx(expected, abs=1e-15)


def test_diss_small_example_matches_enumeration():
    a, b = [0.0, 0.0, 1.0, 1.0], [0.0, 1.0]
    assert diss(a, b) == pytest.approx(oracles.diss(a, b), abs=1e-15)
    np.testing.assert_allclose(diss_profile(b, a), oracles.window_distances(b, a), atol=1e-15)


@given(short_curves, short_curves)
def test_diss_matches_oracle(a, b):
    assert abs(diss(a, b) - oracles.diss(a, b)) <= 1e-12


@given(short_curves, short_curves)
def test_diss_symmetric_nonnegative(a, b):
    d = diss(a, b)
    assert d >= 0
    assert d == diss(b, a)


@given(short_curves)
def test_diss_self_is_zero(a):
    assert diss(a, a) == 0.0


def test_pairwise_equals_direct_kernel(rng):
    curves = [np.cumsum(rng.normal(size=int(n))) * 10 for n in rng.integers(100, 700, 12)]
    curves.append(curves[3].copy())
    mat = pairwise_diss(curves)
    assert np.array_equal(mat, mat.T)
    assert np.all(np.diag(mat) == 0)
    for i in range(len(curves)):
        for j in range(len(curves)):
            if i != j:
                assert mat[i, j] == _pair_diss(curves[i], curves[j])


def test_reference_curve_trivial_cases():
    rc = reference_curve([("only", [1.0, 2.0, 3.0])])
    assert rc.source_segment_id == "only" and rc.diss_sum == 0.0
    rc = reference_curve([("b", [1.0, 2.0]), ("a", [1.0, 2.0]), ("c", [1.0, 2.0])])
    assert rc.source_segment_id == "a" and rc.diss_sum == 0.0
    with pytest.raises(ValueError):
        reference_curve([])


@pytest.mark.parametrize("seed", range(10))
def test_reference_curve_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    ids = [f"c{i}" for i in range(5)]
    curves = [rng.normal(size=int(rng.integers(2, 12))) for _ in ids]
    rc = reference_curve(list(zip(ids, curves)))
    best_id, best_sum = oracles.medoid(ids, curves)
    assert rc.source_segment_id == best_id
    assert rc.diss_sum == pytest.approx(best_sum, abs=1e-12)


def test_reference_curve_subsample_is_seeded(rng):
    members = [(f"s{i:02d}", rng.normal(size=6)) for i in range(30)]
    a = reference_curve(members, cluster_label=2, cap=10, seed=7)
    b = reference_curve(members[::-1], cluster_label=2, cap=10, seed=7)
    assert a.source_segment_id == b.source_segment_id


def _segment(x, y=None, sid="s"):
    x = np.asarray(x, dtype=float)
    return BivariateSegment(sid, x, x * 2 + 1 if y is None else y)


def test_realign_identity():
    rcs = reference_curve([("r", [0.0, 1.0, 4.0, 9.0, 7.0]), ("o", [0.0, 1.0, 4.0, 9.0, 7.0])])
    a = realign(_segment(rcs.values), rcs)
    assert np.array_equal(a.x_aligned, rcs.values)
    assert a.offset == rcs.length + 1
    assert a.distance == 0.0


def test_realign_constant_takes_first_offset():
    rc = reference_curve([("r", [0.0, 3.0, 1.0, 2.0])])
    a = realign(_segment([5.0] * 7), rc)
    assert a.offset == 1
    assert a.x_aligned.tolist() == [5.0] * 4


def test_realign_recovers_shift():
    ref = np.array([0.0, 2.0, 5.0, 3.0, 8.0, 1.0])
    rc = reference_curve([("r", ref)])
    x = np.concatenate([[9.0, -4.0, 7.0], ref, [6.0, -2.0]])  # reference delayed by 3
    a = realign(_segment(x), rc)
    brute = oracles.window_distances(x, ref)
    assert a.offset == 1 + int(np.argmin(brute))
    assert a.offset == rc.length + 1 + 3
    assert np.array_equal(a.x_aligned, ref)
    assert best_offset(x, ref)[0] == a.offset


@given(short_curves, short_curves, st.integers(0, 2**32 - 1))
def test_realign_invariants(x, ref, seed):
    y = np.random.default_rng(seed).normal(size=x.size)
    rc = reference_curve([("r", ref)])
    a = realign(_segment(x, y), rc)
    width = rc.length
    assert a.x_aligned.size == a.y_aligned.size == width
    assert 1 <= a.offset <= x.size + width + 1
    start = a.offset - 1
    assert np.array_equal(a.x_aligned, extend(x, width).values[start:start + width])
    assert np.array_equal(a.y_aligned, extend(y, width).values[start:start + width])
    brute = oracles.window_distances(x, ref)
    assert a.distance == pytest.approx(min(brute), abs=1e-12)
