"""Saliency metric tests.

Every metric is checked against an independent brute-force oracle written
from the textbook definition, plus closed-form identities and invariance
properties.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnpipe.errors import InvalidArgumentError, UndefinedMetricError
from attnpipe.metrics import (
    SceneDynamics,
    metric_auc,
    metric_cc,
    metric_nss,
    metric_sim,
    scene_dynamics,
)


# ------------------------------------------------------------------ oracles
# Independent implementations, deliberately written differently from the
# library code (python loops, exhaustive enumeration).

def oracle_auc(pred, fix):
    pred = np.asarray(pred, dtype=float)
    fix = np.asarray(fix) != 0
    pos = sorted(pred[fix].tolist(), reverse=True)
    neg = pred[~fix].tolist()
    points = [(0.0, 0.0)]
    for t in sorted(set(pos), reverse=True):
        tp = sum(1 for v in pos if v >= t)
        fp = sum(1 for v in neg if v >= t)
        points.append((fp / len(neg), tp / len(pos)))
    points.append((1.0, 1.0))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def oracle_nss(pred, fix):
    pred = np.asarray(pred, dtype=float)
    fix = np.asarray(fix) != 0
    flat = pred.ravel().tolist()
    mean = sum(flat) / len(flat)
    var = sum((v - mean) ** 2 for v in flat) / len(flat)
    std = var ** 0.5
    vals = [(pred[i, j] - mean) / std for i in range(pred.shape[0])
            for j in range(pred.shape[1]) if fix[i, j]]
    return sum(vals) / len(vals)


def oracle_cc(a, b):
    a = np.asarray(a, dtype=float).ravel().tolist()
    b = np.asarray(b, dtype=float).ravel().tolist()
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / (va * vb) ** 0.5


def oracle_sim(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = (a / a.sum()).ravel().tolist()
    q = (b / b.sum()).ravel().tolist()
    return sum(min(x, y) for x, y in zip(p, q))


def oracle_scene_dynamics(maps):
    total = 0.0
    for a, b in zip(maps[:-1], maps[1:]):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        total += float(np.abs(b - a).mean())
    return total / (len(maps) - 1)


def _random_case(rng):
    pred = rng.random((8, 8))
    fix = np.zeros((8, 8), dtype=bool)
    idx = rng.choice(64, size=int(rng.integers(1, 12)), replace=False)
    fix.ravel()[idx] = True
    truth = rng.random((8, 8))
    return pred, fix, truth


# ------------------------------------------------------- oracle equivalence

def test_auc_matches_oracle_200_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(200):
        pred, fix, _ = _random_case(rng)
        assert metric_auc(pred, fix) == pytest.approx(oracle_auc(pred, fix), abs=1e-9)


def test_nss_matches_oracle_200_random_instances():
    rng = np.random.default_rng(8)
    for _ in range(200):
        pred, fix, _ = _random_case(rng)
        assert metric_nss(pred, fix) == pytest.approx(oracle_nss(pred, fix), abs=1e-9)


def test_cc_matches_oracle_200_random_instances():
    rng = np.random.default_rng(9)
    for _ in range(200):
        pred, _, truth = _random_case(rng)
        assert metric_cc(pred, truth) == pytest.approx(oracle_cc(pred, truth), abs=1e-9)


def test_sim_matches_oracle_200_random_instances():
    rng = np.random.default_rng(10)
    for _ in range(200):
        pred, _, truth = _random_case(rng)
        assert metric_sim(pred, truth) == pytest.approx(oracle_sim(pred, truth), abs=1e-9)


def test_scene_dynamics_matches_oracle_200_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(200):
        maps = [rng.random((8, 8)) for _ in range(int(rng.integers(2, 6)))]
        got = scene_dynamics(maps).gradient
        assert got == pytest.approx(oracle_scene_dynamics(maps), abs=1e-9)


# ---------------------------------------------------------------- identities

def test_auc_perfect_separation_is_one():
    fix = np.zeros((4, 4), dtype=bool)
    fix[1, 2] = fix[3, 0] = True
    pred = fix.astype(float)
    assert metric_auc(pred, fix) == pytest.approx(1.0, abs=1e-12)


def test_auc_constant_prediction_is_chance():
    fix = np.zeros((4, 4), dtype=bool)
    fix[0, 0] = fix[2, 2] = True
    assert metric_auc(np.full((4, 4), 0.7), fix) == pytest.approx(0.5, abs=1e-12)


def test_nss_2x2_hand_value_sqrt3():
    # pred [[1,0],[0,0]], fixation at (0,0): z = (1 - 1/4) / sqrt(3/16) = sqrt(3)
    pred = np.array([[1.0, 0.0], [0.0, 0.0]])
    fix = np.array([[1, 0], [0, 0]])
    assert metric_nss(pred, fix) == pytest.approx(np.sqrt(3.0), abs=1e-12)


def test_nss_all_pixels_fixated_is_zero():
    rng = np.random.default_rng(1)
    pred = rng.random((5, 5))
    assert metric_nss(pred, np.ones((5, 5))) == pytest.approx(0.0, abs=1e-12)


def test_cc_identical_maps_is_one():
    rng = np.random.default_rng(2)
    m = rng.random((6, 6))
    assert metric_cc(m, m) == pytest.approx(1.0, abs=1e-12)


def test_cc_anticorrelated_is_minus_one():
    rng = np.random.default_rng(3)
    m = rng.random((6, 6))
    assert metric_cc(m, 1.0 - m) == pytest.approx(-1.0, abs=1e-12)


def test_sim_identical_maps_is_one():
    rng = np.random.default_rng(4)
    m = rng.random((6, 6)) + 0.1
    assert metric_sim(m, m) == pytest.approx(1.0, abs=1e-12)


def test_sim_disjoint_supports_is_zero():
    a = np.zeros((4, 4))
    b = np.zeros((4, 4))
    a[0, 0] = 1.0
    b[3, 3] = 1.0
    assert metric_sim(a, b) == 0.0


def test_scene_dynamics_identical_maps_is_zero():
    m = np.random.default_rng(5).random((8, 8))
    assert scene_dynamics([m, m.copy(), m.copy()]).gradient == 0.0


def test_scene_dynamics_alternating_binary_is_one():
    z = np.zeros((8, 8))
    o = np.ones((8, 8))
    assert scene_dynamics([z, o, z, o]).gradient == pytest.approx(1.0, abs=1e-12)


def test_scene_dynamics_translating_blob_matches_oracle():
    size = 64
    yy, xx = np.mgrid[0:size, 0:size]
    maps = [np.exp(-((yy - 30.0) ** 2 + (xx - 20.0 - s) ** 2) / 50.0) for s in range(5)]
    dyn = scene_dynamics(maps)
    assert 0.0 < dyn.gradient < 0.1
    assert dyn.gradient == pytest.approx(oracle_scene_dynamics(maps), abs=1e-12)


# ------------------------------------------------------------- error domain

def test_auc_empty_fixations_raises():
    with pytest.raises(UndefinedMetricError):
        metric_auc(np.random.default_rng(0).random((4, 4)), np.zeros((4, 4)))


def test_nss_constant_prediction_raises():
    fix = np.zeros((4, 4))
    fix[0, 0] = 1
    with pytest.raises(UndefinedMetricError):
        metric_nss(np.full((4, 4), 0.3), fix)


def test_cc_constant_map_raises():
    with pytest.raises(UndefinedMetricError):
        metric_cc(np.full((4, 4), 0.3), np.random.default_rng(0).random((4, 4)))


def test_sim_zero_sum_raises():
    with pytest.raises(UndefinedMetricError):
        metric_sim(np.zeros((4, 4)), np.random.default_rng(0).random((4, 4)))


def test_scene_dynamics_single_map_raises():
    with pytest.raises(InvalidArgumentError):
        scene_dynamics([np.zeros((4, 4))])


def test_shape_mismatch_raises():
    with pytest.raises(InvalidArgumentError):
        metric_cc(np.zeros((4, 4)), np.zeros((4, 5)))


# ----------------------------------------------------------------- properties

@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_spatial_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    pred, fix, truth = _random_case(rng)
    perm = rng.permutation(64)

    def shuffle(m):
        return np.asarray(m).ravel()[perm].reshape(8, 8)

    assert metric_auc(pred, fix) == pytest.approx(
        metric_auc(shuffle(pred), shuffle(fix)), abs=1e-12
    )
    assert metric_nss(pred, fix) == pytest.approx(
        metric_nss(shuffle(pred), shuffle(fix)), abs=1e-12
    )
    assert metric_cc(pred, truth) == pytest.approx(
        metric_cc(shuffle(pred), shuffle(truth)), abs=1e-12
    )
    assert metric_sim(pred, truth) == pytest.approx(
        metric_sim(shuffle(pred), shuffle(truth)), abs=1e-12
    )


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=-5.0, max_value=5.0),
)
def test_cc_and_nss_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    pred, fix, truth = _random_case(rng)
    assert metric_cc(a * pred + b, truth) == pytest.approx(
        metric_cc(pred, truth), abs=1e-9
    )
    assert metric_nss(a * pred + b, fix) == pytest.approx(
        metric_nss(pred, fix), abs=1e-9
    )


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_cc_symmetry(seed):
    rng = np.random.default_rng(seed)
    pred, _, truth = _random_case(rng)
    assert metric_cc(pred, truth) == pytest.approx(metric_cc(truth, pred), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_scene_dynamics_time_reversal_symmetry(seed):
    rng = np.random.default_rng(seed)
    maps = [rng.random((6, 6)) for _ in range(4)]
    assert scene_dynamics(maps).gradient == pytest.approx(
        scene_dynamics(maps[::-1]).gradient, abs=1e-12
    )


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_bounded_ranges(seed):
    rng = np.random.default_rng(seed)
    pred, fix, truth = _random_case(rng)
    assert 0.0 <= metric_auc(pred, fix) <= 1.0
    assert -1.0 <= metric_cc(pred, truth) <= 1.0
    assert 0.0 <= metric_sim(pred, truth) <= 1.0 + 1e-12
    maps = [rng.random((6, 6)) for _ in range(3)]
    assert 0.0 <= scene_dynamics(maps).gradient <= 1.0


def test_scene_dynamics_carries_window_start():
    maps = [np.zeros((4, 4)), np.ones((4, 4))]
    assert scene_dynamics(maps, window_start_ms=1500).window_start_ms == 1500
    assert isinstance(scene_dynamics(maps), SceneDynamics)
