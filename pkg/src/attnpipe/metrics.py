"""Saliency evaluation metrics (AUC-Judd, NSS, CC, SIM) and the temporal
scene-dynamics measure that feeds the fusion engine.

Undefined cases (empty fixation map, zero-variance or zero-sum maps) raise
UndefinedMetricError rather than returning a sentinel.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UndefinedMetricError


@dataclass(frozen=True)
class SceneDynamics:
    gradient: float  # normalized temporal saliency change, in [0, 1]
    window_start_ms: int = 0


def _as_map(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidArgumentError("saliency map must be 2D")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("saliency map must be finite")
    return m


def metric_auc(pred, fixations) -> float:
    """AUC-Judd: ROC area with fixation pixels as positives.

    Thresholds are the distinct predicted values at fixation locations; a
    pixel counts as positive at threshold T when pred >= T. Area by the
    trapezoidal rule with (0,0) and (1,1) endpoints.
    """
    pred = _as_map(pred)
    fix = np.asarray(fixations) != 0
    if fix.shape != pred.shape:
        raise InvalidArgumentError("shape mismatch between prediction and fixations")
    n_fix = int(fix.sum())
    if n_fix == 0:
        raise UndefinedMetricError("AUC undefined without fixations")
    n_neg = fix.size - n_fix
    if n_neg == 0:
        return 1.0
    fix_vals = pred[fix]
    other_vals = pred[~fix]
    thresholds = np.unique(fix_vals)[::-1]
    tpr = [0.0]
    fpr = [0.0]
    for t in thresholds:
        tpr.append(np.count_nonzero(fix_vals >= t) / n_fix)
        fpr.append(np.count_nonzero(other_vals >= t) / n_neg)
    tpr.append(1.0)
    fpr.append(1.0)
    return float(np.trapezoid(tpr, fpr))


def metric_nss(pred, fixations) -> float:
    """Mean of the population-z-scored prediction at fixation locations."""
    pred = _as_map(pred)
    fix = np.asarray(fixations) != 0
    if fix.shape != pred.shape:
        raise InvalidArgumentError("shape mismatch between prediction and fixations")
    if not fix.any():
        raise UndefinedMetricError("NSS undefined without fixations")
    std = pred.std()
    if std == 0:
        raise UndefinedMetricError("NSS undefined for a constant prediction")
    z = (pred - pred.mean()) / std
    return float(z[fix].mean())


def metric_cc(pred, truth) -> float:
    """Pearson correlation over all pixels."""
    pred = _as_map(pred)
    truth = _as_map(truth)
    if pred.shape != truth.shape:
        raise InvalidArgumentError("shape mismatch")
    p = pred.ravel() - pred.mean()
    q = truth.ravel() - truth.mean()
    denom = np.sqrt((p * p).sum() * (q * q).sum())
    if denom == 0:
        raise UndefinedMetricError("CC undefined for a constant map")
    return float((p * q).sum() / denom)


def metric_sim(pred, truth) -> float:
    """Histogram intersection of the two sum-normalized maps."""
    pred = _as_map(pred)
    truth = _as_map(truth)
    if pred.shape != truth.shape:
        raise InvalidArgumentError("shape mismatch")
    ps, qs = pred.sum(), truth.sum()
    if ps <= 0 or qs <= 0:
        raise UndefinedMetricError("SIM undefined for a zero-sum map")
    return float(np.minimum(pred / ps, truth / qs).sum())


def scene_dynamics(maps, window_start_ms: int = 0) -> SceneDynamics:
    """Mean absolute per-pixel change between consecutive maps.

    Maps live in [0, 1], so the result is already normalized to [0, 1].
    """
    if len(maps) < 2:
        raise InvalidArgumentError("scene dynamics needs at least 2 maps")
    arrs = [_as_map(m) for m in maps]
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise InvalidArgumentError("all maps must share one shape")
    diffs = [np.abs(b - a).mean() for a, b in zip(arrs[:-1], arrs[1:])]
    return SceneDynamics(gradient=float(np.mean(diffs)), window_start_ms=window_start_ms)
