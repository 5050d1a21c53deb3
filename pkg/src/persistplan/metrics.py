"""ROC operating points, EER and FRR at a fixed FAR.

Conventions: at threshold ``t`` a genuine score is falsely rejected when
``score <= t`` and an impostor score is falsely accepted when ``score > t``.

Candidate thresholds are a ``-inf`` sentinel, the distinct genuine scores
and, between two consecutive genuine scores, the largest impostor score
lying strictly between them.  That last point is where the false-accept
rate bottoms out before the next genuine score starts being rejected, so
no operating point of the empirical ROC is lost.  Impostor scores are never
sorted; each one is binned against the sorted genuine values, which gives
exact integer counts and works unchanged on streamed impostor sets.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import DomainError, ResolutionError
from .scoring import ScoreSet

RESOLUTION_FACTOR = 10


@dataclass(frozen=True)
class ErrorRatePoint:
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class EerEstimate:
    value: float
    threshold: float
    genuine_resolution: float


@dataclass(frozen=True, eq=False)
class ThresholdCounts:
    """Integer error counts at each distinct genuine score.

    ``imp_gt[k]`` counts impostor scores ``> thresholds[k]``, ``imp_ge[k]``
    those ``>= thresholds[k]`` and ``gen_le[k]`` genuine scores
    ``<= thresholds[k]``.  ``below_max[k]`` is the largest impostor score in
    ``(thresholds[k-1], thresholds[k])``, or ``-inf`` when there is none.
    """

    thresholds: np.ndarray
    gen_le: np.ndarray
    imp_gt: np.ndarray
    imp_ge: np.ndarray
    below_max: np.ndarray
    n_genuine: int
    n_impostor: int

    def operating_points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Thresholds with false-accept and false-reject counts, ascending, sentinel first."""
        T = self.thresholds.shape[0]
        gen_lt = np.concatenate([[0], self.gen_le[:-1]])
        thr = np.empty(2 * T)
        fa = np.empty(2 * T, dtype=np.int64)
        fr = np.empty(2 * T, dtype=np.int64)
        thr[0::2], fa[0::2], fr[0::2] = self.below_max, self.imp_ge, gen_lt
        thr[1::2], fa[1::2], fr[1::2] = self.thresholds, self.imp_gt, self.gen_le
        keep = np.ones(2 * T, dtype=bool)
        keep[0::2] = np.isfinite(self.below_max)
        thr = np.concatenate([[-math.inf], thr[keep]])
        fa = np.concatenate([[self.n_impostor], fa[keep]])
        fr = np.concatenate([[0], fr[keep]])
        return thr, fa, fr


def threshold_counts(scores: ScoreSet, kernels=None) -> ThresholdCounts:
    k = kernels or _backend.kernels
    if scores.n_genuine < 1 or scores.n_impostor < 1:
        raise DomainError("need at least one genuine and one impostor score")
    thresholds, mult = np.unique(scores.genuine, return_counts=True)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    if scores.streaming:
        hist, equal, binmax = scores.impostor.bin(thresholds, k)
    else:
        T = thresholds.shape[0]
        hist = np.zeros(T + 1, dtype=np.int64)
        equal = np.zeros(T, dtype=np.int64)
        binmax = np.full(T + 1, -np.inf)
        k.bin_values(np.ascontiguousarray(scores.impostor, dtype=np.float64), thresholds, hist, equal, binmax)
    # imp_gt[k] = sum(hist[k+1:])
    imp_gt = np.cumsum(hist[::-1])[::-1][1:].copy()
    return ThresholdCounts(
        thresholds=thresholds,
        gen_le=np.cumsum(mult).astype(np.int64),
        imp_gt=imp_gt,
        imp_ge=imp_gt + equal,
        below_max=binmax[:-1].copy(),
        n_genuine=scores.n_genuine,
        n_impostor=scores.n_impostor,
    )


def roc_from_counts(c: ThresholdCounts) -> list[ErrorRatePoint]:
    thr, fa, fr = c.operating_points()
    far = fa / c.n_impostor
    frr = fr / c.n_genuine
    return [ErrorRatePoint(float(t), float(a), float(r)) for t, a, r in zip(thr, far, frr)]


def roc_curve(scores: ScoreSet) -> list[ErrorRatePoint]:
    """Empirical ROC operating points in ascending threshold order, starting at ``-inf``."""
    return roc_from_counts(threshold_counts(scores))


def eer_from_counts(c: ThresholdCounts) -> EerEstimate:
    thr, fa, fr = c.operating_points()
    far = fa / c.n_impostor
    frr = fr / c.n_genuine
    diff = far - frr  # non-increasing, +1 at the sentinel, <= 0 at the top genuine score
    i = int(np.argmax(diff <= 0.0))
    resolution = 1.0 / c.n_genuine
    if diff[i] == 0.0:
        return EerEstimate(float(far[i]), float(thr[i]), resolution)
    d0, d1 = diff[i - 1], diff[i]
    w = d0 / (d0 - d1)
    value = far[i - 1] + w * (far[i] - far[i - 1])
    t0, t1 = thr[i - 1], thr[i]
    t = t1 if math.isinf(t0) else t0 + w * (t1 - t0)
    return EerEstimate(float(value), float(t), resolution)


def compute_eer(scores: ScoreSet) -> EerEstimate:
    """EER by linear interpolation between the two ROC points bracketing FAR = FRR."""
    return eer_from_counts(threshold_counts(scores))


def required_impostors(far_level: float) -> int:
    return int(math.ceil(RESOLUTION_FACTOR / far_level - 1e-9))


def check_far_resolution(far_level: float, n_impostor: int) -> None:
    if not (0.0 < far_level < 1.0):
        raise DomainError(f"far_level must lie in (0, 1), got {far_level!r}")
    need = required_impostors(far_level)
    if n_impostor < need:
        raise ResolutionError(
            f"FAR {far_level:g} needs at least {need} impostor scores, only {n_impostor} available",
            required=need,
            available=n_impostor,
        )


def frr_at_far_from_counts(c: ThresholdCounts, far_level: float) -> float:
    check_far_resolution(far_level, c.n_impostor)
    allowed = far_level * c.n_impostor
    # genuine g is rejected at the lowest admissible threshold iff #imp >= g exceeds the allowance
    idx = np.flatnonzero(c.imp_ge > allowed)
    if idx.size == 0:
        return 0.0
    return float(c.gen_le[idx[-1]] / c.n_genuine)


def frr_at_far(scores: ScoreSet, far_level: float) -> float:
    """FRR at the lowest threshold whose FAR does not exceed ``far_level``."""
    check_far_resolution(far_level, scores.n_impostor)
    return frr_at_far_from_counts(threshold_counts(scores), far_level)


def write_roc_csv(path: str | Path, points: list[ErrorRatePoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "far", "frr"])
        for p in points:
            w.writerow([repr(p.threshold), repr(p.far), repr(p.frr)])
