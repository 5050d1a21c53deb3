"""Two-session ICC estimation and band-level persistence summaries.

ICC(3,1), the two-way mixed-effects consistency form, is used throughout::

    ICC = (MS_subjects - MS_error) / (MS_subjects + (k - 1) * MS_error)

with ``k = 2`` sessions.  Session mean differences fall into the sessions
term of the ANOVA and do not lower the estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError
from .featuregen import FeatureDataset

HIST_BIN_WIDTH = 0.005


@dataclass(frozen=True)
class BandIccSummary:
    target: float
    mean: float
    sd: float
    n_features: int
    histogram: list[tuple[float, int]] = field(default_factory=list)
    estimates: np.ndarray | None = field(default=None, repr=False, compare=False)


def _anova_ms(x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subjects and error mean squares of the subjects x sessions ANOVA, per column."""
    n = x1.shape[0]
    data = np.stack([x1, x2], axis=1)  # (n, 2, ...)
    grand = data.mean(axis=(0, 1))
    subj_means = data.mean(axis=1)
    sess_means = data.mean(axis=0)
    ss_total = ((data - grand) ** 2).sum(axis=(0, 1))
    ss_subj = 2.0 * ((subj_means - grand) ** 2).sum(axis=0)
    ss_sess = n * ((sess_means - grand) ** 2).sum(axis=0)
    ss_err = ss_total - ss_subj - ss_sess
    ms_subj = ss_subj / (n - 1)
    ms_err = ss_err / (n - 1)
    return ms_subj, ms_err


def _validate_pair(x1, x2) -> tuple[np.ndarray, np.ndarray]:
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise DomainError(f"session arrays differ in shape: {x1.shape} vs {x2.shape}")
    if x1.shape[0] < 3:
        raise DomainError(f"ICC needs at least 3 subjects, got {x1.shape[0]}")
    return x1, x2


def icc_two_session(x1, x2) -> float:
    """ICC(3,1) between two sessions of one feature measured on the same subjects."""
    x1, x2 = _validate_pair(x1, x2)
    if x1.ndim != 1:
        raise DomainError("icc_two_session expects 1-D vectors; use icc_per_feature for matrices")
    ms_subj, ms_err = _anova_ms(x1, x2)
    denom = ms_subj + ms_err
    if not denom > 0.0:
        raise DegenerateInputError("all subjects have identical values; ICC is undefined")
    return float((ms_subj - ms_err) / denom)


def icc_per_feature(x1, x2) -> np.ndarray:
    """Vectorised ICC(3,1) over the columns of two ``(subjects, features)`` arrays."""
    x1, x2 = _validate_pair(x1, x2)
    if x1.ndim != 2:
        raise DomainError("icc_per_feature expects (subjects, features) arrays")
    ms_subj, ms_err = _anova_ms(x1, x2)
    denom = ms_subj + ms_err
    bad = ~(denom > 0.0)
    if np.any(bad):
        cols = np.flatnonzero(bad)[:5].tolist()
        raise DegenerateInputError(f"features {cols} have identical values for all subjects")
    return (ms_subj - ms_err) / denom


def _histogram(values: np.ndarray, width: float) -> list[tuple[float, int]]:
    idx = np.floor(values / width + 1e-9).astype(np.int64)
    bins, counts = np.unique(idx, return_counts=True)
    return [(round(int(b) * width, 10), int(c)) for b, c in zip(bins, counts)]


def summarize_estimates(target: float, estimates: np.ndarray, bin_width: float = HIST_BIN_WIDTH) -> BandIccSummary:
    est = np.asarray(estimates, dtype=np.float64)
    n = est.size
    # fsum keeps the reduction exact and order independent
    mean = math.fsum(est.tolist()) / n
    sd = math.sqrt(math.fsum(((est - mean) ** 2).tolist()) / (n - 1)) if n > 1 else 0.0
    return BandIccSummary(float(target), mean, sd, n, _histogram(est, bin_width), est)


def band_icc_summary(ds: FeatureDataset, bin_width: float = HIST_BIN_WIDTH) -> BandIccSummary:
    est = icc_per_feature(ds.session1, ds.session2)
    return summarize_estimates(ds.config.target_icc, est, bin_width)


def write_band_icc_csv(path: str | Path, summaries: Iterable[BandIccSummary]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["band_target", "feature_index", "icc"])
        for s in summaries:
            for j, v in enumerate(s.estimates):
                w.writerow([repr(s.target), j, repr(float(v))])


def write_band_summary_csv(path: str | Path, summaries: Sequence[BandIccSummary]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["band_target", "mean_icc", "sd_icc"])
        for s in summaries:
            w.writerow([repr(s.target), f"{s.mean:.6f}", f"{s.sd:.6f}"])
