"""Staged search for the number of random features that reaches an error target.

Stage 1 scans every feature count at a low replication count; each later
stage rescans a bracket around the crossing, widened by a quarter of its
width on both sides, at a higher replication count.  The answer is the
smallest feature count in the final stage whose mean metric is strictly
below the target.

Random subsets
--------------
Replication ``r`` at feature count ``n`` draws its subset from
``SeedSequence(seed, spawn_key=(SEARCH_DOMAIN, band_key, n, r))`` where
``band_key`` is the dataset's own generation seed.  The subset does not
depend on the target, the stage or the worker that evaluates it, so
several targets can be searched against one cache of evaluations and the
result of each is the same as if it had been searched alone.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NotReachableError, ResolutionError
from .featuregen import FeatureDataset
from .metrics import ThresholdCounts, check_far_resolution, eer_from_counts, frr_at_far_from_counts, threshold_counts
from .scoring import ImpostorPolicy, score_dataset

EER = "eer"
FRR_AT_FAR = "frr_at_far"

SEARCH_DOMAIN = 0x73726368  # "srch"
BRACKET_MARGIN = 0.25


@dataclass(frozen=True)
class TargetSpec:
    kind: str
    value: float
    far_level: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (EER, FRR_AT_FAR):
            raise DomainError(f"target kind must be 'eer' or 'frr_at_far', got {self.kind!r}")
        if not (0.0 < self.value < 1.0):
            raise DomainError(f"target value must lie in (0, 1), got {self.value!r}")
        if self.kind == FRR_AT_FAR:
            if self.far_level is None or not (0.0 < self.far_level < 1.0):
                raise DomainError(f"far_level must lie in (0, 1), got {self.far_level!r}")
        elif self.far_level is not None:
            raise DomainError("far_level only applies to frr_at_far targets")

    @classmethod
    def eer(cls, value: float) -> "TargetSpec":
        return cls(EER, float(value))

    @classmethod
    def frr_at_far(cls, frr: float, far_level: float) -> "TargetSpec":
        return cls(FRR_AT_FAR, float(frr), float(far_level))

    def metric(self, counts: ThresholdCounts) -> float:
        if self.kind == EER:
            return eer_from_counts(counts).value
        return frr_at_far_from_counts(counts, self.far_level)

    def check_resolution(self, n_genuine: int, n_impostor: int) -> None:
        if self.kind == EER:
            if self.value < 1.0 / n_genuine:
                raise ResolutionError(
                    f"EER target {self.value:g} is finer than the genuine resolution 1/{n_genuine}",
                    required=int(math.ceil(1.0 / self.value)),
                    available=n_genuine,
                )
        else:
            check_far_resolution(self.far_level, n_impostor)

    def label(self) -> str:
        if self.kind == EER:
            return f"EER < {self.value:g}"
        return f"FRR < {self.value:g} at FAR {self.far_level:g}"


@dataclass(frozen=True)
class SearchStage:
    replications: int
    range: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if self.range is not None:
            lo, hi = self.range
            if lo < 1 or hi < lo:
                raise DomainError(f"invalid stage range {self.range!r}")
            object.__setattr__(self, "range", (int(lo), int(hi)))


DEFAULT_STAGES = (SearchStage(1), SearchStage(20), SearchStage(100))


@dataclass
class StageTrace:
    range: tuple[int, int]
    replications: int
    means: dict[int, float] = field(default_factory=dict)


@dataclass
class RequiredFeatures:
    band_target: float
    target: TargetSpec
    n_required: int
    mean_metric_at_n: float
    mean_metric_at_n_minus_1: float
    trace: list[StageTrace]

    def crossing_holds(self) -> bool:
        t = self.target.value
        if not self.mean_metric_at_n < t:
            return False
        return self.n_required == 1 or t <= self.mean_metric_at_n_minus_1


@dataclass
class TableCell:
    band_target: float
    target: TargetSpec
    result: RequiredFeatures | None = None
    error: str | None = None
    best_metric: float | None = None


def subset_rng(seed: int, band_key: int, n: int, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(SEARCH_DOMAIN, int(band_key), int(n), int(rep)))
    return np.random.Generator(np.random.Philox(ss))


def draw_subset(n_features: int, n: int, seed: int, band_key: int, rep: int) -> np.ndarray:
    if n == n_features:
        return np.arange(n_features)
    return np.sort(subset_rng(seed, band_key, n, rep).choice(n_features, size=n, replace=False))


class MetricCache:
    """Per-replication metrics for one dataset, shared across targets."""

    def __init__(self, ds: FeatureDataset, policy: ImpostorPolicy | None = None, seed: int = 0,
                 targets: Iterable[TargetSpec] = ()):
        self.ds = ds
        self.policy = policy or ImpostorPolicy()
        self.seed = int(seed)
        self.band_key = ds.config.seed
        self.targets: list[TargetSpec] = []
        self._values: dict[tuple[int, int], dict[TargetSpec, float]] = {}
        self.evaluations = 0
        for t in targets:
            self.register(t)

    def register(self, target: TargetSpec) -> None:
        if target in self.targets:
            return
        target.check_resolution(self.ds.n_subjects, self.policy.n_pairs(self.ds.n_subjects))
        self.targets.append(target)

    def replication(self, n: int, rep: int, target: TargetSpec) -> float:
        key = (n, rep)
        row = self._values.get(key)
        if row is None or target not in row:
            if target not in self.targets:
                self.register(target)
            subset = draw_subset(self.ds.n_features, n, self.seed, self.band_key, rep)
            counts = threshold_counts(score_dataset(self.ds, subset, self.policy))
            self.evaluations += 1
            row = {t: t.metric(counts) for t in self.targets}
            self._values[key] = row
        return row[target]

    def mean(self, n: int, reps: int, target: TargetSpec) -> float:
        if not (1 <= n <= self.ds.n_features):
            raise DomainError(f"feature count {n} outside [1, {self.ds.n_features}]")
        if reps < 1:
            raise DomainError("reps must be >= 1")
        return math.fsum(self.replication(n, r, target) for r in range(reps)) / reps


def mean_metric(ds: FeatureDataset, n: int, reps: int, target: TargetSpec,
                policy: ImpostorPolicy | None = None, seed: int = 0) -> float:
    """Mean of ``target``'s metric over ``reps`` random ``n``-feature subsets."""
    return MetricCache(ds, policy, seed, [target]).mean(n, reps, target)


def _bracket(means: dict[int, float], target: float, n_features: int) -> tuple[int, int]:
    below = [n for n, m in means.items() if m < target]
    above = [n for n, m in means.items() if m >= target]
    if not below:
        edge = max(means)
        return edge, n_features
    if not above:
        edge = min(means)
        return edge, edge
    first_below = min(below)
    after_last_above = max(above) + 1
    return min(first_below, after_last_above), max(first_below, after_last_above)


def _narrow(bracket: tuple[int, int], n_features: int) -> tuple[int, int]:
    lo, hi = bracket
    margin = max(1, int(math.ceil(BRACKET_MARGIN * (hi - lo))))
    return max(1, lo - margin), min(n_features, hi + margin)


def _validate_stages(stages: Sequence[SearchStage], n_features: int) -> list[SearchStage]:
    stages = list(stages)
    if not stages:
        raise DomainError("at least one search stage is required")
    for a, b in zip(stages, stages[1:]):
        if b.replications < a.replications:
            raise DomainError("stage replications must not decrease")
    first = stages[0].range or (1, n_features)
    if first != (1, n_features) and not (first[0] <= 1 and first[1] >= n_features):
        raise DomainError(f"first stage must cover [1, {n_features}], got {first}")
    return stages


def find_required_features(
    ds: FeatureDataset,
    target: TargetSpec,
    stages: Sequence[SearchStage] = DEFAULT_STAGES,
    policy: ImpostorPolicy | None = None,
    seed: int = 0,
    cache: MetricCache | None = None,
) -> RequiredFeatures:
    """Smallest feature count whose mean metric falls strictly below ``target.value``.

    Raises :class:`NotReachableError` if no count up to ``n_features`` gets there.
    """
    p = ds.n_features
    stages = _validate_stages(stages, p)
    cache = cache or MetricCache(ds, policy, seed)
    cache.register(target)
    goal = target.value

    trace: list[StageTrace] = []
    rng_range = (1, p)
    for i, stage in enumerate(stages):
        if i == 0:
            rng_range = (1, p)
        elif stage.range is not None:
            rng_range = (max(1, stage.range[0]), min(p, stage.range[1]))
        else:
            rng_range = _narrow(_bracket(trace[-1].means, goal, p), p)
        st = StageTrace(rng_range, stage.replications)
        for n in range(rng_range[0], rng_range[1] + 1):
            st.means[n] = cache.mean(n, stage.replications, target)
        trace.append(st)

    last = trace[-1]
    reps = last.replications
    lo, hi = last.range
    hits = [n for n in range(lo, hi + 1) if last.means[n] < goal]
    if hits:
        n_req = hits[0]
    else:
        n_req = None
        for n in range(hi + 1, p + 1):
            last.means[n] = cache.mean(n, reps, target)
            if last.means[n] < goal:
                n_req = n
                break
        if n_req is None:
            best_n = min(last.means, key=lambda k: last.means[k])
            raise NotReachableError(
                f"{target.label()} not reached with up to {p} features "
                f"(best mean {last.means[best_n]:.6g} at {best_n})",
                best_metric=last.means[best_n],
                best_n=best_n,
            )
    # walk down until the previous count is not below target
    while n_req > 1:
        prev = n_req - 1
        if prev not in last.means:
            last.means[prev] = cache.mean(prev, reps, target)
        if last.means[prev] < goal:
            n_req = prev
        else:
            break
    last.range = (min(last.means), max(last.means))
    below_prev = last.means[n_req - 1] if n_req > 1 else math.nan
    return RequiredFeatures(ds.config.target_icc, target, n_req, last.means[n_req], below_prev, trace)


def search_band(
    ds: FeatureDataset,
    targets: Sequence[TargetSpec],
    stages: Sequence[SearchStage] = DEFAULT_STAGES,
    policy: ImpostorPolicy | None = None,
    seed: int = 0,
) -> list[TableCell]:
    """Search every target on one band, sharing replications between targets."""
    cells = []
    usable = []
    for t in targets:
        try:
            t.check_resolution(ds.n_subjects, (policy or ImpostorPolicy()).n_pairs(ds.n_subjects))
            usable.append(t)
        except ResolutionError as exc:
            cells.append(TableCell(ds.config.target_icc, t, error=str(exc)))
    cache = MetricCache(ds, policy, seed, usable)
    for t in usable:
        try:
            res = find_required_features(ds, t, stages, policy, seed, cache)
            cells.append(TableCell(ds.config.target_icc, t, result=res))
        except NotReachableError as exc:
            cells.append(TableCell(ds.config.target_icc, t, error=str(exc), best_metric=exc.best_metric))
    order = {t: i for i, t in enumerate(targets)}
    return sorted(cells, key=lambda c: order[c.target])


def _search_band_task(args):
    return search_band(*args)


def required_features_table(
    bands: Sequence[FeatureDataset],
    targets: Sequence[TargetSpec],
    stages: Sequence[SearchStage] = DEFAULT_STAGES,
    policy: ImpostorPolicy | None = None,
    seed: int = 0,
    workers: int = 1,
) -> list[TableCell]:
    """Search every (band, target) cell; unreachable cells are recorded, not raised.

    Bands are distributed over ``workers`` processes; results do not depend
    on the worker count.
    """
    if not bands or not targets:
        raise DomainError("at least one band and one target are required")
    jobs = [(ds, list(targets), list(stages), policy, seed) for ds in bands]
    if workers <= 1 or len(jobs) == 1:
        results = [_search_band_task(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_search_band_task, jobs))
    return [cell for band_cells in results for cell in band_cells]


def _far_field(t: TargetSpec) -> str:
    return "" if t.far_level is None else repr(t.far_level)


REQUIRED_COLUMNS = ["band_target", "target_kind", "target_value", "far_level", "n_required", "mean_metric_at_n"]
TRACE_COLUMNS = [
    "band_target", "target_kind", "target_value", "far_level",
    "stage", "replications", "range_lo", "range_hi", "n_features", "mean_metric",
]


def write_required_csv(path: str | Path, cells: Iterable[TableCell]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REQUIRED_COLUMNS)
        for c in cells:
            r = c.result
            w.writerow([
                repr(c.band_target), c.target.kind, repr(c.target.value), _far_field(c.target),
                "" if r is None else r.n_required,
                "" if r is None else repr(r.mean_metric_at_n),
            ])


def write_trace_csv(path: str | Path, cells: Iterable[TableCell]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for c in cells:
            if c.result is None:
                continue
            for i, st in enumerate(c.result.trace, start=1):
                for n in sorted(st.means):
                    w.writerow([
                        repr(c.band_target), c.target.kind, repr(c.target.value), _far_field(c.target),
                        i, st.replications, st.range[0], st.range[1], n, repr(st.means[n]),
                    ])


def read_required_csv(path: str | Path) -> list[tuple[float, TargetSpec, int | None]]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            far = rec.get("far_level") or ""
            t = TargetSpec(rec["target_kind"], float(rec["target_value"]), float(far) if far else None)
            n = rec.get("n_required") or ""
            rows.append((float(rec["band_target"]), t, int(n) if n else None))
    return rows
