"""Genuine/impostor similarity scores for a feature subset.

Features are z-scored with gallery (session-1) statistics and compared with
cosine similarity; higher scores mean more similar.  A genuine comparison
pairs a subject's session-1 vector with their own session-2 vector, an
impostor comparison pairs subject ``a``'s session-1 vector with subject
``b``'s session-2 vector for ``a != b``.

Full-cross impostor sets grow as ``n * (n - 1)`` and are therefore kept as an
:class:`ImpostorStream` that recomputes score blocks on demand instead of
storing them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from . import _backend
from .errors import DegenerateInputError, DomainError
from .featuregen import FeatureDataset

FULL = "full"
SAMPLED = "sampled"

# upper bound on doubles held by one score block
BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class ImpostorPolicy:
    mode: str = FULL
    sample_size: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (FULL, SAMPLED):
            raise DomainError(f"impostor mode must be 'full' or 'sampled', got {self.mode!r}")
        if self.mode == SAMPLED and (self.sample_size is None or self.sample_size < 1):
            raise DomainError("sampled impostor policy needs a positive sample_size")

    def n_pairs(self, n_subjects: int) -> int:
        total = n_subjects * (n_subjects - 1)
        if self.mode == FULL:
            return total
        if self.sample_size > total:
            raise DomainError(f"sample_size {self.sample_size} exceeds the {total} available pairs")
        return self.sample_size


def check_subset(indices: Sequence[int], n_features: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise DomainError("feature subset is empty")
    if idx.min() < 0 or idx.max() >= n_features:
        raise DomainError(f"feature indices must lie in [0, {n_features})")
    if np.unique(idx).size != idx.size:
        raise DomainError("feature subset contains duplicates")
    return idx


class ImpostorStream:
    """Lazily evaluated full-cross impostor scores.

    Scores are produced in gallery-major blocks ``gallery[r0:r1] @ probe.T``;
    the diagonal (genuine pairs) is excluded.  Block boundaries depend only
    on the shape, so every pass yields bit-identical scores.
    """

    def __init__(self, gallery: np.ndarray, probe: np.ndarray):
        self.gallery = np.ascontiguousarray(gallery, dtype=np.float64)
        self.probe_t = np.ascontiguousarray(probe.T, dtype=np.float64)
        n = self.gallery.shape[0]
        self.n_subjects = n
        self.block_rows = max(1, BLOCK_ELEMENTS // max(n, 1))

    def __len__(self) -> int:
        return self.n_subjects * (self.n_subjects - 1)

    def blocks(self) -> Iterator[tuple[int, np.ndarray]]:
        n = self.n_subjects
        for r0 in range(0, n, self.block_rows):
            r1 = min(n, r0 + self.block_rows)
            yield r0, np.ascontiguousarray(self.gallery[r0:r1] @ self.probe_t)

    def bin(self, thresholds: np.ndarray, kernels=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = kernels or _backend.kernels
        T = thresholds.shape[0]
        hist = np.zeros(T + 1, dtype=np.int64)
        equal = np.zeros(T, dtype=np.int64)
        binmax = np.full(T + 1, -np.inf)
        for r0, block in self.blocks():
            k.bin_block(block, r0, thresholds, hist, equal, binmax, True)
        return hist, equal, binmax

    def materialize(self) -> np.ndarray:
        n = self.n_subjects
        out = []
        for r0, block in self.blocks():
            m = block.shape[0]
            mask = np.ones(block.shape, dtype=bool)
            mask[np.arange(m), np.arange(r0, r0 + m)] = False
            out.append(block[mask])
        return np.concatenate(out) if out else np.empty(0)

    def pairs(self) -> Iterator[tuple[int, int]]:
        n = self.n_subjects
        for a in range(n):
            for b in range(n):
                if a != b:
                    yield a, b


@dataclass(frozen=True, eq=False)
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray | ImpostorStream
    impostor_pairs: np.ndarray | None = None  # (m, 2) gallery/probe subjects when sampled

    @property
    def n_genuine(self) -> int:
        return int(self.genuine.shape[0])

    @property
    def n_impostor(self) -> int:
        return len(self.impostor)

    @property
    def streaming(self) -> bool:
        return isinstance(self.impostor, ImpostorStream)

    def materialized(self) -> "ScoreSet":
        if not self.streaming:
            return self
        return ScoreSet(self.genuine, self.impostor.materialize(), None)

    @classmethod
    def from_arrays(cls, genuine, impostor) -> "ScoreSet":
        g = np.asarray(genuine, dtype=np.float64).ravel()
        i = np.asarray(impostor, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(i))):
            raise DomainError("scores must be finite")
        return cls(g, i)


def zscore_params(ds: FeatureDataset, subset: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature gallery mean and sample SD (ddof=1) for the subset."""
    idx = check_subset(subset, ds.n_features)
    gallery = ds.session1[:, idx]
    mean = gallery.mean(axis=0)
    sd = gallery.std(axis=0, ddof=1)
    if np.any(~(sd > 0)):
        bad = idx[~(sd > 0)][:5].tolist()
        raise DegenerateInputError(f"features {bad} have zero variance in session 1")
    return mean, sd


def similarity(a, b) -> float:
    """Cosine similarity of two vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise DomainError("similarity needs two non-empty vectors of equal length")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cannot compare a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _unit_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    if np.any(norms == 0.0):
        bad = np.flatnonzero(norms == 0.0)[:5].tolist()
        raise DegenerateInputError(f"{what} vectors of subjects {bad} are zero after normalisation")
    return np.ascontiguousarray(x / norms[:, None])


def normalized_sessions(ds: FeatureDataset, subset: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Z-scored, unit-length gallery and probe matrices for ``subset``."""
    idx = check_subset(subset, ds.n_features)
    mean, sd = zscore_params(ds, idx)
    g = (ds.session1[:, idx] - mean) / sd
    p = (ds.session2[:, idx] - mean) / sd
    return _unit_rows(g, "gallery"), _unit_rows(p, "probe")


def sample_pairs(n_subjects: int, policy: ImpostorPolicy) -> np.ndarray:
    """Distinct ordered ``(gallery, probe)`` pairs with gallery != probe."""
    m = policy.n_pairs(n_subjects)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(policy.seed))))
    flat = rng.choice(n_subjects * (n_subjects - 1), size=m, replace=False)
    a = flat // (n_subjects - 1)
    r = flat % (n_subjects - 1)
    b = r + (r >= a)
    return np.stack([a, b], axis=1).astype(np.int64)


def score_dataset(
    ds: FeatureDataset,
    subset: Sequence[int],
    policy: ImpostorPolicy | None = None,
    kernels=None,
) -> ScoreSet:
    policy = policy or ImpostorPolicy()
    k = kernels or _backend.kernels
    g, p = normalized_sessions(ds, subset)
    n = ds.n_subjects
    ids = np.arange(n, dtype=np.int64)
    genuine = k.rowwise_dot(g, p, ids, ids)
    if policy.mode == FULL:
        return ScoreSet(genuine, ImpostorStream(g, p))
    pairs = sample_pairs(n, policy)
    a = np.ascontiguousarray(pairs[:, 0])
    b = np.ascontiguousarray(pairs[:, 1])
    return ScoreSet(genuine, k.rowwise_dot(g, p, a, b), pairs)


def whiten(features) -> np.ndarray:
    """Cholesky whitening: centred data times the inverse transposed Cholesky factor.

    With sample covariance ``S = L L^T`` the output ``(X - mean) L^{-T}`` has
    identity sample covariance.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise DomainError("whiten needs a (subjects, features) matrix with at least 2 subjects")
    centred = x - x.mean(axis=0)
    cov = np.atleast_2d(np.cov(centred, rowvar=False, ddof=1))
    p = cov.shape[0]
    rank = int(np.linalg.matrix_rank(cov))
    if rank < p:
        raise DegenerateInputError(
            f"sample covariance is singular: rank {rank} of {p} (deficiency {p - rank})"
        )
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise DegenerateInputError(f"sample covariance of {p} features is not positive definite") from None
    return solve_triangular(chol, centred.T, lower=True).T


def write_scores_csv(path: str | Path, scores: ScoreSet, include_impostor: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "subject_a", "subject_b", "score"])
        for i, s in enumerate(scores.genuine):
            w.writerow(["genuine", i, i, repr(float(s))])
        if not include_impostor:
            return
        if scores.streaming:
            for (a, b), s in zip(scores.impostor.pairs(), scores.impostor.materialize()):
                w.writerow(["impostor", a, b, repr(float(s))])
        else:
            pairs = scores.impostor_pairs
            for q, s in enumerate(scores.impostor):
                a, b = (int(pairs[q, 0]), int(pairs[q, 1])) if pairs is not None else ("", "")
                w.writerow(["impostor", a, b, repr(float(s))])
