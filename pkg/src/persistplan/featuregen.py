"""Synthetic two-session feature generation at a chosen target ICC.

Every feature starts as a standard-normal "true" subject value shared by
both sessions; independent Gaussian noise is then added to each session so
that the expected between-session correlation equals the target ICC.

Random streams
--------------
All randomness is drawn from :class:`numpy.random.Philox` generators seeded
through :class:`numpy.random.SeedSequence`:

* band seed      ``SeedSequence(master_seed, spawn_key=(BAND_DOMAIN, band_index))``
  reduced to one ``uint64`` and stored in :attr:`BandConfig.seed`
* feature stream ``SeedSequence(config.seed, spawn_key=(feature_index,))``

Each feature stream draws, in order, the subject signal, the session-1
noise and the session-2 noise.  Because streams are per feature, the output
does not depend on how features are distributed over workers.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .errors import DomainError

BAND_DOMAIN = 0x62616E64  # "band"

_DUMP_MAGIC = b"PPFD"
_DUMP_VERSION = 1
# magic, version, n_subjects, n_features, n_sessions, target_icc, seed
_DUMP_HEADER = struct.Struct("<4sIQQIdQ")


def _check_icc(value: float) -> float:
    value = float(value)
    if not (0.0 < value <= 1.0) or math.isnan(value):
        raise DomainError(f"target ICC must lie in (0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class IccTarget:
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", _check_icc(self.value))

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class BandConfig:
    target_icc: float
    n_subjects: int
    n_features: int
    seed: int = 0

    def __post_init__(self) -> None:
        icc = self.target_icc.value if isinstance(self.target_icc, IccTarget) else self.target_icc
        object.__setattr__(self, "target_icc", _check_icc(icc))
        if int(self.n_subjects) != self.n_subjects or self.n_subjects < 2:
            raise DomainError(f"n_subjects must be an integer >= 2, got {self.n_subjects!r}")
        if int(self.n_features) != self.n_features or self.n_features < 1:
            raise DomainError(f"n_features must be an integer >= 1, got {self.n_features!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "n_subjects", int(self.n_subjects))
        object.__setattr__(self, "n_features", int(self.n_features))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True, eq=False)
class FeatureDataset:
    """Feature values indexed ``[subject, feature, session]``.

    Session index 0 is the gallery (enrollment) session and index 1 the
    probe session.
    """

    values: np.ndarray
    config: BandConfig

    def __post_init__(self) -> None:
        shape = (self.config.n_subjects, self.config.n_features, 2)
        if self.values.shape != shape:
            raise DomainError(f"values shape {self.values.shape} does not match config {shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("feature values must be finite")

    @property
    def n_subjects(self) -> int:
        return self.config.n_subjects

    @property
    def n_features(self) -> int:
        return self.config.n_features

    @property
    def session1(self) -> np.ndarray:
        return self.values[:, :, 0]

    @property
    def session2(self) -> np.ndarray:
        return self.values[:, :, 1]

    def to_bytes(self) -> bytes:
        cfg = self.config
        header = _DUMP_HEADER.pack(
            _DUMP_MAGIC, _DUMP_VERSION, cfg.n_subjects, cfg.n_features, 2, cfg.target_icc, cfg.seed
        )
        return header + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeatureDataset":
        if len(data) < _DUMP_HEADER.size:
            raise DomainError("truncated dataset header")
        magic, version, n_sub, n_feat, n_sess, target, seed = _DUMP_HEADER.unpack_from(data)
        if magic != _DUMP_MAGIC:
            raise DomainError(f"bad dataset magic {magic!r}")
        if version != _DUMP_VERSION or n_sess != 2:
            raise DomainError(f"unsupported dataset version {version} / sessions {n_sess}")
        body = np.frombuffer(data, dtype="<f8", offset=_DUMP_HEADER.size)
        if body.size != n_sub * n_feat * 2:
            raise DomainError("dataset body size does not match header")
        config = BandConfig(target, n_sub, n_feat, seed)
        return cls(body.reshape(n_sub, n_feat, 2).astype(np.float64), config)

    @classmethod
    def load(cls, path: str | Path) -> "FeatureDataset":
        return cls.from_bytes(Path(path).read_bytes())

    @classmethod
    def read(cls, fh: BinaryIO) -> "FeatureDataset":
        return cls.from_bytes(fh.read())


def noise_sd(target: IccTarget | float) -> float:
    """SD of per-session noise giving the requested ICC for unit signal variance."""
    icc = target.value if isinstance(target, IccTarget) else _check_icc(target)
    return math.sqrt((1.0 - icc) / icc)


def feature_generator(seed: int, feature_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(feature_index),))
    return np.random.Generator(np.random.Philox(ss))


def generate_band(config: BandConfig) -> FeatureDataset:
    """Generate one band of features for ``config``.

    The random stream is fully determined by ``config.seed``.
    """
    n, p = config.n_subjects, config.n_features
    sd = noise_sd(config.target_icc)
    values = np.empty((n, p, 2), dtype=np.float64)
    for j in range(p):
        rng = feature_generator(config.seed, j)
        signal = rng.standard_normal(n)
        values[:, j, 0] = signal
        values[:, j, 1] = signal
        noise = rng.standard_normal((2, n))
        if sd > 0.0:
            values[:, j, 0] += sd * noise[0]
            values[:, j, 1] += sd * noise[1]
    return FeatureDataset(values, config)


def band_seed(master_seed: int, band_index: int) -> int:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(BAND_DOMAIN, int(band_index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def band_configs(
    targets: Sequence[float | IccTarget], n_subjects: int, n_features: int, master_seed: int
) -> list[BandConfig]:
    if len(targets) == 0:
        raise DomainError("at least one target ICC is required")
    return [
        BandConfig(float(t), n_subjects, n_features, band_seed(master_seed, i))
        for i, t in enumerate(targets)
    ]


def generate_bands(
    targets: Sequence[float | IccTarget], n_subjects: int, n_features: int, master_seed: int
) -> list[FeatureDataset]:
    """One independent dataset per target ICC, all derived from ``master_seed``."""
    return [generate_band(cfg) for cfg in band_configs(targets, n_subjects, n_features, master_seed)]
