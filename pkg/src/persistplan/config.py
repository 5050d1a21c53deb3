"""Experiment configuration files.

A configuration is one YAML document.  Error-rate targets are written in
percent and converted to fractions on load::

    bands: [0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95]
    n_subjects: 10000
    n_features: 350
    eer_targets_percent: [5.0, 2.0, 1.0, 0.5, 0.1]
    frr_at_far_percent:
      - {frr: 1.0, far: 0.1}
    stages:
      - {replications: 1}
      - {replications: 20}
      - {replications: 100}
    impostors: {mode: full}
    master_seed: 20180915
    output_dir: runs/full

A stage may carry an explicit ``range: [lo, hi]``; without one, later stages
narrow around the previous stage's crossing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError, DomainError, ResolutionError
from .reference import BANDS, EER_TARGETS, FAR_LEVELS, FRR_TARGET
from .scoring import ImpostorPolicy
from .search import SearchStage, TargetSpec
from .metrics import required_impostors

_KEYS = {
    "bands", "n_subjects", "n_features", "eer_targets_percent", "frr_at_far_percent",
    "stages", "impostors", "master_seed", "output_dir",
}


def _pct(x: float) -> float:
    # percent -> fraction without picking up binary noise (0.1% -> 0.001)
    return float(f"{float(x) / 100.0:.15g}")


def _to_pct(x: float) -> float:
    return float(f"{float(x) * 100.0:.15g}")


@dataclass(frozen=True)
class ExperimentConfig:
    bands: tuple[float, ...] = BANDS
    n_subjects: int = 10_000
    n_features: int = 350
    eer_targets: tuple[float, ...] = EER_TARGETS
    frr_far_targets: tuple[tuple[float, float], ...] = tuple((FRR_TARGET, f) for f in FAR_LEVELS)
    stages: tuple[SearchStage, ...] = (SearchStage(1), SearchStage(20), SearchStage(100))
    impostor_policy: ImpostorPolicy = field(default_factory=ImpostorPolicy)
    master_seed: int = 20180915
    output_dir: str = "persistplan-out"

    def targets(self) -> list[TargetSpec]:
        return [TargetSpec.eer(v) for v in self.eer_targets] + [
            TargetSpec.frr_at_far(frr, far) for frr, far in self.frr_far_targets
        ]

    @property
    def n_impostor(self) -> int:
        return self.impostor_policy.n_pairs(self.n_subjects)

    def resolution_problems(self) -> list[tuple[TargetSpec, str]]:
        """Targets that the configured subject count cannot resolve."""
        out = []
        n_imp = self.n_impostor
        for t in self.targets():
            if t.kind == "eer" and t.value < 1.0 / self.n_subjects:
                out.append((t, f"EER target {t.value:g} < 1/{self.n_subjects} genuine scores"))
            elif t.kind == "frr_at_far" and n_imp < required_impostors(t.far_level):
                out.append((t, f"FAR {t.far_level:g} needs {required_impostors(t.far_level)} impostor scores, have {n_imp}"))
        return out

    def without_targets(self, drop: list[TargetSpec]) -> "ExperimentConfig":
        eer = tuple(v for v in self.eer_targets if TargetSpec.eer(v) not in drop)
        ff = tuple(p for p in self.frr_far_targets if TargetSpec.frr_at_far(*p) not in drop)
        return replace(self, eer_targets=eer, frr_far_targets=ff)

    def validate(self, check_resolution: bool = True) -> None:
        if not self.bands:
            raise ConfigError("bands must not be empty")
        for b in self.bands:
            if not (0.0 < b <= 1.0):
                raise ConfigError(f"band ICC {b!r} outside (0, 1]")
        if self.n_subjects < 3:
            raise ConfigError("n_subjects must be >= 3")
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        if not self.eer_targets and not self.frr_far_targets:
            raise ConfigError("no error-rate targets configured")
        for v in self.eer_targets:
            if not (0.0 < v < 1.0):
                raise ConfigError(f"EER target {v!r} outside (0, 1)")
        for frr, far in self.frr_far_targets:
            if not (0.0 < frr < 1.0 and 0.0 < far < 1.0):
                raise ConfigError(f"FRR/FAR target {(frr, far)!r} outside (0, 1)")
        if not self.stages:
            raise ConfigError("at least one search stage is required")
        for a, b in zip(self.stages, self.stages[1:]):
            if b.replications < a.replications:
                raise ConfigError("stage replications must not decrease")
        try:
            self.n_impostor
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        if not (0 <= self.master_seed < 2**64):
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if check_resolution:
            problems = self.resolution_problems()
            if problems:
                raise ResolutionError("; ".join(msg for _, msg in problems))

    def to_dict(self) -> dict[str, Any]:
        imp: dict[str, Any] = {"mode": self.impostor_policy.mode}
        if self.impostor_policy.mode == "sampled":
            imp["sample_size"] = self.impostor_policy.sample_size
            imp["seed"] = self.impostor_policy.seed
        stages = []
        for s in self.stages:
            d: dict[str, Any] = {"replications": s.replications}
            if s.range is not None:
                d["range"] = list(s.range)
            stages.append(d)
        return {
            "bands": list(self.bands),
            "n_subjects": self.n_subjects,
            "n_features": self.n_features,
            "eer_targets_percent": [_to_pct(v) for v in self.eer_targets],
            "frr_at_far_percent": [{"frr": _to_pct(a), "far": _to_pct(b)} for a, b in self.frr_far_targets],
            "stages": stages,
            "impostors": imp,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        unknown = set(d) - _KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        base = cls()
        try:
            kw: dict[str, Any] = {}
            if "bands" in d:
                kw["bands"] = tuple(float(b) for b in d["bands"])
            for k in ("n_subjects", "n_features", "master_seed"):
                if k in d:
                    kw[k] = int(d[k])
            if "eer_targets_percent" in d:
                kw["eer_targets"] = tuple(_pct(v) for v in d["eer_targets_percent"] or [])
            if "frr_at_far_percent" in d:
                kw["frr_far_targets"] = tuple(
                    (_pct(e["frr"]), _pct(e["far"])) for e in d["frr_at_far_percent"] or []
                )
            if "stages" in d:
                kw["stages"] = tuple(
                    SearchStage(int(s["replications"]), tuple(s["range"]) if s.get("range") else None)
                    for s in d["stages"] or []
                )
            if "impostors" in d:
                imp = d["impostors"] or {}
                kw["impostor_policy"] = ImpostorPolicy(
                    imp.get("mode", "full"), imp.get("sample_size"), int(imp.get("seed", 0))
                )
            if "output_dir" in d:
                kw["output_dir"] = str(d["output_dir"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None
        return replace(base, **kw)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from None
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        return cls.loads(text)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def checksum(self) -> str:
        """Digest of everything that affects results (the output directory is excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def full_scale_config(output_dir: str = "persistplan-out/full") -> ExperimentConfig:
    return ExperimentConfig(output_dir=output_dir)


def desk_config(output_dir: str = "persistplan-out/desk") -> ExperimentConfig:
    """1,000 subjects, EER targets down to 1 %, two stages (1 and 20 replications)."""
    return ExperimentConfig(
        n_subjects=1000,
        eer_targets=(0.05, 0.02, 0.01),
        stages=(SearchStage(1), SearchStage(20)),
        output_dir=output_dir,
    )

