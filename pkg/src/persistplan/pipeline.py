"""End-to-end runs: generate bands, search feature counts, fit planning lines.

Each run writes its artifacts into one output directory together with a
``manifest.json`` (``manifest-fit.json`` / ``manifest-icc.json`` for the
follow-up commands, so they never overwrite the run they post-process)
recording the configuration, a SHA-256 checksum per
artifact and the wall-clock runtime.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import ExperimentConfig
from .errors import ConfigError
from .featuregen import FeatureDataset, band_configs, generate_band
from .regression import RegressionFit, fit_all_targets, write_fits_csv
from .reliability import BandIccSummary, band_icc_summary, write_band_icc_csv, write_band_summary_csv
from .search import (
    RequiredFeatures,
    StageTrace,
    TableCell,
    TargetSpec,
    read_required_csv,
    search_band,
    write_required_csv,
    write_trace_csv,
)

log = logging.getLogger(__name__)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Manifest:
    out_dir: Path
    command: str
    config: ExperimentConfig | None = None
    artifacts: dict[str, str] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    filename: str = "manifest.json"
    started: float = field(default_factory=time.monotonic)
    _written: bool = False

    def add(self, path: str | Path) -> None:
        p = Path(path)
        self.artifacts[str(p.relative_to(self.out_dir))] = sha256_file(p)

    def write(self) -> Path:
        if self._written:
            raise RuntimeError("manifest already written")
        self._written = True
        doc = {
            "tool": "persistplan",
            "version": __version__,
            "command": self.command,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config": None if self.config is None else self.config.to_dict(),
            "config_checksum": None if self.config is None else self.config.checksum(),
            "artifacts": dict(sorted(self.artifacts.items())),
            "failures": self.failures,
            "notes": self.notes,
            "runtime_seconds": round(time.monotonic() - self.started, 3),
        }
        path = self.out_dir / self.filename
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return path


def prepare_out_dir(path: str | Path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    return out


def dataset_filename(band: float) -> str:
    return f"band_{band:.4g}.ppfd"


def run_generate(
    cfg: ExperimentConfig, out: Path, manifest: Manifest, save_datasets: bool = True
) -> tuple[list[FeatureDataset], list[BandIccSummary]]:
    datasets, summaries = [], []
    if save_datasets:
        (out / "datasets").mkdir(exist_ok=True)
    for bc in band_configs(cfg.bands, cfg.n_subjects, cfg.n_features, cfg.master_seed):
        ds = generate_band(bc)
        datasets.append(ds)
        summaries.append(band_icc_summary(ds))
        log.info("band %.2f: mean ICC %.4f, sd %.4f", bc.target_icc, summaries[-1].mean, summaries[-1].sd)
        if save_datasets:
            path = out / "datasets" / dataset_filename(bc.target_icc)
            ds.save(path)
            manifest.add(path)
    write_summaries(out, summaries, manifest)
    return datasets, summaries


def write_summaries(out: Path, summaries: Sequence[BandIccSummary], manifest: Manifest) -> None:
    write_band_summary_csv(out / "band_summary.csv", summaries)
    write_band_icc_csv(out / "band_icc.csv", summaries)
    with open(out / "band_histogram.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["band_target", "bin_lower", "count"])
        for s in summaries:
            for lower, count in s.histogram:
                w.writerow([repr(s.target), repr(lower), count])
    for name in ("band_summary.csv", "band_icc.csv", "band_histogram.csv"):
        manifest.add(out / name)


# ----------------------------------------------------------------- cell files


def _cell_name(band: float, t: TargetSpec) -> str:
    name = f"band-{band:.4g}_{t.kind}-{t.value:.6g}"
    if t.far_level is not None:
        name += f"_far-{t.far_level:.6g}"
    return name + ".json"


def _cell_to_json(cell: TableCell, checksum: str) -> dict:
    d = {
        "config_checksum": checksum,
        "band_target": cell.band_target,
        "target": {"kind": cell.target.kind, "value": cell.target.value, "far_level": cell.target.far_level},
        "error": cell.error,
        "best_metric": cell.best_metric,
        "result": None,
    }
    r = cell.result
    if r is not None:
        d["result"] = {
            "n_required": r.n_required,
            "mean_metric_at_n": r.mean_metric_at_n,
            "mean_metric_at_n_minus_1": None if math.isnan(r.mean_metric_at_n_minus_1) else r.mean_metric_at_n_minus_1,
            "trace": [
                {"range": list(st.range), "replications": st.replications,
                 "means": [[n, st.means[n]] for n in sorted(st.means)]}
                for st in r.trace
            ],
        }
    return d


def _cell_from_json(d: dict) -> TableCell:
    t = TargetSpec(d["target"]["kind"], d["target"]["value"], d["target"]["far_level"])
    cell = TableCell(d["band_target"], t, error=d["error"], best_metric=d["best_metric"])
    r = d["result"]
    if r is not None:
        trace = [
            StageTrace(tuple(st["range"]), st["replications"], {int(n): float(m) for n, m in st["means"]})
            for st in r["trace"]
        ]
        prev = r["mean_metric_at_n_minus_1"]
        cell.result = RequiredFeatures(
            d["band_target"], t, r["n_required"], r["mean_metric_at_n"],
            math.nan if prev is None else prev, trace,
        )
    return cell


def _load_cell(path: Path, checksum: str) -> TableCell | None:
    try:
        d = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if d.get("config_checksum") != checksum:
        return None
    return _cell_from_json(d)


def _search_task(args):
    ds_or_cfg, targets, stages, policy, seed = args
    ds = ds_or_cfg if isinstance(ds_or_cfg, FeatureDataset) else generate_band(ds_or_cfg)
    return search_band(ds, targets, stages, policy, seed)


def run_search(
    cfg: ExperimentConfig,
    out: Path,
    manifest: Manifest,
    workers: int = 1,
    datasets: Sequence[FeatureDataset] | None = None,
) -> list[TableCell]:
    """Search every (band, target) cell, reusing cell files from earlier runs of the same config."""
    targets = cfg.targets()
    if not targets:
        raise ConfigError("no error-rate targets configured")
    checksum = cfg.checksum()
    cell_dir = out / "cells"
    cell_dir.mkdir(exist_ok=True)
    bcs = band_configs(cfg.bands, cfg.n_subjects, cfg.n_features, cfg.master_seed)

    done: dict[tuple[float, TargetSpec], TableCell] = {}
    jobs = []
    for i, bc in enumerate(bcs):
        missing = []
        for t in targets:
            cell = _load_cell(cell_dir / _cell_name(bc.target_icc, t), checksum)
            if cell is None:
                missing.append(t)
            else:
                done[(bc.target_icc, t)] = cell
        if missing:
            src = datasets[i] if datasets is not None else bc
            jobs.append((src, missing, list(cfg.stages), cfg.impostor_policy, cfg.master_seed))
        else:
            manifest.notes.append(f"band {bc.target_icc:g}: all cells reused")

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_search_task, jobs))
    else:
        results = [_search_task(j) for j in jobs]
    for band_cells in results:
        for cell in band_cells:
            (cell_dir / _cell_name(cell.band_target, cell.target)).write_text(
                json.dumps(_cell_to_json(cell, checksum), indent=1) + "\n"
            )
            done[(cell.band_target, cell.target)] = cell

    cells = [done[(bc.target_icc, t)] for bc in bcs for t in targets]
    for c in cells:
        if c.error:
            manifest.failures.append(f"band {c.band_target:g}, {c.target.label()}: {c.error}")
    write_required_csv(out / "required_features.csv", cells)
    write_trace_csv(out / "search_trace.csv", cells)
    manifest.add(out / "required_features.csv")
    manifest.add(out / "search_trace.csv")
    return cells


# ------------------------------------------------------------------------ fit


def load_realized_icc(path: str | Path) -> dict[float, float]:
    with open(path, newline="") as fh:
        return {float(r["band_target"]): float(r["mean_icc"]) for r in csv.DictReader(fh)}


def run_fit(
    required_csv: str | Path,
    out: Path,
    manifest: Manifest,
    svg: bool = False,
    realized_icc: dict[float, float] | None = None,
) -> dict[tuple, RegressionFit]:
    rows = read_required_csv(required_csv)
    columns: dict[tuple, list] = {}
    for band, t, n in rows:
        x = realized_icc[band] if realized_icc is not None else band
        columns.setdefault((t.kind, t.value, t.far_level), []).append((x, n))
    fits, skipped = fit_all_targets(columns)
    for key, why in skipped.items():
        manifest.failures.append(f"fit {key}: skipped ({why})")
    write_fits_csv(out / "fits.csv", fits)
    manifest.add(out / "fits.csv")
    with open(out / "fit_points.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target_kind", "target_value", "far_level", "icc", "n_required", "log10_n", "fitted_log10_n"])
        for key, cells in columns.items():
            f = fits.get(key)
            for x, n in cells:
                if n is None:
                    continue
                fitted = "" if f is None else repr(f.intercept + f.slope * x)
                w.writerow([key[0], repr(key[1]), "" if key[2] is None else repr(key[2]),
                            repr(x), n, repr(math.log10(n)), fitted])
    manifest.add(out / "fit_points.csv")
    if svg:
        from .plotting import write_fit_svg

        write_fit_svg(out / "fits.svg", columns, fits)
        manifest.add(out / "fits.svg")
    return fits


def default_out_dir() -> str:
    return os.environ.get("PERSISTPLAN_OUT", "persistplan-out")
