"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 resolution-guard failure,
4 a search target was not reachable.
"""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import reference
from .config import ExperimentConfig, desk_config, full_scale_config
from .errors import ConfigError, DomainError, ResolutionError
from .featuregen import FeatureDataset
from .pipeline import (
    Manifest,
    default_out_dir,
    load_realized_icc,
    prepare_out_dir,
    run_fit,
    run_generate,
    run_search,
    write_summaries,
)
from .regression import RegressionFit, predict_feature_count
from .reliability import band_icc_summary

EXIT_CONFIG = 2
EXIT_RESOLUTION = 3
EXIT_NOT_REACHABLE = 4

log = logging.getLogger("persistplan")


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load_config(path: str | None, seed: int | None, out: str | None, default: ExperimentConfig | None = None):
    try:
        cfg = ExperimentConfig.load(path) if path else (default or ExperimentConfig())
        if seed is not None:
            cfg = replace(cfg, master_seed=seed)
        if out is not None:
            cfg = replace(cfg, output_dir=out)
        elif not path and default is None:
            cfg = replace(cfg, output_dir=default_out_dir())
        return cfg
    except (ConfigError, DomainError) as exc:
        _fail(EXIT_CONFIG, str(exc))


def _validate(cfg: ExperimentConfig, check_resolution: bool = True) -> Path:
    try:
        cfg.validate(check_resolution=check_resolution)
        return prepare_out_dir(cfg.output_dir)
    except ResolutionError as exc:
        _fail(EXIT_RESOLUTION, str(exc))
    except (ConfigError, DomainError) as exc:
        _fail(EXIT_CONFIG, str(exc))


config_opt = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Experiment YAML file.")
seed_opt = click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Override the master seed.")
out_opt = click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
workers_opt = click.option("--workers", type=click.IntRange(1), default=1, show_default=True, help="Worker processes.")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Plan feature counts from temporal persistence (ICC) and error-rate targets."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@config_opt
@seed_opt
@out_opt
@click.option("--no-datasets", is_flag=True, help="Only write ICC summaries, not the dataset files.")
def generate(config_path, seed, out, no_datasets):
    """Generate one synthetic dataset per ICC band and summarize band ICCs."""
    cfg = _load_config(config_path, seed, out)
    out_dir = _validate(cfg, check_resolution=False)
    manifest = Manifest(out_dir, "generate", cfg)
    try:
        _, summaries = run_generate(cfg, out_dir, manifest, save_datasets=not no_datasets)
    finally:
        manifest.write()
    for s in summaries:
        click.echo(f"band {s.target:.2f}  mean ICC {s.mean:.3f}  SD {s.sd:.3f}")


@main.command()
@click.argument("datasets", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@out_opt
def icc(datasets, out):
    """Estimate per-feature ICCs of saved dataset files."""
    summaries = []
    for path in datasets:
        try:
            ds = FeatureDataset.load(path)
        except DomainError as exc:
            _fail(EXIT_CONFIG, f"{path}: {exc}")
        summaries.append(band_icc_summary(ds))
    for s in summaries:
        click.echo(f"band {s.target:.2f}  mean ICC {s.mean:.3f}  SD {s.sd:.3f}  features {s.n_features}")
    if out:
        out_dir = prepare_out_dir(out)
        manifest = Manifest(out_dir, "icc", filename="manifest-icc.json")
        try:
            write_summaries(out_dir, summaries, manifest)
        finally:
            manifest.write()


@main.command()
@config_opt
@seed_opt
@out_opt
@workers_opt
def search(config_path, seed, out, workers):
    """Find the feature count that reaches every target in every band."""
    cfg = _load_config(config_path, seed, out)
    out_dir = _validate(cfg)
    manifest = Manifest(out_dir, "search", cfg)
    try:
        cells = run_search(cfg, out_dir, manifest, workers=workers)
    finally:
        manifest.write()
    _print_table(cells)
    if manifest.failures:
        for f in manifest.failures:
            click.echo(f"not reached: {f}", err=True)
        sys.exit(EXIT_NOT_REACHABLE)


def _print_table(cells) -> None:
    targets = []
    for c in cells:
        if c.target not in targets:
            targets.append(c.target)
    bands = sorted({c.band_target for c in cells})
    lookup = {(c.band_target, c.target): c for c in cells}
    click.echo("band   " + "  ".join(f"{t.label():>24}" for t in targets))
    for b in bands:
        row = []
        for t in targets:
            r = lookup[(b, t)].result
            row.append(f"{'-' if r is None else r.n_required:>24}")
        click.echo(f"{b:<6} " + "  ".join(row))


@main.command()
@click.argument("required_csv", type=click.Path(exists=True, dir_okay=False))
@out_opt
@click.option("--svg", is_flag=True, help="Also write fits.svg.")
@click.option("--realized-icc", type=click.Path(exists=True, dir_okay=False),
              help="band_summary.csv; regress on realized mean ICC instead of the band target.")
def fit(required_csv, out, svg, realized_icc):
    """Fit log10(feature count) against ICC for every target column."""
    out_dir = prepare_out_dir(out or Path(required_csv).parent)
    manifest = Manifest(out_dir, "fit", filename="manifest-fit.json")
    try:
        realized = load_realized_icc(realized_icc) if realized_icc else None
        fits = run_fit(required_csv, out_dir, manifest, svg=svg, realized_icc=realized)
    except (DomainError, KeyError, ValueError) as exc:
        manifest.failures.append(str(exc))
        manifest.write()
        _fail(EXIT_CONFIG, f"cannot fit {required_csv}: {exc}")
    manifest.write()
    _print_fits(fits)


def _print_fits(fits) -> None:
    click.echo(f"{'target':<28} {'F':>9} {'df':>6} {'p':>9} {'R2':>6} {'slope':>7} {'intercept':>9}")
    for (kind, value, far), f in fits.items():
        label = f"EER {value * 100:g}%" if kind == "eer" else f"FRR {value * 100:g}% @ FAR {far * 100:g}%"
        click.echo(
            f"{label:<28} {f.f_value:9.0f} {f'1,{f.df_residual}':>6} {f.p_value:9.1e} "
            f"{f.r_squared:6.3f} {f.slope:7.3f} {f.intercept:9.3f}"
        )


def _reference_fit(row) -> RegressionFit:
    f, _df, p, r2, slope, intercept = row
    return RegressionFit(slope, intercept, r2, f, 1, len(reference.BANDS) - 2, p, len(reference.BANDS),
                         min(reference.BANDS), max(reference.BANDS))


def _fits_from_csv(path):
    import csv

    out = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            far = float(r["far_level"]) if r["far_level"] else None
            out[(r["target_kind"], float(r["target_value"]), far)] = RegressionFit(
                float(r["slope"]), float(r["intercept"]), float(r["r_squared"]), float(r["f_value"]),
                int(r["df_model"]), int(r["df_residual"]), float(r["p_value"]), int(r["df_residual"]) + 2,
            )
    return out


def _match(table: dict, value: float):
    for k, v in table.items():
        if math.isclose(k, value, rel_tol=1e-9):
            return k, v
    return None, None


@main.command()
@click.option("--icc", "icc_value", type=float, required=True, help="Temporal persistence of the feature set.")
@click.option("--eer", type=float, help="EER target in percent.")
@click.option("--frr", type=float, help="FRR target in percent (with --far).")
@click.option("--far", type=float, help="FAR level in percent (with --frr).")
@click.option("--fits", "fits_path", type=click.Path(exists=True, dir_okay=False), help="Use fits.csv from a run instead of the built-in lines.")
def predict(icc_value, eer, frr, far, fits_path):
    """Predict the number of independent features needed for a target."""
    if (eer is None) == (far is None):
        _fail(EXIT_CONFIG, "give either --eer or --far (with optional --frr, default 1%)")
    if eer is not None:
        key = ("eer", eer / 100.0, None)
        label = f"EER < {eer:g}%"
    else:
        frr = 1.0 if frr is None else frr
        key = ("frr_at_far", frr / 100.0, far / 100.0)
        label = f"FRR < {frr:g}% at FAR {far:g}%"

    fit_line = None
    counts = None
    if fits_path:
        for k, v in _fits_from_csv(fits_path).items():
            if k[0] == key[0] and math.isclose(k[1], key[1], rel_tol=1e-9) and (
                k[2] is None and key[2] is None or k[2] is not None and key[2] is not None and math.isclose(k[2], key[2], rel_tol=1e-9)
            ):
                fit_line = v
    elif key[0] == "eer":
        tk, row = _match(reference.EER_FITS, key[1])
        if row is not None:
            fit_line = _reference_fit(row)
            counts = reference.REQUIRED_FEATURES[tk]
    elif math.isclose(key[1], reference.FRR_TARGET):
        _, row = _match(reference.FRR_AT_FAR_FITS, key[2])
        if row is not None:
            fit_line = _reference_fit(row)
    if fit_line is None:
        _fail(EXIT_CONFIG, f"no planning line available for {label}")
    try:
        pred = predict_feature_count(icc_value, fit_line)
    except DomainError as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(f"{label}, ICC {icc_value:g}: {pred.n} features (log10 N = {pred.log10_n:.5f})")
    if counts is not None:
        bi, _ = _match({b: i for i, b in enumerate(reference.BANDS)}, icc_value)
        if bi is not None:
            click.echo(f"note: reference search count for band {bi:g} is {counts[reference.BANDS.index(bi)]}")
    if pred.extrapolated:
        click.echo(
            f"warning: ICC {icc_value:g} is outside the fitted range "
            f"[{fit_line.icc_min:g}, {fit_line.icc_max:g}]; extrapolated", err=True
        )


@main.command("reproduce-paper")
@click.option("--scale", type=click.Choice(["paper", "desk"]), default="desk", show_default=True)
@seed_opt
@out_opt
@workers_opt
@click.option("--svg", is_flag=True, help="Also write fits.svg.")
def reproduce_paper(scale, seed, out, workers, svg):
    """Generate bands, search all targets and fit planning lines in one run."""
    base = full_scale_config() if scale == "paper" else desk_config()
    cfg = _load_config(None, seed, out or str(Path(default_out_dir()) / scale), default=base)
    dropped = cfg.resolution_problems()
    if dropped:
        for t, why in dropped:
            click.echo(f"dropped {t.label()}: {why}", err=True)
        cfg = cfg.without_targets([t for t, _ in dropped])
    out_dir = _validate(cfg)
    manifest = Manifest(out_dir, f"reproduce-paper --scale {scale}", cfg)
    manifest.notes.extend(f"dropped {t.label()}: {why}" for t, why in dropped)
    cells = []
    try:
        datasets, summaries = run_generate(cfg, out_dir, manifest, save_datasets=False)
        for s in summaries:
            click.echo(f"band {s.target:.2f}  mean ICC {s.mean:.3f}  SD {s.sd:.3f}")
        cells = run_search(cfg, out_dir, manifest, workers=workers, datasets=datasets if workers == 1 else None)
        _print_table(cells)
        fits = run_fit(out_dir / "required_features.csv", out_dir, manifest, svg=svg)
        _print_fits(fits)
    finally:
        manifest.write()
    if any(c.error for c in cells):
        sys.exit(EXIT_NOT_REACHABLE)


if __name__ == "__main__":
    main()
