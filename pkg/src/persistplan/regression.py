"""Log-linear planning equations ``log10(N) = intercept + slope * ICC``.

Ordinary least squares of ``log10(n_features)`` on ICC with the usual
one-predictor F test; the p-value comes from the F(1, n-2) survival
function evaluated through a continued-fraction regularised incomplete
beta function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

FIT_COLUMNS = [
    "target_kind",
    "target_value",
    "far_level",
    "slope",
    "intercept",
    "r_squared",
    "f_value",
    "df_model",
    "df_residual",
    "p_value",
]


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    f_value: float
    df_model: int
    df_residual: int
    p_value: float
    n_points: int
    icc_min: float = math.nan
    icc_max: float = math.nan


@dataclass(frozen=True)
class Prediction:
    n: int
    log10_n: float
    extrapolated: bool


def _betacf(a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise DomainError("betainc needs a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Survival function of the F(d1, d2) distribution."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def fit_log_linear(points: Iterable[tuple[float, float]]) -> RegressionFit:
    pts = [(float(x), float(n)) for x, n in points]
    if len(pts) < 3:
        raise DomainError(f"need at least 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    counts = np.array([p[1] for p in pts])
    if np.any(counts <= 0):
        raise DomainError("feature counts must be positive")
    if np.ptp(x) == 0.0:
        raise DomainError("all ICC values are identical; slope is undefined")
    y = np.log10(counts)
    n = len(pts)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    sxy = float(((x - xm) * (y - ym)).sum())
    syy = float(((y - ym) ** 2).sum())
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float((resid**2).sum())
    ss_reg = syy - ss_res
    df_res = n - 2
    # constant counts: nothing to explain, report R^2 = 0 alongside F = 0, p = 1
    r2 = 1.0 - ss_res / syy if syy > 0 else 0.0
    if ss_res == 0.0 or df_res == 0:
        f_value = math.inf if ss_reg > 0 else 0.0
    else:
        f_value = ss_reg / (ss_res / df_res)
    p = f_sf(f_value, 1, df_res) if df_res > 0 else math.nan
    return RegressionFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        f_value=float(max(f_value, 0.0)),
        df_model=1,
        df_residual=df_res,
        p_value=float(p),
        n_points=n,
        icc_min=float(x.min()),
        icc_max=float(x.max()),
    )


def predict_feature_count(icc: float, fit: RegressionFit) -> Prediction:
    """Feature count predicted by a planning line, rounded to the nearest integer (at least 1)."""
    icc = float(icc)
    if not (0.0 < icc <= 1.0):
        raise DomainError(f"ICC must lie in (0, 1], got {icc!r}")
    log10_n = fit.intercept + fit.slope * icc
    n = max(1, int(math.floor(10.0**log10_n + 0.5)))
    lo, hi = fit.icc_min, fit.icc_max
    extrapolated = not (math.isnan(lo) or math.isnan(hi)) and not (lo - 1e-12 <= icc <= hi + 1e-12)
    return Prediction(n, log10_n, extrapolated)


def fit_all_targets(
    columns: dict[tuple[str, float, float], Sequence[tuple[float, int | None]]],
) -> tuple[dict[tuple[str, float, float], RegressionFit], dict[tuple[str, float, float], str]]:
    """One fit per target column; columns with fewer than 3 complete bands are skipped.

    ``columns`` maps ``(target_kind, target_value, far_level)`` to
    ``(band_icc, n_required)`` pairs, where ``n_required`` may be ``None``
    for unreachable cells.
    """
    fits = {}
    skipped = {}
    for key, cells in columns.items():
        complete = [(x, n) for x, n in cells if n is not None]
        if len(complete) < 3:
            skipped[key] = f"only {len(complete)} complete bands"
            continue
        try:
            fits[key] = fit_log_linear(complete)
        except DomainError as exc:
            skipped[key] = str(exc)
    return fits, skipped


def write_fits_csv(path: str | Path, fits: dict[tuple[str, float, float], RegressionFit]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIT_COLUMNS)
        for (kind, value, far), f in fits.items():
            w.writerow(
                [
                    kind,
                    repr(value),
                    "" if far is None or (isinstance(far, float) and math.isnan(far)) else repr(far),
                    f"{f.slope:.6f}",
                    f"{f.intercept:.6f}",
                    f"{f.r_squared:.6f}",
                    f"{f.f_value:.6g}",
                    f.df_model,
                    f.df_residual,
                    f"{f.p_value:.6g}",
                ]
            )
