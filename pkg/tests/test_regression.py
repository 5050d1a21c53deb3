import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from persistplan import reference
from persistplan.errors import DomainError
from persistplan.regression import (
    RegressionFit,
    betainc,
    f_sf,
    fit_all_targets,
    fit_log_linear,
    predict_feature_count,
    write_fits_csv,
)


def _table_points(counts):
    return list(zip(reference.BANDS, counts))


@pytest.mark.parametrize("target", reference.EER_TARGETS)
def test_reference_counts_reproduce_planning_lines(target):
    f = fit_log_linear(_table_points(reference.REQUIRED_FEATURES[target]))
    F, _df, p, r2, slope, intercept = reference.EER_FITS[target]
    assert f.slope == pytest.approx(slope, abs=0.002)
    assert f.intercept == pytest.approx(intercept, abs=0.002)
    assert f.r_squared == pytest.approx(r2, abs=0.001)
    assert f.f_value == pytest.approx(F, rel=0.01)
    assert abs(math.log10(f.p_value) - math.log10(p)) < 1.0
    assert (f.df_model, f.df_residual, f.n_points) == (1, 5, 7)


def test_five_percent_row_frozen():
    f = fit_log_linear(_table_points(reference.REQUIRED_FEATURES[0.05]))
    assert f.slope == pytest.approx(-1.98715, abs=1e-5)
    assert f.intercept == pytest.approx(2.58692, abs=1e-5)
    assert f.r_squared == pytest.approx(0.99863, abs=1e-5)
    assert f.f_value == pytest.approx(3636.7, rel=1e-4)


def test_exact_line():
    pts = [(x, 10 ** (3.0 - 2.0 * x)) for x in (0.2, 0.5, 0.9)]
    f = fit_log_linear(pts)
    assert f.slope == pytest.approx(-2.0, abs=1e-12)
    assert f.intercept == pytest.approx(3.0, abs=1e-12)
    assert f.r_squared == pytest.approx(1.0)
    assert f.p_value < 1e-6


def test_degenerate_inputs():
    with pytest.raises(DomainError):
        fit_log_linear([(0.5, 10), (0.5, 20), (0.5, 30)])
    with pytest.raises(DomainError):
        fit_log_linear([(0.1, 10), (0.2, 20)])
    with pytest.raises(DomainError):
        fit_log_linear([(0.1, 10), (0.2, 0), (0.3, 5)])


def test_constant_counts():
    f = fit_log_linear([(0.3, 7), (0.6, 7), (0.9, 7)])
    assert f.slope == 0.0
    assert (f.r_squared, f.f_value, f.p_value) == (0.0, 0.0, 1.0)


def test_three_point_normal_equations():
    pts = [(0.35, 82), (0.65, 19), (0.95, 5)]
    f = fit_log_linear(pts)
    s, b = oracles.ols_normal_equations([x for x, _ in pts], [math.log10(n) for _, n in pts])
    assert f.slope == pytest.approx(s, abs=1e-9)
    assert f.intercept == pytest.approx(b, abs=1e-9)


points = st.lists(
    st.tuples(st.floats(0.05, 1.0), st.integers(1, 5000)), min_size=3, max_size=10
).filter(
    lambda ps: max(p[0] for p in ps) - min(p[0] for p in ps) > 0.05 and len({p[1] for p in ps}) > 1
)


@given(points)
@settings(max_examples=150, deadline=None)
def test_fit_matches_oracle_and_scipy(pts):
    f = fit_log_linear(pts)
    xs = [x for x, _ in pts]
    ys = [math.log10(n) for _, n in pts]
    s, b = oracles.ols_normal_equations(xs, ys)
    assert f.slope == pytest.approx(s, abs=1e-9)
    assert f.intercept == pytest.approx(b, abs=1e-9)
    resid = np.array(ys) - (f.intercept + f.slope * np.array(xs))
    # residuals are orthogonal to the design
    assert abs(resid.sum()) < 1e-10
    assert abs((resid * np.array(xs)).sum()) < 1e-10
    lr = scipy.stats.linregress(xs, ys)
    assert f.r_squared == pytest.approx(min(lr.rvalue**2, 1.0), abs=1e-9)
    if lr.rvalue**2 < 1 - 1e-9:
        assert f.p_value == pytest.approx(lr.pvalue, rel=1e-6, abs=1e-300)


@given(a=st.floats(0.1, 50), b=st.floats(0.1, 50), x=st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(float(scipy.special.betainc(a, b, x)), rel=1e-9, abs=1e-13)


def test_f_sf_monotone_and_edges():
    ps = [f_sf(f, 1, 5) for f in (0.0, 0.5, 1.0, 5.0, 50.0, 5000.0)]
    assert ps[0] == 1.0
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert f_sf(math.inf, 1, 5) == 0.0
    assert f_sf(3636.7, 1, 5) == pytest.approx(scipy.stats.f.sf(3636.7, 1, 5), rel=1e-9)


def test_predict_examples():
    f = fit_log_linear(_table_points(reference.REQUIRED_FEATURES[0.05]))
    p = predict_feature_count(0.95, f)
    assert p.n == 5 and not p.extrapolated
    assert predict_feature_count(0.35, f).n == round(10 ** (f.intercept + 0.35 * f.slope))
    assert predict_feature_count(0.2, f).extrapolated
    with pytest.raises(DomainError):
        predict_feature_count(0.0, f)
    tiny = RegressionFit(-10.0, 0.0, 1.0, 1.0, 1, 1, 0.5, 3)
    assert predict_feature_count(1.0, tiny).n == 1


def test_fit_all_targets_skips_incomplete(tmp_path):
    cols = {
        ("eer", 0.05, None): _table_points(reference.REQUIRED_FEATURES[0.05]),
        ("eer", 0.001, None): [(0.35, None), (0.45, None), (0.95, 14)],
    }
    fits, skipped = fit_all_targets(cols)
    assert list(fits) == [("eer", 0.05, None)]
    assert "complete" in skipped[("eer", 0.001, None)]
    write_fits_csv(tmp_path / "fits.csv", fits)
    lines = (tmp_path / "fits.csv").read_text().splitlines()
    assert lines[0].startswith("target_kind,target_value,far_level,slope")
    assert lines[1].startswith("eer,0.05,,-1.98")
