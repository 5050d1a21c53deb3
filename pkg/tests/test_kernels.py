import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persistplan import _backend, _kernels_py

compiled = _backend.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def _run_values(k, values, thresholds):
    T = len(thresholds)
    hist = np.zeros(T + 1, dtype=np.int64)
    equal = np.zeros(T, dtype=np.int64)
    binmax = np.full(T + 1, -np.inf)
    k.bin_values(np.ascontiguousarray(values, dtype=np.float64), np.ascontiguousarray(thresholds), hist, equal, binmax)
    return hist, equal, binmax


def _run_block(k, block, r0, thresholds, skip):
    T = len(thresholds)
    hist = np.zeros(T + 1, dtype=np.int64)
    equal = np.zeros(T, dtype=np.int64)
    binmax = np.full(T + 1, -np.inf)
    k.bin_block(np.ascontiguousarray(block), r0, thresholds, hist, equal, binmax, skip)
    return hist, equal, binmax


def _brute(values, thresholds):
    T = len(thresholds)
    hist = [0] * (T + 1)
    equal = [0] * T
    binmax = [-np.inf] * (T + 1)
    for v in values:
        k = sum(t < v for t in thresholds)
        hist[k] += 1
        if k < T and thresholds[k] == v:
            equal[k] += 1
        else:
            binmax[k] = max(binmax[k], v)
    return hist, equal, binmax


def test_bin_values_small_example():
    hist, equal, binmax = _run_values(_backend.kernels, [0.1, 0.5, 0.5, 0.9, 2.0], np.array([0.5, 1.0]))
    assert hist.tolist() == [3, 1, 1]
    assert equal.tolist() == [2, 0]
    assert binmax.tolist() == [0.1, 0.9, 2.0]


@pytest.mark.parametrize("k", [_kernels_py, compiled], ids=["python", "compiled"])
def test_shape_checks(k):
    if k is None:
        pytest.skip("compiled kernels not built")
    with pytest.raises(ValueError):
        k.bin_values(np.zeros(3), np.zeros(0), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(1))
    with pytest.raises(ValueError):
        k.bin_values(np.zeros(3), np.zeros(2), np.zeros(2, dtype=np.int64), np.zeros(2, dtype=np.int64), np.zeros(3))


scores = st.lists(
    st.one_of(st.sampled_from([-1.0, -0.5, 0.0, 0.25, 0.5, 1.0]), st.floats(-1, 1, allow_nan=False)),
    min_size=1, max_size=200,
)


@given(values=scores, thr=scores)
@settings(max_examples=200, deadline=None)
def test_python_kernel_matches_brute_force(values, thr):
    thresholds = np.unique(thr)
    got = _run_values(_kernels_py, values, thresholds)
    want = _brute(values, thresholds.tolist())
    for g, w in zip(got, want):
        assert g.tolist() == w


@needs_compiled
@given(values=scores, thr=scores)
@settings(max_examples=300, deadline=None)
def test_compiled_matches_python_values(values, thr):
    thresholds = np.unique(thr)
    a = _run_values(_kernels_py, values, thresholds)
    b = _run_values(compiled, values, thresholds)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@needs_compiled
def test_compiled_grid_edges():
    # clustered thresholds, values exactly on them and just beside them
    thresholds = np.unique(np.concatenate([np.linspace(-1, 1, 7), [0.3, 0.3 + 1e-15, 0.3 + 2e-15], [1e300]]))
    nudged = np.concatenate([np.nextafter(thresholds, np.inf), np.nextafter(thresholds, -np.inf)])
    values = np.concatenate([thresholds, nudged, [-np.inf, np.inf, -1e308, 1e308]])
    a = _run_values(_kernels_py, values, thresholds)
    b = _run_values(compiled, values, thresholds)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@needs_compiled
@pytest.mark.parametrize("r0", [0, 3, 7])
@pytest.mark.parametrize("skip", [True, False])
def test_compiled_matches_python_block(rng, r0, skip):
    block = np.round(rng.normal(size=(4, 9)), 1)
    thresholds = np.unique(np.round(rng.normal(size=12), 1))
    a = _run_block(_kernels_py, block, r0, thresholds, skip)
    b = _run_block(compiled, block, r0, thresholds, skip)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert a[0].sum() == block.size - (sum(r0 + i < 9 for i in range(4)) if skip else 0)


@needs_compiled
def test_rowwise_dot_bit_identical(rng):
    a = rng.normal(size=(50, 17))
    b = rng.normal(size=(50, 17))
    ia = rng.integers(0, 50, 40)
    ib = rng.integers(0, 50, 40)
    x = _kernels_py.rowwise_dot(a, b, ia, ib)
    y = np.asarray(compiled.rowwise_dot(a, b, ia, ib))
    np.testing.assert_array_equal(x, y)
    np.testing.assert_allclose(x, (a[ia] * b[ib]).sum(axis=1), rtol=1e-12)


def test_backend_name():
    assert _backend.NAME in ("cython", "python")


def test_fallback_can_be_forced():
    import os
    import subprocess
    import sys

    env = dict(os.environ, PERSISTPLAN_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from persistplan import _backend; print(_backend.NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"
    mod = runpy.run_path(str(path))
    assert mod["main"](["--subjects", "60", "--features", "5", "--repeat", "1"]) == 0
    assert "bin_block" in capsys.readouterr().out
