import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import scores_enumerated
from persistplan.errors import DegenerateInputError, DomainError
from persistplan.featuregen import BandConfig, FeatureDataset, generate_band
from persistplan.scoring import (
    ImpostorPolicy,
    ScoreSet,
    check_subset,
    sample_pairs,
    score_dataset,
    similarity,
    whiten,
    write_scores_csv,
    zscore_params,
)

GALLERY_5x2 = [[-1.29, -0.78], [0.9, -1.48], [-0.53, 0.16], [-0.67, -0.25], [-0.22, 0.42]]
PROBE_5x2 = [[-1.46, -0.67], [0.92, -1.31], [-0.44, 0.82], [-0.94, 0.23], [-0.38, 0.04]]
# oracles.scores_enumerated(GALLERY_5x2, PROBE_5x2)
GENUINE_5x2 = [0.9879936425962302, 0.9958865329431126, 0.9754851261518717, 0.9178026811827938, 0.9790928867463456]
IMPOSTOR_5x2 = {
    (0, 1): -0.4766068634469158, (0, 2): -0.3534895311483156, (0, 3): 0.2983757621947015,
    (0, 4): -0.3731757464524263, (1, 0): -0.5321798347369481, (1, 2): -0.7197485789431033,
    (1, 3): -0.9946933040843884, (1, 4): -0.7049192224814103, (2, 0): 0.015697813614444625,
    (2, 1): -0.8043543643198892, (2, 3): 0.9037234582578646, (2, 4): 0.9706175306943657,
    (3, 0): 0.7619976269880961, (3, 1): -0.9770860263395548, (3, 2): 0.47786356065801533,
    (3, 4): 0.45919620899941266, (4, 0): -0.4188305558848051, (4, 1): -0.46774032320349296,
    (4, 2): 0.9745763242899925, (4, 3): 0.6292073494412417,
}


def _dataset(gallery, probe):
    v = np.stack([np.asarray(gallery, float), np.asarray(probe, float)], axis=2)
    return FeatureDataset(v, BandConfig(0.5, v.shape[0], v.shape[1], 0))


def test_zscore_two_point_feature():
    ds = _dataset([[-1.0], [1.0]], [[0.0], [0.0]])
    mean, sd = zscore_params(ds, [0])
    assert mean[0] == 0.0
    assert sd[0] == pytest.approx(np.sqrt(2.0))


def test_zscore_uses_gallery_only():
    ds = generate_band(BandConfig(0.5, 10_000, 3, seed=1))
    mean, sd = zscore_params(ds, [0, 1, 2])
    np.testing.assert_allclose(mean, ds.session1.mean(axis=0))
    assert np.all(np.abs(mean) < 0.05)
    # session-1 SD of the generated feature is sqrt(1 + noise variance) = sqrt(2) at ICC 0.5
    assert np.all(np.abs(sd - np.sqrt(2.0)) < 0.05)


def test_zscore_standard_normal_feature():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((10_000, 1))
    mean, sd = zscore_params(_dataset(g, g), [0])
    assert abs(mean[0]) < 0.05 and abs(sd[0] - 1.0) < 0.05


def test_zscore_constant_feature_rejected():
    ds = _dataset([[1.0], [1.0], [1.0]], [[0.0], [1.0], [2.0]])
    with pytest.raises(DegenerateInputError):
        zscore_params(ds, [0])


def test_subset_validation():
    with pytest.raises(DomainError):
        check_subset([], 3)
    with pytest.raises(DomainError):
        check_subset([0, 0], 3)
    with pytest.raises(DomainError):
        check_subset([3], 3)


def test_similarity_examples():
    assert similarity([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert similarity([1, 0], [0, 1]) == 0.0
    assert similarity([1, 2, 3], [3, 2, 1]) == pytest.approx(10 / 14, abs=1e-12)
    with pytest.raises(DegenerateInputError):
        similarity([0, 0], [1, 1])
    with pytest.raises(DomainError):
        similarity([1, 2], [1, 2, 3])


vec = arrays(np.float64, 6, elements=st.floats(-1e3, 1e3))


@settings(max_examples=100)
@given(vec, vec, st.floats(1e-3, 1e3))
def test_similarity_symmetric_and_scale_invariant(a, b, c):
    if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
        return
    s = similarity(a, b)
    assert -1.0 <= s <= 1.0
    assert similarity(b, a) == pytest.approx(s, abs=1e-12)
    assert similarity(c * a, b) == pytest.approx(s, abs=1e-12)


def test_perfect_persistence_genuine_scores_are_one():
    ds = generate_band(BandConfig(1.0, 30, 5, seed=2))
    s = score_dataset(ds, range(5))
    np.testing.assert_allclose(s.genuine, 1.0, atol=1e-12)


def test_three_subjects_give_six_impostors():
    ds = generate_band(BandConfig(0.7, 3, 4, seed=2))
    s = score_dataset(ds, range(4))
    assert s.n_impostor == 6
    assert s.materialized().impostor.shape == (6,)


def test_frozen_fixture_matches_enumeration():
    ds = _dataset(GALLERY_5x2, PROBE_5x2)
    s = score_dataset(ds, [0, 1])
    np.testing.assert_allclose(s.genuine, GENUINE_5x2, atol=1e-12)
    pairs = list(s.impostor.pairs())
    got = dict(zip(pairs, s.impostor.materialize()))
    assert set(got) == set(IMPOSTOR_5x2)
    for k, v in IMPOSTOR_5x2.items():
        assert got[k] == pytest.approx(v, abs=1e-12)


def test_frozen_fixture_oracle_is_reproducible():
    gen, imp = scores_enumerated(GALLERY_5x2, PROBE_5x2)
    np.testing.assert_allclose(gen, GENUINE_5x2, atol=1e-15)
    for k, v in imp.items():
        assert v == pytest.approx(IMPOSTOR_5x2[k], abs=1e-15)


def test_sampled_policy_pairs():
    pol = ImpostorPolicy("sampled", 50, seed=9)
    a = sample_pairs(20, pol)
    b = sample_pairs(20, pol)
    np.testing.assert_array_equal(a, b)
    assert np.all(a[:, 0] != a[:, 1])
    assert len({tuple(p) for p in a.tolist()}) == 50
    assert not np.array_equal(a, sample_pairs(20, ImpostorPolicy("sampled", 50, seed=10)))


def test_sampled_scores_match_full_cross_entries(small_band):
    full = score_dataset(small_band, range(10))
    samp = score_dataset(small_band, range(10), ImpostorPolicy("sampled", 500, seed=1))
    n = small_band.n_subjects
    mat = full.impostor.materialize()
    for (a, b), s in zip(samp.impostor_pairs, samp.impostor):
        idx = a * (n - 1) + (b if b < a else b - 1)
        assert s == pytest.approx(mat[idx], abs=1e-12)
    np.testing.assert_array_equal(full.genuine, samp.genuine)


def test_policy_validation():
    with pytest.raises(DomainError):
        ImpostorPolicy("bogus")
    with pytest.raises(DomainError):
        ImpostorPolicy("sampled")
    with pytest.raises(DomainError):
        ImpostorPolicy("sampled", 100).n_pairs(5)


def test_genuine_median_exceeds_impostor_median():
    for icc in (0.35, 0.65, 0.95):
        ds = generate_band(BandConfig(icc, 1000, 5, seed=3))
        s = score_dataset(ds, range(5))
        assert np.median(s.genuine) > np.median(s.impostor.materialize())


def test_whiten_identity_input_unchanged():
    # rows of a scaled orthonormal basis have zero mean and identity covariance
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(40, 3)))
    x = q - q.mean(axis=0)
    x = x @ np.linalg.inv(np.linalg.cholesky(np.cov(x, rowvar=False))).T
    np.testing.assert_allclose(np.cov(x, rowvar=False), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(whiten(x), x, atol=1e-8)


def test_whiten_correlated_pair():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((500, 2))
    x = np.column_stack([z[:, 0], 0.8 * z[:, 0] + 0.6 * z[:, 1]])
    w = whiten(x)
    assert w.shape == x.shape
    np.testing.assert_allclose(np.cov(w, rowvar=False), np.eye(2), atol=1e-8)


def test_whiten_scalar_feature():
    x = 2.0 * np.random.default_rng(2).standard_normal(200)
    w = whiten(x)
    assert np.var(w, ddof=1) == pytest.approx(1.0, abs=1e-10)


def test_whiten_singular_names_rank():
    x = np.random.default_rng(2).standard_normal((50, 2))
    x = np.column_stack([x, x[:, 0] + x[:, 1]])
    with pytest.raises(DegenerateInputError, match="rank 2 of 3"):
        whiten(x)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_whiten_twice_still_identity(p, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(p, p))
    x = rng.normal(size=(200, p)) @ a
    once = whiten(x)
    twice = whiten(once)
    np.testing.assert_allclose(np.cov(once, rowvar=False), np.eye(p), atol=1e-8)
    np.testing.assert_allclose(np.cov(twice, rowvar=False), np.eye(p), atol=1e-8)


def test_scores_csv(tmp_path):
    ds = _dataset(GALLERY_5x2, PROBE_5x2)
    s = score_dataset(ds, [0, 1])
    write_scores_csv(tmp_path / "g.csv", s)
    write_scores_csv(tmp_path / "all.csv", s, include_impostor=True)
    g = (tmp_path / "g.csv").read_text().splitlines()
    assert g[0] == "kind,subject_a,subject_b,score"
    assert len(g) == 6
    a = (tmp_path / "all.csv").read_text().splitlines()
    assert len(a) == 26
    assert a[6].startswith("impostor,0,1,")


def test_scoreset_from_arrays_rejects_nan():
    with pytest.raises(DomainError):
        ScoreSet.from_arrays([1.0, np.nan], [0.0])
