import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from lrcov.errors import ConfigError
from lrcov.simulate import build_model2, sample_var1
from lrcov.threshold import EstimatorSpec
from lrcov.tuning import (
    BlockCvConfig,
    CvResult,
    block_cv_delta,
    block_partition,
    cv_curve,
    delta_grid,
    fit_folds,
    ordinary_cv_delta,
    random_partition,
)


def test_grid():
    g = delta_grid(10)
    assert g.size == 41
    assert_allclose(g, np.round(np.arange(41) * 0.1, 10))
    assert g[0] == 0.0 and g[-1] == 4.0
    assert BlockCvConfig().grid.size == 41


def test_partition_examples():
    folds = block_partition(10, 5, 0)
    assert [list(v) for _, v in folds] == [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]]
    for train, val in folds:
        assert_array_equal(np.sort(np.r_[train, val]), np.arange(10))
    folds = block_partition(10, 2, 1)
    assert list(folds[0][1]) == [0, 1, 2, 3, 4]
    assert list(folds[0][0]) == [6, 7, 8, 9]
    assert [len(v) for _, v in block_partition(11, 5)] == [3, 2, 2, 2, 2]


@pytest.mark.parametrize("n,k,buf", [(50, 5, 0), (53, 4, 3), (100, 5, 7), (9, 3, 1)])
def test_partition_structure(n, k, buf):
    folds = block_partition(n, k, buf)
    vals = np.concatenate([v for _, v in folds])
    assert_array_equal(vals, np.arange(n))
    lens = [len(v) for _, v in folds]
    assert max(lens) - min(lens) <= 1
    for train, val in folds:
        assert np.all(np.diff(val) == 1)
        dist = np.min(np.abs(train[:, None] - val[None, :]), axis=1)
        assert np.all(dist > buf)


def test_partition_errors():
    with pytest.raises(ConfigError):
        block_partition(9, 5)
    with pytest.raises(ConfigError):
        block_partition(10, 2, 3)
    with pytest.raises(ConfigError):
        random_partition(10, 1, 0)


def test_block_cv_selects_thresholding_for_identity():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 40))
    res = block_cv_delta(x, EstimatorSpec("proposed", "hard"))
    assert res.best_delta > 0
    assert len(res.curve) == 41
    assert res.per_fold.shape == (5, 41)
    assert 0 <= res.best_delta <= 4


def test_curve_invariant_to_column_permutation():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((120, 8))
    perm = rng.permutation(8)
    spec = EstimatorSpec("proposed", "soft")
    a = block_cv_delta(x, spec)
    b = block_cv_delta(x[:, perm], spec)
    assert_allclose(a.losses, b.losses, rtol=1e-10)


def test_curve_flat_beyond_grid():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((100, 6))
    spec = EstimatorSpec("universal", "hard")
    fits = fit_folds(x, block_partition(100, 5), spec)
    res = cv_curve(fits, spec, np.r_[delta_grid(10), 50.0, 100.0, 1000.0], 6)
    assert res.losses[-1] == res.losses[-2] == res.losses[-3]
    # ties are resolved toward the largest delta
    if res.losses.min() == res.losses[-1]:
        assert res.best_delta == 1000.0


def test_tie_breaks_to_larger_delta():
    x = np.random.default_rng(3).standard_normal((50, 3))
    spec = EstimatorSpec("universal", "hard")
    fits = fit_folds(x, block_partition(50, 5), spec)
    res = cv_curve(fits, spec, [0.0, 0.0, 0.0], 3)
    assert res.best_delta == 0.0
    res = cv_curve(fits, spec, [200.0, 300.0], 3)
    assert res.best_delta == 300.0


def test_ordinary_cv_deterministic_and_loo():
    x = np.random.default_rng(4).standard_normal((60, 5))
    spec = EstimatorSpec("cai-liu", "hard")
    a = ordinary_cv_delta(x, spec, seed=11)
    b = ordinary_cv_delta(x, spec, seed=11)
    assert a.best_delta == b.best_delta
    assert_array_equal(a.losses, b.losses)
    tiny = np.random.default_rng(5).standard_normal((8, 3))
    loo = ordinary_cv_delta(tiny, EstimatorSpec("universal", "soft"), folds=8)
    assert np.all(np.isfinite(loo.losses))


def test_ordinary_and_block_agree_on_iid():
    rng = np.random.default_rng(6)
    close = 0
    reps = 10
    for _ in range(reps):
        x = rng.standard_normal((200, 20))
        spec = EstimatorSpec("cai-liu", "hard")
        a = ordinary_cv_delta(x, spec, seed=int(rng.integers(1 << 31)))
        b = block_cv_delta(x, spec)
        close += abs(a.best_delta - b.best_delta) <= 0.1 + 1e-12
    assert close / reps >= 0.5


def test_fold_losses_use_training_rows_only():
    inst = build_model2(10)
    x = sample_var1(inst, 100, 0).data
    spec = EstimatorSpec("proposed", "hard")
    folds = block_partition(100, 5)
    fits = fit_folds(x, folds, spec)
    train, val = folds[2]
    assert fits[2].cov.n == train.size
    assert_allclose(fits[2].sigma_val, np.cov(x[val].T, bias=True), atol=1e-12)
    assert_allclose(fits[2].cov.sigma_hat, np.cov(x[train].T, bias=True), atol=1e-12)


def test_degenerate_folds_skipped_and_all_degenerate_error():
    x = np.random.default_rng(7).standard_normal((60, 3))
    x[:12] = 1.0
    spec = EstimatorSpec("proposed", "hard")
    fits = fit_folds(x, [(np.arange(12), np.arange(12, 60))] + block_partition(60, 5)[1:], spec)
    assert fits[0] is None
    res = cv_curve(fits, spec, delta_grid(), 3)
    assert res.skipped_folds == [0]
    with pytest.raises(ConfigError):
        cv_curve([None, None], spec, delta_grid(), 3)


def test_cv_result_json_roundtrip():
    x = np.random.default_rng(8).standard_normal((60, 4))
    res = block_cv_delta(x, EstimatorSpec("universal"))
    back = CvResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert back.best_delta == res.best_delta
    assert_array_equal(back.losses, res.losses)
    assert_array_equal(back.per_fold, res.per_fold)
