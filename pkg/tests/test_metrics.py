import numpy as np
import pytest
from numpy.testing import assert_array_equal

from lrcov.errors import ConfigError
from lrcov.metrics import (
    Replication,
    aggregate,
    format_cell,
    heatmap_pgm,
    spectral_loss,
    support_stats,
)

from oracles import jacobi_eigenvalues


def test_spectral_loss():
    a = np.eye(3)
    assert spectral_loss(a, a) == 0.0
    assert spectral_loss(np.diag([1.5, 0.8]), np.eye(2)) == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    m = rng.standard_normal((6, 6))
    e, t = m + m.T, np.eye(6)
    assert spectral_loss(e, t) == pytest.approx(np.max(np.abs(jacobi_eigenvalues(e - t))), rel=1e-10)
    with pytest.raises(ConfigError):
        spectral_loss(np.eye(2), np.eye(3))


def test_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b, c = ((m + m.T) for m in rng.standard_normal((3, 5, 5)))
        assert spectral_loss(a, c) <= spectral_loss(a, b) + spectral_loss(b, c) + 1e-9


def test_support_examples():
    truth = np.eye(4, dtype=bool)
    truth[0, 1] = truth[1, 0] = truth[2, 3] = truth[3, 2] = True
    s = support_stats(truth, truth)
    assert (s.tpr, s.fpr, s.exact_recovery) == (1.0, 0.0, True)

    s = support_stats(np.ones((3, 3), bool), np.eye(3, dtype=bool))
    assert s.fpr == 1.0 and s.tpr is None and not s.exact_recovery

    est = np.eye(4, dtype=bool)
    est[0, 1] = est[1, 0] = True  # both true
    est[2, 3] = True  # one true, its mirror missed
    est[0, 2] = True  # one false
    s = support_stats(est, truth)
    assert (s.tp, s.fn, s.fp, s.tn) == (3, 1, 1, 7)
    assert s.tpr == 0.75
    assert s.fpr == pytest.approx(1 / 8)


def test_exact_recovery_includes_diagonal():
    truth = np.eye(3, dtype=bool)
    est = truth.copy()
    est[1, 1] = False
    s = support_stats(est, truth)
    assert s.tpr is None and s.fpr == 0.0 and not s.exact_recovery


def test_rates_permutation_invariant():
    rng = np.random.default_rng(2)
    t = rng.random((8, 8)) < 0.3
    t = t | t.T
    e = rng.random((8, 8)) < 0.3
    e = e | e.T
    perm = rng.permutation(8)
    a = support_stats(e, t)
    b = support_stats(e[np.ix_(perm, perm)], t[np.ix_(perm, perm)])
    assert (a.tpr, a.fpr) == (b.tpr, b.fpr)


def _rep(loss, support, truth):
    return Replication(loss, support_stats(support, truth), support)


def test_aggregate():
    truth = np.eye(2, dtype=bool)
    one = aggregate([_rep(1.0, truth, truth)])
    assert one.se_loss == 0.0 and one.reps == 1
    two = aggregate([_rep(1.0, truth, truth), _rep(3.0, np.ones((2, 2), bool), truth)])
    assert two.mean_loss == 2.0
    assert two.se_loss == pytest.approx(np.sqrt(2))
    assert two.undefined_tpr == 2 and two.mean_tpr is None
    assert two.mean_fpr == 0.5
    assert_array_equal(two.freq, [[2, 1], [1, 2]])
    same = aggregate([_rep(1.0, truth, truth)] * 4)
    assert same.se_loss == 0.0
    assert set(np.unique(same.freq)) <= {0, 4}
    with pytest.raises(ConfigError):
        aggregate([])


def test_heatmap_and_cell_format():
    pgm = heatmap_pgm(np.array([[100, 0], [50, 100]]), 100)
    assert pgm.splitlines() == ["P2", "2 2", "255", "0 255", "128 0"]
    assert format_cell(7.3512, 1.7449) == "7.35(1.74)"
    assert format_cell(None, None) == "NA"
