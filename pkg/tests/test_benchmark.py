import numpy as np
from numpy.testing import assert_array_equal

from lrcov.benchmark import BenchmarkConfig, design_for, run_benchmark, run_replication
from lrcov.simulate import SimModelSpec
from lrcov.threshold import ThresholdRule


def _cfg(**kw):
    base = dict(model=SimModelSpec("model2", 10, 80), reps=3, rules=(ThresholdRule("hard"),))
    base.update(kw)
    return BenchmarkConfig(**base)


def test_replication_seed_independent_of_reps():
    a = run_benchmark(_cfg(reps=2))
    b = run_benchmark(_cfg(reps=4))
    for key in a.replications:
        for ra, rb in zip(a.replications[key], b.replications[key][:2]):
            assert ra.loss == rb.loss
            assert_array_equal(ra.support, rb.support)


def test_threads_do_not_change_results():
    cfg = _cfg(reps=4)
    a = run_benchmark(cfg, threads=1)
    b = run_benchmark(cfg, threads=4)
    for key in a.summaries:
        assert a.summaries[key].to_dict() == b.summaries[key].to_dict()


def test_model1_design_fixed_per_configuration():
    cfg = _cfg(model=SimModelSpec("model1", 20, 80))
    inst1, _ = design_for(cfg)
    inst2, _ = design_for(_cfg(model=SimModelSpec("model1", 20, 200)))
    assert_array_equal(inst1.sigma_true, inst2.sigma_true)
    r = run_replication(cfg, inst1, 0)
    assert set(r) == {("proposed", "hard"), ("universal", "hard"), ("cai-liu", "hard")}


def test_random_competitor_split_differs():
    cfg_c = _cfg(reps=1)
    cfg_r = _cfg(reps=1, competitor_split="random")
    inst, _ = design_for(cfg_c)
    a = run_replication(cfg_c, inst, 0)
    b = run_replication(cfg_r, inst, 0)
    assert a[("proposed", "hard")].loss == b[("proposed", "hard")].loss
    assert np.isfinite(b[("cai-liu", "hard")].loss)
