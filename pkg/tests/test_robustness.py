import numpy as np
import pytest

from robust_ratio import datasets
from robust_ratio.densities import make_spec
from robust_ratio.errors import DatasetError
from robust_ratio.model import Dataset, ModelConfig, ParamPoint, Prior, classical_beta_hat
from robust_ratio.posterior import map_estimate
from robust_ratio.robustness import (SweepResult, convergence_trace, exclude,
                                     likelihood_profile_gap, outlier_counts, place_outliers,
                                     threshold_sweep)


def cfg(token):
    return ModelConfig(0.5, make_spec(token), Prior.FLAT)


def test_exclude_table2_outliers():
    d = exclude(datasets.table2(), datasets.TABLE2_OUTLIERS)
    assert d.n == 18
    full = datasets.table2()
    assert (250.2, 6.1) not in zip(d.x, d.y)
    assert (696.4, 41.1) not in zip(d.x, d.y)
    keep = [i for i in range(full.n) if i not in datasets.TABLE2_OUTLIERS]
    np.testing.assert_array_equal(d.x, full.x[keep])


def test_exclude_nothing_and_errors():
    d = datasets.table1()
    assert exclude(d, []) is d
    assert exclude(d, [datasets.TABLE1_FREE_INDEX]).n == 19
    with pytest.raises(DatasetError):
        exclude(d, range(d.n))
    with pytest.raises(DatasetError):
        exclude(d, [20])


def test_sweep_point_128():
    r = threshold_sweep([cfg("lptn")], datasets.table1(), datasets.TABLE1_FREE_INDEX, [128.0])
    b, s = r.column("lptn")
    assert (b[0], s[0]) == pytest.approx((28.6, 12.4), abs=0.05)


def test_sweep_endpoint_near_excluded():
    r = threshold_sweep([cfg("lptn")], datasets.table1(), datasets.TABLE1_FREE_INDEX, [385.0])
    b, s = r.column("lptn")
    assert abs(b[0] - 27.1) < 0.5 and abs(s[0] - 10.6) < 0.5


@pytest.fixture(scope="module")
def coarse_sweep():
    values = np.linspace(85, 385, 31)
    return threshold_sweep([cfg(t) for t in ("normal", "student", "lptn")], datasets.table1(),
                           datasets.TABLE1_FREE_INDEX, values)


def test_normal_sweep_tracks_closed_form(coarse_sweep):
    b, _ = coarse_sweep.column("normal")
    assert np.all(np.diff(b) > 0)
    for v, bh in zip(coarse_sweep.y_values, b):
        exact = classical_beta_hat(0.5, datasets.table1(v))
        assert bh == pytest.approx(exact, abs=1e-6)


def test_robust_sweep_rises_then_falls(coarse_sweep):
    b, _ = coarse_sweep.column("lptn")
    k = int(np.argmax(b))
    assert 0 < k < b.size - 1
    assert abs(coarse_sweep.y_values[k] - 128) <= 10
    assert np.all(np.diff(b[:k + 1]) >= 0)
    assert np.all(np.diff(b[k:]) <= 0)


def test_sweep_serial_matches_parallel():
    values = [85.0, 150.0, 300.0]
    configs = [cfg("lptn")]
    a = threshold_sweep(configs, datasets.table1(), 10, values, serial=True)
    b = threshold_sweep(configs, datasets.table1(), 10, values, workers=2)
    np.testing.assert_allclose(a.beta_hat, b.beta_hat, atol=1e-6)
    np.testing.assert_allclose(a.sigma_hat, b.sigma_hat, atol=1e-6)


def test_sweep_validation():
    with pytest.raises(DatasetError):
        threshold_sweep([cfg("normal")], datasets.table1(), 25, [85.0])
    with pytest.raises(DatasetError):
        threshold_sweep([cfg("normal")], datasets.table1(), 10, [90.0, 85.0])


def test_sweep_csv_header():
    r = threshold_sweep([cfg("normal")], datasets.table1(), 10, [85.0, 86.0])
    lines = r.to_csv().splitlines()
    assert lines[0] == "y_value,model,beta_hat,sigma_hat"
    assert len(lines) == 3
    assert lines[1].split(",")[1] == "normal"


def test_student_sigma_partially_robust():
    d = datasets.table1()
    r = threshold_sweep([cfg("student")], d, 10, [385.0, 770.0])
    _, s = r.column("student")
    ref = map_estimate(cfg("student"), exclude(d, [10])).sigma
    gap385, gap770 = s[0] - ref, s[1] - ref
    assert gap385 > 1.0
    assert gap770 >= gap385


def test_trace_zero_outliers():
    t = convergence_trace(cfg("lptn"), datasets.table1(), [], [], [1e2, 1e4])
    assert np.all(t.l1 == 0) and np.all(t.log_marginal_ratio == 0)


def test_trace_warns_when_outliers_dominate():
    d = Dataset([1.0, 2.0, 3.0, 4.0, 5.0], [1.1, 1.9, 3.2, 4.0, 5.1])
    assert outlier_counts(d, [0, 1], [1, 1]) == (3, 0, 2)
    # k = 3 non-outliers against p = 3 positive-slope outliers violates k > max(m, p)
    d6 = Dataset([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [1.1, 1.9, 3.2, 4.0, 5.1, 5.8])
    with pytest.warns(RuntimeWarning, match="does not exceed"):
        t = convergence_trace(cfg("lptn"), d6, [0, 1, 2], [1, 1, 1], [1e3])
    assert t.notes


def test_trace_robust_vs_normal():
    omegas = [1e2, 1e3, 1e4]
    robust = convergence_trace(cfg("lptn"), datasets.table1(), [10], [1], omegas)
    normal = convergence_trace(cfg("normal"), datasets.table1(), [10], [1], omegas)
    assert np.all(np.diff(robust.l1[1:]) < 0)
    assert np.all(np.diff(normal.l1) >= 0)
    assert normal.l1[-1] > 1.99
    assert robust.l1[-1] < 0.1
    assert np.all(np.diff(robust.log_marginal_ratio) < 0)
    assert robust.to_csv().splitlines()[0] == "omega,l1,log_marginal_ratio"


def test_place_outliers_signs():
    d = place_outliers(datasets.table1(), [0, 3], [1, -1], 1e5)
    assert d.y[0] == 1e5 and d.y[3] == -1e5


def test_likelihood_profile_gap_shrinks():
    d = datasets.table1()
    ref = map_estimate(cfg("lptn"), exclude(d, [10]))
    box = (ref.beta - 3, ref.beta + 3, ref.sigma / 2, ref.sigma * 2)
    gaps = [likelihood_profile_gap(cfg("lptn"), d, [10], [1], w, box, ref)
            for w in (1e2, 1e3, 1e4, 1e5, 1e6)]
    assert np.all(np.diff(gaps) < 0)
    normal_gaps = [likelihood_profile_gap(cfg("normal"), d, [10], [1], w, box, ref)
                   for w in (1e2, 1e4)]
    assert normal_gaps[1] > normal_gaps[0]


def test_sweep_result_threshold():
    r = SweepResult(np.array([1.0, 2.0, 3.0]), ["m"], np.array([[0.0], [2.0], [1.0]]),
                    np.ones((3, 1)))
    assert r.threshold("m") == (2.0, 1.0)
