import numpy as np
import pytest

from fastrcs.datasets import load_slump
from fastrcs.lts import LtsConfig, c_step, fastlts, trimmed_rss
from fastrcs.metrics import bias, mis_rate
from fastrcs.rcs import Dataset, DegenerateDataError, subset_size_h
from fastrcs.simgen import ContaminationConfig, generate

from .conftest import regression_data


def test_config_validation():
    with pytest.raises(ValueError):
        LtsConfig(num_starts=0)
    with pytest.raises(ValueError):
        LtsConfig(num_finalists=0)
    with pytest.raises(ValueError):
        LtsConfig(alpha=0.4)


def test_c_step_fixed_point():
    x = np.arange(10.0)
    y = 2 * x + 1
    y[[8, 9]] += 50
    data = Dataset(x[:, None], y)
    current = np.arange(8)
    new, converged = c_step(current, data)
    assert converged
    assert new.tolist() == current.tolist()


def test_c_step_singular_keeps_current():
    X = np.column_stack([np.ones(8), np.arange(8.0)])
    data = Dataset(X, np.arange(8.0))
    # first column is constant, so it duplicates the intercept
    new, converged = c_step(np.arange(5), data)
    assert converged
    assert new.tolist() == list(range(5))


def test_c_step_monotone_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(8, 30))
        p = int(rng.integers(2, 4))
        data = regression_data(rng, n, p, noise=rng.uniform(0.1, 3))
        h = subset_size_h(n, p, 0.5)
        current = np.sort(rng.choice(n, h, replace=False))
        before = trimmed_rss(current, data)
        new, _ = c_step(current, data)
        assert new.size == h
        assert trimmed_rss(new, data) <= before * (1 + 1e-12) + 1e-12


def test_c_steps_drop_gross_outliers():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 10, 20)
    y = 3 - 0.5 * x + 0.1 * rng.standard_normal(20)
    y[:3] += [40.0, -35.0, 60.0]
    data = Dataset(x[:, None], y)
    h = subset_size_h(20, 2, 0.5)
    current = np.arange(h)  # starts with all three outliers inside
    for step in range(5):
        current, done = c_step(current, data, h)
        if done:
            break
    assert not set(current) & {0, 1, 2}


def test_fastlts_clean_data_bias():
    good = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((40, 2))
        y = rng.standard_normal(40)
        res = fastlts(Dataset(X, y), LtsConfig(seed=seed))
        good += bias(res.final_fit[0]) <= 1.0
    assert good >= 95


def test_fastlts_exact_fit():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 2))
    y = 1 + X @ [2.0, -1.0]
    y[20:] += rng.uniform(5, 10, 10)
    res = fastlts(Dataset(X, y))
    assert res.exact_fit
    np.testing.assert_allclose(res.final_fit[0], [1, 2, -1], atol=1e-8)
    assert res.final_fit[1] == 0.0


def test_fastlts_deterministic():
    data = regression_data(np.random.default_rng(1), 50, 3)
    a = fastlts(data, LtsConfig(seed=9))
    b = fastlts(data, LtsConfig(seed=9))
    assert a.h_star.tolist() == b.h_star.tolist()
    np.testing.assert_array_equal(a.final_fit[0], b.final_fit[0])


def test_fastlts_degenerate_raises():
    X = np.ones((10, 1))
    with pytest.raises(DegenerateDataError):
        fastlts(Dataset(X, np.arange(10.0)), LtsConfig(num_starts=3))


def test_fastlts_swallowed_by_point_mass():
    rates = []
    for rep in range(15):
        sample = generate(ContaminationConfig(p=8, epsilon=0.3, configuration="pointmass",
                                              d_x=8, nu=5, seed=rep))
        res = fastlts(sample.data, LtsConfig(seed=rep))
        rates.append(mis_rate(sample.outlier_indices, res.report.h_plus))
    assert np.median(rates) >= 0.5


def test_fastlts_slump_subset_is_mixed():
    try:
        data, is_new = load_slump()
    except FileNotFoundError as exc:
        pytest.skip(f"slump data not installed: {exc}")
    res = fastlts(data, LtsConfig(num_starts=500, seed=1))
    members = is_new[res.report.h_plus]
    assert members.any() and not members.all()
