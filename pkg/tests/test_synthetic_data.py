import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imbtrees.synthetic_data import (
    DEFAULT_RANGES,
    Dataset,
    DgpConfig,
    generate_dataset,
    mean_true_probability,
    read_dataset_csv,
    solve_k_for_prevalence,
    true_probability,
    write_dataset_csv,
)

MIDPOINTS = [0.5 * (lo + hi) for lo, hi in DEFAULT_RANGES]
# exact-rational evaluation of the polynomial (S = 14996/625) at 40 digits, done separately
MIDPOINT_P_K15 = 0.015729805668499755


def test_zero_covariates_k1_is_one_percent():
    assert true_probability(np.zeros(10), 1.0) == pytest.approx(0.01, rel=1e-14)


def test_zero_covariates_k15():
    expected = 1.0 / (1.0 + 99.0 * math.sqrt(99.0))
    assert true_probability(np.zeros(10), 1.5) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(1.0141601474346580e-3, rel=1e-14)


def test_midpoint_value():
    assert true_probability(MIDPOINTS, 1.5) == pytest.approx(MIDPOINT_P_K15, rel=1e-13)


def test_dimension_error():
    with pytest.raises(ValueError):
        true_probability(np.zeros(9), 1.0)


def test_matrix_input_matches_rows():
    x = np.random.default_rng(0).normal(size=(5, 10))
    np.testing.assert_array_equal(true_probability(x, 0.7), [true_probability(r, 0.7) for r in x])


@given(
    x=st.lists(st.floats(-5, 5), min_size=10, max_size=10),
    k1=st.floats(-2, 5),
    dk=st.floats(0.01, 3),
)
def test_decreasing_in_k(x, k1, dk):
    p1, p2 = true_probability(x, k1), true_probability(x, k1 + dk)
    assert p1 >= p2
    if 1e-300 < p2 and p1 < 1 - 1e-12:
        assert p1 > p2


def test_config_validation():
    DgpConfig()
    with pytest.raises(ValueError):
        DgpConfig(ranges=DEFAULT_RANGES[:9])
    with pytest.raises(ValueError):
        DgpConfig(ranges=((1.0, 0.0),) + DEFAULT_RANGES[1:])
    with pytest.raises(ValueError):
        DgpConfig(coefficient=0.0)


def test_generate_determinism_and_ranges():
    a = generate_dataset(5000, 1.5, seed=3)
    b = generate_dataset(5000, 1.5, seed=3)
    assert a == b
    assert a != generate_dataset(5000, 1.5, seed=4)
    lo = np.array([r[0] for r in DEFAULT_RANGES])
    hi = np.array([r[1] for r in DEFAULT_RANGES])
    assert ((a.features >= lo) & (a.features <= hi)).all()
    np.testing.assert_array_equal(a.true_probs, true_probability(a.features, 1.5))
    assert a.n_pos + a.n_neg == a.n


def test_labels_do_not_depend_on_k_stream():
    # same uniforms drive labels for every k, so lowering k can only add positives
    lo = generate_dataset(4000, 2.0, seed=9)
    hi = generate_dataset(4000, 1.0, seed=9)
    np.testing.assert_array_equal(lo.features, hi.features)
    assert (hi.labels >= lo.labels).all()


def test_empty_dataset():
    d = generate_dataset(0, 1.5, seed=1)
    assert d.n == 0 and d.features.shape == (0, 10)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(features=np.zeros((2, 3)), labels=[0, 2])
    with pytest.raises(ValueError):
        Dataset(features=np.zeros((2, 3)), labels=[0])
    with pytest.raises(ValueError):
        Dataset(features=np.zeros((2, 3)), labels=[0, 1], true_probs=[0.5, 1.5])


def test_paper_prevalence_at_k15():
    data = generate_dataset(1_000_000, 1.5, seed=2024)
    assert abs(data.labels.mean() - 0.0208) <= 0.0015


def test_mean_true_probability():
    mean, se = mean_true_probability(1.5, 1_000_000, seed=0)
    assert abs(mean - 0.0208) <= 0.0015
    assert se < 1e-4
    assert mean_true_probability(10.0, 100_000, seed=0)[0] < 1e-6
    assert mean_true_probability(1.5, 1000, seed=5) == mean_true_probability(1.5, 1000, seed=5)


def test_standard_error_halves_with_4x_draws():
    se1 = mean_true_probability(1.5, 100_000, seed=1)[1]
    se4 = mean_true_probability(1.5, 400_000, seed=1)[1]
    assert se4 / se1 == pytest.approx(0.5, rel=0.1)


def test_empirical_prevalence_agrees_with_monte_carlo():
    data = generate_dataset(1_000_000, 1.5, seed=77)
    mean, se = mean_true_probability(1.5, 1_000_000, seed=78)
    label_se = math.sqrt(mean * (1 - mean) / data.n)
    assert abs(data.labels.mean() - mean) <= 4 * math.hypot(se, label_se)


def test_solve_k_recovers_paper_value():
    k = solve_k_for_prevalence(0.0208, n_mc=200_000, seed=0, tol=1e-5)
    assert k == pytest.approx(1.5, abs=0.02)


def test_solve_k_round_trip():
    k = solve_k_for_prevalence(0.305, n_mc=200_000, seed=3, tol=1e-6)
    assert mean_true_probability(k, 200_000, seed=3)[0] == pytest.approx(0.305, abs=1e-6)
    # fresh draws agree within Monte Carlo noise
    assert mean_true_probability(k, 1_000_000, seed=4)[0] == pytest.approx(0.305, abs=3e-3)


def test_solve_k_near_half_matches_root_of_mean():
    k = solve_k_for_prevalence(0.499, n_mc=100_000, seed=2, tol=1e-7)
    # brute-force oracle: scan a fine k grid on the same draws
    grid = np.linspace(0, 2, 20001)
    means = np.array([mean_true_probability(g, 100_000, seed=2)[0] for g in grid[::100]])
    coarse = grid[::100][np.argmin(np.abs(means - 0.499))]
    assert abs(k - coarse) <= 0.01


def test_solve_k_errors():
    with pytest.raises(ValueError):
        solve_k_for_prevalence(0.2, tol=0)
    with pytest.raises(ValueError):
        solve_k_for_prevalence(1.0)
    with pytest.raises(ValueError):
        solve_k_for_prevalence(0.999999, n_mc=1000)


def test_csv_round_trip(tmp_path):
    data = generate_dataset(500, 1.2, seed=6)
    path = tmp_path / "d.csv"
    write_dataset_csv(data, path)
    header = path.read_text().splitlines()[0]
    assert header == "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,label,true_prob"
    back = read_dataset_csv(path)
    assert back == data


def test_csv_without_true_prob(tmp_path):
    path = tmp_path / "ext.csv"
    path.write_text("x1,x2,label\n0.5,1,0\n0.25,2,1\n")
    data = read_dataset_csv(path)
    assert data.true_probs is None and data.n_features == 2
    np.testing.assert_array_equal(data.labels, [0, 1])


def test_empty_csv_has_header(tmp_path):
    path = tmp_path / "e.csv"
    write_dataset_csv(generate_dataset(0, 1.5, 0), path)
    assert path.read_text() == "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,label,true_prob\n"
    assert read_dataset_csv(path).n == 0
