import numpy as np
import pytest
from hypothesis import given, strategies as st

from imbtrees.calibration import (
    CalibrationMap,
    adjustment_factor,
    calibrate,
    calibrate_dataset,
    decalibrate,
)

# (score before calibration, printed value after) at beta = 0.03
PUBLISHED = [(0.984, 0.649), (0.952, 0.373), (0.012, 3.64e-4), (0.030, 9.27e-4)]

probs = st.floats(0, 1)
betas = st.floats(1e-6, 1)


@pytest.mark.parametrize("score, printed", PUBLISHED)
def test_published_pairs(score, printed):
    got = calibrate(score, 0.03)
    assert float(f"{got:.3g}") == printed


def test_published_max_within_tolerance():
    assert calibrate(0.984, 0.03) == pytest.approx(0.649, abs=5e-4)
    assert decalibrate(0.649, 0.03) == pytest.approx(0.984, abs=5e-4)


def test_identity_and_endpoints():
    p = np.linspace(0, 1, 1001)
    np.testing.assert_array_equal(calibrate(p, 1.0), p)
    np.testing.assert_array_equal(decalibrate(p, 1.0), p)
    for beta in (0.001, 0.03, 0.7):
        assert calibrate(0.0, beta) == 0.0
        assert calibrate(1.0, beta) == 1.0


def test_domain_errors():
    for bad in [(-0.1, 0.5), (1.1, 0.5), (0.5, 0.0), (0.5, 1.5), (float("nan"), 0.5)]:
        with pytest.raises(ValueError):
            calibrate(*bad)
        with pytest.raises(ValueError):
            decalibrate(*bad)
        with pytest.raises(ValueError):
            adjustment_factor(*bad)
    with pytest.raises(ValueError):
        CalibrationMap(0.0)


def test_round_trip_grid():
    grid = np.linspace(0, 1, 10_000)
    for beta in (1e-3, 0.03, 0.25, 1.0):
        assert np.max(np.abs(calibrate(decalibrate(grid, beta), beta) - grid)) <= 1e-12
        assert np.max(np.abs(decalibrate(calibrate(grid, beta), beta) - grid)) <= 1e-12


def test_adjustment_factor_values():
    assert adjustment_factor(0.0, 0.03) == 0.03
    for beta in (0.01, 0.3, 1.0):
        assert adjustment_factor(1.0, beta) == pytest.approx(1.0, abs=1e-15)
    assert adjustment_factor(0.984, 0.03) == pytest.approx(calibrate(0.984, 0.03) / 0.984, rel=1e-14)
    assert adjustment_factor(0.984, 0.03) == pytest.approx(0.659, abs=5e-4)


@given(p=probs, beta=betas)
def test_factor_consistency(p, beta):
    assert calibrate(p, beta) == pytest.approx(p * adjustment_factor(p, beta), abs=1e-12)
    f = adjustment_factor(p, beta)
    assert beta - 1e-15 <= f <= 1 + 1e-15


@given(p=probs, beta=betas)
def test_contraction_below_identity(p, beta):
    c = calibrate(p, beta)
    assert 0 <= c <= p
    if 1e-9 < p < 1 - 1e-9 and beta < 1 - 1e-9:
        assert c < p


@given(a=probs, b=probs, beta=st.floats(1e-3, 0.999))
def test_monotone_in_score(a, b, beta):
    lo, hi = sorted((a, b))
    assert calibrate(lo, beta) <= calibrate(hi, beta)
    if hi - lo > 1e-9:
        assert calibrate(lo, beta) < calibrate(hi, beta)


@given(p=st.floats(1e-6, 1 - 1e-6), b1=st.floats(1e-3, 1), b2=st.floats(1e-3, 1))
def test_monotone_in_beta(p, b1, b2):
    lo, hi = sorted((b1, b2))
    assert calibrate(p, lo) <= calibrate(p, hi)
    if hi - lo > 1e-6:
        assert calibrate(p, lo) < calibrate(p, hi)


def test_factor_flat_near_zero():
    beta = 0.03
    h = 1e-6
    slope = (adjustment_factor(h, beta) - adjustment_factor(0.0, beta)) / h
    assert slope == pytest.approx(beta * (1 - beta), rel=1e-4)
    grid = np.linspace(0, 1, 2001)
    assert (np.diff(adjustment_factor(grid, beta)) > 0).all()


def test_ratio_distortion():
    beta = 0.03
    grid = np.linspace(1e-4, 0.999, 400)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    mask = a < b
    post = calibrate(b[mask], beta) / calibrate(a[mask], beta)
    assert (post >= b[mask] / a[mask] * (1 - 1e-12)).all()
    small_a, small_b = 1e-5, 2e-5
    assert calibrate(small_b, beta) / calibrate(small_a, beta) == pytest.approx(2.0, rel=1e-4)


def test_calibrate_dataset():
    out, est = calibrate_dataset(np.zeros(10), 0.03)
    assert est == 0.0 and (out == 0).all()
    out, est = calibrate_dataset([0.984, 0.012], 0.03)
    assert est == pytest.approx((0.649 + 3.64e-4) / 2, abs=5e-4)
    q = 0.0123
    _, est = calibrate_dataset(np.full(50, decalibrate(q, 0.2)), 0.2)
    assert est == pytest.approx(q, abs=1e-15)
    with pytest.raises(ValueError):
        calibrate_dataset([], 0.5)


def test_map_object():
    m = CalibrationMap(0.03)
    assert m(0.984) == calibrate(0.984, 0.03)
    assert m.inverse(m(0.3)) == pytest.approx(0.3, abs=1e-15)
    assert m.factor(0.0) == 0.03
