import numpy as np
import pytest
from hypothesis import given, strategies as st

from varireg.errors import AllCandidatesSingular, EmptyWindow
from varireg.smoothing import (
    EPANECHNIKOV,
    SmootherConfig,
    default_loocv_candidates,
    local_poly,
    loocv_bandwidth,
    monotone_smooth_warp,
    nadaraya_watson,
)
from varireg.variation import DiscreteCurve

from conftest import random_curve


def test_kernel_shape():
    u = np.linspace(-1.5, 1.5, 10001)
    k = EPANECHNIKOV(u)
    assert (k >= 0).all()
    np.testing.assert_allclose(k, EPANECHNIKOV(-u))
    assert (k[np.abs(u) >= 1.0] == 0).all()
    # composite trapezoid on a quadratic carries error (b-a)h^2|f''|/12 ~ 1e-8
    support = np.linspace(-1.0, 1.0, 10_000)
    integral = np.trapezoid(EPANECHNIKOV(support), support)
    assert integral == pytest.approx(1.0, abs=2e-8)


def test_config_validation():
    with pytest.raises(ValueError):
        SmootherConfig(bandwidth=0.0)
    with pytest.raises(ValueError):
        SmootherConfig(bandwidth=0.1, degree=1, deriv_order=1)
    SmootherConfig(bandwidth=0.1, degree=2, deriv_order=1)


# --- Nadaraya-Watson --------------------------------------------------------

def test_nw_constant():
    grid = np.linspace(0.0, 1.0, 21)
    curve = DiscreteCurve(grid, np.full(21, 3.25))
    cfg = SmootherConfig(bandwidth=0.13)
    out = nadaraya_watson(curve, cfg, np.linspace(0.0, 1.0, 55))
    np.testing.assert_allclose(out, 3.25, rtol=1e-14)


def test_nw_single_point_window():
    grid = np.linspace(0.0, 1.0, 11)
    values = np.sin(3 * grid) + grid
    curve = DiscreteCurve(grid, values)
    cfg = SmootherConfig(bandwidth=0.04)  # below half the gap of 0.1
    out = nadaraya_watson(curve, cfg, grid)
    np.testing.assert_array_equal(out, values)


def test_nw_symmetric_window_mean():
    grid = np.array([0.0, 0.4, 0.5, 0.6, 1.0])
    values = np.array([9.0, 2.0, 5.0, 4.0, -3.0])
    curve = DiscreteCurve(grid, values)
    cfg = SmootherConfig(bandwidth=0.15)
    out = nadaraya_watson(curve, cfg, np.array([0.5]))
    # symmetric neighbors at +-0.1 get equal weight; the center dominates but
    # the weighted mean of {2,5,4} with symmetric off-center weights is
    # 5*w0 + (2+4)*w1 over w0+2*w1
    w0 = EPANECHNIKOV(np.array([0.0]))[0]
    w1 = EPANECHNIKOV(np.array([0.1 / 0.15]))[0]
    expected = (5.0 * w0 + (2.0 + 4.0) * w1) / (w0 + 2 * w1)
    assert out[0] == pytest.approx(expected, rel=1e-13)


def test_nw_empty_window_error():
    grid = np.linspace(0.0, 1.0, 5)
    curve = DiscreteCurve(grid, grid)
    cfg = SmootherConfig(bandwidth=0.05)
    with pytest.raises(EmptyWindow) as err:
        nadaraya_watson(curve, cfg, np.array([0.125]))
    assert err.value.suggested_bandwidth > 0.05


def test_nw_convex_combination(rng):
    for _ in range(20):
        curve = random_curve(rng)
        cfg = SmootherConfig(bandwidth=max(2 * curve.max_gap, 0.05))
        out = nadaraya_watson(curve, cfg, np.linspace(0.0, 1.0, 67))
        assert out.min() >= curve.values.min() - 1e-12
        assert out.max() <= curve.values.max() + 1e-12


def test_nw_translation_equivariance(rng):
    curve = random_curve(rng)
    cfg = SmootherConfig(bandwidth=0.2)
    pts = np.linspace(0.0, 1.0, 31)
    base = nadaraya_watson(curve, cfg, pts)
    shifted = nadaraya_watson(DiscreteCurve(curve.grid, curve.values + 7.5), cfg, pts)
    np.testing.assert_allclose(shifted, base + 7.5, rtol=0, atol=1e-12)


# --- local polynomial -------------------------------------------------------

def test_local_linear_reproduces_line():
    grid = np.linspace(0.0, 1.0, 41)
    values = 2.5 * grid - 0.7
    curve = DiscreteCurve(grid, values)
    cfg = SmootherConfig(bandwidth=0.11, degree=1, deriv_order=0)
    pts = np.linspace(0.0, 1.0, 101)  # includes both boundaries
    out = local_poly(curve, cfg, pts)
    np.testing.assert_allclose(out, 2.5 * pts - 0.7, atol=1e-12)


def test_local_quadratic_derivative_exact():
    grid = np.linspace(0.0, 1.0, 51)
    q = lambda t: 1.2 * t**2 - 0.4 * t + 0.3
    dq = lambda t: 2.4 * t - 0.4
    curve = DiscreteCurve(grid, q(grid))
    cfg = SmootherConfig(bandwidth=0.09, degree=2, deriv_order=1)
    pts = np.linspace(0.0, 1.0, 67)
    out = local_poly(curve, cfg, pts)
    np.testing.assert_allclose(out, dq(pts), atol=1e-10)


def test_local_poly_constant_derivative_zero():
    grid = np.linspace(0.0, 1.0, 25)
    curve = DiscreteCurve(grid, np.full(25, 4.0))
    cfg = SmootherConfig(bandwidth=0.2, degree=2, deriv_order=1)
    out = local_poly(curve, cfg, np.linspace(0.0, 1.0, 11))
    np.testing.assert_allclose(out, 0.0, atol=1e-11)


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_local_poly_polynomial_reproduction(seed, degree):
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal(degree + 1)
    grid = np.linspace(0.0, 1.0, 61)
    values = np.polyval(coef, grid)
    curve = DiscreteCurve(grid, values)
    cfg = SmootherConfig(bandwidth=0.08, degree=degree, deriv_order=0)
    pts = np.linspace(0.0, 1.0, 41)
    out = local_poly(curve, cfg, pts)
    scale = max(np.abs(values).max(), 1.0)
    np.testing.assert_allclose(out, np.polyval(coef, pts), atol=1e-13 * 100 * scale)


def test_local_poly_deriv_translation_invariant(rng):
    curve = random_curve(rng, r=40)
    cfg = SmootherConfig(bandwidth=0.2, degree=2, deriv_order=1)
    pts = np.linspace(0.0, 1.0, 21)
    base = local_poly(curve, cfg, pts)
    shifted = local_poly(DiscreteCurve(curve.grid, curve.values + 11.0), cfg, pts)
    np.testing.assert_allclose(shifted, base, atol=1e-9)


# --- LOOCV -------------------------------------------------------------------

def test_loocv_single_candidate():
    grid = np.linspace(0.0, 1.0, 31)
    curve = DiscreteCurve(grid, np.sin(2 * np.pi * grid))
    assert loocv_bandwidth(curve, 1, [0.2]) == 0.2


def test_loocv_noiseless_prefers_small():
    grid = np.linspace(0.0, 1.0, 101)
    curve = DiscreteCurve(grid, np.sin(2 * np.pi * grid))
    candidates = [0.05, 0.1, 0.2, 0.4]
    assert loocv_bandwidth(curve, 1, candidates) == 0.05


def test_loocv_noise_increases_bandwidth():
    grid = np.linspace(0.0, 1.0, 101)
    smooth = np.sin(2 * np.pi * grid)
    rng = np.random.default_rng(7)
    noisy = rng.standard_normal(grid.size)
    candidates = list(default_loocv_candidates(DiscreteCurve(grid, smooth)))
    h_smooth = loocv_bandwidth(DiscreteCurve(grid, smooth), 1, candidates)
    h_noisy = loocv_bandwidth(DiscreteCurve(grid, noisy), 1, candidates)
    assert h_noisy > h_smooth


def test_loocv_all_singular():
    grid = np.linspace(0.0, 1.0, 11)
    curve = DiscreteCurve(grid, grid)
    with pytest.raises(AllCandidatesSingular):
        loocv_bandwidth(curve, 2, [0.01])  # window holds self only


# --- monotone warp smoothing --------------------------------------------------

def test_monotone_smooth_identity():
    t = np.linspace(0.0, 1.0, 101)
    out_t, out_v = monotone_smooth_warp(t, t, n_knots=11)
    assert np.abs(out_v - out_t).max() <= 1e-12


def test_monotone_smooth_two_points():
    out_t, out_v = monotone_smooth_warp([0.0, 1.0], [0.0, 1.0], n_knots=11)
    assert np.abs(out_v - out_t).max() <= 1e-12


def test_monotone_smooth_close_to_analytic():
    t = np.linspace(0.0, 1.0, 101)
    warp = t - 0.1 * np.sin(2 * np.pi * t)
    out_t, out_v = monotone_smooth_warp(t, warp, n_knots=11)
    truth = out_t - 0.1 * np.sin(2 * np.pi * out_t)
    assert np.abs(out_v - truth).max() <= 0.02


@given(st.integers(0, 2**32 - 1))
def test_monotone_smooth_output_monotone(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(5, 40))
    t = np.unique(np.concatenate(([0.0, 1.0], rng.random(k))))
    increments = rng.random(t.size - 1)
    v = np.concatenate(([0.0], np.cumsum(increments)))
    v /= v[-1]
    out_t, out_v = monotone_smooth_warp(t, v, n_knots=int(rng.integers(2, 15)))
    dense = np.interp(np.linspace(0.0, 1.0, 10_000), out_t, out_v)
    assert (np.diff(dense) >= -1e-12).all()
    assert out_v[0] == 0.0 and out_v[-1] == 1.0
