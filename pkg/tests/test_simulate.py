import math

import numpy as np
import pytest

from varireg.errors import EmptySample, NotRankOne
from varireg.simulate import (
    IdentityWarp,
    LatentDraw,
    LatentModelConfig,
    SineMixtureWarp,
    WarpLawConfig,
    counterexample_pair,
    make_truth_bundle,
    observe,
    sample_latent,
    sample_warp,
    substream,
    true_variation_cdf,
)
from varireg.variation import DiscreteCurve


def test_substreams_disjoint_and_reproducible():
    a1 = substream(5, 0).random(4)
    a2 = substream(5, 0).random(4)
    b = substream(5, 1).random(4)
    np.testing.assert_array_equal(a1, a2)
    assert not np.array_equal(a1, b)


# --- warps --------------------------------------------------------------------

def test_warp_all_zero_frequencies_is_identity():
    warp = SineMixtureWarp([0, 0], [0.4, 0.6], beta=1.01)
    t = np.linspace(0.0, 1.0, 101)
    np.testing.assert_array_equal(warp(t), t)


def test_warp_slope_bound_beta():
    beta = 1.01
    cfg = WarpLawConfig(beta=beta)
    t = np.linspace(0.0, 1.0, 10_001)
    for stream in range(40):
        warp = sample_warp(cfg, substream(11, stream))
        slopes = np.diff(warp(t)) / np.diff(t)
        assert slopes.min() >= (1.0 - 1.0 / beta) - 1e-6
        assert slopes.min() > 0.0


def test_warp_inverse_correctness():
    cfg = WarpLawConfig()
    t = np.linspace(0.0, 1.0, 1001)
    for stream in range(10):
        warp = sample_warp(cfg, substream(3, stream))
        assert np.abs(warp(warp.inverse(t)) - t).max() <= 1e-10


def test_warp_mean_is_identity_monte_carlo():
    cfg = WarpLawConfig()
    n = 100_000
    pts = np.array([0.25, 0.5, 0.75])
    acc = np.zeros((n, 3))
    for i in range(n):
        warp = sample_warp(cfg, substream(99, i))
        acc[i] = warp(pts)
    mean = acc.mean(axis=0)
    se = acc.std(axis=0, ddof=1) / math.sqrt(n)
    assert (np.abs(mean - pts) <= 3.0 * se + 1e-12).all()


def test_warp_endpoints():
    cfg = WarpLawConfig()
    for stream in range(20):
        warp = sample_warp(cfg, substream(123, stream))
        assert warp(0.0) == 0.0
        assert abs(warp(1.0) - 1.0) <= 1e-12


# --- latent models ---------------------------------------------------------------

def test_model1_zero_coefficient_gives_zero_curve():
    cfg = LatentModelConfig("model1")
    draw = LatentDraw([0.0], cfg.basis())
    t = np.linspace(0.0, 1.0, 11)
    np.testing.assert_array_equal(draw(t), np.zeros(11))


def test_model2_phi_value():
    cfg = LatentModelConfig("model2")
    phi = cfg.basis()[0]
    assert phi(np.array([0.25]))[0] == pytest.approx(-math.sqrt(2) / 2, abs=1e-12)


def test_rank2_curve_at_zero():
    cfg = LatentModelConfig("rank2")
    draw = sample_latent(cfg, substream(7, 0))
    xi2 = draw.coefficients[1]
    assert draw(np.array([0.0]))[0] == pytest.approx(xi2 * math.sqrt(2), abs=1e-12)


def test_model1_distribution_sanity():
    n = 100_000
    draws = np.array(
        [sample_latent(LatentModelConfig("model1"), substream(31, i)).coefficients[0] for i in range(n)]
    )
    se_mean = draws.std(ddof=1) / math.sqrt(n)
    assert abs(draws.mean() - 1.5) <= 4 * se_mean
    var = draws.var(ddof=1)
    se_var = math.sqrt(2.0 / (n - 1))  # Var of sample variance for N(mu,1)
    assert abs(var - 1.0) <= 4 * se_var


def test_model2_distribution_sanity():
    n = 100_000
    draws = np.array(
        [sample_latent(LatentModelConfig("model2"), substream(32, i)).coefficients[0] for i in range(n)]
    )
    # 1 + Beta(2,2): mean 1.5, variance 1/20
    se_mean = draws.std(ddof=1) / math.sqrt(n)
    assert abs(draws.mean() - 1.5) <= 4 * se_mean
    assert draws.min() >= 1.0 and draws.max() <= 2.0
    assert draws.var(ddof=1) == pytest.approx(0.05, rel=0.05)


def test_breakdown_coefficients():
    cfg = LatentModelConfig("breakdown", c=2.0, r_scale=0.01, rank=3)
    n = 20_000
    coefs = np.array(
        [sample_latent(cfg, substream(33, i)).coefficients for i in range(n)]
    )
    assert coefs.shape[1] == 3
    assert coefs[:, 0].mean() == pytest.approx(6.0, abs=0.05)
    assert coefs[:, 1].mean() == pytest.approx(-2.0, abs=0.05)
    assert coefs[:, 1].var(ddof=1) == pytest.approx(0.01, rel=0.1)
    assert coefs[:, 2].var(ddof=1) == pytest.approx(0.0001, rel=0.1)


# --- observe -----------------------------------------------------------------------

def test_observe_identity_noiseless():
    cfg = LatentModelConfig("model1")
    draw = sample_latent(cfg, substream(1, 0))
    grid = np.linspace(0.0, 1.0, 21)
    obs = observe(draw, IdentityWarp(), grid, 0.0, substream(1, 1))
    np.testing.assert_array_equal(obs.values, draw(grid))


def test_observe_seeded_reproducible():
    cfg = LatentModelConfig("model1")
    draw = sample_latent(cfg, substream(2, 0))
    warp = sample_warp(WarpLawConfig(), substream(2, 1))
    grid = np.linspace(0.0, 1.0, 31)
    a = observe(draw, warp, grid, 0.2, substream(2, 2))
    b = observe(draw, warp, grid, 0.2, substream(2, 2))
    np.testing.assert_array_equal(a.values, b.values)


def test_observe_noise_bound():
    cfg = LatentModelConfig("model2")
    draw = sample_latent(cfg, substream(3, 0))
    warp = sample_warp(WarpLawConfig(), substream(3, 1))
    grid = np.linspace(0.0, 1.0, 101)
    clean = observe(draw, warp, grid, 0.0, substream(3, 2))
    noisy = observe(draw, warp, grid, 0.2, substream(3, 2))
    assert np.abs(noisy.values - clean.values).max() <= 0.2


# --- true variation cdf -------------------------------------------------------------

def test_true_cdf_linear_override():
    cfg = LatentModelConfig("model1")
    cdf = true_variation_cdf(cfg, 2001, phi=lambda t: t)
    t = np.linspace(0.0, 1.0, 137)
    assert np.abs(np.asarray(cdf(t)) - t).max() <= 1.0 / 2000 + 1e-12


def test_true_cdf_quadratic_override():
    cfg = LatentModelConfig("model1")
    dense_r = 4001
    cdf = true_variation_cdf(cfg, dense_r, phi=lambda t: t**2)
    t = np.linspace(0.0, 1.0, 137)
    assert np.abs(np.asarray(cdf(t)) - t**2).max() <= 2.0 / dense_r + 1e-9


def test_true_cdf_model1_quadrature_oracle():
    cfg = LatentModelConfig("model1")
    cdf = true_variation_cdf(cfg, 20_001)
    # independent oracle: 1e6-point trapezoid integration of |phi'|
    t = np.linspace(0.0, 1.0, 1_000_001)
    dphi = np.abs(-2 * np.pi * np.sin(2 * np.pi * t - np.pi) * np.exp(np.cos(2 * np.pi * t - np.pi)))
    cum = np.concatenate(([0.0], np.cumsum((dphi[1:] + dphi[:-1]) / 2.0 * np.diff(t))))
    oracle = cum / cum[-1]
    assert abs(cdf(0.5) - oracle[500_000]) <= 1e-3
    assert cdf(0.5) == pytest.approx(0.5, abs=1e-3)  # symmetry of the template
    for x in (0.1, 0.3, 0.7, 0.9):
        assert abs(cdf(x) - oracle[int(x * 1_000_000)]) <= 1e-3


def test_true_cdf_not_rank_one():
    with pytest.raises(NotRankOne):
        true_variation_cdf(LatentModelConfig("rank2"), 100)


# --- counterexample -----------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("M", [2.0, 10.0])
def test_counterexample_identity(k, M):
    t = np.linspace(0.0, 1.0, 10_001)
    for stream in range(20):
        x_fn, y_fn, warp = counterexample_pair(k, M, substream(77, stream))
        lhs = y_fn(warp.inverse(t))
        assert np.abs(lhs - x_fn(t)).max() <= 1e-8


def test_counterexample_center_draw_trivial():
    x_fn, y_fn, warp = counterexample_pair(1, 2.0, substream(5, 0))
    warp.u = 0.5  # force the centered draw
    t = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(warp(t), t, atol=1e-15)
    # coefficient 2-4u vanishes: rebuild y with u=0.5 via the identity
    assert warp(0.0) == 0.0 and warp(1.0) == 1.0


def test_counterexample_endpoints():
    for stream in range(5):
        _, _, warp = counterexample_pair(2, 3.0, substream(6, stream))
        assert warp(0.0) == 0.0
        assert abs(warp(1.0) - 1.0) <= 1e-12


# --- truth bundles ---------------------------------------------------------------------

def test_bundle_empty_raises():
    with pytest.raises(EmptySample):
        make_truth_bundle(LatentModelConfig("model1"), WarpLawConfig(), 0, seed=1)


def test_bundle_seed_reproducible():
    cfg = LatentModelConfig("model1", grid_size=31)
    a = make_truth_bundle(cfg, WarpLawConfig(), 4, seed=9)
    b = make_truth_bundle(cfg, WarpLawConfig(), 4, seed=9)
    for ca, cb in zip(a.observed, b.observed):
        np.testing.assert_array_equal(ca.values, cb.values)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)


def test_bundle_internal_consistency():
    cfg = LatentModelConfig("model1", grid_size=51)
    bundle = make_truth_bundle(cfg, WarpLawConfig(), 6, seed=10)
    for i in range(6):
        draw = LatentDraw(bundle.coefficients[i], cfg.basis())
        inv = bundle.warps[i].inverse(bundle.grid)
        np.testing.assert_allclose(
            bundle.observed[i].values, draw(inv), rtol=0, atol=1e-10
        )
