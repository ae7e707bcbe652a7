"""Seeded generators: warp laws, latent models, noisy observation, and the
analytic two-process construction used as a registration oracle.

All randomness flows through counter-based per-curve substreams keyed by
(seed, stream index), so results are independent of evaluation order and
thread count.  Scalar distributions are built from uniform primitives
(Box-Muller normals, Poisson by inversion, Beta(2,2) as the median of three
uniforms) so streams are stable across library versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySample, NotRankOne
from .variation import DiscreteCurve, StepCdf, discrete_variation_cdf

_SQRT2 = math.sqrt(2.0)
_BISECT_ITERS = 52  # |interval| <= 2^-52 < 1e-12 after bisection


def substream(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for one (seed, stream) pair."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be nonnegative")
    key = ((int(seed) % 2**64) << 64) | (int(stream) % 2**64)
    return np.random.Generator(np.random.Philox(key=key))


def _normal(rng, mean=0.0, sd=1.0) -> float:
    u1 = 1.0 - rng.random()
    u2 = rng.random()
    return mean + sd * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _poisson(rng, lam: float) -> int:
    u = rng.random()
    p = math.exp(-lam)
    cum = p
    k = 0
    while u >= cum and k < 500:
        k += 1
        p *= lam / k
        cum += p
    return k


def _beta22(rng) -> float:
    u = sorted(rng.random(3))
    return float(u[1])


class AnalyticWarp:
    """Strictly increasing homeomorphism of [0,1], given in closed form.

    The inverse is computed by bracketed bisection, accurate to 1e-12.
    """

    def __call__(self, t):
        raise NotImplementedError

    def inverse(self, t):
        t = np.asarray(t, dtype=float)
        lo = np.zeros_like(t)
        hi = np.ones_like(t)
        for _ in range(_BISECT_ITERS):
            mid = (lo + hi) / 2.0
            above = self(mid) >= t
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        out = (lo + hi) / 2.0
        return out if out.ndim else float(out)

    def sample(self, grid) -> np.ndarray:
        return np.asarray(self(np.asarray(grid, dtype=float)))


class IdentityWarp(AnalyticWarp):
    def __call__(self, t):
        return np.asarray(t, dtype=float)

    def inverse(self, t):
        return np.asarray(t, dtype=float)


class SineMixtureWarp(AnalyticWarp):
    """Convex mixture of the maps t - sin(pi*k*t) / (|k|*pi*beta).

    Each component fixes 0 and 1 and has slope at least 1 - 1/beta, and so
    does the mixture; the zero-frequency component is the identity.
    """

    def __init__(self, ks, weights, beta: float):
        self.ks = np.asarray(ks, dtype=int)
        self.weights = np.asarray(weights, dtype=float)
        self.beta = float(beta)
        if self.ks.shape != self.weights.shape:
            raise ValueError("need one weight per component")
        if abs(self.weights.sum() - 1.0) > 1e-9 or (self.weights < 0).any():
            raise ValueError("weights must be a convex combination")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = t.astype(float).copy()
        for k, w in zip(self.ks, self.weights):
            if k != 0:
                out = out - w * np.sin(np.pi * k * t) / (abs(k) * np.pi * self.beta)
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        for k, w in zip(self.ks, self.weights):
            if k != 0:
                out = out - w * np.sign(k) * np.cos(np.pi * k * t) / self.beta
        return out


class SineWarp(AnalyticWarp):
    """t + amplitude * sin(frequency * pi * t); fixes the endpoints."""

    def __init__(self, amplitude: float, frequency: int):
        self.amplitude = float(amplitude)
        self.frequency = int(frequency)
        if abs(amplitude) * frequency * math.pi >= 1.0:
            raise ValueError("amplitude too large for monotonicity")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = t + self.amplitude * np.sin(self.frequency * np.pi * t)
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class WarpLawConfig:
    """Random sine-mixture warp law with Poisson-signed frequencies."""

    family: str = "sine_mixture"
    J: int = 2
    beta: float = 1.01
    poisson_rate: float = 3.0

    def __post_init__(self):
        if self.family != "sine_mixture":
            raise ValueError(f"unknown warp family {self.family!r}")
        if self.J < 2:
            raise ValueError("mixture size J must be at least 2")
        if not self.beta > 1.0:
            raise ValueError("beta must exceed 1 (keeps warps strictly increasing)")


def sample_warp(cfg: WarpLawConfig, rng) -> SineMixtureWarp:
    """One random warp: signed-Poisson frequencies mixed by uniform spacings."""
    ks = []
    for _ in range(cfg.J):
        v1 = _poisson(rng, cfg.poisson_rate)
        sign = 1 if rng.random() < 0.5 else -1
        ks.append(v1 * sign)
    u = np.sort(rng.random(cfg.J - 1))
    bounds = np.concatenate(([0.0], u, [1.0]))
    weights = np.diff(bounds)
    return SineMixtureWarp(ks, weights, cfg.beta)


_RANK_BASES = {
    "rank1_model1": [lambda t: np.exp(np.cos(2 * np.pi * t - np.pi))],
    "rank1_model2": [lambda t: (1.0 - (t - 0.25) ** 2) * np.cos(3 * np.pi * t)],
}


def _phi1(t):
    return _SQRT2 * np.sin(np.pi * t)


def _phi2(t):
    return _SQRT2 * np.cos(2 * np.pi * t)


def _phi3(t):
    return _SQRT2 * np.cos(4 * np.pi * t)


MODEL_NAMES = ("model1", "model2", "rank2", "rank3", "breakdown")


@dataclass(frozen=True)
class LatentModelConfig:
    """Named latent-process family with its observation design."""

    name: str
    grid_size: int = 101
    noise_halfwidth: float = 0.0
    c: float = None          # breakdown family only
    r_scale: float = None    # breakdown family only
    rank: int = 2            # breakdown family only: 2 or 3

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}; choose from {MODEL_NAMES}")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        if self.noise_halfwidth < 0:
            raise ValueError("noise_halfwidth must be nonnegative")
        if self.name == "breakdown":
            if self.c is None or self.r_scale is None:
                raise ValueError("breakdown model needs c and r_scale")
            if self.rank not in (2, 3):
                raise ValueError("breakdown rank must be 2 or 3")

    @property
    def is_rank_one(self) -> bool:
        return self.name in ("model1", "model2")

    def basis(self):
        if self.name == "model1":
            return list(_RANK_BASES["rank1_model1"])
        if self.name == "model2":
            return list(_RANK_BASES["rank1_model2"])
        if self.name == "rank2":
            return [_phi1, _phi2]
        if self.name == "rank3":
            return [_phi1, _phi2, _phi3]
        if self.rank == 2:
            return [_phi1, _phi2]
        return [_phi1, _phi2, _phi3]


class LatentDraw:
    """One latent curve: fixed coefficients against a deterministic basis."""

    def __init__(self, coefficients, basis):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.basis = list(basis)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for xi, phi in zip(self.coefficients, self.basis):
            out = out + xi * phi(t)
        return out


def sample_latent(cfg: LatentModelConfig, rng) -> LatentDraw:
    """Draw one latent curve from the configured family."""
    if cfg.name == "model1":
        coef = [_normal(rng, 1.5, 1.0)]
    elif cfg.name == "model2":
        coef = [1.0 + _beta22(rng)]
    elif cfg.name == "rank2":
        coef = [_normal(rng, 1.5, 1.0), _normal(rng, -0.5, math.sqrt(0.15))]
    elif cfg.name == "rank3":
        coef = [
            _normal(rng, 1.5, 1.0),
            _normal(rng, -0.5, math.sqrt(0.15)),
            _normal(rng, 0.5, 0.15),
        ]
    else:
        c, r = cfg.c, cfg.r_scale
        coef = [_normal(rng, 3.0 * c, 1.0), _normal(rng, -c, math.sqrt(r))]
        if cfg.rank == 3:
            coef.append(_normal(rng, c, r))
    return LatentDraw(coef, cfg.basis())


def observe(latent, warp: AnalyticWarp, grid, noise_halfwidth: float, rng) -> DiscreteCurve:
    """Warped point evaluations plus uniform measurement error."""
    grid = np.asarray(grid, dtype=float)
    values = latent(warp.inverse(grid))
    if noise_halfwidth > 0:
        values = values + noise_halfwidth * (2.0 * rng.random(grid.size) - 1.0)
    return DiscreteCurve(grid, values)


def true_variation_cdf(cfg: LatentModelConfig, dense_r: int, phi=None) -> StepCdf:
    """Local-variation CDF of the rank-1 template on a dense uniform grid."""
    if phi is None:
        if not cfg.is_rank_one:
            raise NotRankOne(f"model {cfg.name!r} is not rank one")
        phi = cfg.basis()[0]
    grid = np.linspace(0.0, 1.0, dense_r)
    curve = DiscreteCurve(grid, phi(grid))
    return discrete_variation_cdf(curve).cdf


class CounterexampleWarp(AnalyticWarp):
    """t - (2u - 1) * sin((2k-1)*pi*t) / ((2k-1)*pi)."""

    def __init__(self, k: int, u: float):
        self.k = int(k)
        self.u = float(u)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m = (2 * self.k - 1) * np.pi
        out = t - (2.0 * self.u - 1.0) * np.sin(m * t) / m
        return np.clip(out, 0.0, 1.0)


def counterexample_pair(k: int, M: float, rng):
    """Analytic triple (X, Y_k, T_k) with X identical to Y_k after unwarping.

    X(t) = xi*(2t-1) is rank one; Y_k adds an orthogonal oscillation whose
    coefficient is tied to the warp draw so that Y_k composed with the
    inverse warp reproduces X exactly.
    """
    if M <= 1:
        raise ValueError("M must exceed 1")
    if k < 1:
        raise ValueError("k must be at least 1")
    a = 0.5 * (1.0 - 1.0 / M)
    b = 0.5 * (1.0 + 1.0 / M)
    u = a + (b - a) * rng.random()
    xi = _normal(rng)
    m = (2 * k - 1) * math.pi

    def x_fn(t):
        t = np.asarray(t, dtype=float)
        return xi * (2.0 * t - 1.0)

    def y_fn(t):
        t = np.asarray(t, dtype=float)
        return xi * (2.0 * t - 1.0) + xi * (2.0 - 4.0 * u) * np.sin(m * t) / m

    warp = CounterexampleWarp(k, u)
    return x_fn, y_fn, warp


@dataclass
class TruthBundle:
    """Ground truth for one simulated sample."""

    grid: np.ndarray
    latent: list            # DiscreteCurve per draw (no warp, no noise)
    observed: list          # DiscreteCurve per draw (warped, possibly noisy)
    warps: list             # AnalyticWarp per draw
    coefficients: np.ndarray  # (n, rank)
    f_phi: StepCdf = None     # rank-1 models only
    phi_dense: DiscreteCurve = None
    noise_halfwidth: float = 0.0

    @property
    def n(self) -> int:
        return len(self.observed)

    def warp_values(self, i: int, t) -> np.ndarray:
        return np.asarray(self.warps[i](t))

    def inverse_warp_values(self, i: int, t) -> np.ndarray:
        return np.asarray(self.warps[i].inverse(t))


def make_truth_bundle(
    cfg: LatentModelConfig,
    warp_cfg: WarpLawConfig,
    n: int,
    seed: int,
    stream_offset: int = 0,
    dense_r: int = 4096,
) -> TruthBundle:
    """n independent (latent, warp, observed) triples plus the template CDF.

    Curve i draws from substream (seed, stream_offset + i): coefficients
    first, then the warp, then observation noise.  ``warp_cfg`` may be None
    for identity warps.
    """
    if n < 1:
        raise EmptySample("need n >= 1 simulated curves")
    grid = np.linspace(0.0, 1.0, cfg.grid_size)
    latent, observed, warps, coefs = [], [], [], []
    for i in range(n):
        rng = substream(seed, stream_offset + i)
        draw = sample_latent(cfg, rng)
        warp = sample_warp(warp_cfg, rng) if warp_cfg is not None else IdentityWarp()
        obs = observe(draw, warp, grid, cfg.noise_halfwidth, rng)
        latent.append(DiscreteCurve(grid, draw(grid)))
        observed.append(obs)
        warps.append(warp)
        coefs.append(draw.coefficients)
    f_phi = None
    phi_dense = None
    if cfg.is_rank_one:
        f_phi = true_variation_cdf(cfg, dense_r)
        tgrid = np.linspace(0.0, 1.0, dense_r)
        phi_dense = DiscreteCurve(tgrid, cfg.basis()[0](tgrid))
    return TruthBundle(
        grid=grid,
        latent=latent,
        observed=observed,
        warps=warps,
        coefficients=np.array(coefs),
        f_phi=f_phi,
        phi_dense=phi_dense,
        noise_halfwidth=cfg.noise_halfwidth,
    )
