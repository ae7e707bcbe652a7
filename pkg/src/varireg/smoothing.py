"""Kernel smoothing machinery.

Epanechnikov kernel, Nadaraya-Watson regression, local polynomial
regression (values and first derivatives), leave-one-out bandwidth
selection, and monotone smoothing of warp maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import AllCandidatesSingular, EmptyWindow, SingularFit
from .variation import DiscreteCurve

_EVAL_CHUNK = 1024  # cap on the (eval x grid) weight matrix rows per pass


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric nonnegative kernel supported on [-1,1]."""

    family: str = "epanechnikov"

    def __post_init__(self):
        if self.family != "epanechnikov":
            raise ValueError(f"unknown kernel family {self.family!r}")

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


EPANECHNIKOV = KernelSpec()


@dataclass(frozen=True)
class SmootherConfig:
    """Bandwidth, polynomial degree, and derivative order of one smoother."""

    bandwidth: float
    degree: int = 0
    deriv_order: int = 0
    kernel: KernelSpec = EPANECHNIKOV

    def __post_init__(self):
        if not (0 < self.bandwidth <= 1.0):
            raise ValueError("bandwidth must lie in (0, 1]")
        if self.degree not in (0, 1, 2):
            raise ValueError("degree must be 0, 1 or 2")
        if self.deriv_order not in (0, 1):
            raise ValueError("deriv_order must be 0 or 1")
        if self.deriv_order >= self.degree and not (
            self.degree == 0 and self.deriv_order == 0
        ):
            raise ValueError("need deriv_order < degree (or degree 0, deriv 0)")


def suggested_min_bandwidth(grid: np.ndarray, eval_points: np.ndarray) -> float:
    """Smallest bandwidth for which every evaluation window is nonempty."""
    idx = np.searchsorted(grid, eval_points)
    left = np.abs(eval_points - grid[np.clip(idx - 1, 0, grid.size - 1)])
    right = np.abs(grid[np.clip(idx, 0, grid.size - 1)] - eval_points)
    nearest = np.minimum(left, right)
    return float(nearest.max()) * (1.0 + 1e-9)


def nadaraya_watson(curve: DiscreteCurve, cfg: SmootherConfig, eval_points) -> np.ndarray:
    """Kernel-weighted average of curve values at each evaluation point.

    Raises EmptyWindow when some evaluation point has no grid point strictly
    within one bandwidth (the kernel vanishes at |u| = 1).
    """
    if cfg.degree != 0:
        raise ValueError("nadaraya_watson requires degree 0")
    eval_points = np.asarray(eval_points, dtype=float)
    out = np.empty(eval_points.size)
    for start in range(0, eval_points.size, _EVAL_CHUNK):
        chunk = eval_points[start : start + _EVAL_CHUNK]
        w = cfg.kernel((chunk[:, None] - curve.grid[None, :]) / cfg.bandwidth)
        wsum = w.sum(axis=1)
        if (wsum <= 0.0).any():
            bad = chunk[int(np.argmax(wsum <= 0.0))]
            raise EmptyWindow(float(bad), suggested_min_bandwidth(curve.grid, eval_points))
        # normalize first so a single-point window returns its value exactly
        out[start : start + chunk.size] = (w / wsum[:, None]) @ curve.values
    return out


def _local_poly_chunk(grid, values, cfg, chunk, loo=False):
    """Weighted LS fit of degree cfg.degree centered at each point of chunk.

    Returns the deriv_order coefficient scaled back to the time axis, or nan
    where the window is underdetermined.  With ``loo`` the weight of a grid
    point coinciding exactly with the eval point is zeroed (leave-one-out).
    """
    d = cfg.degree
    u = (grid[None, :] - chunk[:, None]) / cfg.bandwidth
    w = cfg.kernel(u)
    if loo:
        w = np.where(grid[None, :] == chunk[:, None], 0.0, w)
    npts = (w > 0.0).sum(axis=1)
    # moment matrices S[p,q] = sum w u^{p+q} in the scaled variable
    powers = [np.sum(w * u**p, axis=1) for p in range(2 * d + 1)]
    rhs = [np.sum(w * u**p * values[None, :], axis=1) for p in range(d + 1)]
    S = np.empty((chunk.size, d + 1, d + 1))
    for p in range(d + 1):
        for qq in range(d + 1):
            S[:, p, qq] = powers[p + qq]
    b = np.stack(rhs, axis=1)
    ok = npts >= d + 1
    coef = np.full((chunk.size, d + 1), np.nan)
    if ok.any():
        try:
            coef[ok] = np.linalg.solve(S[ok], b[ok][..., None])[..., 0]
        except np.linalg.LinAlgError:
            for i in np.nonzero(ok)[0]:
                try:
                    coef[i] = np.linalg.solve(S[i], b[i])
                except np.linalg.LinAlgError:
                    ok[i] = False
    # factorial(deriv_order) is 1 for orders 0 and 1; undo the bandwidth scaling
    k = cfg.deriv_order
    result = coef[:, k] / cfg.bandwidth**k
    result[~ok] = np.nan
    return result


def local_poly(curve: DiscreteCurve, cfg: SmootherConfig, eval_points) -> np.ndarray:
    """Local polynomial estimate of the curve (deriv 0) or its slope (deriv 1).

    Raises SingularFit with the offending evaluation point when a window is
    underdetermined.
    """
    eval_points = np.asarray(eval_points, dtype=float)
    out = np.empty(eval_points.size)
    for start in range(0, eval_points.size, _EVAL_CHUNK):
        chunk = eval_points[start : start + _EVAL_CHUNK]
        res = _local_poly_chunk(curve.grid, curve.values, cfg, chunk)
        if np.isnan(res).any():
            raise SingularFit(float(chunk[int(np.argmax(np.isnan(res)))]))
        out[start : start + chunk.size] = res
    return out


def loocv_bandwidth(curve: DiscreteCurve, degree: int, candidates) -> float:
    """Candidate bandwidth minimizing leave-one-out squared prediction error.

    Candidates whose leave-one-out windows are underdetermined anywhere are
    skipped; ties break toward the smaller bandwidth (under-smoothing).
    """
    candidates = sorted(float(h) for h in candidates)
    if not candidates:
        raise AllCandidatesSingular("no candidate bandwidths given")
    best_h, best_err = None, np.inf
    for h in candidates:
        cfg = SmootherConfig(bandwidth=h, degree=degree, deriv_order=0)
        if degree == 0:
            u = (curve.grid[None, :] - curve.grid[:, None]) / h
            w = cfg.kernel(u)
            np.fill_diagonal(w, 0.0)
            wsum = w.sum(axis=1)
            if (wsum <= 0.0).any():
                continue
            preds = (w @ curve.values) / wsum
        else:
            preds = _local_poly_chunk(curve.grid, curve.values, cfg, curve.grid, loo=True)
            if np.isnan(preds).any():
                continue
        err = float(np.sum((preds - curve.values) ** 2))
        if err < best_err:
            best_h, best_err = h, err
    if best_h is None:
        raise AllCandidatesSingular("every candidate bandwidth left a singular window")
    return best_h


def default_loocv_candidates(curve: DiscreteCurve, count: int = 12) -> np.ndarray:
    """Log-spaced candidates from twice the largest grid gap up to 0.25."""
    lo = 2.0 * curve.max_gap
    hi = 0.25
    if lo >= hi:
        return np.array([min(lo, 1.0)])
    return np.exp(np.linspace(np.log(lo), np.log(hi), count))


def monotone_smooth_warp(sample_t, sample_v, n_knots: int = 11, n_out: int = 1024):
    """Monotone cubic smoothing of warp samples through equispaced knots.

    Knot values come from linear interpolation of the input samples; a
    shape-preserving (Fritsch-Carlson type) cubic interpolant through the
    knots guarantees the output is nondecreasing and endpoint-preserving.
    Returns (t, v) samples of the smoothed map on a dense grid.
    """
    sample_t = np.asarray(sample_t, dtype=float)
    sample_v = np.asarray(sample_v, dtype=float)
    if n_knots < 2:
        raise ValueError("need at least 2 knots")
    knots = np.linspace(0.0, 1.0, n_knots)
    kv = np.interp(knots, sample_t, sample_v)
    kv[0], kv[-1] = sample_v[0], sample_v[-1]
    kv = np.maximum.accumulate(kv)
    interp = PchipInterpolator(knots, kv)
    t_out = np.unique(np.concatenate((np.linspace(0.0, 1.0, n_out), knots)))
    v_out = interp(t_out)
    v_out = np.clip(np.maximum.accumulate(v_out), 0.0, 1.0)
    v_out[0], v_out[-1] = kv[0], kv[-1]
    return t_out, v_out
