"""Step-function algebra for local-variation distributions.

A curve observed on a grid induces a distribution on [0,1]: the normalized
cumulative sum of its absolute increments.  This module provides the exact
piecewise machinery around such distributions: cadlag step CDFs, their
generalized inverses (quantile functions), pointwise quantile means,
compositions, and the 2-Wasserstein distance.  All integration is exact per
segment, never by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, ZeroVariation

# Evaluation points for a quantile mean are capped; beyond this the union of
# breakpoints is thinned uniformly.
MEAN_QUANTILE_POINT_CAP = 1_000_000

# Relative threshold below which a curve's total variation counts as zero.
ZERO_VARIATION_RTOL = 1e-12


def _as_float_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError("expected a 1-d array")
    return a


@dataclass(frozen=True)
class DiscreteCurve:
    """One functional observation: values on a sorted grid in [0,1]."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _as_float_array(self.grid)
        values = _as_float_array(self.values)
        if grid.size < 3:
            raise ValueError("grid must have at least 3 points")
        if grid.size != values.size:
            raise ValueError("grid and values must have equal length")
        if not (np.diff(grid) > 0).all():
            raise ValueError("grid must be strictly increasing")
        if grid[0] < 0.0 or grid[-1] > 1.0:
            raise ValueError("grid must lie in [0,1]")
        if not np.isfinite(values).all():
            raise ValueError("values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def max_gap(self) -> float:
        return float(np.diff(self.grid).max())


@dataclass(frozen=True)
class StepCdf:
    """Cadlag nondecreasing step function from [0,1] onto [0,1].

    ``jump_locations`` are strictly increasing abscissae in (0,1];
    ``cum_values`` are the post-jump levels, strictly increasing and ending
    at 1.  Evaluation is cadlag: F(t) = cum_values[k] on
    [jump_locations[k], jump_locations[k+1]) and F(t) = 0 before the first
    jump.
    """

    jump_locations: np.ndarray
    cum_values: np.ndarray

    def __post_init__(self):
        locs = _as_float_array(self.jump_locations)
        cums = _as_float_array(self.cum_values)
        if locs.size == 0 or locs.size != cums.size:
            raise ValueError("need equally many jump locations and levels")
        if not (np.diff(locs) > 0).all():
            raise ValueError("jump locations must be strictly increasing")
        if locs[0] <= 0.0 or locs[-1] > 1.0:
            raise ValueError("jump locations must lie in (0,1]")
        if not (np.diff(cums) > 0).all() or cums[0] <= 0.0:
            raise ValueError("cumulative levels must be strictly increasing from > 0")
        if cums[-1] != 1.0:
            raise ValueError("last cumulative level must equal 1.0")
        object.__setattr__(self, "jump_locations", locs)
        object.__setattr__(self, "cum_values", cums)

    @property
    def max_jump(self) -> float:
        """Largest single increment of the CDF."""
        sizes = np.diff(self.cum_values, prepend=0.0)
        return float(sizes.max())

    def __call__(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_locations, t_arr, side="right") - 1
        out = np.where(idx < 0, 0.0, self.cum_values[np.maximum(idx, 0)])
        return out if t_arr.ndim else float(out)

    @classmethod
    def from_jumps(cls, locations, sizes) -> "StepCdf":
        """Build from jump locations and nonnegative sizes; normalizes to 1.

        Zero-size jumps are dropped so the level sequence is strictly
        increasing (first location of each level is kept, which is what the
        ">=" generalized inverse needs).
        """
        locations = _as_float_array(locations)
        sizes = _as_float_array(sizes)
        if (sizes < 0).any():
            raise ValueError("jump sizes must be nonnegative")
        cum = np.cumsum(sizes)
        total = cum[-1]
        if total <= 0:
            raise ZeroVariation("all jump sizes are zero")
        levels = cum / total
        keep = np.diff(levels, prepend=0.0) > 0
        return cls(locations[keep], levels[keep])


@dataclass(frozen=True)
class QuantileFn:
    """Left-continuous nondecreasing function on [0,1] with values in [0,1].

    Piecewise over ``breakpoints`` (starting at 0, ending at 1).  Segment j
    covers (breakpoints[j], breakpoints[j+1]]; a step segment takes the
    right-endpoint value throughout (left-continuous), a linear segment
    interpolates.  ``values[0]`` is the value at 0 and must be 0.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    linear_segments: np.ndarray = field(default=None)  # bool, one per segment

    def __post_init__(self):
        bp = _as_float_array(self.breakpoints)
        vals = _as_float_array(self.values)
        if bp.size < 2 or bp.size != vals.size:
            raise ValueError("need matching breakpoints and values, at least 2")
        if not (np.diff(bp) > 0).all():
            raise ValueError("breakpoints must be strictly increasing")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if (np.diff(vals) < 0).any():
            raise ValueError("values must be nondecreasing")
        if vals[0] != 0.0:
            raise ValueError("value at 0 must be 0")
        if vals[-1] > 1.0 or vals[0] < 0.0:
            raise ValueError("values must lie in [0,1]")
        seg = self.linear_segments
        if seg is None:
            seg = np.zeros(bp.size - 1, dtype=bool)
        else:
            seg = np.asarray(seg, dtype=bool)
            if seg.shape != (bp.size - 1,):
                raise ValueError("need one continuity flag per segment")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "linear_segments", seg)

    @classmethod
    def from_samples(cls, t, v, linear=True) -> "QuantileFn":
        """Quantile function through sample points, all segments alike."""
        t = _as_float_array(t)
        v = _as_float_array(v)
        kind = np.full(t.size - 1, bool(linear))
        return cls(t, v, kind)

    def __call__(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=float)
        t_clipped = np.clip(t_arr, 0.0, 1.0)
        idx = np.searchsorted(self.breakpoints, t_clipped, side="left")
        idx = np.clip(idx, 1, self.breakpoints.size - 1)
        right = self.values[idx]
        left = self.values[idx - 1]
        b_right = self.breakpoints[idx]
        b_left = self.breakpoints[idx - 1]
        lam = (t_clipped - b_left) / (b_right - b_left)
        lin = left + (right - left) * lam
        out = np.where(self.linear_segments[idx - 1], lin, right)
        out = np.where(t_clipped <= 0.0, self.values[0], out)
        return out if t_arr.ndim else float(out)

    @property
    def all_step(self) -> bool:
        return not self.linear_segments.any()


@dataclass(frozen=True)
class VariationSummary:
    """Total variation of a curve together with its normalized local CDF."""

    total_variation: float
    cdf: StepCdf

    def __post_init__(self):
        if not (self.total_variation > 0):
            raise ValueError("total variation must be positive")


def discrete_variation_cdf(curve: DiscreteCurve, curve_id=None) -> VariationSummary:
    """Normalized cumulative absolute-increment distribution of a curve.

    The CDF jumps at each grid point t_{j+1} by |v_{j+1} - v_j| divided by
    the total absolute increment; it is 0 before the second grid point and
    1 from the last one on.

    Raises ZeroVariation for (numerically) constant curves.
    """
    diffs = np.abs(np.diff(curve.values))
    cum = np.cumsum(diffs)
    total = float(cum[-1])
    scale = float(np.abs(curve.values).max())
    if total <= ZERO_VARIATION_RTOL * scale or total <= 0.0:
        raise ZeroVariation(curve_id=curve_id)
    levels = cum / total
    keep = np.diff(levels, prepend=0.0) > 0
    cdf = StepCdf(curve.grid[1:][keep], levels[keep])
    return VariationSummary(total_variation=total, cdf=cdf)


def generalized_inverse(cdf: StepCdf) -> QuantileFn:
    """Pointwise generalized inverse G^-(t) = inf{u : G(u) >= t}.

    The result is a left-continuous step quantile: on each level interval
    (c_{j-1}, c_j] it equals the first location where G reaches c_j, and
    G^-(0) = 0.
    """
    bp = np.concatenate(([0.0], cdf.cum_values))
    vals = np.concatenate(([0.0], cdf.jump_locations))
    return QuantileFn(bp, vals, np.zeros(vals.size - 1, dtype=bool))


def mean_quantile(qs, eval_grid=None) -> QuantileFn:
    """Pointwise arithmetic mean of quantile functions.

    Evaluated on the union of every input's breakpoints with ``eval_grid``
    (capped at MEAN_QUANTILE_POINT_CAP points, thinned uniformly beyond).
    When all inputs are step (resp. all linear) the result is exact; for
    mixed kinds a segment is linear only where every input is.

    The reduction over inputs sorts the addends per evaluation point, so the
    result is bit-identical under permutation of ``qs``.
    """
    qs = list(qs)
    if not qs:
        raise EmptySample("mean_quantile needs at least one quantile function")
    pieces = [q.breakpoints for q in qs]
    if eval_grid is not None:
        pieces.append(np.clip(_as_float_array(eval_grid), 0.0, 1.0))
    points = np.unique(np.concatenate(pieces))
    if points[0] != 0.0:
        points = np.concatenate(([0.0], points))
    if points[-1] != 1.0:
        points = np.concatenate((points, [1.0]))
    if points.size > MEAN_QUANTILE_POINT_CAP:
        idx = np.unique(
            np.round(np.linspace(0, points.size - 1, MEAN_QUANTILE_POINT_CAP)).astype(int)
        )
        points = points[idx]

    table = np.empty((points.size, len(qs)))
    for j, q in enumerate(qs):
        table[:, j] = q(points)
    table.sort(axis=1)
    vals = table.sum(axis=1) / len(qs)
    vals = np.maximum.accumulate(vals)  # guard float wiggles
    vals = np.clip(vals, 0.0, 1.0)
    vals[0] = 0.0 if points[0] == 0.0 else vals[0]

    seg_linear = np.ones(points.size - 1, dtype=bool)
    for q in qs:
        if q.all_step:
            seg_linear[:] = False
            break
        # segment of `points` is linear only if it falls inside a linear
        # segment of q (strictly between q's step breakpoints)
        idx = np.searchsorted(q.breakpoints, points[1:], side="left")
        idx = np.clip(idx, 1, q.breakpoints.size - 1)
        seg_linear &= q.linear_segments[idx - 1]
    return QuantileFn(points, vals, seg_linear)


def quantile_to_cdf(q: QuantileFn, level_resolution: float = 1.0 / 1024) -> StepCdf:
    """Generalized inverse of a quantile function, as a cadlag StepCdf.

    For step quantiles the inversion is exact: each segment contributes a
    jump of its probability mass at its location value.  Linear increasing
    segments have a continuous inverse; they are discretized into sub-steps
    of probability mass at most ``level_resolution``.
    """
    bp = q.breakpoints
    vals = q.values
    locs = []
    levels = []
    for j in range(bp.size - 1):
        lo, hi = vals[j], vals[j + 1]
        if q.linear_segments[j] and hi > lo:
            mass = bp[j + 1] - bp[j]
            k = max(1, int(np.ceil(mass / level_resolution)))
            sub_levels = np.linspace(bp[j], bp[j + 1], k + 1)[1:]
            frac = (np.arange(k) + 0.5) / k
            locs.append(lo + (hi - lo) * frac)
            levels.append(sub_levels)
        else:
            locs.append(np.array([hi]))
            levels.append(np.array([bp[j + 1]]))
    locs = np.concatenate(locs)
    levels = np.concatenate(levels)
    # merge duplicate locations (flat quantile stretches): the level after all
    # mass at a location has landed is the last one recorded there
    keep = np.concatenate((locs[1:] != locs[:-1], [True]))
    locs, levels = locs[keep], levels[keep]
    if locs[0] <= 0.0:
        raise ValueError("quantile maps positive mass to location 0; not a CDF on (0,1]")
    return StepCdf(locs, levels)


def compose_quantile_cdf(q: QuantileFn, cdf: StepCdf, eval_points) -> np.ndarray:
    """Samples of t -> Q(F(t)) at ``eval_points``; nondecreasing in t."""
    eval_points = _as_float_array(eval_points)
    return np.asarray(q(cdf(eval_points)))


def _quantile_segments(q: QuantileFn):
    """Per-segment (left endpoint limit, right endpoint value) pairs.

    On (a, b] a step segment is constant at the right value, so its limit
    at a+ equals the right value; a linear segment is continuous at a.
    """
    left = np.where(q.linear_segments, q.values[:-1], q.values[1:])
    right = q.values[1:]
    return left, right


def _refine_on(q: QuantileFn, points: np.ndarray) -> QuantileFn:
    """Re-express q on a superset of its breakpoints (exact)."""
    vals = np.asarray(q(points))
    idx = np.searchsorted(q.breakpoints, points[1:], side="left")
    idx = np.clip(idx, 1, q.breakpoints.size - 1)
    seg = q.linear_segments[idx - 1]
    vals = vals.copy()
    vals[0] = q.values[0]
    return QuantileFn(points, vals, seg)


def as_quantile(obj) -> QuantileFn:
    if isinstance(obj, QuantileFn):
        return obj
    if isinstance(obj, StepCdf):
        return generalized_inverse(obj)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a quantile function")


def wasserstein2(f, g) -> float:
    """2-Wasserstein distance between two distributions on [0,1].

    Arguments may be StepCdf or QuantileFn.  Computes
    sqrt(int_0^1 (F^-(u) - G^-(u))^2 du) exactly: the quantile difference is
    piecewise linear (or constant) on the merged breakpoint partition, and
    each segment integrates in closed form.
    """
    qf = as_quantile(f)
    qg = as_quantile(g)
    points = np.unique(np.concatenate((qf.breakpoints, qg.breakpoints)))
    qf = _refine_on(qf, points)
    qg = _refine_on(qg, points)
    fl, fr = _quantile_segments(qf)
    gl, gr = _quantile_segments(qg)
    da = fl - gl
    db = fr - gr
    widths = np.diff(points)
    total = float(np.sum(widths * (da * da + da * db + db * db) / 3.0))
    return float(np.sqrt(max(total, 0.0)))
