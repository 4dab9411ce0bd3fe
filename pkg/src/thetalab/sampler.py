"""Brownian paths on time grids, exact increment conditioning and tilting.

Sampling is driven by counter-based Philox streams keyed by (seed, stream
index), so parallel workers can draw non-overlapping deterministic
substreams under any schedule.  Conditioning on prescribed increments is
done segment-wise with the Brownian bridge construction, which is exact and
O(n); overlapping-interval conditioning goes through the Schur-complement
conditioner instead.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ContractError, DomainError

_RESIDUAL_TOL = 1e-12


def make_rng(seed, stream=0):
    """Deterministic Philox generator for (seed, stream index)."""
    return np.random.Generator(
        np.random.Philox(key=[np.uint64(seed) & np.uint64(2**64 - 1),
                              np.uint64(stream)]))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times in [0, 1] starting at 0."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ContractError("grid needs at least two times")
        if t[0] != 0.0 or t[-1] > 1.0 or np.any(np.diff(t) <= 0.0):
            raise ContractError(
                "times must start at 0, be strictly increasing and end <= 1")
        object.__setattr__(self, "times", t)

    @property
    def dt(self):
        return np.diff(self.times)

    def with_times(self, extra):
        """New grid containing the union with ``extra`` (which must fit [0,1])."""
        merged = np.union1d(self.times, np.asarray(extra, dtype=float))
        return TimeGrid(merged)

    def index_of(self, t):
        i = int(np.searchsorted(self.times, t))
        if i >= self.times.size or self.times[i] != t:
            raise ContractError(f"time {t} is not a grid point")
        return i


@dataclass(frozen=True)
class PathGrid:
    """Discretized R^d path: values[i] = w(times[i]), w(0) = 0."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != self.grid.times.size:
            raise ContractError("values/grid length mismatch")
        if v.ndim != 2:
            raise ContractError("values must be (n_times, d)")
        if np.any(v[0] != 0.0):
            raise ContractError("path must start at 0")
        object.__setattr__(self, "values", v)

    @property
    def d(self):
        return self.values.shape[1]

    def increment(self, lo, hi):
        return self.values[self.grid.index_of(hi)] \
            - self.values[self.grid.index_of(lo)]


@dataclass(frozen=True)
class IncrementConstraintSet:
    """Ordered constraints w(t_hi) - w(t_lo) = u, pairwise non-overlapping.

    Intervals may share endpoints (the consecutive Delta_k case) but must
    not overlap; overlapping constraints need the Gaussian conditioner.
    """

    items: tuple  # of (t_lo, t_hi, u)

    def __post_init__(self):
        items = tuple((float(lo), float(hi),
                       np.atleast_1d(np.asarray(u, dtype=float)))
                      for lo, hi, u in self.items)
        items = tuple(sorted(items, key=lambda it: it[0]))
        for lo, hi, _ in items:
            if not lo < hi:
                raise ContractError("constraint interval must have t_lo < t_hi")
        for (_, hi_a, _), (lo_b, _, _) in zip(items, items[1:]):
            if lo_b < hi_a:
                raise ContractError(
                    "overlapping constraint intervals; use the Gaussian "
                    "conditioner for the general case")
        object.__setattr__(self, "items", items)

    def endpoints(self):
        out = []
        for lo, hi, _ in self.items:
            out.extend((lo, hi))
        return out


def sample_bm_increments(grid: TimeGrid, d, n, rng):
    """Raw increments, shape (n, n_cells, d), variance dt per cell."""
    dt = grid.dt
    return rng.standard_normal((n, dt.size, d)) * np.sqrt(dt)[None, :, None]


def _paths_from_increments(grid, incs):
    n, _, d = incs.shape
    vals = np.zeros((n, grid.times.size, d))
    np.cumsum(incs, axis=1, out=vals[:, 1:, :])
    return vals


def sample_bm(grid: TimeGrid, d, seed, n=1, stream=0):
    """Standard d-dimensional Brownian paths on the grid.

    Returns a PathGrid for n == 1, else an array (n, n_times, d).
    """
    rng = make_rng(seed, stream)
    vals = _paths_from_increments(grid, sample_bm_increments(grid, d, n, rng))
    if n == 1:
        return PathGrid(grid, vals[0])
    return vals


def apply_increment_constraints(grid: TimeGrid, incs,
                                constraints: IncrementConstraintSet):
    """Bridge-adjust raw increments in place so each constraint holds exactly.

    Inside a constrained interval of length L the cell increments get the
    correction (dt/L) * (u - S) where S is the raw interval sum; this
    realizes the conditional (bridge) law and leaves disjoint intervals and
    the outside untouched.
    """
    times = grid.times
    dt = grid.dt
    for lo, hi, u in constraints.items:
        ilo, ihi = grid.index_of(lo), grid.index_of(hi)
        L = hi - lo
        seg = incs[..., ilo:ihi, :]
        S = seg.sum(axis=-2)
        seg += (dt[ilo:ihi] / L)[..., :, None] \
            * (u - S)[..., None, :]
    return incs


def sample_conditioned_bm(grid: TimeGrid,
                          constraints: IncrementConstraintSet,
                          d, seed, n=1, stream=0):
    """Brownian paths conditioned on the prescribed increments.

    Constraint endpoints are inserted into the grid first so the residuals
    are exact to rounding; the law is segment-wise bridge inside each
    constrained interval and free Brownian motion outside.
    """
    grid = grid.with_times(constraints.endpoints())
    for _, _, u in constraints.items:
        if u.size != d:
            raise DomainError("constraint target dimension mismatch")
    rng = make_rng(seed, stream)
    incs = sample_bm_increments(grid, d, n, rng)
    apply_increment_constraints(grid, incs, constraints)
    vals = _paths_from_increments(grid, incs)
    if n == 1:
        return PathGrid(grid, vals[0])
    return grid, vals


def interval_overlap(a, b):
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


class GaussianConditioner:
    """Exact conditional laws of increment functionals given increments.

    Constraints are increments w(hi_j) - w(lo_j) = u_j; covariances of
    Brownian increments are interval overlaps, identical per coordinate, so
    the Schur complement is computed once on the scalar overlap matrix.
    """

    def __init__(self, intervals, targets):
        self.intervals = [(float(a), float(b)) for a, b in intervals]
        self.targets = np.atleast_2d(np.asarray(targets, dtype=float))
        if len(self.intervals) != self.targets.shape[0]:
            raise ContractError("one target per constraint interval required")
        m = len(self.intervals)
        cov = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                cov[i, j] = interval_overlap(self.intervals[i],
                                             self.intervals[j])
        eig = np.linalg.eigvalsh(cov)
        if eig.min() <= 1e-12 * max(eig.max(), 1.0):
            raise DomainError(
                f"degenerate constraint covariance {cov}: some constraint "
                "interval is linearly dependent on the others")
        self._factor = cho_factor(cov)
        self.cov = cov

    def condition_increment(self, lo, hi):
        """Conditional (mean vector, per-coordinate variance) of w(hi)-w(lo)."""
        cross = np.array([interval_overlap((lo, hi), iv)
                          for iv in self.intervals])
        alpha = cho_solve(self._factor, cross)
        mean = alpha @ self.targets
        var = (hi - lo) - float(cross @ alpha)
        return mean, max(var, 0.0)

    def alpha_coefficients(self, lo, hi):
        """Regression weights of the query increment on the constraints."""
        cross = np.array([interval_overlap((lo, hi), iv)
                          for iv in self.intervals])
        return cho_solve(self._factor, cross)


def gaussian_condition(intervals, targets, query_lo, query_hi):
    """One-shot wrapper around :class:`GaussianConditioner`."""
    cond = GaussianConditioner(intervals, targets)
    return cond.condition_increment(query_lo, query_hi)


def shift_on_grid(grid: TimeGrid, knots, knot_values):
    """Piecewise-linear shift evaluated at the grid times, shape (n, d)."""
    knots = np.asarray(knots, dtype=float)
    knot_values = np.atleast_2d(np.asarray(knot_values, dtype=float))
    out = np.column_stack([
        np.interp(grid.times, knots, knot_values[:, j])
        for j in range(knot_values.shape[1])])
    return out


def cameron_martin_weight(grid: TimeGrid, increments, shift_values):
    """Shifted increments plus log importance weights.

    ``increments`` has shape (n, n_cells, d), ``shift_values`` is the shift
    evaluated at grid times, shape (n_times, d).  The returned log-weight W
    makes E[F(w + phi) e^W] unbiased for E[F(w)] under the Wiener law: with
    dphi the shift's cell increments,

        W = -sum <dphi, dw>/dt - 0.5 sum ||dphi||^2/dt.
    """
    dt = grid.dt
    dphi = np.diff(np.asarray(shift_values, dtype=float), axis=0)
    cross = np.einsum("ncd,cd->n", increments, dphi / dt[:, None])
    energy = 0.5 * float(np.sum(dphi * dphi / dt[:, None]))
    logw = -cross - energy
    shifted = increments + dphi[None, :, :]
    return shifted, logw


def cameron_martin_shift_path(path: PathGrid, knots, knot_values):
    """Path-level wrapper: shift one PathGrid, return (shifted path, log w)."""
    phi = shift_on_grid(path.grid, knots, knot_values)
    incs = np.diff(path.values, axis=0)[None, :, :]
    _, logw = cameron_martin_weight(path.grid, incs, phi)
    return PathGrid(path.grid, path.values + phi), float(logw[0])


def sample_correlated_pair(grid: TimeGrid, d, r, seed, n=1, stream=0):
    """(w, beta) with beta = r w_1 + sqrt(1-r^2) z, z independent of w.

    Returns (w_values, beta_values, z_values) with shapes (n, n_times, d),
    (n, n_times) and (n, n_times).
    """
    if not 0.0 < r < 1.0:
        raise DomainError("correlation r must lie in (0, 1)")
    rng = make_rng(seed, stream)
    w_inc = sample_bm_increments(grid, d, n, rng)
    z_inc = sample_bm_increments(grid, 1, n, rng)[:, :, 0]
    w = _paths_from_increments(grid, w_inc)
    z = np.zeros((n, grid.times.size))
    np.cumsum(z_inc, axis=1, out=z[:, 1:])
    beta = r * w[:, :, 0] + np.sqrt(1.0 - r * r) * z
    return w, beta, z
