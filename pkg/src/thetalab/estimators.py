"""Monte Carlo realizations of the intersection measures and their pairings.

Two independent estimator families are provided for the dual pairing of a
cylinder test functional with the measure theta_{u_1..u_{k-1}}:

* ``pairing_bridge`` integrates the conditional expectation given the
  prescribed increments (sampled exactly by bridge construction) against
  the product of heat kernels over the ordered simplex;
* ``pairing_epsilon`` averages the smoothed kernel product along a ladder
  of epsilon values and Richardson-extrapolates to epsilon -> 0.

Agreement of the two routes is the operational content of the measure
representation and is what the acceptance suite checks.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr

from .errors import ContractError, DomainError
from .kernels import log_heat_kernel_sq
from .sampler import make_rng

_CHUNK = 64  # outer nodes per vectorized block, keeps arrays < ~100 MB


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    stderr: float
    n_samples: int
    method: str

    def __post_init__(self):
        if self.stderr < 0.0 or not np.isfinite(self.value):
            raise ContractError("estimate must be finite with stderr >= 0")

    def agrees_with(self, other, n_sigma=3.0):
        tol = n_sigma * math.hypot(self.stderr, other.stderr)
        return abs(self.value - other.value) <= tol


@dataclass(frozen=True)
class CylinderFunctional:
    """Bounded payoff of finitely many path evaluations."""

    eval_times: tuple
    payoff: object  # callable, (..., n_eval, dim) -> (...)
    name: str = "custom"

    def __post_init__(self):
        ts = tuple(float(t) for t in self.eval_times)
        if len(ts) == 0:
            raise ContractError("eval_times must be nonempty")
        if any(not 0.0 <= t <= 1.0 for t in ts):
            raise ContractError("eval_times must lie in [0, 1]")
        object.__setattr__(self, "eval_times", ts)

    def __call__(self, values):
        return self.payoff(values)


def gaussian_bump(times, center, width=1.0):
    """exp(-||x - center||^2 / (2 width^2)) over the stacked evaluations."""
    center = np.asarray(center, dtype=float).ravel()

    def payoff(values):
        flat = values.reshape(values.shape[:-2] + (-1,))
        diff = flat - center
        return np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * width ** 2))

    return CylinderFunctional(tuple(times), payoff, "gaussian_bump")


def coordinate_indicator_box(times, lo, hi):
    """Indicator of the path lying in the box [lo, hi] at every eval time."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi < lo):
        raise ContractError("degenerate box: hi < lo")

    def payoff(values):
        inside = np.all((values >= lo) & (values <= hi), axis=(-2, -1))
        return inside.astype(float)

    return CylinderFunctional(tuple(times), payoff, "indicator_box")


def polynomial_clipped(times, coeffs, clip=10.0):
    """Clipped polynomial of the first coordinate at the first eval time."""
    coeffs = tuple(float(c) for c in coeffs)

    def payoff(values):
        x = values[..., 0, 0]
        return np.clip(np.polyval(coeffs, x), -clip, clip)

    return CylinderFunctional(tuple(times), payoff, "polynomial_clipped")


def constant_one(time=1.0):
    def payoff(values):
        return np.ones(values.shape[:-2])

    return CylinderFunctional((time,), payoff, "one")


PAYOFF_CATALOGUE = {
    "one": lambda p: constant_one(*p.get("times", (1.0,))),
    "gaussian_bump": lambda p: gaussian_bump(
        p["times"], p["center"], p.get("width", 1.0)),
    "indicator_box": lambda p: coordinate_indicator_box(
        p["times"], p["lo"], p["hi"]),
    "polynomial_clipped": lambda p: polynomial_clipped(
        p["times"], p["coeffs"], p.get("clip", 10.0)),
}


def make_payoff(payoff_id, params=None):
    if payoff_id not in PAYOFF_CATALOGUE:
        raise ContractError(f"unknown payoff id {payoff_id!r}")
    return PAYOFF_CATALOGUE[payoff_id](params or {})


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(96)
_GH_WEIGHTS = _GH_WEIGHTS / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class WeightFunction:
    """Square-Gaussian-integrable weight f of the 1-d increment.

    Families: "one", "indicator_pos", "abs_power" (param p >= 0),
    "exp_abs" (param a).  Every family satisfies
    integral f^2 e^{-x^2/2} dx < infinity by inspection.
    """

    family: str
    param: float = 0.0

    def __post_init__(self):
        if self.family not in ("one", "indicator_pos", "abs_power",
                               "exp_abs"):
            raise ContractError(f"unknown weight family {self.family!r}")
        if self.family == "abs_power" and self.param < 0.0:
            raise ContractError("abs_power requires p >= 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "one":
            return np.ones_like(x)
        if self.family == "indicator_pos":
            return (x > 0.0).astype(float)
        if self.family == "abs_power":
            return np.abs(x) ** self.param
        return np.exp(self.param * np.abs(x))

    def gaussian_moment(self, var, mean=0.0):
        """E[f(mean + sqrt(var) Z)], Z standard normal.

        Closed forms where elementary, 96-point Gauss-Hermite otherwise.
        """
        var = np.asarray(var, dtype=float)
        if self.family == "one":
            return np.ones_like(var)
        if self.family == "indicator_pos":
            return ndtr(mean / np.sqrt(var))
        if self.family == "abs_power" and mean == 0.0:
            p = self.param
            return (2.0 * var) ** (p / 2.0) \
                * gamma_fn((p + 1.0) / 2.0) / math.sqrt(math.pi)
        x = mean + np.sqrt(var)[..., None] * _GH_NODES
        return np.sum(self(x) * _GH_WEIGHTS, axis=-1)


def _union_times(t_tuples, eval_times):
    """Sorted union of {0}, eval times and the random tuples, row-wise.

    Returns (times, pos_eval, pos_t): positions of the eval columns and the
    tuple columns inside each sorted row.
    """
    n, k = t_tuples.shape
    ev = np.asarray(eval_times, dtype=float)
    base = np.concatenate([
        np.zeros((n, 1)),
        np.broadcast_to(ev, (n, ev.size)),
        t_tuples,
    ], axis=1)
    order = np.argsort(base, axis=1, kind="stable")
    times = np.take_along_axis(base, order, axis=1)
    inv = np.argsort(order, axis=1, kind="stable")
    pos_eval = inv[:, 1:1 + ev.size]
    pos_t = inv[:, 1 + ev.size:]
    return times, pos_eval, pos_t


def _bridge_adjust(times, incs, pos_t, u_list):
    """Force the consecutive increments over the tuple times to equal u_j."""
    dt = np.diff(times, axis=1)
    cells = np.arange(dt.shape[1])[None, :]
    for j, u in enumerate(u_list):
        ilo = pos_t[:, j][:, None]
        ihi = pos_t[:, j + 1][:, None]
        mask = ((cells >= ilo) & (cells < ihi)).astype(float)
        gap = np.take_along_axis(times, pos_t[:, j + 1:j + 2], axis=1) \
            - np.take_along_axis(times, pos_t[:, j:j + 1], axis=1)
        S = np.einsum("nicd,nc->nid", incs, mask)
        corr = (u[None, None, :] - S) / gap[:, None, :]
        incs += mask[:, None, :, None] * dt[:, None, :, None] \
            * corr[:, :, None, :]
    return incs


def _check_u_list(u_list, d):
    us = tuple(np.atleast_1d(np.asarray(u, dtype=float)) for u in u_list)
    for u in us:
        if u.size != d:
            raise DomainError("increment target dimension mismatch")
        if np.all(u == 0.0):
            raise DomainError("increment targets must be nonzero")
    return us


def _warn_small_d(d):
    if d < 4:
        warnings.warn(
            f"d={d} is below the d >= 4 regime of the local-time theory; "
            "results are for debugging against closed forms only",
            stacklevel=3)


def _conditional_means(F, t_tuples, u_list, d, n_inner, rng):
    """Bridge-MC means E[F | increments = u_j] for each time tuple.

    Vectorized over outer tuples in chunks; returns an array of inner-mean
    payoff values, one per tuple.
    """
    n = t_tuples.shape[0]
    out = np.empty(n)
    for lo in range(0, n, _CHUNK):
        t = t_tuples[lo:lo + _CHUNK]
        times, pos_eval, pos_t = _union_times(t, F.eval_times)
        dt = np.clip(np.diff(times, axis=1), 0.0, None)
        nb, m1 = dt.shape
        incs = rng.standard_normal((nb, n_inner, m1, d)) \
            * np.sqrt(dt)[:, None, :, None]
        _bridge_adjust(times, incs, pos_t, u_list)
        paths = np.zeros((nb, n_inner, m1 + 1, d))
        np.cumsum(incs, axis=2, out=paths[:, :, 1:, :])
        ev = np.take_along_axis(
            paths, pos_eval[:, None, :, None], axis=2)
        out[lo:lo + _CHUNK] = F(ev).mean(axis=1)
    return out


def _log_kernel_product(t_tuples, u_list, d, eps_shift=0.0):
    gaps = np.diff(t_tuples, axis=1)
    logp = np.zeros(t_tuples.shape[0])
    for j, u in enumerate(u_list):
        logp += log_heat_kernel_sq(float(u @ u), gaps[:, j] + eps_shift, d)
    return logp


def pairing_bridge(F: CylinderFunctional, u_list, d, n_outer, n_inner,
                   seed):
    """Pairing of F with theta_{u_1..u_{k-1}} via conditioned sampling.

    Outer Monte Carlo over uniform ordered tuples (volume 1/k!), inner
    bridge averaging of the conditional expectation; the outer sample
    variance already carries the inner noise, so the reported stderr
    propagates both stages.
    """
    us = _check_u_list(u_list, d)
    _warn_small_d(d)
    k = len(us) + 1
    rng = make_rng(seed, 1)
    t = np.sort(rng.random((n_outer, k)), axis=1)
    h = _conditional_means(F, t, us, d, n_inner, rng)
    y = h * np.exp(_log_kernel_product(t, us, d))
    fact = math.factorial(k)
    return EstimateWithError(
        float(y.mean() / fact),
        float(y.std(ddof=1) / math.sqrt(n_outer) / fact),
        n_outer * n_inner, "bridge")


def _epsilon_single(F, us, d, eps, n, rng):
    """One rung of the smoothed estimator, with Cameron-Martin tilting.

    Each path is shifted so its window increments center on the targets
    u_j; the exact change-of-measure weight keeps the estimator unbiased
    while the smoothed kernels are evaluated near their mode instead of in
    the far tail (which naive sampling cannot resolve for k >= 3).
    """
    k = len(us) + 1
    vals = np.empty(n)
    for lo in range(0, n, _CHUNK * 64):
        t = np.sort(rng.random((min(_CHUNK * 64, n - lo), k)), axis=1)
        times, pos_eval, pos_t = _union_times(t, F.eval_times)
        dt = np.clip(np.diff(times, axis=1), 0.0, None)
        nb = dt.shape[0]
        incs = rng.standard_normal(dt.shape + (d,)) \
            * np.sqrt(dt)[:, :, None]
        # piecewise-linear shift with increment u_j across window j
        cells = np.arange(dt.shape[1])[None, :]
        dphi = np.zeros_like(incs)
        for j, u in enumerate(us):
            ilo = pos_t[:, j][:, None]
            ihi = pos_t[:, j + 1][:, None]
            mask = ((cells >= ilo) & (cells < ihi)).astype(float)
            gap = np.take_along_axis(times, pos_t[:, j + 1:j + 2], axis=1) \
                - np.take_along_axis(times, pos_t[:, j:j + 1], axis=1)
            dphi += (mask * dt / gap)[:, :, None] * u[None, None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(dt[:, :, None] > 0.0,
                             dphi / dt[:, :, None], 0.0)
        logw = -np.einsum("ncd,ncd->n", ratio, incs) \
            - 0.5 * np.einsum("ncd,ncd->n", ratio, dphi)
        incs += dphi
        paths = np.zeros((nb, dt.shape[1] + 1, d))
        np.cumsum(incs, axis=1, out=paths[:, 1:, :])
        at_t = np.take_along_axis(paths, pos_t[:, :, None], axis=1)
        dw = np.diff(at_t, axis=1)
        for j, u in enumerate(us):
            diff = dw[:, j, :] - u
            logw += log_heat_kernel_sq(np.sum(diff * diff, axis=-1), eps, d)
        ev = np.take_along_axis(paths, pos_eval[:, :, None], axis=1)
        vals[lo:lo + nb] = F(ev) * np.exp(logw)
    fact = math.factorial(k)
    return (float(vals.mean() / fact),
            float(vals.std(ddof=1) / math.sqrt(n) / fact))


def richardson_extrapolate(eps_values, estimates, stderrs):
    """Weighted linear fit v(eps) = v0 + c eps, returning (v0, stderr(v0)).

    The Gaussian smoothing shifts variance additively, so the leading bias
    of smooth payoffs is linear in eps.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    A = np.column_stack([np.ones_like(eps_values), eps_values])
    w = 1.0 / np.asarray(stderrs, dtype=float) ** 2
    ata = A.T @ (w[:, None] * A)
    cov = np.linalg.inv(ata)
    coef = cov @ (A.T @ (w * np.asarray(estimates, dtype=float)))
    return float(coef[0]), float(math.sqrt(cov[0, 0]))


def pairing_epsilon(F: CylinderFunctional, u_list, d, eps_ladder,
                    n_per_eps, seed):
    """Pairing via the epsilon-approximation with Richardson extrapolation.

    Returns (extrapolated EstimateWithError, per-epsilon ladder of
    (eps, value, stderr) triples).
    """
    us = _check_u_list(u_list, d)
    _warn_small_d(d)
    eps_ladder = [float(e) for e in eps_ladder]
    if len(eps_ladder) < 2:
        raise ContractError("epsilon ladder needs at least two rungs")
    if any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])) \
            or any(e <= 0.0 for e in eps_ladder):
        raise ContractError("epsilon ladder must be positive and decreasing")
    ladder = []
    for i, eps in enumerate(eps_ladder):
        rng = make_rng(seed, 100 + i)
        est, se = _epsilon_single(F, us, d, eps, n_per_eps, rng)
        ladder.append((eps, est, se))
    v0, se0 = richardson_extrapolate(*zip(*ladder))
    return (EstimateWithError(v0, se0, n_per_eps * len(eps_ladder),
                              "epsilon"),
            ladder)


def cylinder_mass(eval_times, box_lo, box_hi, u_list, d, n_outer, n_inner,
                  seed):
    """theta mass of the cylinder set {w(t) in [lo, hi] for t in T}.

    The indicator payoff is averaged directly by Monte Carlo; no smooth
    sandwich is needed for an expectation.
    """
    if len(tuple(eval_times)) == 0:
        raise ContractError("cylinder time set must be nonempty")
    F = coordinate_indicator_box(eval_times, box_lo, box_hi)
    return pairing_bridge(F, u_list, d, n_outer, n_inner, seed)


def _bm_functional_means(F, t_tuples, weight, n_inner, rng):
    """Inner means E[F(beta) g(beta(t2) - beta(t1))] over free 1-d paths."""
    n = t_tuples.shape[0]
    out = np.empty(n)
    for lo in range(0, n, _CHUNK):
        t = t_tuples[lo:lo + _CHUNK]
        times, pos_eval, pos_t = _union_times(t, F.eval_times)
        dt = np.clip(np.diff(times, axis=1), 0.0, None)
        nb, m1 = dt.shape
        incs = rng.standard_normal((nb, n_inner, m1)) \
            * np.sqrt(dt)[:, None, :]
        paths = np.zeros((nb, n_inner, m1 + 1))
        np.cumsum(incs, axis=2, out=paths[:, :, 1:])
        at_t = np.take_along_axis(paths, pos_t[:, None, :], axis=2)
        dbeta = at_t[:, :, 1] - at_t[:, :, 0]
        ev = np.take_along_axis(paths, pos_eval[:, None, :], axis=2)
        out[lo:lo + nb] = (F(ev[..., None]) * weight(dbeta)).mean(axis=1)
    return out


def eta_pairing_independent(F1, F2, f: WeightFunction, u, d, n_outer,
                            n_inner, seed):
    """Pairing of the weighted measure with F1(w) F2(beta), beta independent.

    First factor by bridge conditioning of w, second factor by Gaussian
    quadrature when F2 is trivial, else by plain Monte Carlo on beta.
    """
    us = _check_u_list([u], d)
    _warn_small_d(d)
    rng = make_rng(seed, 2)
    t = np.sort(rng.random((n_outer, 2)), axis=1)
    tau = t[:, 1] - t[:, 0]
    if F1 is None:
        h1 = np.ones(n_outer)
    else:
        h1 = _conditional_means(F1, t, us, d, n_inner, rng)
    if F2 is None:
        h2 = f.gaussian_moment(tau)
    else:
        h2 = _bm_functional_means(F2, t, f, n_inner, rng)
    y = h1 * h2 * np.exp(_log_kernel_product(t, us, d))
    return EstimateWithError(
        float(y.mean() / 2.0),
        float(y.std(ddof=1) / math.sqrt(n_outer) / 2.0),
        n_outer * n_inner, "eta_independent")


def _overlap_arrays(s_pair, t):
    s1, s2 = s_pair
    lo = np.maximum(s1, t[:, 0])
    hi = np.minimum(s2, t[:, 1])
    return np.clip(hi - lo, 0.0, None)


def eta_pairing_correlated(F1, F2, f: WeightFunction, u, d, r, s_pair,
                           n_outer, n_inner, seed, t_pair=None):
    """Correlated-noise pairing for beta = r w_1 + sqrt(1-r^2) z.

    F1 is a payoff of the fixed-window increment w(s2) - w(s1); its
    conditional law given w(t2) - w(t1) = u is alpha u + X with the
    regression coefficient alpha = overlap/(t2 - t1) and X an independent
    centered Gaussian, both handled exactly.  A fixed ``t_pair`` replaces
    the outer simplex integral by the integrand at that window.
    """
    us = _check_u_list([u], d)
    u = us[0]
    _warn_small_d(d)
    if not 0.0 < r < 1.0:
        raise DomainError("correlation r must lie in (0, 1)")
    s1, s2 = float(s_pair[0]), float(s_pair[1])
    if not s1 < s2:
        raise ContractError("window must satisfy s1 < s2")
    rng = make_rng(seed, 3)
    if t_pair is None:
        t = np.sort(rng.random((n_outer, 2)), axis=1)
        vol = 0.5
    else:
        t = np.tile(np.asarray(t_pair, dtype=float), (n_outer, 1))
        vol = 1.0
    tau = t[:, 1] - t[:, 0]
    overlap = _overlap_arrays((s1, s2), t)
    alpha = overlap / tau
    var_x = np.clip((s2 - s1) - overlap ** 2 / tau, 0.0, None)
    if F1 is None:
        h1 = np.ones(n_outer)
    else:
        x = rng.standard_normal((n_outer, n_inner, d)) \
            * np.sqrt(var_x)[:, None, None]
        h1 = F1(alpha[:, None, None] * u + x).mean(axis=1)
    shift = r * u[0]
    z_scale = 1.0 - r * r
    if F2 is None:
        h2 = f.gaussian_moment(z_scale * tau, mean=shift)
    else:
        def weight(dz):
            return f(shift + math.sqrt(z_scale) * dz)
        h2 = _bm_functional_means(F2, t, weight, n_inner, rng)
    y = h1 * h2 * np.exp(_log_kernel_product(t, us, d))
    return EstimateWithError(
        float(y.mean() * vol),
        float(y.std(ddof=1) / math.sqrt(n_outer) * vol),
        n_outer * n_inner, "eta_correlated")


def eta_pairing_correlated_direct(F1, F2, f: WeightFunction, u, d, r,
                                  s_pair, eps, n, seed, t_pair=None):
    """Brute-force pre-limit oracle for the correlated pairing at fixed eps.

    Joint Monte Carlo of the smoothed kernel times all factors, with no
    conditioning; used to cross-check :func:`eta_pairing_correlated`.
    """
    us = _check_u_list([u], d)
    u = us[0]
    s1, s2 = float(s_pair[0]), float(s_pair[1])
    rng = make_rng(seed, 4)
    vals = np.empty(n)
    vol = 0.5 if t_pair is None else 1.0
    f2_times = F2.eval_times if F2 is not None else ()
    for lo in range(0, n, _CHUNK * 64):
        nb = min(_CHUNK * 64, n - lo)
        if t_pair is None:
            t = np.sort(rng.random((nb, 2)), axis=1)
        else:
            t = np.tile(np.asarray(t_pair, dtype=float), (nb, 1))
        # d-dimensional path at {s1, s2} union {t1, t2}
        times_w, pos_s, pos_t = _union_times(t, (s1, s2))
        dtw = np.clip(np.diff(times_w, axis=1), 0.0, None)
        incw = rng.standard_normal(dtw.shape + (d,)) \
            * np.sqrt(dtw)[:, :, None]
        pw = np.zeros((nb, dtw.shape[1] + 1, d))
        np.cumsum(incw, axis=1, out=pw[:, 1:, :])
        at_s = np.take_along_axis(pw, pos_s[:, :, None], axis=1)
        at_t = np.take_along_axis(pw, pos_t[:, :, None], axis=1)
        dws = at_s[:, 1] - at_s[:, 0]
        dwt = at_t[:, 1] - at_t[:, 0]
        # independent 1-d path z at {t1, t2} union F2 times
        times_z, pos_e, pos_tz = _union_times(t, f2_times or (1.0,))
        dtz = np.clip(np.diff(times_z, axis=1), 0.0, None)
        incz = rng.standard_normal(dtz.shape) * np.sqrt(dtz)
        pz = np.zeros((nb, dtz.shape[1] + 1))
        np.cumsum(incz, axis=1, out=pz[:, 1:])
        at_tz = np.take_along_axis(pz, pos_tz, axis=1)
        dz = at_tz[:, 1] - at_tz[:, 0]
        diff = dwt - u
        logw = log_heat_kernel_sq(np.sum(diff * diff, axis=-1), eps, d)
        v = np.exp(logw) * f(r * dwt[:, 0] + math.sqrt(1 - r * r) * dz)
        if F1 is not None:
            v = v * F1(dws)
        if F2 is not None:
            ev = np.take_along_axis(pz, pos_e, axis=1)
            v = v * F2(ev[..., None])
        vals[lo:lo + nb] = v
    return EstimateWithError(
        float(vals.mean() * vol),
        float(vals.std(ddof=1) / math.sqrt(n) * vol),
        n, "eta_correlated_direct")


def eta_mass_scan(f: WeightFunction, d, u_norms, q=None):
    """Total masses along a decreasing ||u|| scan plus log-log slope fit."""
    from .simplexquad import eta_mass_integral

    u_norms = [float(x) for x in u_norms]
    if any(b >= a for a, b in zip(u_norms, u_norms[1:])):
        raise ContractError("u_norms must be strictly decreasing")
    masses = []
    for norm in u_norms:
        u = np.zeros(d)
        u[0] = norm
        masses.append(eta_mass_integral(u, d, f.gaussian_moment, q))
    slope = float(np.polyfit(np.log(u_norms), np.log(masses), 1)[0])
    return list(zip(u_norms, masses)), slope


def support_check(values, u_list, tol):
    """Search ordered grid indices whose increments match every u_j.

    Greedy depth-first scan with backtracking; returns (found, witness
    indices or None).
    """
    values = np.asarray(values, dtype=float)
    us = [np.atleast_1d(np.asarray(u, dtype=float)) for u in u_list]
    m = values.shape[0]

    def rec(j, i_prev, acc):
        if j == len(us):
            return acc
        target = values[i_prev] + us[j]
        for i in range(i_prev + 1, m):
            if np.linalg.norm(values[i] - target) <= tol:
                hit = rec(j + 1, i, acc + [i])
                if hit is not None:
                    return hit
        return None

    for start in range(m - 1):
        hit = rec(0, start, [start])
        if hit is not None:
            return True, hit
    return False, None
