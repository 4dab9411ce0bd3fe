"""Built-in invariant suites runnable from the command line.

Each check is a named callable; the runner stops reporting success at the
first violated invariant so a corrupted build points straight at the
earliest broken layer (kernel identities are checked before everything
that consumes them).
"""

import math

import numpy as np

from . import chaos, estimators, kernels, sampler, simplexquad, variational


def _check_heat_kernel():
    z = np.array([1.0, 1.0])
    got = kernels.log_heat_kernel(z, 0.5, 2)
    want = math.log(1.0 / math.pi) - 2.0
    assert abs(got - want) < 1e-12, f"heat kernel off: {got} vs {want}"
    norms = np.linspace(0.0, 5.0, 40)
    vals = [kernels.log_heat_kernel(np.array([r, 0.0]), 0.3, 2)
            for r in norms]
    assert np.all(np.diff(vals) < 0.0), "kernel not monotone in ||z||"


def _check_hermite():
    rng = np.random.default_rng(0)
    for x in rng.uniform(-10, 10, 25):
        for n in range(2, 40):
            lhs = kernels.hermite_eval(n + 1, x)
            rhs = x * kernels.hermite_eval(n, x) \
                - n * kernels.hermite_eval(n - 1, x)
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs)), \
                "Hermite recurrence violated"
    assert kernels.hermite_eval(3, 2.0) == 2.0


def _check_mass_dual_route():
    for norm in (0.5, 2.0):
        u = np.array([norm, 0.0, 0.0, 0.0])
        a = simplexquad.mass_m(u, 4)
        b = simplexquad.mass_m_direct(u, 4)
        assert abs(a - b) <= 1e-8 * abs(b), \
            f"mass dual-route mismatch at ||u||={norm}: {a} vs {b}"


def _check_wick_identity():
    e0 = chaos.ChaosSpectrum(np.array([1.0, 0.0, 0.0]))
    b = chaos.ChaosSpectrum(np.array([0.5, 1.5, 2.5]))
    c = chaos.wick_convolve(e0, b)
    assert np.allclose(c.levels[:3], b.levels), \
        "Wick identity element broken"
    two = chaos.wick_convolve(chaos.ChaosSpectrum(np.array([1.0, 1.0])),
                              chaos.ChaosSpectrum(np.array([1.0, 1.0])))
    assert np.allclose(two.levels, [1.0, 2.0, 1.0])


def _check_wick_inequality(n_cases):
    rng = np.random.default_rng(42)
    for _ in range(n_cases):
        a = chaos.ChaosSpectrum(rng.uniform(0, 10, rng.integers(1, 41)))
        b = chaos.ChaosSpectrum(rng.uniform(0, 10, rng.integers(1, 41)))
        g1, g2 = rng.uniform(-3.0, -0.1, 2)
        lhs, _ = chaos.sobolev_norm_sq(chaos.wick_convolve(a, b),
                                       chaos.SobolevIndex(g1 + g2))
        ra, _ = chaos.sobolev_norm_sq(a, chaos.SobolevIndex(g1))
        rb, _ = chaos.sobolev_norm_sq(b, chaos.SobolevIndex(g2))
        assert lhs <= ra * rb * (1.0 + 1e-12), "Wick norm inequality violated"


def _check_gap_identity():
    u = np.array([1.0, 0.0, 0.0, 0.0])
    det = simplexquad.gap_reduced_integral(
        simplexquad.SimplexIntegrand(4, (u,))).value
    mc, se = simplexquad.mc_simplex_raw([u], 4, 200000, seed=5)
    assert abs(det - mc) <= 3.0 * se, "gap reduction disagrees with raw MC"


def _check_conditioned_residuals(n):
    grid = sampler.TimeGrid(np.linspace(0, 1, 33))
    cons = sampler.IncrementConstraintSet(
        (((0.25, 0.5, np.array([1.0, -0.5, 0.0, 2.0])),)))
    _, vals = sampler.sample_conditioned_bm(grid, cons, 4, seed=9, n=n)
    g = grid.with_times([0.25, 0.5])
    i1, i2 = g.index_of(0.25), g.index_of(0.5)
    res = np.abs(vals[:, i2] - vals[:, i1]
                 - np.array([1.0, -0.5, 0.0, 2.0])).max()
    assert res <= 1e-12, f"constraint residual {res} above 1e-12"


def _check_cm_martingale(n):
    grid = sampler.TimeGrid(np.linspace(0, 1, 33))
    rng = sampler.make_rng(11, 0)
    incs = sampler.sample_bm_increments(grid, 2, n, rng)
    phi = sampler.shift_on_grid(grid, [0.0, 1.0],
                                [[0.0, 0.0], [1.0, -0.5]])
    _, logw = sampler.cameron_martin_weight(grid, incs, phi)
    w = np.exp(logw)
    err = abs(w.mean() - 1.0)
    assert err <= 3.0 * w.std(ddof=1) / math.sqrt(n), \
        "importance weights are not mean-one"


def _check_energy_minimizer(n_cases):
    rng = np.random.default_rng(3)
    for _ in range(n_cases):
        k = int(rng.integers(2, 4))
        us = [rng.normal(size=4) for _ in range(k - 1)]
        prog = variational.ConstraintProgram(
            increments=tuple((None, None, u) for u in us))
        _, val, _ = variational.minimize_energy(prog, n_restarts=2)
        want = variational.closed_form_inf(us)
        assert abs(val - want) <= 1e-6 * max(1.0, want), \
            f"energy minimum {val} vs closed form {want}"


def _check_slope_fit():
    t = np.array([4.0, 8.0, 12.0, 16.0])
    L, _ = variational.ldp_slope_fit(list(zip(t, 0.5 - 1.0 / t ** 2)))
    assert abs(L - 0.5) < 1e-10, "slope fit misses exact model"


def _check_support():
    grid = sampler.TimeGrid(np.linspace(0, 1, 65))
    u = np.array([0.8, 0.0])
    cons = sampler.IncrementConstraintSet(((0.25, 0.75, u),))
    path = sampler.sample_conditioned_bm(grid, cons, 2, seed=21)
    ok, _ = estimators.support_check(path.values, [u], tol=1e-9)
    assert ok, "conditioned path missing its own constraint witness"


def _check_estimator_duality(budget):
    u = np.array([1.0, 0.0, 0.0, 0.0])
    F = estimators.gaussian_bump((1.0,), np.zeros(4))
    n = int(math.sqrt(budget))
    bridge = estimators.pairing_bridge(F, [u], 4, n, n, seed=31)
    epsd, _ = estimators.pairing_epsilon(F, [u], 4, (0.04, 0.02, 0.01),
                                         budget // 3, seed=32)
    assert bridge.agrees_with(epsd, 3.0), \
        f"bridge {bridge.value} vs epsilon {epsd.value} beyond 3 sigma"


def _check_eta_scan():
    f = estimators.WeightFunction("abs_power", 0.5)
    _, slope = estimators.eta_mass_scan(f, 4, [2.0 ** -m for m in range(6)])
    assert slope >= -2.6, f"eta mass scan slope {slope} below -2.6"


def checks_for(tier):
    quick = [
        ("heat-kernel-closed-form", _check_heat_kernel),
        ("hermite-recurrence", _check_hermite),
        ("mass-dual-route", _check_mass_dual_route),
        ("wick-identity-element", _check_wick_identity),
        ("wick-norm-inequality", lambda: _check_wick_inequality(100)),
        ("gap-reduction-vs-raw-mc", _check_gap_identity),
        ("conditioned-residuals", lambda: _check_conditioned_residuals(2000)),
        ("cameron-martin-mean-one", lambda: _check_cm_martingale(20000)),
        ("energy-closed-form", lambda: _check_energy_minimizer(3)),
        ("slope-fit-exact-model", _check_slope_fit),
        ("support-witness", _check_support),
    ]
    if tier == "quick":
        return quick
    return quick + [
        ("wick-norm-inequality-full", lambda: _check_wick_inequality(1000)),
        ("estimator-duality", lambda: _check_estimator_duality(250000)),
        ("eta-mass-scan-slope", _check_eta_scan),
        ("energy-closed-form-full", lambda: _check_energy_minimizer(10)),
    ]


def run_selfcheck(tier="quick", report=print):
    """Run the invariant suite; returns True iff every check passed."""
    if tier not in ("quick", "full"):
        raise ValueError("tier must be 'quick' or 'full'")
    for name, fn in checks_for(tier):
        try:
            fn()
        except AssertionError as exc:
            report(f"FAIL {name}: {exc}")
            return False
        report(f"PASS {name}")
    return True
