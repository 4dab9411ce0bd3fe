import math

import numpy as np
import pytest

from thetalab.chaos import (ChaosSpectrum, IncrementSpec, SobolevIndex,
                            delta_increment_spectrum, norm_bound_delta,
                            sobolev_norm_sq, sobolev_partial_sums,
                            wick_convolve)
from thetalab.errors import CapacityError, DomainError
from thetalab.kernels import N_MAX, heat_kernel


def test_spectrum_validation():
    with pytest.raises(ValueError):
        ChaosSpectrum(np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        ChaosSpectrum(np.array([np.inf]))
    with pytest.raises(ValueError):
        ChaosSpectrum(np.array([]))
    sp = ChaosSpectrum(np.array([1.0, 2.0, 3.0]))
    assert sp.truncation_K == 2


def test_spectrum_json_round_trip():
    sp = ChaosSpectrum(np.array([0.5, 0.0, 2.25]), tail_bound=1e-4)
    back = ChaosSpectrum.from_json(sp.to_json())
    assert np.array_equal(back.levels, sp.levels)
    assert back.tail_bound == sp.tail_bound


def test_sobolev_norm_frozen_oracle():
    # levels (1,1,1), gamma = -1: 1 + 1/2 + 1/3
    sp = ChaosSpectrum(np.ones(3))
    val, last = sobolev_norm_sq(sp, SobolevIndex(-1.0))
    assert val == pytest.approx(1.8333333333333333, abs=1e-12)
    assert last == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_partial_sums_consistent():
    sp = ChaosSpectrum(np.array([2.0, 1.0, 4.0]))
    sums = sobolev_partial_sums(sp, SobolevIndex(-2.0))
    val, _ = sobolev_norm_sq(sp, SobolevIndex(-2.0))
    assert sums[-1] == pytest.approx(val, rel=1e-14)
    assert np.all(np.diff(sums) >= 0.0)


def test_delta_spectrum_level_zero_oracle():
    # a_0 = p^d_{t-s}(u)^2; frozen for u=1, tau=1, d=1
    sp = delta_increment_spectrum(
        IncrementSpec(np.array([1.0]), 0.0, 1.0), 1, 5)
    assert sp.levels[0] == pytest.approx(0.05854983152431917, rel=1e-10)


def test_delta_spectrum_mehler_resummation():
    # sum_k a_k z^k = p^2 prod_j (1-z^2)^{-1/2} exp(x_j^2 z/(1+z))
    u = np.array([0.8, -0.5])
    tau = 0.6
    x = u / math.sqrt(tau)
    sp = delta_increment_spectrum(IncrementSpec(u, 0.2, 0.8), 2, 500)
    z = 0.3
    got = float(np.sum(sp.levels * z ** np.arange(501)))
    p2 = float(heat_kernel(u, tau, 2)) ** 2
    want = p2 * (1.0 - z * z) ** -1.0 \
        * math.exp(float(np.sum(x * x)) * z / (1.0 + z))
    assert got == pytest.approx(want, rel=1e-10)


def test_delta_spectrum_nonnegative_and_errors():
    sp = delta_increment_spectrum(
        IncrementSpec(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 0.3), 4, 60)
    assert np.all(sp.levels >= 0.0)
    with pytest.raises(DomainError):
        delta_increment_spectrum(
            IncrementSpec(np.zeros(4), 0.0, 0.5), 4, 10)
    with pytest.raises(DomainError):
        delta_increment_spectrum(
            IncrementSpec(np.array([1.0, 0.0]), 0.0, 0.5), 4, 10)
    with pytest.raises(CapacityError):
        delta_increment_spectrum(
            IncrementSpec(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 0.5),
            4, N_MAX + 1)


def test_increment_spec_time_window():
    with pytest.raises(DomainError):
        IncrementSpec(np.array([1.0]), 0.5, 0.5)
    with pytest.raises(DomainError):
        IncrementSpec(np.array([1.0]), 0.0, 1.5)


def test_wick_identity_element():
    e0 = ChaosSpectrum(np.array([1.0]))
    b = ChaosSpectrum(np.array([0.5, 1.5, 2.5]))
    c = wick_convolve(e0, b)
    assert np.allclose(c.levels, b.levels)


def test_wick_binomial_oracle():
    two = wick_convolve(ChaosSpectrum(np.array([1.0, 1.0])),
                        ChaosSpectrum(np.array([1.0, 1.0])))
    assert np.allclose(two.levels, [1.0, 2.0, 1.0])
    assert two.truncation_K == 2


def test_wick_norm_inequality_fuzz():
    rng = np.random.default_rng(7)
    for _ in range(300):
        a = ChaosSpectrum(rng.uniform(0, 5, rng.integers(1, 30)))
        b = ChaosSpectrum(rng.uniform(0, 5, rng.integers(1, 30)))
        g1, g2 = rng.uniform(-3.0, -0.1, 2)
        lhs, _ = sobolev_norm_sq(wick_convolve(a, b),
                                 SobolevIndex(g1 + g2))
        ra, _ = sobolev_norm_sq(a, SobolevIndex(g1))
        rb, _ = sobolev_norm_sq(b, SobolevIndex(g2))
        assert lhs <= ra * rb * (1.0 + 1e-12)


def test_norm_bound_regime_guard():
    spec = IncrementSpec(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 0.5)
    with pytest.raises(DomainError):
        norm_bound_delta(spec, 4, SobolevIndex(-2.0))   # gamma >= -d/2
    with pytest.raises(DomainError):
        norm_bound_delta(spec, 4, SobolevIndex(-2.5), alpha=0.6)


def test_norm_bound_dominates_on_grid():
    for norm, tau in ((0.5, 0.3), (2.0, 0.5), (4.0, 1.0)):
        u = np.array([norm, 0.0, 0.0, 0.0])
        spec = IncrementSpec(u, 0.0, tau)
        sp = delta_increment_spectrum(spec, 4, 500)
        val, _ = sobolev_norm_sq(sp, SobolevIndex(-2.5))
        bound = norm_bound_delta(spec, 4, SobolevIndex(-2.5))
        assert math.sqrt(val) <= bound * (1.0 + 1e-9)
