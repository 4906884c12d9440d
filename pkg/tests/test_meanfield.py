import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ive

from ssep_lab import Profile
from ssep_lab.meanfield import HeatField, QuadratureSettings, heat_kernel_integral, walk_kernel
from ssep_lab.oracle import uniformize

TANH = Profile.tanh_ramp(0.2, 0.8, 0.0, 1.0)


def _reflecting_walk_density(profile, n, t, half):
    """Mean density at site 0 from the one-particle chain on [-half, half] by uniformisation."""
    sites = np.arange(-half, half + 1)
    rho0 = profile(sites / n)

    def step(v):
        # each site jumps left or right with probability 1/2; reflected jumps stay
        left = np.concatenate([v[:1], v[:-1]])
        right = np.concatenate([v[1:], v[-1:]])
        return 0.5 * (left + right)

    res = uniformize(step, rho0, 2.0 * n * n * t, 1e-14)
    return res.vector[half]


def test_constant_density_is_stationary():
    hf = HeatField(Profile.constant(0.37), n=10)
    for t in (0.0, 0.01, 1.0, 5.0):
        assert np.allclose(hf.discrete_density(np.arange(-20, 21), t), 0.37, atol=1e-12)


@given(st.integers(-40, 40), st.floats(0.0, 2.0))
def test_discrete_density_maximum_principle(x, t):
    hf = HeatField(TANH, n=8)
    v = hf.discrete_density(x, t)
    assert 0.2 - 1e-12 <= v <= 0.8 + 1e-12


def test_discrete_density_matches_one_particle_chain():
    hf = HeatField(TANH, n=4)
    exact = _reflecting_walk_density(TANH, 4, 0.1, 120)
    assert hf.discrete_density(0, 0.1) == pytest.approx(exact, abs=1e-8)


@pytest.mark.parametrize("x", [-3, 0, 2, 7])
def test_discrete_density_matches_chain_off_centre(x):
    n, t = 5, 0.2
    prof = Profile.tanh_ramp(0.3, 0.6, 0.4, 0.7)
    shifted = Profile.tanh_ramp(0.3, 0.6, 0.4 - x / n, 0.7)
    exact = _reflecting_walk_density(shifted, n, t, 150)
    assert HeatField(prof, n=n).discrete_density(x, t) == pytest.approx(exact, abs=1e-8)


def test_walk_kernel_is_bessel():
    k = walk_kernel(3.5)
    assert np.allclose(k.q[:10], ive(np.arange(10), 3.5), atol=1e-15)
    assert k.discarded < 1e-10


def test_time_integral_constant():
    hf = HeatField(Profile.constant(0.3), n=20)
    v, err = hf.discrete_density_time_integral(5, 2.0)
    assert v == pytest.approx(0.6, abs=1e-12) and err == 0.0


def test_time_integral_zero_time():
    v, err = HeatField(TANH, n=20).discrete_density_time_integral(0, 0.0)
    assert v == 0.0 and err == 0.0


def test_time_integral_tolerance_halving_consistent():
    coarse = HeatField(TANH, n=50, settings=QuadratureSettings(abs_tol=1e-9))
    fine = HeatField(TANH, n=50, settings=QuadratureSettings(abs_tol=5e-10))
    a, ea = coarse.discrete_density_time_integral(0, 1.0)
    b, _ = fine.discrete_density_time_integral(0, 1.0)
    assert abs(a - b) < ea


def test_expected_current_constant_is_zero():
    assert HeatField(Profile.constant(0.5), n=10).expected_current(0, 1.0) == 0.0


def test_expected_current_equals_mass_transfer():
    hf = HeatField(TANH, n=6)
    t = 0.3
    ys = np.arange(1, 400)
    direct = np.sum(hf.discrete_density(ys, t) - TANH(ys / 6))
    assert hf.expected_current(0, t) == pytest.approx(direct, abs=1e-10)


def test_continuum_constant():
    hf = HeatField(Profile.constant(0.6))
    assert hf.continuum_density(1.0, 0.3) == pytest.approx(0.6, abs=1e-14)
    assert hf.continuum_gradient(1.0, 0.3) == pytest.approx(0.0, abs=1e-14)


def test_continuum_small_time_limit():
    hf = HeatField(TANH)
    for u in (-0.7, 0.0, 0.5):
        assert hf.continuum_density(1e-8, u) == pytest.approx(float(TANH(u)), abs=1e-6)


@pytest.mark.parametrize("t,u", [(0.1, 0.0), (0.5, -0.8), (2.0, 1.3)])
def test_gradient_matches_finite_difference(t, u):
    hf = HeatField(TANH)
    h = 1e-5
    fd = (hf.continuum_density(t, u + h) - hf.continuum_density(t, u - h)) / (2 * h)
    assert hf.continuum_gradient(t, u) == pytest.approx(fd, rel=1e-5)


def test_source_term_constant_is_zero():
    hf = HeatField(Profile.constant(0.4))
    assert hf.source_term(0.5, np.linspace(-3, 3, 7)) == pytest.approx(np.zeros(7), abs=1e-15)


def test_source_term_linear_profile():
    # far from the hinges the smoothed linear profile keeps slope b
    b = 0.05
    prof = Profile.piecewise_linear([[-5, 0.5 - 5 * b], [5, 0.5 + 5 * b]])
    hf = HeatField(prof)
    assert hf.source_term(0.01, 0.0) == pytest.approx(2 * b * b, abs=1e-6)


@pytest.mark.parametrize("t,u", [(0.2, 0.1), (0.8, -0.5)])
def test_source_term_matches_finite_difference(t, u):
    hf = HeatField(TANH)
    h = 1e-4

    def X(tt, uu):
        r = hf.continuum_density(tt, uu)
        return r * (1 - r)

    dt = (X(t + h, u) - X(t - h, u)) / (2 * h)
    lap = (X(t, u + h) - 2 * X(t, u) + X(t, u - h)) / (h * h)
    assert hf.source_term(t, u) == pytest.approx(dt - lap, rel=1e-4)


@given(st.floats(0.01, 3.0), st.floats(-3, 3))
def test_heat_kernel_integral_matches_quadrature(a, x):
    from scipy.integrate import quad

    from ssep_lab.meanfield import heat_kernel

    # r = w^2 removes the inverse square root at r = 0
    ref, _ = quad(lambda w: 2 * w * heat_kernel(w * w, 0.0, x) if w > 0 else 1 / math.sqrt(math.pi),
                  0.0, math.sqrt(a), epsabs=1e-13, limit=200)
    assert heat_kernel_integral(a, x) == pytest.approx(ref, abs=1e-9)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(-2, 2))
def test_semigroup_property(s, dt, u):
    # T_{s+dt} rho0 = T_dt (T_s rho0): integrate rho(s, .) against the kernel of time dt
    from scipy.integrate import quad

    from ssep_lab.meanfield import heat_kernel

    hf = HeatField(TANH)
    sig = math.sqrt(2 * dt)
    val, _ = quad(lambda v: heat_kernel(dt, u, v) * hf.continuum_density(s, v), u - 10 * sig, u + 10 * sig,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    assert val == pytest.approx(hf.continuum_density(s + dt, u), abs=1e-8)


def test_discrete_to_continuum_rate():
    t = 0.2
    consts = []
    for n in (10, 20, 40, 80):
        hf = HeatField(TANH, n=n)
        xs = np.arange(-2 * n, 2 * n + 1)
        err = np.max(np.abs(hf.discrete_density(xs, t) - hf.continuum_density(t, xs / n)))
        consts.append(err * n)
    # |rho^n_t(x) - rho(t, x/n)| <= C/n: the scaled error must not grow with n
    assert all(b <= a * (1 + 1e-9) for a, b in zip(consts, consts[1:]))
    assert consts[0] < 1e-2


def test_local_clt_switchover_matches_bessel_series(monkeypatch):
    import ssep_lab.meanfield as mf

    lam = 2.0e6
    exact = mf.walk_kernel(lam).q
    monkeypatch.setattr(mf, "LCLT_THRESHOLD", lam / 2)
    approx = mf.walk_kernel(lam).q
    m = min(exact.size, approx.size)
    # the local CLT error is O(lam^{-3/2}) against a peak of order lam^{-1/2}
    assert np.max(np.abs(exact[:m] - approx[:m])) <= 10 * lam ** -1.5
