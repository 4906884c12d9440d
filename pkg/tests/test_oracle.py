import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ive

from ssep_lab import Profile, SystemTooLarge
from ssep_lab.oracle import (LabelledSystem, SmallSystem, coupling_tau_tail, dyadic_grid, evolve_distribution,
                             exact_correlation, gradient_scan, lex_transition, meeting_time_closed_form,
                             meeting_time_oracle, poisson_window, uniformize)

TANH = Profile.tanh_ramp(0.3, 0.7, 0.0, 1.0)


def test_poisson_window_mass():
    w = poisson_window(250.0, 1e-12)
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-11)
    assert w.left > 0


def test_uniformize_two_state_chain():
    # flip chain at rate lam: P(same state at t) = (1 + e^{-2 lam t}) / 2
    res = uniformize(lambda v: v[::-1].copy(), np.array([1.0, 0.0]), 1.7)
    assert res.vector[0] == pytest.approx(0.5 * (1 + math.exp(-3.4)), abs=1e-12)


def test_small_system_cap():
    with pytest.raises(SystemTooLarge):
        SmallSystem(17, 4)


def test_evolve_identity_at_zero():
    sysm = SmallSystem(6, 3)
    d = sysm.product_measure(TANH)
    assert np.allclose(evolve_distribution(sysm, d, 0.0).dist, d, atol=1e-15)


def test_evolve_mixes_within_particle_class():
    sysm = SmallSystem(6, 1)
    d = np.zeros(sysm.nstates)
    start = 0b000111
    d[start] = 1.0
    out = evolve_distribution(sysm, d, 60.0).dist
    same = np.array([bin(s).count("1") == 3 for s in range(sysm.nstates)])
    assert np.allclose(out[same], 1 / same.sum(), atol=1e-9)
    assert np.all(out[~same] == 0)


def test_one_particle_matches_bessel():
    sysm = SmallSystem(16, 1)
    d = np.zeros(sysm.nstates)
    d[1 << 8] = 1.0
    out = evolve_distribution(sysm, d, 0.1, tol=1e-14).dist
    pos = np.array([out[1 << i] for i in range(16)])
    exact = ive(np.abs(np.arange(16) - 8), 0.2)
    assert np.allclose(pos, exact, atol=1e-10)


def test_correlation_time_zero():
    sysm = SmallSystem(8, 4, x0=-4)
    assert exact_correlation(sysm, TANH, [0.0, 0.0], [[-1], [2]]) == pytest.approx(0.0, abs=1e-12)
    rho = float(TANH(1 / 4))
    assert exact_correlation(sysm, TANH, [0.0, 0.0], [[1], [1]]) == pytest.approx(rho * (1 - rho), abs=1e-12)


def test_correlation_at_equilibrium_distinct_sites_stays_zero():
    # a product Bernoulli measure with constant density is invariant
    sysm = SmallSystem(8, 3)
    assert exact_correlation(sysm, Profile.constant(0.4), [0.3, 0.3], [[2], [5]]) == pytest.approx(0, abs=1e-12)


def test_lex_transition_basics():
    sysm = LabelledSystem(8, 2, 2)
    assert lex_transition(sysm, (1, 3), (1, 3), 0.0) == 1.0
    assert lex_transition(sysm, (1, 3), (3, 1), 0.0) == 0.0
    v = np.zeros(sysm.nstates)
    v[sysm.state((2, 5))] = 1.0
    row = sysm.evolve(v, 0.4)
    assert row.sum() == pytest.approx(1.0, abs=1e-10)


def test_lex_single_particle_is_walk():
    sysm = LabelledSystem(24, 1, 1)
    for y in range(8, 17):
        assert lex_transition(sysm, (12,), (y,), 0.15) == pytest.approx(ive(abs(y - 12), 0.3), abs=1e-10)


@settings(max_examples=10)
@given(st.integers(0, 9), st.integers(0, 9), st.floats(0.0, 1.0))
def test_lex_rows_are_stochastic(a, b, t):
    if a == b:
        return
    sysm = _LAB
    v = np.zeros(sysm.nstates)
    v[sysm.state((a, b))] = 1.0
    assert sysm.evolve(v, t).sum() == pytest.approx(1.0, abs=1e-10)


_LAB = LabelledSystem(10, 2, 1)


def test_gradient_scan_time_zero():
    for k in (1, 2):
        g = gradient_scan(k, [0.0], 4, sites=10)
        assert g.raw_sup[0] <= 1.0 and g.scaled_sup[0] <= 1.0


def test_gradient_k1_constant_stable_across_n():
    consts = [gradient_scan(1, dyadic_grid(1e-3, 1.0), n).constant for n in (4, 8, 16)]
    assert max(consts) / min(consts) <= 3.0


def test_gradient_k1_lattice_matches_finite_system():
    # interior starting points of a wide finite system do not feel the walls at short times
    times = [0.01, 0.05]
    lat = gradient_scan(1, times, 4)
    sysm = LabelledSystem(24, 1, 4)
    for t, sup in zip(times, lat.raw_sup):
        a = np.zeros(sysm.nstates)
        a[sysm.state((11,))] = 1.0
        b = np.zeros(sysm.nstates)
        b[sysm.state((12,))] = 1.0
        diff = np.abs(sysm.evolve(a, t, 1e-14) - sysm.evolve(b, t, 1e-14)).max()
        assert diff == pytest.approx(sup, abs=1e-9)


def test_gradient_k2_finite_no_growth():
    g = gradient_scan(2, dyadic_grid(1e-3, 1.0), 16, sites=16)
    assert not g.trend_flag
    assert np.all(np.isfinite(g.scaled_sup))


def test_coupling_starts_uncoupled():
    est = coupling_tau_tail(1, [0], 1, [0.0], 8, 500, 1)
    assert est.tail[0] == 1.0


def test_coupling_long_time_small_tail():
    n = 8
    est = coupling_tau_tail(1, [0], 1, [1e4 / n ** 2], n, 2000, 2)
    assert est.tail[0] < 0.05


@pytest.mark.parametrize("k,start", [(1, [0]), (2, [0, 5])])
def test_coupling_matches_meeting_oracle(k, start):
    n = 8
    times = np.array([0.1, 0.4, 1.6, 6.4]) / n ** 2
    est = coupling_tau_tail(k, start, 1, times, n, 20000, 3)
    exact = np.array([meeting_time_oracle(t, n).tail for t in times])
    assert np.all(np.abs(est.tail - exact) <= 4 * np.maximum(est.se, 1e-12))


def test_meeting_oracle_trivial_and_closed_form():
    assert meeting_time_oracle(0.0, 8).tail == 1.0
    for t in (0.001, 0.02, 0.3):
        assert meeting_time_oracle(t, 8).tail == pytest.approx(meeting_time_closed_form(t, 8), abs=1e-9)


def test_meeting_oracle_truncation_self_check():
    t, n = 0.1, 8
    a = meeting_time_oracle(t, n, max_distance=60).tail
    b = meeting_time_oracle(t, n, max_distance=120).tail
    assert abs(a - b) < 1e-8


def test_meeting_tail_scaling_stable():
    consts = []
    for n in (8, 16, 32):
        ts = dyadic_grid(0.1, 1000.0) / n ** 2
        consts.append(max(meeting_time_oracle(t, n).tail * math.sqrt(n * n * t + 1) for t in ts))
    assert max(consts) / min(consts) < 1.5


def test_uniformisation_tolerance_halving():
    sysm = SmallSystem(8, 3)
    d = sysm.product_measure(TANH)
    a = evolve_distribution(sysm, d, 0.2, tol=1e-10).dist
    b = evolve_distribution(sysm, d, 0.2, tol=5e-11).dist
    assert np.max(np.abs(a - b)) <= 10 * 1e-10


def test_generator_rows_sum_to_zero():
    G = SmallSystem(6, 2).generator()
    assert np.allclose(np.asarray(G.sum(axis=1)).ravel(), 0.0)
    off = G - __import__("scipy.sparse", fromlist=["diags"]).diags(G.diagonal())
    assert off.min() >= 0
    L = LabelledSystem(8, 2, 2).generator
    assert np.allclose(np.asarray(L.sum(axis=1)).ravel(), 0.0)


def test_coupling_marginals_are_exclusion_processes():
    from ssep_lab.oracle import simulate_coupling

    n, t, R = 1, 0.4, 20000
    start = [5, 8]
    _, snap = simulate_coupling(2, start, 1, t, n, R, 6, record=t)
    sysm = LabelledSystem(24, 2, n)
    # snap columns: particle 1 at x_1, particle 2 at x_1 + 1, then x_2; X drops column 1, Y drops column 0
    for cols, origin in (([0, 2], (5, 8)), ([1, 2], (6, 8))):
        pos = snap[:, cols]
        for target in [origin, (origin[0] + 1, origin[1]), (origin[0], origin[1] - 1)]:
            f = np.mean(np.all(pos == target, axis=1))
            se = math.sqrt(max(f * (1 - f), 1e-12) / R)
            exact = lex_transition(sysm, [o + 8 for o in origin], [x + 8 for x in target], t)
            assert abs(f - exact) <= 4 * se + 1e-9


def test_exact_correlation_vanishes_in_equilibrium():
    sysm = SmallSystem(8, 4, x0=-4)
    eq = Profile.constant(0.3)
    assert abs(exact_correlation(sysm, eq, [0.1, 0.1], [[-1], [1]])) < 1e-10
    assert abs(exact_correlation(sysm, eq, [0.1], [[-1, 2]])) < 1e-10


def _two_point_lattice(prof, n, t, x1, x2):
    """Exact same-time correlation on a window wide enough to stand in for the lattice."""
    L = int(16 * n * math.sqrt(2 * t)) + 12
    off = L // 2
    two = LabelledSystem(L, 2, n, max_sites=L)
    one = LabelledSystem(L, 1, n, max_sites=L)
    rho = prof(np.arange(L) - off)
    f = np.array([rho[a] * rho[b] for a, b in two.states])
    joint = two.evolve(f, t)[two.state((x1 + off, x2 + off))]
    g = one.evolve(rho[[a for (a,) in one.states]], t)
    return joint - g[one.state((x1 + off,))] * g[one.state((x2 + off,))]


def test_two_point_correlation_decays_like_inverse_n():
    from ssep_lab.mclab import loglog_fit

    ns = (4, 8, 16)
    vals = []
    for n in ns:
        prof = lambda x, n=n: TANH(np.asarray(x) / n)
        vals.append(abs(_two_point_lattice(prof, n, 0.2, 0, 1)))
    assert -1.3 <= loglog_fit(ns, vals).slope <= -0.7
