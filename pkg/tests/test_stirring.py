import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ive

from ssep_lab import InsufficientObservables, InvalidProfile, Profile, TestFunction, WindowTooSmall
from ssep_lab.seeding import derive
from ssep_lab.stirring import (BACKENDS, Configuration, LatticeWindow, ObservableSpec, SimulationPlan, evolve,
                               martingale_decomposition, sample_initial_configuration, site_probabilities)

TANH = Profile.tanh_ramp(0.3, 0.7, 0.0, 1.0)


def _window(n=4, T=0.5, sites=(0, 1)):
    return LatticeWindow.around(n, sites, T)


def test_initial_mean_constant_half():
    w = LatticeWindow(8, -64, 64, enforce_margin=False)
    prof = Profile.constant(0.5)
    draws = np.array([sample_initial_configuration(prof, w, derive(11, r)).occupancy[64] for r in range(10000)])
    se = np.sqrt(0.25 / draws.size)
    assert abs(draws.mean() - 0.5) <= 3 * se


def test_initial_probability_at_tanh_centre():
    w = LatticeWindow(8, -10, 10, enforce_margin=False)
    assert site_probabilities(TANH, w)[10] == pytest.approx(0.5, abs=1e-15)


def test_sampling_rejects_constant_one():
    with pytest.raises(InvalidProfile):
        Profile.constant(1.0)


def test_window_margin_rule():
    w = LatticeWindow(10, -20, 20)
    with pytest.raises(WindowTooSmall):
        w.check_sites([0], 1.0)
    LatticeWindow.around(10, [0], 1.0).check_sites([0], 1.0)


def test_full_window_has_no_current():
    w = _window(sites=(0, 4))
    cfg = Configuration(np.ones(w.nsites, np.uint8), w)
    s = evolve(cfg, 0.5, [ObservableSpec("current", (0.1, 0.5), site=0, centred=False),
                          ObservableSpec("current", (0.5,), site=3, centred=False)], seed=1)
    assert np.all(s.raw["current:0"] == 0) and np.all(s.raw["current:3"] == 0)


def test_empty_window_is_silent():
    w = _window()
    cfg = Configuration(np.zeros(w.nsites, np.uint8), w)
    s = evolve(cfg, 0.5, [ObservableSpec("current", (0.5,), site=0, centred=False),
                          ObservableSpec("occupation", (0.2, 0.5), site=1, centred=False)], seed=2)
    assert np.all(s.raw["current:0"] == 0) and np.all(s.raw["occupation:1"] == 0)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_single_particle_current_matches_walk(backend):
    n, t, R = 4, 0.1, 20000
    w = _window(n, t)
    occ = np.zeros(w.nsites, np.uint8)
    occ[w.index(0)] = 1
    plan = SimulationPlan(w, t, [ObservableSpec("current", (t,), site=0, centred=False)], backend=backend)
    J = np.array([plan.run(Configuration(occ, w), seed=derive(5, r)).raw["current:0"][0] for r in range(R)])
    lam = 2 * n * n * t
    exact = ive(np.arange(1, 200), lam).sum()
    assert abs(J.mean() - exact) <= 4 * J.std(ddof=1) / np.sqrt(R)


def test_backends_agree_bit_for_bit():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    w = _window(5, 0.4, (0, 1, 2))
    specs = [ObservableSpec("current", (0.1, 0.4), site=0), ObservableSpec("occupation", (0.2, 0.4), site=1),
             ObservableSpec("occupation", (0.4,), site=2), ObservableSpec("occupancy", (0.3,), site=0)]
    init = sample_initial_configuration(TANH, w, 9)
    out = {}
    for name in BACKENDS:
        s = SimulationPlan(w, 0.4, specs, TANH, backend=name).run(init, seed=77)
        out[name] = s
    a, b = out["python"], out["compiled"]
    for key in a.raw:
        assert np.array_equal(a.raw[key], b.raw[key])
    assert a.event_count == b.event_count
    assert np.array_equal(a.final.occupancy, b.final.occupancy)


def test_particle_number_conserved():
    w = _window(6, 0.3)
    init = sample_initial_configuration(TANH, w, 4)
    s = evolve(init, 0.3, [ObservableSpec("current", (0.3,), site=0)], seed=3)
    assert s.final.particles == init.particles


@given(st.integers(0, 2**32))
def test_current_is_net_crossings(seed):
    # with a single particle the current equals the indicator that it sits right of the bond
    w = _window(3, 0.2)
    occ = np.zeros(w.nsites, np.uint8)
    occ[w.index(0)] = 1
    s = evolve(Configuration(occ, w), 0.2, [ObservableSpec("current", (0.2,), site=0, centred=False)], seed=seed)
    pos = int(np.flatnonzero(s.final.occupancy)[0]) + w.x_lo
    assert s.raw["current:0"][0] == int(pos >= 1)


def test_kv_block_length_one_vanishes():
    w = _window(5, 0.3)
    init = sample_initial_configuration(TANH, w, 8)
    s = evolve(init, 0.3, [ObservableSpec("kv_block", (0.1, 0.3), site=0, ell=1)], seed=5)
    assert np.all(s.raw["kv:1@0"] == 0.0)


def test_density_field_zero_test_function():
    w = _window(5, 0.3)
    init = sample_initial_configuration(TANH, w, 8)
    H = TestFunction.triangle(0.0, 0.5, 0.0)
    s = evolve(init, 0.3, [ObservableSpec("density_field", (0.1, 0.3), H=H, centred=False)], seed=5)
    assert np.all(s.raw["density:triangle"] == 0.0)


def test_density_field_initial_variance():
    n, R = 20, 4000
    H = TestFunction.ramp(0.0, 1.0)
    w = LatticeWindow.around(n, range(-1, n + 2), 0.01)
    plan = SimulationPlan(w, 0.01, [ObservableSpec("density_field", (0.0,), H=H)], TANH)
    vals = np.array([plan.run(sample_initial_configuration(TANH, w, derive(3, r)), seed=derive(4, r))
                     .values["density:ramp"][0] for r in range(R)])
    xs = np.arange(0, n + 1)
    g = np.clip(1 - xs / n, 0, None)
    rho = TANH(xs / n)
    exact = np.sum(g * g * rho * (1 - rho)) / n
    var = vals.var(ddof=1)
    se = np.std((vals - vals.mean()) ** 2, ddof=1) / np.sqrt(R)
    assert abs(var - exact) <= 4 * se


def test_martingale_vanishes_when_full():
    w = _window(4, 0.5)
    cfg = Configuration(np.ones(w.nsites, np.uint8), w)
    specs = [ObservableSpec("current", (0.25, 0.5), site=0, centred=False),
             ObservableSpec("occupation", (0.25, 0.5), site=0, centred=False),
             ObservableSpec("occupation", (0.25, 0.5), site=1, centred=False)]
    m = martingale_decomposition(evolve(cfg, 0.5, specs, seed=1), 0)
    assert np.all(m.values == 0)


def test_martingale_requires_observables():
    w = _window(4, 0.5)
    cfg = Configuration(np.ones(w.nsites, np.uint8), w)
    s = evolve(cfg, 0.5, [ObservableSpec("current", (0.5,), site=0)], seed=1)
    with pytest.raises(InsufficientObservables):
        martingale_decomposition(s, 0)


def test_martingale_mean_zero_and_bracket_bound():
    n, T, R = 5, 0.4, 10000
    times = (0.1, 0.2, 0.4)
    w = _window(n, T)
    specs = [ObservableSpec("current", times, site=0, centred=False),
             ObservableSpec("occupation", times, site=0, centred=False),
             ObservableSpec("occupation", times, site=1, centred=False)]
    plan = SimulationPlan(w, T, specs, TANH)
    M = np.empty((R, len(times)))
    for r in range(R):
        init = sample_initial_configuration(TANH, w, derive(21, 2 * r))
        m = martingale_decomposition(plan.run(init, seed=derive(21, 2 * r + 1)), 0)
        M[r] = m.values
        assert np.all(m.bracket <= n * n * np.asarray(times) + 1e-9)
        assert np.all(m.bracket >= -1e-9)
    se = M.std(axis=0, ddof=1) / np.sqrt(R)
    assert np.all(np.abs(M.mean(axis=0)) <= 3 * se)


def test_run_requires_time_zero():
    w = _window()
    cfg = Configuration(np.zeros(w.nsites, np.uint8), w, time=0.5)
    with pytest.raises(Exception):
        evolve(cfg, 1.0, [ObservableSpec("current", (1.0,), site=0)], seed=1)


def test_backend_override(monkeypatch):
    from ssep_lab.stirring import backend

    monkeypatch.setenv("SSEP_LAB_BACKEND", "python")
    assert backend.default_backend() == "python"
    monkeypatch.setenv("SSEP_LAB_BACKEND", "fortran")
    with pytest.raises(ImportError):
        backend.default_backend()


@given(st.integers(0, 2**32))
@settings(max_examples=15)
def test_current_occupancy_conservation(seed):
    w = _window(5, 0.2, (-1, 0, 1, 2))
    init = sample_initial_configuration(TANH, w, seed)
    times = (0.0, 0.05, 0.2)
    specs = [ObservableSpec("occupancy", times, site=x, centred=False) for x in (0, 1)]
    specs += [ObservableSpec("current", times, site=x, centred=False) for x in (-1, 0, 1)]
    s = evolve(init, 0.2, specs, seed=seed + 1)
    for x in (0, 1):
        occ = s.raw[f"occupancy:{x}"]
        assert np.array_equal(occ - occ[0], s.raw[f"current:{x - 1}"] - s.raw[f"current:{x}"])


def test_equilibrium_currents_have_mean_zero():
    n, T, R = 6, 0.3, 3000
    w = _window(n, T, (0, 3))
    eq = Profile.constant(0.5)
    plan = SimulationPlan(w, T, [ObservableSpec("current", (T,), site=x) for x in (0, 3)], eq)
    J = np.array([[plan.run(sample_initial_configuration(eq, w, derive(8, 2 * r)), seed=derive(8, 2 * r + 1))
                   .values[k][0] for k in ("current:0", "current:3")] for r in range(R)])
    assert np.all(np.abs(J.mean(axis=0)) <= 3 * J.std(axis=0, ddof=1) / np.sqrt(R))


def test_event_count_matches_clock_rate():
    n, T = 10, 1.0
    w = _window(n, T)
    init = sample_initial_configuration(TANH, w, 1)
    s = evolve(init, T, [ObservableSpec("current", (T,), site=0)], seed=2)
    mean = w.nedges * n * n * T
    assert abs(s.event_count - mean) <= 5 * np.sqrt(mean)


def test_determinism_same_seed():
    w = _window(5, 0.3)
    init = sample_initial_configuration(TANH, w, 3)
    specs = [ObservableSpec("current", (0.1, 0.3), site=0), ObservableSpec("occupation", (0.3,), site=1)]
    a, b = evolve(init, 0.3, specs, seed=4), evolve(init, 0.3, specs, seed=4)
    assert all(np.array_equal(a.values[k], b.values[k]) for k in a.values)
