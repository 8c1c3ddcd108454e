import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdmdc import synth
from hdmdc.errors import DivergenceError, InvalidInputError


def test_density_vanishes_at_zero_frequency():
    spec = synth.WaveSpec()
    assert synth.jonswap_density(np.array([1e-3, 1e-2]), spec).max() < 1e-100


def test_density_peak_at_peak_frequency():
    spec = synth.WaveSpec(tp=9.2)
    w = np.linspace(0.3, 2.0, 200_001)
    peak = w[np.argmax(synth.jonswap_density(w, spec))]
    assert peak == pytest.approx(2 * np.pi / 9.2, abs=1e-4)
    assert peak == pytest.approx(0.683, abs=1e-3)


@given(st.lists(st.floats(0.0, 50.0), min_size=1, max_size=50))
def test_density_nonnegative(ws):
    assert np.all(synth.jonswap_density(np.array(ws), synth.WaveSpec()) >= 0)


def test_density_variance_is_hs_squared_over_16():
    spec = synth.WaveSpec(hs=7.0, tp=9.2)
    w = np.linspace(1e-3, 60.0, 2_000_001)
    var = np.trapezoid(synth.jonswap_density(w, spec), w)
    assert var == pytest.approx(7.0**2 / 16, rel=1e-4)


def test_component_amplitudes():
    spec = synth.WaveSpec(seed=3)
    omega, amp, phase = synth.wave_components(spec)
    d_omega = (spec.omega_max - spec.omega_min) / (spec.n_components - 1)
    np.testing.assert_allclose(amp, np.sqrt(2 * synth.jonswap_density(omega, spec) * d_omega))
    assert np.all((phase >= 0) & (phase < 2 * np.pi))
    assert omega[0] == spec.omega_min and omega[-1] == pytest.approx(spec.omega_max)


def test_elevation_vanishes_in_null_spectrum_limit():
    t = np.arange(200) * 0.3
    big = synth.synthesize_wave(synth.WaveSpec(hs=1.0), t)
    tiny = synth.synthesize_wave(synth.WaveSpec(hs=1e-12), t)
    # elevation is linear in hs with phases fixed by the seed
    np.testing.assert_allclose(tiny, 1e-12 * big, atol=1e-25)
    assert np.max(np.abs(tiny)) < 1e-10


def test_signal_variance_parseval():
    spec = synth.WaveSpec(seed=5)
    _, amp, _ = synth.wave_components(spec)
    t = np.arange(400_000) * 0.5
    eta = synth.synthesize_wave(spec, t)
    assert eta.var() == pytest.approx(np.sum(amp**2) / 2, rel=0.05)


def test_wave_is_deterministic_per_seed():
    t = np.arange(100) * 0.3
    a = synth.synthesize_wave(synth.WaveSpec(seed=1), t)
    b = synth.synthesize_wave(synth.WaveSpec(seed=1), t)
    c = synth.synthesize_wave(synth.WaveSpec(seed=2), t)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_non_uniform_grid_rejected():
    with pytest.raises(InvalidInputError):
        synth.synthesize_wave(synth.WaveSpec(), np.array([0.0, 1.0, 3.0]))


def test_linear_zero_system():
    sys_ = synth.linear_system(np.zeros((2, 2)), np.zeros((2, 1)))
    X = synth.simulate_linear(sys_, [1.0, 2.0], np.ones((1, 4)))
    np.testing.assert_array_equal(X[:, 1:], 0)


def test_linear_geometric():
    sys_ = synth.linear_system(np.array([[0.5]]), np.array([[0.0]]))
    X = synth.simulate_linear(sys_, [1.0], np.zeros((1, 4)))
    np.testing.assert_array_equal(X[0], [1, 0.5, 0.25, 0.125, 0.0625])


def test_linear_hand_iteration(rng):
    sys_ = synth.random_stable_system(3, 2, rng)
    x = rng.standard_normal(3)
    U = rng.standard_normal((2, 5))
    X = synth.simulate_linear(sys_, x, U)
    for j in range(5):
        x = sys_.A_true @ x + sys_.B_true @ U[:, j]
        np.testing.assert_allclose(X[:, j + 1], x, rtol=1e-14)


def test_random_stable_radius(rng):
    sys_ = synth.random_stable_system(5, 1, rng, radius=0.8)
    assert np.max(np.abs(np.linalg.eigvals(sys_.A_true))) == pytest.approx(0.8)


def duffing(cubic=0.0, damping=0.2, dt=0.05):
    return synth.OracleSystem(kind="duffing", dt=dt, stiffness=1.0, cubic=cubic, damping=damping, gain=1.0)


def test_duffing_linear_limit_matches_closed_form():
    d = 0.2
    sys_ = duffing(damping=d, dt=2 * np.pi / 400)
    T = 10 * 400 + 1
    X = synth.simulate_duffing(sys_, (1.0, 0.0), np.zeros(T))
    t = sys_.dt * np.arange(T)
    zeta = d / 2
    wd = np.sqrt(1 - zeta**2)
    x = np.exp(-zeta * t) * (np.cos(wd * t) + zeta / wd * np.sin(wd * t))
    assert np.max(np.abs(X[0] - x)) < 1e-6


def test_duffing_zero_stays_zero():
    X = synth.simulate_duffing(duffing(cubic=1.0), (0.0, 0.0), np.zeros(100))
    np.testing.assert_array_equal(X, 0)


def test_duffing_rk4_order():
    # forcing is linear in time so the interpolated forcing is exact on every grid
    T_end = 10.0

    def run(dt):
        n = int(round(T_end / dt)) + 1
        f = 0.1 * dt * np.arange(n)
        return synth.simulate_duffing(duffing(cubic=1.0, dt=dt), (0.5, 0.0), f)[:, -1]

    a, b, c = run(0.1), run(0.05), run(0.025)
    ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
    assert 12 < ratio < 20  # 2^4 = 16 for a fourth-order scheme


def test_duffing_divergence_reports_step():
    sys_ = synth.OracleSystem(kind="duffing", dt=0.5, stiffness=1.0, cubic=-5.0, damping=0.0, gain=1.0)
    with pytest.raises(DivergenceError) as exc:
        synth.simulate_duffing(sys_, (10.0, 0.0), np.zeros(1000))
    assert exc.value.step is not None and exc.value.step > 0


def test_duffing_benchmark_shape():
    r = synth.duffing_benchmark(2, n_periods=5, observed=("x", "xdot"))
    assert r.n == 2 and r.l == 1 and r.m == 160
    assert r.samples_per_period == pytest.approx(32)
    r1 = synth.duffing_benchmark(2, n_periods=5)
    np.testing.assert_array_equal(r1.state[0], r.state[0])
