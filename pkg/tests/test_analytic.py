import math
import warnings

import numpy as np
import pytest

from lambdacavity.analytic import (
    AnalyticParams,
    approx_amplitudes,
    bath_self_energy,
    bromwich_trapezoid,
    c1_prefactors,
    decay_rate,
    inverse_laplace,
    laplace_image,
    rotating_image,
    slow_exponent,
    talbot,
)
from lambdacavity.dynamics import propagate_amplitudes
from lambdacavity.errors import ConfigError, ValidityWarning
from lambdacavity.models import ModelConfig, bath_for_horizon, discretize_bath

CI = ModelConfig(lambda_P=0.05)


def test_initial_values():
    c1, c2 = approx_amplitudes(AnalyticParams(0.05, 1.0, 2.0, 102.0, 100.0), [0.0])
    assert c1[0] == 1.0 and c2[0] == 0.0
    fast, slow = c1_prefactors(AnalyticParams(0.05, 1.0, 2.0))
    assert fast + slow == 1.0


def test_decay_rate_example():
    # λ = 0.05, Δ = 2: 2λ²Γ/(Γ² + Δ²) = 0.001
    params = AnalyticParams(0.05, 1.0, 2.0)
    assert decay_rate(params) == pytest.approx(0.001, rel=1e-12)
    assert -slow_exponent(params).real == pytest.approx(0.001, rel=1e-12)


def test_decay_rate_even_in_detuning():
    assert decay_rate(AnalyticParams(0.05, 1.0, 3.0)) == decay_rate(AnalyticParams(0.05, 1.0, -3.0))


def test_slow_pole_dominates():
    # λ = 0.001, Δ = 0: |C1|² ≈ exp(−4λ²t/Γ) once t ≫ 1/Γ
    params = AnalyticParams(0.001, 1.0)
    t = np.linspace(50, 5e5, 200)
    c1, _ = approx_amplitudes(params, t)
    assert np.max(np.abs(np.abs(c1) ** 2 - np.exp(-4e-6 * t))) < 1e-5


def test_validity_warning():
    with pytest.warns(ValidityWarning):
        approx_amplitudes(AnalyticParams(0.5, 1.0), [1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        approx_amplitudes(AnalyticParams(0.05, 1.0), [1.0])
    assert not AnalyticParams(0.5, 1.0).valid


def test_bad_params():
    with pytest.raises(ConfigError):
        AnalyticParams(0.1, 0.0)
    with pytest.raises(ValueError):
        approx_amplitudes(AnalyticParams(0.05, 1.0), [1.0], c2_form="other")


def test_band_self_energy_matches_discrete_off_axis():
    bath = discretize_bath(1.0, 20.0, 401)
    q = np.array([0.5 + 0.3j, 0.5 - 2j, 1.0 + 10j])
    disc = bath_self_energy(q, bath, CI, "discrete")
    band = bath_self_energy(q, bath, CI, "band")
    # Euler-Maclaurin remainder of the midpoint-widened band
    assert np.max(np.abs(disc - band)) < 1e-5


def test_markov_limit_of_band():
    bath = discretize_bath(1.0, 1e6, 3)
    q = np.array([0.1 + 0.2j])
    assert abs(bath_self_energy(q, bath, CI, "band")[0] - 1.0) < 1e-5


def test_corrected_image_large_s():
    bath = discretize_bath(1.0, 20.0, 201)
    s = np.array([1e7 + 0j, 3e7 + 5e6j])
    assert np.max(np.abs(s * laplace_image(s, CI, bath) - 1.0)) < 1e-4


def test_printed_image_fails_initial_value_theorem():
    bath = discretize_bath(1.0, 20.0, 201)
    s = np.array([1e7 + 0j])
    assert abs(s[0] * laplace_image(s, CI, bath, form="printed")[0] - 1.0) > 0.5


def test_image_pole_guard():
    bath = discretize_bath(1.0, 20.0, 3)
    cfg = ModelConfig(lambda_P=0.0)
    with pytest.raises(ZeroDivisionError):
        laplace_image(np.array([-1j * cfg.omega_P]), cfg, bath)


def test_talbot_known_transform():
    t = np.array([0.5, 1.0, 3.0])
    got = talbot(lambda s: 1.0 / (s + 1.0 - 2.0j), t)
    assert np.max(np.abs(got - np.exp((-1.0 + 2.0j) * t))) < 1e-10


def test_trapezoid_known_transform():
    t = np.array([0.5, 1.0, 3.0])
    got = bromwich_trapezoid(lambda s: 1.0 / (s + 1.0 - 2.0j), t)
    assert np.max(np.abs(got - np.exp((-1.0 + 2.0j) * t))) < 1e-6


@pytest.fixture(scope="module")
def exact_leaky():
    t = np.linspace(0, 2000, 401)
    bath = bath_for_horizon(1.0, 20.0, t[-1])
    return t, bath, propagate_amplitudes(CI, bath, t)


def test_laplace_c1_matches_exact(exact_leaky):
    t, bath, traj = exact_leaky
    assert np.max(np.abs(inverse_laplace(CI, bath, t) - traj.amplitude("psi1"))) < 1e-6


def test_laplace_c2_matches_exact(exact_leaky):
    t, bath, traj = exact_leaky
    c2 = inverse_laplace(CI, bath, t, which="c2", check_tol=1e-5)
    assert np.max(np.abs(c2 - traj.amplitude("psi2"))) < 1e-5


def test_printed_c2_beats_i_corrected(exact_leaky):
    t, bath, traj = exact_leaky
    params = AnalyticParams.from_config(CI, 1.0)
    _, printed = approx_amplitudes(params, t, "printed")
    _, other = approx_amplitudes(params, t, "i_corrected")
    exact = traj.amplitude("psi2")
    assert np.max(np.abs(printed - exact)) < 5e-3
    assert np.max(np.abs(other - exact)) > 10 * np.max(np.abs(printed - exact))


def test_discrete_image_inversion_matches_rk():
    bath = discretize_bath(1.0, 20.0, 201)
    t = np.linspace(0.5, 25, 50)
    exact = propagate_amplitudes(CI, bath, t, method="rk").amplitude("psi1")
    got = inverse_laplace(CI, bath, t, continuum="discrete")
    assert np.max(np.abs(got - exact)) < 1e-6


@pytest.mark.parametrize("delta", [1.0, 2.0, 4.0])
def test_second_order_against_infinite_band(delta):
    # against the Markov continuum the second-order forms hold for every detuning
    cfg = CI.replace(delta_P=delta)
    params = AnalyticParams.from_config(cfg, 1.0)
    t = np.linspace(0, 10 / decay_rate(params), 301)
    bath = bath_for_horizon(1.0, 20.0, t[-1])
    c1, _ = approx_amplitudes(params, t)
    ref = inverse_laplace(cfg, bath, t, continuum="markov")
    assert np.max(np.abs(c1 - ref)) < 5e-3


def test_rotating_image_t0_limit():
    bath = discretize_bath(1.0, 20.0, 201)
    s = np.array([1e5 + 0j])
    assert abs(s[0] * rotating_image(s, CI, bath, "band")[0] - 1.0) < 1e-4
    assert inverse_laplace(CI, bath, [0.0])[0] == 1.0
    assert inverse_laplace(CI, bath, [0.0], which="c2")[0] == 0.0


def test_unknown_continuum():
    with pytest.raises(ConfigError):
        bath_self_energy(np.array([1.0]), discretize_bath(1, 1, 3), CI, "nope")


def test_expansion_parameter():
    assert AnalyticParams(0.05, 1.0, 0.0).expansion_parameter == pytest.approx(0.05)
    assert AnalyticParams(0.05, 3.0, 4.0).expansion_parameter == pytest.approx(0.01)
    assert math.isclose(decay_rate(AnalyticParams(0.001, 1.0)), 2e-6)
