import numpy as np
import pytest

from lambdacavity.dynamics import (
    LINDBLAD_TOLERANCES,
    Tolerances,
    Trajectory,
    check_invariants,
    propagate_amplitudes,
    propagate_damped,
    propagate_effective,
    propagate_lindblad,
    propagate_state,
)
from lambdacavity.errors import ConfigError, IntegrationError, RecurrenceError
from lambdacavity.models import (
    ModelConfig,
    bath_for_horizon,
    collapse_operator,
    discretize_bath,
    frame_generator,
    full_hamiltonian,
    integrals_of_motion,
    single_mode_hamiltonian,
)
from lambdacavity.observables import fd_derivative
from lambdacavity.statespace import DensityMatrix, StateVector, basis_state, build_reduced_basis, build_sector_basis

CI = ModelConfig(lambda_P=0.05)


@pytest.fixture(scope="module")
def small_bath():
    return discretize_bath(1.0, 20.0, 201)


@pytest.fixture(scope="module")
def rk_run(small_bath):
    t = np.linspace(0, 25, 2501)
    return propagate_amplitudes(CI, small_bath, t, method="rk")


def test_rk_matches_spectral(small_bath, rk_run):
    sp = propagate_amplitudes(CI, small_bath, rk_run.times, method="spectral")
    assert np.max(np.abs(sp.amplitude("psi1") - rk_run.amplitude("psi1"))) < 1e-8
    assert np.max(np.abs(sp.amplitude("psi2") - rk_run.amplitude("psi2"))) < 1e-8


@pytest.mark.parametrize("delta", [1.0, -2.0])
def test_rk_matches_spectral_detuned(small_bath, delta):
    cfg = CI.replace(delta_P=delta)
    t = np.linspace(0, 25, 501)
    rk = propagate_amplitudes(cfg, small_bath, t, method="rk")
    sp = propagate_amplitudes(cfg, small_bath, t, method="spectral")
    assert np.max(np.abs(sp.amplitude("psi1") - rk.amplitude("psi1"))) < 1e-8


def test_norm_conserved(rk_run):
    assert np.max(np.abs(rk_run.norm - 1.0)) < 1e-8


def test_completeness(rk_run):
    # Σ|C3k|² computed from the stored states equals the closure 1 − |C1|² − |C2|²
    closure = 1.0 - rk_run.population("psi1") - rk_run.population("psi2")
    assert np.max(np.abs(rk_run.series["bath_population"] - closure)) < 1e-8


def test_cross_amplitude_identity(rk_run):
    # C2 = (i dC1/dt − ω_P C1)/(√2 λ_P), with the derivative from samples
    t = rk_run.times
    dt = t[1] - t[0]
    c1 = rk_run.amplitude("psi1")
    slow = c1 * np.exp(1j * CI.omega_P * t)
    d4 = fd_derivative(slow, dt, 4)
    d2 = fd_derivative(slow, dt, 2)
    c2_fd = 1j * d4 * np.exp(-1j * CI.omega_P * t) / (np.sqrt(2) * CI.lambda_P)
    trunc = np.abs(d4 - d2) / (np.sqrt(2) * CI.lambda_P)
    assert np.max(np.abs(c2_fd - rk_run.amplitude("psi2"))) < 10 * np.max(trunc)


def test_linearity():
    basis = build_reduced_basis(5)
    bath = discretize_bath(1.0, 2.0, 5)
    h = full_hamiltonian(CI, bath, basis)
    frame = frame_generator(CI, basis)
    t = np.linspace(0, 20, 201)
    tol = Tolerances(rtol=1e-11, atol=1e-13, method="DOP853")
    a, b = basis_state(basis, "psi1"), basis_state(basis, "psi3_2")
    alpha, beta = 0.6, 0.8j
    mix = StateVector(basis, alpha * a.amplitudes + beta * b.amplitudes)
    sa, sb, sm = (propagate_state(h, s, t, tol, frame).states for s in (a, b, mix))
    assert np.max(np.abs(sm - (alpha * sa + beta * sb))) < 1e-9


def test_frame_is_exact():
    basis = build_reduced_basis(3)
    bath = discretize_bath(1.0, 2.0, 3)
    h = full_hamiltonian(CI, bath, basis)
    t = np.linspace(0, 2, 41)
    tol = Tolerances(rtol=1e-12, atol=1e-14, method="DOP853", max_step=0.005)
    lab = propagate_state(h, basis_state(basis, "psi1"), t, tol)
    rot = propagate_state(h, basis_state(basis, "psi1"), t, tol, frame_generator(CI, basis))
    assert np.max(np.abs(lab.states - rot.states)) < 1e-8


def test_recurrence_guard(small_bath):
    with pytest.raises(RecurrenceError):
        propagate_amplitudes(CI, small_bath, np.linspace(0, 40, 11))
    traj = propagate_amplitudes(CI, small_bath, np.linspace(0, 40, 11), allow_recurrence=True)
    assert len(traj.times) == 11


def test_window_budget_enforced():
    bath = bath_for_horizon(1.0, 20.0, 1000.0)
    with pytest.raises(IntegrationError):
        propagate_amplitudes(CI, bath, np.linspace(0, 1000, 11), window_gaps=3)


def test_windowed_spectral_accuracy():
    bath = bath_for_horizon(1.0, 20.0, 1000.0)
    t = np.linspace(0, 1000, 201)
    full = propagate_amplitudes(CI, bath, t)
    win = propagate_amplitudes(CI, bath, t, Tolerances(spectral_budget=1e-3), window_gaps=2000)
    assert win.diagnostics["omitted_weight"] < 1e-3
    assert np.max(np.abs(win.amplitude("psi1") - full.amplitude("psi1"))) <= win.diagnostics["omitted_weight"]


def test_bad_grid():
    with pytest.raises(ConfigError):
        propagate_amplitudes(CI, discretize_bath(1, 20, 201), [0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), "amplitudes")


def test_lindblad_fixed_point():
    cfg = ModelConfig(lambda_P=1.0, lambda_S=1.0, kappa=0.1)
    basis = build_sector_basis()
    rho0 = DensityMatrix.from_state(basis_state(basis, "psi4"))
    t = np.linspace(0, 10, 11)
    traj = propagate_lindblad(single_mode_hamiltonian(cfg, basis), collapse_operator(basis), cfg.kappa,
                              rho0, t, frame=frame_generator(cfg, basis))
    drift = np.max(np.abs(traj.rho - rho0.data[None]), axis=(1, 2))
    assert np.all(drift <= 1e-10 * np.maximum(t, 1.0))


def test_lindblad_zero_kappa_is_unitary():
    cfg = ModelConfig(lambda_P=0.8, lambda_S=1.1)
    basis = build_sector_basis()
    t = np.linspace(0, 30, 301)
    h = single_mode_hamiltonian(cfg, basis)
    frame = frame_generator(cfg, basis)
    tol = Tolerances(rtol=1e-11, atol=1e-13, method="DOP853")
    psi = propagate_state(h, basis_state(basis, "psi1"), t, tol, frame).states
    rho = propagate_damped(cfg, t).rho
    assert np.max(np.abs(rho - np.einsum("ti,tj->tij", psi, psi.conj()))) < 1e-8


def test_damped_invariants():
    cfg = ModelConfig(lambda_P=1.0, lambda_S=1.0, kappa=0.1)
    t = np.linspace(0, 300, 3001)
    traj = propagate_damped(cfg, t)
    assert np.max(np.abs(traj.diagnostics["trace"] - 1.0)) < 1e-8
    assert traj.diagnostics["min_eigenvalue"].min() >= -1e-8
    n_p, _ = integrals_of_motion(traj.basis)
    rep = check_invariants(traj, {"N_P": n_p})
    assert rep.passed


def test_damped_monotone_asymptote():
    # κ_eff = κ/3 for λ_P = λ_S; horizon beyond 5/κ_eff
    cfg = ModelConfig(lambda_P=1.0, lambda_S=1.0, kappa=0.1)
    t = np.linspace(0, 200, 4001)
    r44 = propagate_damped(cfg, t).population("psi4")
    assert r44[-1] > r44[len(t) // 2]


def test_effective_rk_matches_spectral():
    cfg = CI.replace(raman_detuning=1.0)
    bath = discretize_bath(1.0, 20.0, 201)
    t = np.linspace(0, 25, 251)
    rk = propagate_effective(cfg, t, bath=bath, method="rk")
    sp = propagate_effective(cfg, t, bath=bath, method="spectral")
    assert np.max(np.abs(rk.amplitude("psi1") - sp.amplitude("psi1"))) < 1e-8


def test_effective_single_mode_rabi():
    cfg = ModelConfig(lambda_P=1.0, lambda_S=1.0, raman_detuning=50.0)
    t = np.linspace(0, 200, 401)
    traj = propagate_effective(cfg, t, Tolerances(rtol=1e-10, atol=1e-12))
    g = np.sqrt(2) * 0.02
    assert np.max(np.abs(traj.population("psi1") - np.cos(g * t) ** 2)) < 1e-8


def test_effective_damped_needs_no_bath():
    cfg = ModelConfig(lambda_P=1.0, lambda_S=1.0, raman_detuning=50.0, kappa=0.1)
    with pytest.raises(ConfigError):
        propagate_effective(cfg, [0.0, 1.0], bath=discretize_bath(1, 1, 3), damped=True)
