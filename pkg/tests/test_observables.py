import math

import numpy as np
import pytest

from lambdacavity.dynamics import propagate_amplitudes, propagate_damped
from lambdacavity.errors import ConfigError
from lambdacavity.models import ModelConfig, discretize_bath, dressed_states
from lambdacavity.observables import (
    ObservableSeries,
    entanglement_probability,
    fd_derivative,
    fidelity_to_target,
    fit_decay_rate,
    populations,
    rabi_period,
    rho44,
    stairs_metric,
    uniform_step,
)
from lambdacavity.statespace import DensityMatrix, StateVector, basis_state, build_full_basis, build_sector_basis


@pytest.mark.parametrize("order, tol", [(4, 1e-6), (2, 2e-3)])
def test_fd_derivative_accuracy(order, tol):
    t = np.linspace(0, 2, 201)
    d = fd_derivative(np.sin(3 * t), t[1] - t[0], order)
    assert np.max(np.abs(d - 3 * np.cos(3 * t))) < tol


def test_fd_derivative_exact_on_quartic():
    t = np.linspace(-1, 1, 21)
    y = t**4 - 2 * t**3 + t
    assert np.allclose(fd_derivative(y, t[1] - t[0]), 4 * t**3 - 6 * t**2 + 1, atol=1e-11)


def test_uniform_step_rejects_ragged_grid():
    with pytest.raises(ConfigError):
        uniform_step(np.array([0.0, 1.0, 3.0]))


def test_entanglement_forms_agree():
    cfg = ModelConfig(lambda_P=0.05)
    t = np.linspace(0, 25, 2501)
    traj = propagate_amplitudes(cfg, discretize_bath(1.0, 20.0, 201), t)
    ep = entanglement_probability(traj)
    assert ep.forms_agree()
    assert ep.max_discrepancy < 1e-6
    assert np.all((ep.direct.values >= 0) & (ep.direct.values <= 1))


def test_entanglement_needs_amplitudes():
    traj = propagate_damped(ModelConfig(lambda_P=1.0, kappa=0.1), np.linspace(0, 1, 11))
    with pytest.raises(ValueError):
        entanglement_probability(traj)


def test_rho44_and_populations():
    traj = propagate_damped(ModelConfig(lambda_P=1.0, kappa=0.1), np.linspace(0, 50, 501))
    r = rho44(traj)
    pops = populations(traj)
    assert r.values[0] == 0.0 and r.values[-1] > 0.5
    total = sum(pops.values())
    assert np.max(np.abs(total - 1.0)) < 1e-8


def test_fidelity_values():
    cfg = ModelConfig(lambda_P=1.0, lambda_S=1.0)
    ds = dressed_states(cfg)
    assert fidelity_to_target(ds.states["psi4"]) == pytest.approx(1.0)
    # ψ0 carries weight 2λ_P²/ε² = 2/3 on ψ3, whose atoms are in the target state
    assert fidelity_to_target(ds.states["psi0"]) == pytest.approx(2.0 / 3.0)
    assert fidelity_to_target(basis_state(build_sector_basis(), "psi1")) == 0.0


def test_fidelity_basis_invariant():
    cfg = ModelConfig(lambda_P=0.4, lambda_S=0.9)
    ds = dressed_states(cfg)
    rng = np.random.default_rng(3)
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    bare = StateVector(build_sector_basis(), amps)
    dressed_basis = ds.as_basis()
    assert fidelity_to_target(bare) == pytest.approx(fidelity_to_target(bare.in_basis(dressed_basis)), abs=1e-14)
    rho = DensityMatrix.from_state(bare)
    assert fidelity_to_target(rho) == pytest.approx(fidelity_to_target(bare), abs=1e-14)


def test_fidelity_full_basis():
    full = build_full_basis(1)
    v = np.zeros(full.dim, complex)
    space = full.product_space
    v[space.index(1, 3, 0, 0)] = v[space.index(3, 1, 0, 0)] = 1 / math.sqrt(2)
    assert fidelity_to_target(StateVector(full, v)) == pytest.approx(1.0)


def test_stairs_counts_steps():
    t = np.linspace(0, 40, 4001)
    steps = sum(0.5 * (1 + np.tanh((t - c) / 0.3)) for c in (5, 15, 25, 35)) / 4
    assert stairs_metric(ObservableSeries(t, steps, "s"), rabi_period=4.0).count == 4


def test_stairs_smooth_rise_has_none():
    t = np.linspace(0, 40, 4001)
    assert stairs_metric(ObservableSeries(t, 1 - np.exp(-t / 8), "s"), rabi_period=4.0).count == 0


def test_stairs_grid_check():
    t = np.linspace(0, 40, 41)
    with pytest.raises(ConfigError):
        stairs_metric(ObservableSeries(t, t, "s"), rabi_period=5.0)
    with pytest.raises(ConfigError):
        stairs_metric(ObservableSeries(t, t, "s"))


def test_fit_decay_rate():
    t = np.linspace(0, 100, 1001)
    assert fit_decay_rate(ObservableSeries(t, 1 - 0.7 * np.exp(-0.05 * t), "x")) == pytest.approx(0.05)


def test_rabi_period():
    assert rabi_period(math.sqrt(3)) == pytest.approx(2 * math.pi / math.sqrt(3))


def test_series_interpolation():
    s = ObservableSeries(np.array([0.0, 1.0]), np.array([0.0, 2.0]), "x")
    assert s.at(0.25) == 0.5
