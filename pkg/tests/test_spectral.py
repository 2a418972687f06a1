import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdacavity.spectral import arrowhead_spectrum, window_around


def dense_generator(hub, sat, g, e0, dw, w, n):
    """Reference matrix ordered (satellite, hub, band...)."""
    m = np.zeros((n + 2, n + 2))
    m[0, 0], m[1, 1] = sat, hub
    m[0, 1] = m[1, 0] = g
    m[2:, 1] = m[1, 2:] = np.sqrt(w)
    m[np.arange(2, n + 2), np.arange(2, n + 2)] = e0 + dw * np.arange(n)
    return m


def reference_amplitudes(m, t):
    ev, vec = np.linalg.eigh(m)
    ph = np.exp(-1j * np.outer(t, ev))
    return ph @ (vec[0] * vec[0]), ph @ (vec[1] * vec[0]), ph @ (vec[1] * vec[1])


@settings(max_examples=40, deadline=None)
@given(hub=st.floats(-3, 3), g=st.floats(0.01, 1.0), e0=st.floats(-6, -4), n=st.integers(3, 60),
       w=st.floats(1e-4, 0.3))
def test_arrowhead_matches_dense(hub, g, e0, n, w):
    dw = 10.0 / n
    spec = arrowhead_spectrum(hub, 0.0, g, e0, dw, w, n)
    t = np.linspace(0, 40, 101)
    ref_sat, ref_cross, ref_hub = reference_amplitudes(dense_generator(hub, 0.0, g, e0, dw, w, n), t)
    got = spec.evolve_many(t, ("sat", "cross", "hub"))
    assert np.max(np.abs(got["sat"] - ref_sat)) < 1e-10
    assert np.max(np.abs(got["cross"] - ref_cross)) < 1e-10
    assert np.max(np.abs(got["hub"] - ref_hub)) < 1e-10


def test_satellite_on_band_level_gives_dark_state():
    # satellite exactly degenerate with band level k = 5
    n, dw, e0 = 21, 0.5, -5.0
    spec = arrowhead_spectrum(0.3, e0 + 5 * dw, 0.2, e0, dw, 0.02, n)
    assert spec.dark_weight > 0
    t = np.linspace(0, 60, 121)
    ref, _, _ = reference_amplitudes(dense_generator(0.3, e0 + 5 * dw, 0.2, e0, dw, 0.02, n), t)
    assert np.max(np.abs(spec.evolve(t) - ref)) < 1e-10


def test_decoupled_satellite_is_stationary():
    spec = arrowhead_spectrum(0.0, 0.7, 0.0, -5.0, 0.5, 0.02, 21)
    t = np.linspace(0, 10, 11)
    assert np.allclose(spec.evolve(t), np.exp(-0.7j * t), atol=1e-15)


def test_weights_sum_to_one():
    spec = arrowhead_spectrum(0.0, 0.0, 0.1, -20.0, 0.01, 0.01 / np.pi, 4001)
    assert spec.omitted_sat_weight < 1e-12
    assert spec.omitted_hub_weight < 1e-12


def test_window_bounds_error():
    n, dw, e0 = 40001, 0.001, -20.0
    w = dw / np.pi
    full = arrowhead_spectrum(0.0, 0.0, np.sqrt(2) * 0.05, e0, dw, w, n)
    win = arrowhead_spectrum(0.0, 0.0, np.sqrt(2) * 0.05, e0, dw, w, n, window_around(0.0, e0, dw, n, 2000))
    assert win.windowed and len(win.energies) < len(full.energies)
    t = np.linspace(0, 300, 301)
    err = np.max(np.abs(win.evolve(t) - full.evolve(t)))
    assert err <= win.omitted_sat_weight + 1e-12


def test_phasor_recurrence_matches_direct():
    spec = arrowhead_spectrum(0.0, 0.0, 0.1, -20.0, 0.01, 0.01 / np.pi, 4001)
    t = np.linspace(0, 500, 5001)
    fast = spec.evolve_many(t, ("sat",))["sat"]
    direct = np.exp(-1j * np.outer(t, spec.energies)) @ spec.sat_weight + spec.dark_weight * np.exp(
        -1j * spec.dark_energy * t)
    assert np.max(np.abs(fast - direct)) < 1e-11


@pytest.mark.parametrize("energy, expect", [(0.0, (10, 30)), (-100.0, (0, 10)), (100.0, (29, 40))])
def test_window_around_clips(energy, expect):
    assert window_around(energy, -2.0, 0.1, 41, 10) == expect
