"""Reported quantities: entanglement probability, ρ44, fidelity to the target state, plateau counts."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks

from .errors import ConfigError
from .statespace import INV_SQRT2, Basis, DensityMatrix, StateVector

log = logging.getLogger(__name__)

PROBABILITY_SLACK = 1e-9


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    name: str
    metadata: dict = field(default_factory=dict)

    def at(self, t: float) -> float:
        """Linear interpolation of the series at time ``t``."""
        return float(np.interp(t, self.times, self.values))


def _clamp_probability(values: np.ndarray, name: str):
    """Clamp to [0, 1]; values outside the slack window are logged as warnings."""
    lo, hi = float(values.min()), float(values.max())
    meta = {"raw_min": lo, "raw_max": hi, "clamped": int(np.sum((values < 0) | (values > 1)))}
    if lo < -PROBABILITY_SLACK or hi > 1 + PROBABILITY_SLACK:
        log.warning("%s outside [0, 1] beyond slack: min %.3e max %.3e", name, lo, hi)
    if meta["clamped"]:
        log.info("clamped %d samples of %s to [0, 1]", meta["clamped"], name)
    return np.clip(values, 0.0, 1.0), meta


def uniform_step(times: np.ndarray, rtol: float = 1e-9) -> float:
    dt = np.diff(times)
    if len(dt) == 0 or np.max(np.abs(dt - dt[0])) > rtol * max(abs(dt[0]), abs(times[-1])):
        raise ConfigError("a uniform time grid is required")
    return float(dt[0])


def fd_derivative(values: np.ndarray, dt: float, order: int = 4) -> np.ndarray:
    """Finite-difference derivative on a uniform grid.

    ``order=4`` uses the 5-point centred stencil inside and 5-point one-sided
    stencils at the two points nearest each end; ``order=2`` uses numpy's
    second-order gradient.
    """
    if order == 2:
        return np.gradient(values, dt, edge_order=2)
    if order != 4:
        raise ValueError("order must be 2 or 4")
    y = np.asarray(values)
    if len(y) < 5:
        raise ConfigError("need at least 5 samples for the 4th-order stencil")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * dt)
    fwd = np.array([-25, 48, -36, 16, -3]) / 12.0
    d[0] = fwd @ y[:5] / dt
    d[1] = np.array([-3, -10, 18, -6, 1]) / 12.0 @ y[:5] / dt
    d[-1] = -(fwd @ y[-1:-6:-1]) / dt
    d[-2] = -(np.array([-3, -10, 18, -6, 1]) / 12.0 @ y[-1:-6:-1]) / dt
    return d


@dataclass
class EntanglementProbability:
    """Both forms of the entangled-state probability and their disagreement.

    ``fd_error`` is a per-sample estimate of the truncation error of the
    derivative form (from the gap between 2nd- and 4th-order stencils).
    """

    direct: ObservableSeries
    derivative_form: ObservableSeries
    discrepancy: np.ndarray
    fd_error: np.ndarray

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.discrepancy))

    def forms_agree(self, factor: float = 10.0) -> bool:
        """Sup-norm discrepancy within ``factor`` times the sup-norm truncation estimate."""
        return self.max_discrepancy < factor * float(np.max(self.fd_error))


def entanglement_probability(traj, lambda_P: float | None = None, omega_P: float | None = None) -> EntanglementProbability:
    """Σ_k|C3k|² directly and as 1 − |C1|² − |iĊ1 − ω_P C1|²/(2λ_P²).

    Ċ1 comes from finite differences of the stored samples, never from the
    integrator.  The fast optical phase is divided out before
    differentiating, since |iĊ1 − ω_P C1| = |d/dt (e^{iω_P t} C1)|.
    """
    if traj.kind != "amplitudes":
        raise ValueError("entanglement_probability needs an amplitude trajectory")
    try:
        c1 = traj.amplitude("psi1")
        bath_pop = traj.series["bath_population"]
    except KeyError as exc:
        raise ValueError(f"trajectory lacks amplitude data: {exc}") from None
    cfg = traj.metadata.get("config")
    lam = lambda_P if lambda_P is not None else cfg.lambda_P
    wp = omega_P if omega_P is not None else cfg.omega_P
    t = traj.times
    meta = {"model": traj.metadata.get("model"), "method": traj.diagnostics.get("method")}
    direct, cmeta = _clamp_probability(np.asarray(bath_pop, dtype=float), "P_entangled")
    direct_series = ObservableSeries(t, direct, "P_entangled_direct", {**meta, **cmeta})
    if lam == 0:
        raise ValueError("the derivative form needs lambda_P > 0")
    dt = uniform_step(t)
    slow = c1 * np.exp(1j * wp * t)
    d4 = fd_derivative(slow, dt, 4)
    d2 = fd_derivative(slow, dt, 2)
    deriv = 1.0 - np.abs(c1) ** 2 - np.abs(d4) ** 2 / (2.0 * lam**2)
    e = np.abs(d4 - d2)
    fd_err = (2.0 * np.abs(d4) * e + e**2) / (2.0 * lam**2)
    deriv_series = ObservableSeries(t, deriv, "P_entangled_derivform", meta)
    return EntanglementProbability(direct_series, deriv_series, np.abs(direct - deriv), fd_err)


def rho44(traj) -> ObservableSeries:
    """Population ⟨ψ4|ρ(t)|ψ4⟩ of the photon-free entangled state."""
    if traj.kind != "density":
        raise ValueError("rho44 needs a density-matrix trajectory")
    if "psi4" not in traj.basis:
        raise ValueError("trajectory basis has no psi4 state")
    vals = traj.population("psi4")
    vals, meta = _clamp_probability(vals, "rho44")
    return ObservableSeries(traj.times, vals, "rho44", {**meta, "model": traj.metadata.get("model")})


def populations(traj) -> dict:
    """Diagonal populations per basis state of a density trajectory."""
    return {name: traj.population(name) for name in traj.basis.names}


def _target_projector(basis: Basis) -> np.ndarray:
    """Matrix of |T><T| ⊗ 1_field on ``basis``, T = (|1,3> + |3,1>)/√2."""
    target = np.zeros(9)
    target[0 * 3 + 2] = target[2 * 3 + 0] = INV_SQRT2
    v = basis.embedding.toarray().reshape(9, -1, basis.dim)
    overlap = np.einsum("a,afd->fd", target, v)
    return overlap.conj().T @ overlap


def fidelity_to_target(state) -> float:
    """Weight of the maximally entangled atomic state (|1,3> + |3,1>)/√2, traced over the fields.

    Accepts a StateVector or DensityMatrix over any basis; the overlap is
    taken in product space, so the result does not depend on the basis.
    """
    proj = _target_projector(state.basis)
    if isinstance(state, StateVector):
        a = state.amplitudes
        return float(np.vdot(a, proj @ a).real)
    if isinstance(state, DensityMatrix):
        return float(np.trace(proj @ state.data).real)
    raise TypeError("expected a StateVector or DensityMatrix")


@dataclass
class PlateauReport:
    count: int
    locations: np.ndarray
    smoothing_width: float
    prominence: float
    metadata: dict = field(default_factory=dict)


def stairs_metric(series: ObservableSeries, smoothing_window: float | None = None, *,
                  rabi_period: float | None = None, rel_prominence: float = 0.05) -> PlateauReport:
    """Count the steps of a rising series as local maxima of its smoothed derivative.

    The derivative is smoothed with a Gaussian of width ``smoothing_window``
    (default one tenth of the Rabi period) and peaks whose prominence
    exceeds ``rel_prominence`` times the largest derivative are counted.

    Raises
    ------
    ConfigError
        If the grid has fewer than 10 points per Rabi period.
    """
    t = series.times
    dt = uniform_step(t)
    if rabi_period is None:
        rabi_period = series.metadata.get("rabi_period")
    if rabi_period is None:
        if smoothing_window is None:
            raise ConfigError("need a Rabi period or an explicit smoothing window")
        rabi_period = 10.0 * smoothing_window
    if rabi_period / dt < 10:
        raise ConfigError(f"grid too coarse: {rabi_period / dt:.1f} points per Rabi period (< 10)")
    width = smoothing_window if smoothing_window is not None else rabi_period / 10.0
    deriv = np.gradient(np.asarray(series.values, dtype=float), dt)
    smooth = gaussian_filter1d(deriv, width / dt, mode="nearest")
    scale = float(np.max(np.abs(smooth))) or 1.0
    prominence = rel_prominence * scale
    peaks, _ = find_peaks(smooth, prominence=prominence)
    return PlateauReport(len(peaks), t[peaks], width, prominence,
                         {"rel_prominence": rel_prominence, "rabi_period": rabi_period})


def fit_decay_rate(series: ObservableSeries, target: float = 1.0, t_min: float | None = None,
                   floor: float = 1e-12) -> float:
    """Rate κ_eff from a least-squares fit of log|target − value| against t.

    By default the fit uses the second half of the series, where the
    slowest exponential dominates.
    """
    t = series.times
    t_min = t[0] + 0.5 * (t[-1] - t[0]) if t_min is None else t_min
    resid = np.abs(target - np.asarray(series.values, dtype=float))
    mask = (t >= t_min) & (resid > floor)
    if mask.sum() < 3:
        raise ValueError("not enough points above the floor to fit a decay rate")
    slope, _ = np.polyfit(t[mask], np.log(resid[mask]), 1)
    return float(-slope)


def rabi_period(epsilon: float) -> float:
    return 2.0 * math.pi / epsilon
