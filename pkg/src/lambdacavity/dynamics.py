"""Time propagation: Schrödinger amplitudes for the leaky cavity, Lindblad evolution for the damped cavity.

All propagators work in the rotating frame generated by
``G = ω_P N_P + (ω_P − ω_31) N_S``.  G commutes with every model
Hamiltonian, so ``H − G`` carries only detunings and couplings; optical
phases are restored analytically on output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .errors import ConfigError, IntegrationError, InvariantViolation
from .models import (
    BathSpec,
    ModelConfig,
    collapse_operator,
    effective_hamiltonian,
    frame_generator,
    full_hamiltonian,
    single_mode_hamiltonian,
)
from .spectral import arrowhead_spectrum, window_around
from .statespace import (
    Basis,
    DensityMatrix,
    Operator,
    StateVector,
    basis_state,
    build_effective_basis,
    build_reduced_basis,
    build_sector_basis,
    hermiticity_error,
)


@dataclass(frozen=True)
class Tolerances:
    """Integrator settings; ``method`` is any explicit solve_ivp Runge-Kutta pair."""

    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "RK45"
    max_step: float = math.inf
    # budget for the omitted eigen-weight of the windowed spectral solver
    spectral_budget: float = 1e-6


# Near-pure states have eigenvalues at 0, so the −1e-8 positivity budget
# needs integration errors well below the amplitude default.
LINDBLAD_TOLERANCES = Tolerances(rtol=1e-10, atol=1e-12, method="DOP853")


@dataclass(eq=False)
class Trajectory:
    """Sampled solution of a propagation.

    ``kind`` is "amplitudes" or "density".  Amplitude trajectories keep
    lab-frame amplitudes of ψ1 and ψ2 in ``series`` (and the full state in
    ``states`` when the method stores it); ``series["bath_population"]`` is
    Σ_k|C_3k|².  Density trajectories keep lab-frame ρ(t) in ``rho``.
    """

    times: np.ndarray
    kind: str
    basis: Basis | None = None
    states: np.ndarray | None = None
    rho: np.ndarray | None = None
    series: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        n = len(self.times)
        for name, arr in (("states", self.states), ("rho", self.rho)):
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} length does not match times")
        for key, arr in self.series.items():
            if len(arr) != n:
                raise ValueError(f"series {key!r} length does not match times")

    def amplitude(self, name: str) -> np.ndarray:
        """Lab-frame amplitude of a named basis state."""
        if name in self.series:
            return self.series[name]
        if self.states is not None and self.basis is not None and name in self.basis:
            return self.states[:, self.basis.index(name)]
        raise KeyError(f"trajectory has no amplitude for {name!r}")

    def population(self, name: str) -> np.ndarray:
        if self.kind == "density":
            i = self.basis.index(name)
            return self.rho[:, i, i].real
        return np.abs(self.amplitude(name)) ** 2

    @property
    def norm(self) -> np.ndarray:
        return self.diagnostics["norm"]


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 1:
        raise ConfigError("t_grid must be a non-empty 1-d array")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ConfigError("t_grid must start at t >= 0 and be strictly increasing")
    return t


def _frame_phases(generator: Operator, times: np.ndarray) -> np.ndarray:
    """exp(-i g_j t) for the diagonal frame generator, shape (n_t, dim)."""
    diag = generator.matrix.diagonal().real
    off = generator.matrix - sparse.diags(generator.matrix.diagonal())
    if off.nnz and abs(off).max() > 0:
        raise ValueError("frame generator must be diagonal in the working basis")
    return np.exp(-1j * np.outer(times, diag))


def _solve(fun, y0, t, tol: Tolerances):
    """Integrate from t = 0 and sample at ``t``."""
    if t[-1] == 0.0:
        return np.asarray(y0, dtype=complex)[None, :]
    sol = solve_ivp(fun, (0.0, t[-1]), np.asarray(y0, dtype=complex), method=tol.method, t_eval=t,
                    rtol=tol.rtol, atol=tol.atol, max_step=tol.max_step)
    if not sol.success:
        raise IntegrationError(f"integrator failed: {sol.message}")
    return sol.y.T


def propagate_state(hamiltonian: Operator, psi0: StateVector, t_grid, tolerances: Tolerances | None = None,
                    frame: Operator | None = None) -> Trajectory:
    """Integrate i dψ/dt = H ψ with an adaptive Runge-Kutta pair.

    ``frame`` is a diagonal operator commuting with ``hamiltonian``; the
    integration runs with ``H − frame`` and the phases are restored at the
    output samples.  The norm is never renormalised.
    """
    tol = tolerances or Tolerances()
    t = _check_grid(t_grid)
    if psi0.basis.dim != hamiltonian.basis.dim:
        raise ConfigError("initial state and Hamiltonian live in different bases")
    h = hamiltonian.matrix
    if frame is not None:
        h = h - frame.matrix
    h = sparse.csr_matrix(-1j * h)
    states = _solve(lambda _, y: h @ y, psi0.amplitudes, t, tol)
    if frame is not None:
        states = states * _frame_phases(frame, t)
    norm = np.einsum("ij,ij->i", states.conj(), states).real
    return Trajectory(t, "amplitudes", basis=hamiltonian.basis, states=states,
                      diagnostics={"norm": norm, "method": f"rk:{tol.method}",
                                   "rtol": tol.rtol, "atol": tol.atol})


def _amplitude_series(traj: Trajectory, names_bath) -> None:
    """Fill ψ1/ψ2 amplitudes and the bath population from stored states."""
    b = traj.basis
    traj.series["psi1"] = traj.states[:, b.index("psi1")]
    if "psi2" in b:
        traj.series["psi2"] = traj.states[:, b.index("psi2")]
    idx = [b.index(n) for n in names_bath]
    traj.series["bath_population"] = (np.abs(traj.states[:, idx]) ** 2).sum(axis=1)


def _bath_names(basis: Basis):
    return [n for n in basis.names if n.startswith("psi3")]


def propagate_amplitudes(config: ModelConfig, bath: BathSpec, t_grid, tolerances: Tolerances | None = None, *,
                         method: str = "auto", allow_recurrence: bool = False,
                         window_gaps: int | None = None) -> Trajectory:
    """Leaky-cavity amplitudes from C1(0) = 1 in the reduced symmetric basis.

    Parameters
    ----------
    method : {"auto", "rk", "spectral"}
        "rk" integrates the (N+2)-dimensional linear system with an adaptive
        Runge-Kutta pair.  "spectral" diagonalises the same generator exactly
        through its secular equation (flat uniform baths only) and is the
        only practical route once the recurrence-free bath holds 10⁴-10⁷
        modes.  "auto" picks "spectral" when it applies.
    allow_recurrence : bool
        Skip the recurrence-time guard (the result then contains the
        Poincaré revival of the finite bath).
    window_gaps : int, optional
        Spectral only: search eigenvalues only within this many band gaps of
        the slow decay pole.  The omitted weight is an exact bound on the
        error of C1 and must stay below ``tolerances.spectral_budget``.

    Returns
    -------
    Trajectory
        Lab-frame amplitudes; the ψ3k amplitudes are stored only by "rk".
    """
    tol = tolerances or Tolerances()
    t = _check_grid(t_grid)
    bath.check_horizon(t[-1], allow_recurrence)
    if method == "auto":
        method = "spectral" if bath.is_uniform_flat else "rk"
    meta = {"config": config, "bath_modes": bath.n_modes, "model": "full"}
    if method == "rk":
        basis = build_reduced_basis(bath.n_modes)
        traj = propagate_state(full_hamiltonian(config, bath, basis), basis_state(basis, "psi1"), t, tol,
                               frame=frame_generator(config, basis))
        _amplitude_series(traj, _bath_names(basis))
        traj.metadata.update(meta)
        return traj
    if method != "spectral":
        raise ConfigError(f"unknown propagation method {method!r}")
    if not bath.is_uniform_flat:
        raise ConfigError("spectral propagation needs a flat uniform bath")
    g = math.sqrt(2.0) * config.lambda_P
    delta = config.delta_P
    dw = bath.spacing
    e0 = float(bath.detunings_for(config.omega_S)[0]) - delta
    w = bath.flat_coupling**2
    window = None
    if window_gaps is not None:
        gam = bath.gamma
        slow = 2.0 * config.lambda_P**2 * delta / (gam**2 + delta**2)
        window = window_around(slow, e0, dw, bath.n_modes, window_gaps)
    spec = arrowhead_spectrum(-delta, 0.0, g, e0, dw, w, bath.n_modes, window)
    if spec.windowed and spec.omitted_sat_weight > tol.spectral_budget:
        raise IntegrationError(f"spectral window misses weight {spec.omitted_sat_weight:.3e} "
                               f"> budget {tol.spectral_budget:.1e}; widen window_gaps")
    phase = np.exp(-1j * config.omega_P * t)
    amps = spec.evolve_many(t, ("sat", "cross"))
    c1 = amps["sat"] * phase
    c2 = amps["cross"] * phase
    bath_pop = 1.0 - np.abs(c1) ** 2 - np.abs(c2) ** 2
    captured = 1.0 - spec.omitted_sat_weight
    traj = Trajectory(t, "amplitudes", basis=None,
                      series={"psi1": c1, "psi2": c2, "bath_population": bath_pop},
                      diagnostics={"norm": np.full(len(t), captured), "method": "spectral",
                                   "omitted_weight": spec.omitted_sat_weight, "n_roots": len(spec.energies),
                                   "bath_population_source": "closure"},
                      metadata=meta)
    return traj


def lindblad_superoperator(hamiltonian: Operator, collapse: Operator, kappa: float,
                           frame: Operator | None = None) -> np.ndarray:
    """Column-stacked generator of dρ/dt = −i[H,ρ] + κ(2aρa† − a†aρ − ρa†a)."""
    h = hamiltonian.dense()
    if frame is not None:
        h = h - frame.dense()
    a = collapse.dense()
    ada = a.conj().T @ a
    eye = np.eye(h.shape[0])
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    sup += kappa * (2.0 * np.kron(a.conj(), a) - np.kron(eye, ada) - np.kron(ada.T, eye))
    return sup


def propagate_lindblad(hamiltonian: Operator, collapse: Operator, kappa: float, rho0: DensityMatrix, t_grid,
                       tolerances: Tolerances | None = None, frame: Operator | None = None,
                       check: bool = True) -> Trajectory:
    """Master-equation evolution on a small basis.

    The 16-dimensional (for the 4-state sector) vectorised equation is
    integrated with the same Runge-Kutta pair as the amplitudes.  Output
    samples are symmetrised, and the trace, Hermiticity error before
    symmetrisation and smallest eigenvalue are recorded.  With ``check``
    the density-matrix budgets are enforced and InvariantViolation raised.
    """
    if kappa < 0:
        raise ConfigError("kappa must be >= 0")
    tol = tolerances or LINDBLAD_TOLERANCES
    t = _check_grid(t_grid)
    d = hamiltonian.basis.dim
    sup = lindblad_superoperator(hamiltonian, collapse, kappa, frame)
    vec = _solve(lambda _, y: sup @ y, rho0.data.reshape(-1, order="F"), t, tol)
    rho = vec.reshape(len(t), d, d).transpose(0, 2, 1)  # undo column stacking
    if frame is not None:
        ph = _frame_phases(frame, t)
        rho = rho * ph[:, :, None] * ph.conj()[:, None, :]
    herm = np.array([hermiticity_error(r) for r in rho])
    rho = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
    trace = np.einsum("tii->t", rho).real
    min_eig = np.linalg.eigvalsh(rho).min(axis=1)
    traj = Trajectory(t, "density", basis=hamiltonian.basis, rho=rho,
                      diagnostics={"trace": trace, "min_eigenvalue": min_eig, "hermiticity_error": herm,
                                   "method": f"rk:{tol.method}", "rtol": tol.rtol, "atol": tol.atol},
                      metadata={"kappa": kappa})
    if check:
        if herm.max() > 1e-10:
            raise InvariantViolation(f"density matrix lost Hermiticity: {herm.max():.3e}")
        if np.max(np.abs(trace - 1.0)) > 1e-8:
            raise InvariantViolation(f"trace drift {np.max(np.abs(trace - 1.0)):.3e}")
        if min_eig.min() < -1e-8:
            raise InvariantViolation(f"negative eigenvalue {min_eig.min():.3e}")
    return traj


def propagate_damped(config: ModelConfig, t_grid, tolerances: Tolerances | None = None) -> Trajectory:
    """Single-mode sector {ψ1, ψ2, ψ3, ψ4} with Stokes damping κ, from ρ(0) = |ψ1><ψ1|."""
    basis = build_sector_basis()
    rho0 = DensityMatrix.from_state(basis_state(basis, "psi1"))
    traj = propagate_lindblad(single_mode_hamiltonian(config, basis), collapse_operator(basis), config.kappa,
                              rho0, t_grid, tolerances, frame=frame_generator(config, basis))
    traj.metadata.update({"config": config, "model": "full"})
    return traj


def propagate_effective(config: ModelConfig, t_grid, tolerances: Tolerances | None = None, *,
                        bath: BathSpec | None = None, damped: bool | None = None,
                        method: str = "auto", allow_recurrence: bool = False) -> Trajectory:
    """Evolve the two-photon model with level 2 eliminated.

    With ``damped`` (default: ``config.kappa > 0`` and no bath) the
    single-mode Lindblad variant on {ψ1, ψ3, ψ4} is solved.  Otherwise the
    unitary variant is used: one Stokes mode if ``bath`` is None, else ψ1
    coupled to every bath mode with √2 λ_eff,k.
    """
    tol = tolerances or Tolerances()
    t = _check_grid(t_grid)
    if damped is None:
        damped = bath is None and config.kappa > 0
    meta = {"config": config, "model": "effective"}
    if damped:
        if bath is not None:
            raise ConfigError("the damped effective model uses a single Stokes mode; drop the bath")
        basis = build_effective_basis(1, include_psi4=True)
        rho0 = DensityMatrix.from_state(basis_state(basis, "psi1"))
        traj = propagate_lindblad(effective_hamiltonian(config, basis), collapse_operator(basis), config.kappa,
                                  rho0, t, tolerances, frame=frame_generator(config, basis))
        traj.metadata.update(meta)
        return traj
    if bath is None:
        basis = build_effective_basis(1)
        traj = propagate_state(effective_hamiltonian(config, basis), basis_state(basis, "psi1"), t, tol,
                               frame=frame_generator(config, basis))
        _amplitude_series(traj, _bath_names(basis))
        traj.metadata.update(meta)
        return traj
    bath.check_horizon(t[-1], allow_recurrence)
    if method == "auto":
        method = "spectral" if bath.is_uniform_flat else "rk"
    meta["bath_modes"] = bath.n_modes
    if method == "rk":
        basis = build_effective_basis(bath.n_modes)
        traj = propagate_state(effective_hamiltonian(config, basis, bath), basis_state(basis, "psi1"), t, tol,
                               frame=frame_generator(config, basis))
        _amplitude_series(traj, _bath_names(basis))
        traj.metadata.update(meta)
        return traj
    if method != "spectral" or not bath.is_uniform_flat:
        raise ConfigError("spectral propagation needs a flat uniform bath")
    lam = config.effective_couplings([bath.flat_coupling])[0]
    e0 = float(bath.detunings_for(config.omega_S)[0]) - config.delta_P
    spec = arrowhead_spectrum(0.0, 0.0, 0.0, e0, bath.spacing, 2.0 * lam**2, bath.n_modes)
    c1 = spec.evolve(t, "hub") * np.exp(-1j * config.omega_P * t)
    return Trajectory(t, "amplitudes", series={"psi1": c1, "bath_population": 1.0 - np.abs(c1) ** 2},
                      diagnostics={"norm": np.full(len(t), 1.0 - spec.omitted_hub_weight), "method": "spectral",
                                   "omitted_weight": spec.omitted_hub_weight,
                                   "bath_population_source": "closure"},
                      metadata=meta)


@dataclass
class InvariantReport:
    """Per-sample expectations of monitored operators and their drift from the initial value."""

    expectations: dict
    max_drift: dict
    budget: float

    @property
    def passed(self) -> bool:
        return all(v <= self.budget for v in self.max_drift.values())


def check_invariants(traj: Trajectory, operators: dict, budget: float = 1e-9) -> InvariantReport:
    """Expectation of each operator along a trajectory with stored states or density matrices.

    Also reports the norm (or trace) drift under the key ``"norm"``.
    """
    expectations, drift = {}, {}
    if traj.kind == "density":
        for name, op in operators.items():
            m = op.dense()
            expectations[name] = np.einsum("ij,tji->t", m, traj.rho).real
        expectations["norm"] = traj.diagnostics["trace"]
    else:
        if traj.states is None:
            raise ValueError("trajectory has no stored states to check")
        for name, op in operators.items():
            ms = (op.matrix @ traj.states.T).T
            expectations[name] = np.einsum("ti,ti->t", traj.states.conj(), ms).real
        expectations["norm"] = traj.diagnostics["norm"]
    for name, vals in expectations.items():
        drift[name] = float(np.max(np.abs(vals - vals[0])))
    drift["norm"] = float(np.max(np.abs(expectations["norm"] - 1.0)))
    return InvariantReport(expectations, drift, budget)
