"""Model Hamiltonians, integrals of motion, dressed states and the discretised Stokes bath."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import ConfigError, RecurrenceError
from .statespace import (
    SQRT2,
    Basis,
    Operator,
    StateVector,
    build_sector_basis,
    derived_basis,
)

RESONANCE_TOL = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    """Physical parameters.

    Frequencies are angular and in units of the scenario rate (Γ for the
    leaky cavity, λ_P for the damped cavity).  ``omega_P`` is derived from
    the pump detuning, ``omega_S`` from the two atomic frequencies.

    ``lambda_eff`` fixes the two-photon coupling of the effective model
    directly; otherwise it follows from ``lambda_P * lambda_S / raman_detuning``
    (falling back to ``delta_P`` when no Raman detuning is given).
    """

    omega_21: float = 100.0
    omega_31: float = 40.0
    delta_P: float = 0.0
    lambda_P: float = 0.05
    lambda_S: float = 1.0
    kappa: float = 0.0
    lambda_eff: float | None = None
    raman_detuning: float | None = None

    def __post_init__(self):
        for name in ("omega_21", "omega_31", "delta_P", "lambda_P", "lambda_S", "kappa"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ConfigError(f"{name} must be finite")
        for name in ("lambda_P", "lambda_S", "kappa"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.lambda_eff is not None and self.lambda_eff < 0:
            raise ConfigError("lambda_eff must be >= 0")
        if not 0 < self.omega_31 < self.omega_21:
            raise ConfigError("need 0 < omega_31 < omega_21 (level 2 is the upper level)")
        if self.omega_P <= 0:
            raise ConfigError("pump frequency omega_21 + delta_P must be positive")

    @property
    def omega_S(self) -> float:
        return self.omega_21 - self.omega_31

    @property
    def omega_P(self) -> float:
        return self.omega_21 + self.delta_P

    @property
    def epsilon(self) -> float:
        """Single-mode dressed splitting sqrt(2 λ_P² + λ_S²)."""
        return math.sqrt(2.0 * self.lambda_P**2 + self.lambda_S**2)

    @property
    def is_resonant(self) -> bool:
        return abs(self.delta_P) <= RESONANCE_TOL * max(1.0, self.omega_21)

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def effective_lambda(self) -> float:
        """Two-photon coupling used by the effective Hamiltonian."""
        if self.lambda_eff is not None:
            return self.lambda_eff
        detuning = self.raman_detuning if self.raman_detuning is not None else self.delta_P
        if detuning == 0:
            raise ConfigError("effective coupling needs lambda_eff or a nonzero raman_detuning/delta_P")
        return self.lambda_P * self.lambda_S / abs(detuning)

    def effective_couplings(self, stokes_couplings) -> np.ndarray:
        """Per-mode two-photon couplings, scaling with each Stokes coupling."""
        lam = np.asarray(stokes_couplings, dtype=float)
        if self.lambda_eff is not None:
            if self.lambda_S == 0:
                raise ConfigError("lambda_S must be nonzero to rescale an explicit lambda_eff")
            return self.lambda_eff * lam / self.lambda_S
        detuning = self.raman_detuning if self.raman_detuning is not None else self.delta_P
        if detuning == 0:
            raise ConfigError("effective coupling needs lambda_eff or a nonzero raman_detuning/delta_P")
        return self.lambda_P * lam / abs(detuning)


PROFILES = ("flat", "lorentzian", "explicit")


@dataclass(frozen=True, eq=False)
class BathSpec:
    """Discretised Stokes continuum.

    Uniform grids (``flat`` or ``lorentzian``) are described by
    ``(gamma, window_halfwidth, n_modes, center)`` and their arrays are built
    lazily, so a flat bath with millions of modes costs nothing until the
    arrays are requested.  ``center`` is the grid centre; ``None`` means
    "the Stokes transition frequency ω_S of whichever model uses the bath".
    """

    gamma: float
    window_halfwidth: float
    n_modes: int
    center: float | None = None
    profile: str = "flat"
    lorentz_width: float | None = None
    explicit: tuple | None = None

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown bath profile {self.profile!r}; expected one of {PROFILES}")
        if self.profile == "explicit":
            freqs, couplings = (np.asarray(a, dtype=float) for a in self.explicit)
            if freqs.shape != couplings.shape or freqs.ndim != 1:
                raise ConfigError("explicit bath needs matching 1-d frequency and coupling arrays")
            object.__setattr__(self, "explicit", (freqs, couplings))
            object.__setattr__(self, "n_modes", len(freqs))
            return
        if self.n_modes < 2:
            raise ConfigError("a uniform bath needs n_modes >= 2")
        if self.window_halfwidth <= 0 or self.gamma <= 0:
            raise ConfigError("window_halfwidth and gamma must be positive")
        if self.profile == "lorentzian" and self.lorentz_width is None:
            object.__setattr__(self, "lorentz_width", 0.5 * self.window_halfwidth)

    @classmethod
    def empty(cls) -> "BathSpec":
        return cls(0.0, 0.0, 0, center=0.0, profile="explicit", explicit=(np.zeros(0), np.zeros(0)))

    @classmethod
    def single_mode(cls, frequency: float, coupling: float) -> "BathSpec":
        return cls(0.0, 0.0, 1, center=frequency, profile="explicit",
                   explicit=(np.array([frequency]), np.array([coupling])))

    @property
    def is_uniform(self) -> bool:
        return self.profile != "explicit"

    @property
    def is_uniform_flat(self) -> bool:
        return self.profile == "flat"

    @property
    def spacing(self) -> float:
        if not self.is_uniform:
            raise ConfigError("spacing is defined only for uniform baths")
        return 2.0 * self.window_halfwidth / (self.n_modes - 1)

    @property
    def recurrence_time(self) -> float:
        """Poincaré recurrence time 2π/Δω (infinite for non-grid baths)."""
        return 2.0 * math.pi / self.spacing if self.is_uniform else math.inf

    @property
    def flat_coupling(self) -> float:
        """λ_Sk for a flat profile: sqrt(Γ Δω / π)."""
        return math.sqrt(self.gamma * self.spacing / math.pi)

    @cached_property
    def detunings(self) -> np.ndarray:
        """Mode frequencies relative to ``center``."""
        if not self.is_uniform:
            return self.explicit[0] - (self.center or 0.0)
        return np.linspace(-self.window_halfwidth, self.window_halfwidth, self.n_modes)

    @cached_property
    def mode_frequencies(self) -> np.ndarray:
        """Absolute mode frequencies (requires an explicit centre)."""
        if not self.is_uniform:
            return self.explicit[0]
        if self.center is None:
            raise ConfigError("bath has no explicit centre; use frequencies_for(omega_S)")
        return self.center + self.detunings

    def frequencies_for(self, omega_S: float) -> np.ndarray:
        """Mode frequencies, centring the grid on ``omega_S`` unless a centre was fixed."""
        if self.is_uniform and self.center is None:
            return omega_S + self.detunings
        return self.mode_frequencies

    def detunings_for(self, omega_S: float) -> np.ndarray:
        """Mode frequencies relative to ``omega_S``."""
        if self.is_uniform and self.center is None:
            return self.detunings
        return self.mode_frequencies - omega_S

    @cached_property
    def mode_couplings(self) -> np.ndarray:
        if not self.is_uniform:
            return self.explicit[1]
        lam = np.full(self.n_modes, self.flat_coupling)
        if self.profile == "lorentzian":
            w = self.lorentz_width
            lam = lam * np.sqrt(w**2 / (w**2 + self.detunings**2))
        return lam

    def check_horizon(self, horizon: float, allow_recurrence: bool = False):
        if not allow_recurrence and self.is_uniform and horizon >= self.recurrence_time:
            raise RecurrenceError(
                f"horizon {horizon:.6g} reaches the bath recurrence time {self.recurrence_time:.6g}; "
                "use more modes or a shorter horizon"
            )


def discretize_bath(gamma: float, window_halfwidth: float, n_modes: int, profile: str = "flat", *,
                    center: float | None = None, horizon: float | None = None,
                    lorentz_width: float | None = None) -> BathSpec:
    """Uniform Stokes-mode grid over ``[center - W, center + W]``.

    The flat profile sets every coupling to ``sqrt(gamma * dw / pi)`` so the
    golden-rule half-width of the continuum equals ``gamma``.  A Lorentzian
    profile multiplies the squared couplings by ``w²/(w² + δ²)``, keeping the
    same half-width at line centre.

    Raises
    ------
    ConfigError
        For invalid sizes or an unknown profile.
    RecurrenceError
        If ``horizon`` is given and reaches the recurrence time ``2π/dw``.
    """
    if profile not in ("flat", "lorentzian"):
        raise ConfigError(f"unknown bath profile {profile!r}")
    if n_modes < 2:
        raise ConfigError("n_modes must be >= 2")
    bath = BathSpec(gamma, window_halfwidth, int(n_modes), center=center, profile=profile,
                    lorentz_width=lorentz_width)
    if horizon is not None:
        bath.check_horizon(horizon)
    return bath


def bath_for_horizon(gamma: float, window_halfwidth: float, horizon: float, *, margin: float = 1.25,
                     center: float | None = None, profile: str = "flat", min_modes: int = 2) -> BathSpec:
    """Smallest uniform bath whose recurrence time exceeds ``margin * horizon``."""
    if horizon <= 0 or margin < 1:
        raise ConfigError("horizon must be positive and margin >= 1")
    n = math.ceil(2.0 * window_halfwidth * margin * horizon / (2.0 * math.pi)) + 1
    return discretize_bath(gamma, window_halfwidth, max(n, min_modes), profile, center=center)


def _check_bath_basis(bath: BathSpec, basis: Basis):
    if bath.n_modes != basis.n_stokes_modes:
        raise ConfigError(f"bath has {bath.n_modes} modes but basis has {basis.n_stokes_modes}")


def _field_sum(space, lowers, couplings):
    return sum((c * m for c, m in zip(couplings, lowers)), sparse.csr_matrix((space.dim, space.dim), dtype=complex))


def full_hamiltonian(config: ModelConfig, bath: BathSpec, basis: Basis) -> Operator:
    """Lab-frame H = H0 + H_int on a full product basis or the reduced symmetric basis.

    On the full basis the operator is assembled from transition and ladder
    operators; on the reduced basis the matrix elements are written down
    directly (diagonal energies, √2 λ_P between ψ1 and ψ2, λ_Sk between ψ2 and ψ3k).
    """
    _check_bath_basis(bath, basis)
    if basis.kind == "reduced":
        n = bath.n_modes
        diag = np.concatenate([[config.omega_P, config.omega_21],
                               config.omega_31 + bath.frequencies_for(config.omega_S)])
        rows = np.concatenate([[0, 1], 1 + np.zeros(n, int), 2 + np.arange(n)])
        cols = np.concatenate([[1, 0], 2 + np.arange(n), 1 + np.zeros(n, int)])
        lam = np.asarray(bath.mode_couplings, dtype=float)
        vals = np.concatenate([[SQRT2 * config.lambda_P] * 2, lam, lam])
        off = sparse.csr_matrix((vals, (rows, cols)), shape=(n + 2, n + 2))
        return Operator(sparse.diags(diag) + off, basis, hermitian=True)
    if basis.kind != "full":
        raise ConfigError(f"full_hamiltonian needs a full or reduced basis, got {basis.kind!r}")
    space = basis.product_space
    a_p = space.pump_lower()
    a_k = [space.stokes_lower(k) for k in range(bath.n_modes)]
    h0 = config.omega_P * (a_p.conj().T @ a_p)
    for w, a in zip(bath.frequencies_for(config.omega_S), a_k):
        h0 = h0 + w * (a.conj().T @ a)
    hint = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for atom in (1, 2):
        h0 = h0 + config.omega_21 * space.transition(atom, 2, 2) + config.omega_31 * space.transition(atom, 3, 3)
        hint = hint + config.lambda_P * (space.transition(atom, 2, 1) @ a_p)
        hint = hint + space.transition(atom, 2, 3) @ _field_sum(space, a_k, bath.mode_couplings)
    h = h0 + hint + hint.conj().T
    return Operator(basis.compress(h), basis, hermitian=True)


def effective_hamiltonian(config: ModelConfig, basis: Basis, bath: BathSpec | None = None) -> Operator:
    """Two-photon Hamiltonian with level 2 eliminated.

    Without ``bath`` a single Stokes mode at ω_S with coupling λ_S is used.
    Each mode couples ψ1 to ψ3k with strength √2 λ_eff,k.  Accepts the
    effective basis (optionally including ψ4) or a full product basis.
    """
    if bath is None:
        bath = BathSpec.single_mode(config.omega_S, config.lambda_S)
    _check_bath_basis(bath, basis)
    lam = config.effective_couplings(bath.mode_couplings)
    if basis.kind == "effective":
        n = bath.n_modes
        has4 = "psi4" in basis
        diag = [config.omega_P, *(config.omega_31 + bath.frequencies_for(config.omega_S))]
        if has4:
            diag.append(config.omega_31)
        m = sparse.lil_matrix((basis.dim, basis.dim), dtype=complex)
        m.setdiag(diag)
        for k in range(n):
            m[0, 1 + k] = m[1 + k, 0] = SQRT2 * lam[k]
        return Operator(m.tocsr(), basis, hermitian=True)
    if basis.kind != "full":
        raise ConfigError(f"effective_hamiltonian needs an effective or full basis, got {basis.kind!r}")
    space = basis.product_space
    a_p = space.pump_lower()
    a_k = [space.stokes_lower(k) for k in range(bath.n_modes)]
    h = config.omega_P * (a_p.conj().T @ a_p)
    for w, a in zip(bath.frequencies_for(config.omega_S), a_k):
        h = h + w * (a.conj().T @ a)
    hint = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for atom in (1, 2):
        h = h + config.omega_31 * space.transition(atom, 3, 3)
        hint = hint + space.transition(atom, 3, 1) @ _field_sum(space, [a.conj().T for a in a_k], lam) @ a_p
    h = h + hint + hint.conj().T
    return Operator(basis.compress(h), basis, hermitian=True)


def single_mode_hamiltonian(config: ModelConfig, basis: Basis | None = None) -> Operator:
    """One Stokes mode at ω_S with coupling λ_S, on the 4-state sector {ψ1, ψ2, ψ3, ψ4}.

    Also accepts a 1-mode reduced or full basis, in which case the general
    Hamiltonian with a single mode is returned.
    """
    basis = build_sector_basis() if basis is None else basis
    bath = BathSpec.single_mode(config.omega_S, config.lambda_S)
    if basis.kind in ("reduced", "full"):
        return full_hamiltonian(config, bath, basis)
    if basis.kind != "sector" or basis.dim != 4:
        raise ConfigError("single_mode_hamiltonian needs the 4-state sector basis")
    g, ls = SQRT2 * config.lambda_P, config.lambda_S
    m = np.diag([config.omega_P, config.omega_21, config.omega_31 + config.omega_S, config.omega_31]).astype(complex)
    m[0, 1] = m[1, 0] = g
    m[1, 2] = m[2, 1] = ls
    return Operator(sparse.csr_matrix(m), basis, hermitian=True)


def integrals_of_motion(basis: Basis) -> tuple[Operator, Operator]:
    """N_P = a_P†a_P + Σ_f (R22 + R33) and N_S = Σ_k a_Sk†a_Sk − Σ_f R33.

    Both are diagonal on product labels, so they are built from the label
    table and compressed onto ``basis``.
    """
    space = basis.product_space
    lab = space.labels
    excited = (lab[:, 0] >= 2).astype(float) + (lab[:, 1] >= 2)
    level3 = (lab[:, 0] == 3).astype(float) + (lab[:, 1] == 3)
    n_p = space.diagonal(lab[:, 2] + excited)
    n_s = space.diagonal((lab[:, 3] >= 0) - level3)
    return (Operator(basis.compress(n_p), basis, hermitian=True),
            Operator(basis.compress(n_s), basis, hermitian=True))


def frame_generator(config: ModelConfig, basis: Basis) -> Operator:
    """G = ω_P N_P + (ω_P − ω_31) N_S; commutes with every model Hamiltonian."""
    n_p, n_s = integrals_of_motion(basis)
    return Operator(config.omega_P * n_p.matrix + (config.omega_P - config.omega_31) * n_s.matrix,
                    basis, hermitian=True)


def collapse_operator(basis: Basis) -> Operator:
    """Stokes annihilation a_S (summed over modes); in the sector it maps ψ3 to ψ4."""
    m = basis.compress(basis.product_space.stokes_lower(None))
    return Operator(m, basis)


@dataclass(frozen=True, eq=False)
class DressedStateSet:
    """Eigenstates ψ0, ψ+, ψ−, ψ4 of the single-mode Hamiltonian at resonance."""

    basis: Basis
    states: dict
    energies: dict
    epsilon: float

    NAMES = ("psi0", "psi+", "psi-", "psi4")

    def matrix(self) -> np.ndarray:
        """Columns are the dressed states in sector coordinates, ordered as ``NAMES``."""
        return np.stack([self.states[n].amplitudes for n in self.NAMES], axis=1)

    def as_basis(self) -> Basis:
        return derived_basis(self.basis, self.matrix(), self.NAMES, kind="dressed")


def dressed_states(config: ModelConfig, basis: Basis | None = None) -> DressedStateSet:
    """Closed-form eigensystem of the single-mode sector at exact resonance.

    ψ0 = (λ_S ψ1 − √2 λ_P ψ3)/ε with energy ω_P,
    ψ± = ±(λ_P/ε) ψ1 + ψ2/√2 ± (λ_S/(√2 ε)) ψ3 with energies ω_P ± ε,
    ψ4 with energy ω_31.
    """
    if not config.is_resonant:
        raise ConfigError("dressed-state closed forms require exact resonance (delta_P = 0)")
    basis = build_sector_basis() if basis is None else basis
    eps = config.epsilon
    if eps == 0:
        raise ConfigError("dressed states need a nonzero coupling")
    lp, ls = config.lambda_P, config.lambda_S
    vecs = {
        "psi0": np.array([ls, 0.0, -SQRT2 * lp, 0.0]) / eps,
        "psi+": np.array([SQRT2 * lp, eps, ls, 0.0]) / (SQRT2 * eps),
        "psi-": np.array([-SQRT2 * lp, eps, -ls, 0.0]) / (SQRT2 * eps),
        "psi4": np.array([0.0, 0.0, 0.0, 1.0]),
    }
    energies = {"psi0": config.omega_P, "psi+": config.omega_P + eps,
                "psi-": config.omega_P - eps, "psi4": config.omega_31}
    states = {k: StateVector(basis, v) for k, v in vecs.items()}
    return DressedStateSet(basis, states, energies, eps)
