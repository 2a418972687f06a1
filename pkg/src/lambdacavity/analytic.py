"""Closed-form second-order amplitudes, the Laplace image of C1 and its numerical inversion.

Laplace images are evaluated in the rotating frame, where

    F(s) = 1 / (s + 2λ² / (s − iΔ + Σ(s))),   Σ(s) = Σ_k λ_k² / (s + i(δ_k − Δ)),

and the lab-frame image follows from the shift theorem,
``L(s) = F(s + iω_P)``, so ``C1(t) = exp(−iω_P t) · f(t)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, QuadratureError, ValidityWarning
from .models import BathSpec, ModelConfig

VALIDITY_LIMIT = 0.2
DEFAULT_TALBOT_NODES = 32
CONTINUA = ("band", "markov", "lorentzian", "discrete")


@dataclass(frozen=True)
class AnalyticParams:
    """Parameters of the second-order closed forms (rates in units of Γ)."""

    lambda_P: float
    gamma: float
    delta: float = 0.0
    omega_P: float = 0.0
    omega_21: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.lambda_P < 0:
            raise ConfigError("lambda_P must be >= 0")

    @classmethod
    def from_config(cls, config: ModelConfig, gamma: float, lab_frame: bool = True) -> "AnalyticParams":
        if lab_frame:
            return cls(config.lambda_P, gamma, config.delta_P, config.omega_P, config.omega_21)
        return cls(config.lambda_P, gamma, config.delta_P)

    @property
    def expansion_parameter(self) -> float:
        """λ_P / |Γ − iΔ|."""
        return self.lambda_P / abs(complex(self.gamma, -self.delta))

    @property
    def valid(self) -> bool:
        return self.expansion_parameter < VALIDITY_LIMIT


def _warn_validity(params: AnalyticParams):
    if not params.valid:
        warnings.warn(f"second-order formulas used outside their regime: λ/|Γ−iΔ| = "
                      f"{params.expansion_parameter:.3g} >= {VALIDITY_LIMIT}", ValidityWarning, stacklevel=3)


def slow_exponent(params: AnalyticParams) -> complex:
    """Exponent −2λ²/(Γ − iΔ) of the slowly decaying term."""
    return -2.0 * params.lambda_P**2 / complex(params.gamma, -params.delta)


def c1_prefactors(params: AnalyticParams) -> tuple[complex, complex]:
    """(fast, slow) weights of C1; they sum to one identically."""
    z = complex(params.gamma, -params.delta)
    fast = -2.0 * params.lambda_P**2 / z**2
    return fast, 1.0 - fast


def decay_rate(params: AnalyticParams) -> float:
    """γ = 2λ²Γ/(Γ² + Δ²), the real decay rate of the slow term (|C1|² decays at 2γ)."""
    return 2.0 * params.lambda_P**2 * params.gamma / (params.gamma**2 + params.delta**2)


def approx_amplitudes(params: AnalyticParams, t, c2_form: str = "printed"):
    """Second-order closed forms for C1(t) and C2(t).

    Parameters
    ----------
    c2_form : {"printed", "i_corrected"}
        "printed" uses the C2 denominator (iΓ + Δ) exactly as published;
        "i_corrected" swaps it for (Γ − iΔ), the form one would guess from
        the C1 prefactors.  The printed form agrees with the exact dynamics.

    Warns
    -----
    ValidityWarning
        When λ/|Γ − iΔ| is not small.
    """
    _warn_validity(params)
    t = np.asarray(t, dtype=float)
    lam, gam, dlt = params.lambda_P, params.gamma, params.delta
    z = complex(gam, -dlt)
    fast, slow = c1_prefactors(params)
    mu_s = slow_exponent(params)
    c1 = (fast * np.exp((-gam + 1j * dlt) * t) + slow * np.exp(mu_s * t)) * np.exp(-1j * params.omega_P * t)
    if c2_form == "printed":
        denom = complex(dlt, gam)
    elif c2_form == "i_corrected":
        denom = z
    else:
        raise ValueError(f"unknown c2_form {c2_form!r}")
    c2 = (-math.sqrt(2.0) * lam / denom) * (np.exp(-gam * t) - np.exp(-(-mu_s + 1j * dlt) * t))
    c2 = c2 * np.exp(-1j * params.omega_21 * t)
    return c1, c2


def _log_ratio(q, half_width):
    return np.log(q + 1j * half_width) - np.log(q - 1j * half_width)


def bath_self_energy(q, bath: BathSpec, config: ModelConfig, continuum: str = "band"):
    """Σ as a function of q = s − iΔ (rotating frame), for a given continuum model.

    "discrete" sums over the actual modes; "band" is the flat continuum over
    the window widened by half a spacing (the exact continuum counterpart
    of a uniform grid); "markov" is the infinite flat band (Σ = Γ);
    "lorentzian" the infinite Lorentzian band, Γw/(q + w).
    """
    q = np.asarray(q, dtype=complex)
    if continuum == "discrete":
        det = bath.detunings_for(config.omega_S)
        lam2 = bath.mode_couplings**2
        return (lam2[None, :] / (q.reshape(-1, 1) + 1j * det[None, :])).sum(axis=1).reshape(q.shape)
    if continuum == "markov":
        return np.full(q.shape, bath.gamma, dtype=complex)
    if continuum == "band":
        half = bath.window_halfwidth + 0.5 * bath.spacing
        return bath.gamma / (1j * math.pi) * _log_ratio(q, half)
    if continuum == "lorentzian":
        w = bath.lorentz_width if bath.lorentz_width is not None else 0.5 * bath.window_halfwidth
        return bath.gamma * w / (q + w)
    raise ConfigError(f"unknown continuum {continuum!r}; expected one of {CONTINUA}")


def rotating_image(s, config: ModelConfig, bath: BathSpec, continuum: str = "band", which: str = "c1"):
    """Rotating-frame Laplace image of C1 (or C2) at complex ``s``."""
    s = np.asarray(s, dtype=complex)
    q = s - 1j * config.delta_P
    sigma = bath_self_energy(q, bath, config, continuum) if bath.n_modes else 0.0
    inner = q + sigma
    lam2 = 2.0 * config.lambda_P**2
    f1 = inner / (s * inner + lam2)
    if which == "c1":
        return f1
    if which == "c2":
        return -1j * math.sqrt(2.0) * config.lambda_P / (s * inner + lam2)
    raise ValueError("which must be 'c1' or 'c2'")


def laplace_image(s, config: ModelConfig, bath: BathSpec, continuum: str = "discrete", form: str = "corrected"):
    """Lab-frame image L(s) of C1.

    ``form="corrected"`` is the image that actually solves the amplitude
    equations.  ``form="printed"`` evaluates the published rational
    expression literally (discrete sums only); it does not satisfy
    s·L(s) → 1 and is kept only for comparison.

    Raises
    ------
    ZeroDivisionError
        When |denominator| < 1e-12 (``s`` sits on a pole).
    """
    s = np.asarray(s, dtype=complex)
    if form == "corrected":
        sr = s + 1j * config.omega_P
        q = sr - 1j * config.delta_P
        with np.errstate(divide="ignore", invalid="ignore"):
            sigma = bath_self_energy(q, bath, config, continuum) if bath.n_modes else 0.0
            denom = sr * (q + sigma) + 2.0 * config.lambda_P**2
        _pole_guard(denom)
        return (q + sigma) / denom
    if form != "printed":
        raise ValueError("form must be 'corrected' or 'printed'")
    if continuum != "discrete":
        raise ConfigError("the printed form is evaluated with discrete bath sums only")
    wk = config.omega_31 + bath.frequencies_for(config.omega_S)
    lam2 = bath.mode_couplings**2
    sc = s.reshape(-1, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        num_sum = (lam2 * (sc + 1j * wk) / (sc**2 + wk**2)).sum(axis=1).reshape(s.shape)
        tail = (lam2 * (wk - config.omega_P) / (sc + 1j * wk)).sum(axis=1).reshape(s.shape)
    wp, w21, lp = config.omega_P, config.omega_21, config.lambda_P
    num = 1j * num_sum - (wp + w21)
    denom = 1j * s**2 - s * (wp + w21) + 1j * (wp * w21 - 2 * lp**2 - lam2.sum()) + tail
    _pole_guard(denom)
    return num / denom


def _pole_guard(denom):
    if np.any(~np.isfinite(denom)) or np.any(np.abs(denom) < 1e-12):
        raise ZeroDivisionError("Laplace image evaluated at a pole")


def talbot(image, t, nodes: int = DEFAULT_TALBOT_NODES) -> np.ndarray:
    """Fixed-Talbot inversion of a (not necessarily real) Laplace image.

    Uses the contour s(θ) = rθ(cot θ + i)/t with r = 2M/5.  Complex-valued
    originals have no conjugate symmetry, so both halves of the contour are
    summed.  ``t = 0`` is not allowed.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("Talbot inversion needs t > 0")
    m = nodes
    r = 2.0 * m / 5.0
    theta = np.arange(1, m) * math.pi / m
    cot = 1.0 / np.tan(theta)
    sigma = theta + (theta * cot - 1.0) * cot
    out = np.empty(t.shape, dtype=complex)
    for i, ti in enumerate(t):
        sk = r * theta * (cot + 1j) / ti
        upper = np.exp(ti * sk) * image(sk) * (1.0 + 1j * sigma)
        skc = sk.conj()
        lower = np.exp(ti * skc) * image(skc) * (1.0 - 1j * sigma)
        centre = 0.5 * math.exp(r) * image(np.array([r / ti + 0j]))[0]
        out[i] = (r / (m * ti)) * (centre + 0.5 * (upper.sum() + lower.sum()))
    return out


def bromwich_trapezoid(image, t, abscissa: float = None, step: float = 0.05, n_terms: int = 200000) -> np.ndarray:
    """Trapezoid rule on the Bromwich line Re s = c, as a cross-check for Talbot.

    The 1/s leading term is inverted analytically so the truncated tail
    decays like s⁻³.  Unlike Talbot it tolerates poles on the imaginary
    axis, so it is the inversion used for discrete baths.  Aliasing from
    the period 2π/step limits usable times to half that period.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    period = 2.0 * math.pi / step
    if np.any(t >= 0.5 * period):
        raise ValueError("times must stay below half the aliasing period 2π/step")
    c = abscissa if abscissa is not None else 20.0 / period
    y = step * np.arange(-n_terms, n_terms + 1)
    s = c + 1j * y
    vals = image(s) - 1.0 / s
    out = np.empty(t.shape, dtype=complex)
    for i, ti in enumerate(t):
        out[i] = 1.0 + step / (2.0 * math.pi) * math.exp(c * ti) * np.sum(vals * np.exp(1j * y * ti))
    return out


def inverse_laplace(config: ModelConfig, bath: BathSpec, t_grid, *, continuum: str = "band", which: str = "c1",
                    nodes: int = DEFAULT_TALBOT_NODES, check_nodes: int | None = None,
                    check_tol: float = 1e-7, method: str = "auto") -> np.ndarray:
    """Lab-frame C1(t) (or C2) from the Bromwich integral of its image.

    The inversion runs on the rotating-frame image and the phase
    exp(−iω_P t) is restored afterwards.  With the default ``check_nodes``
    (``nodes - 8``) a second Talbot pass is made and QuadratureError is
    raised when the two disagree by more than ``check_tol``.  ``method="auto"``
    uses Talbot for continuum images and the Bromwich trapezoid for the
    discrete image, whose poles lie on the imaginary axis where the Talbot
    contour is not valid.
    """
    if method == "auto":
        method = "trapezoid" if continuum == "discrete" else "talbot"
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ConfigError("t_grid must be non-negative")
    # Centre the slow pole on the real axis: the Talbot contour narrows like
    # 1/t, and a pole with Im s of order its half-width spoils the quadrature.
    shift = -slow_exponent(AnalyticParams(config.lambda_P, bath.gamma or 1.0, config.delta_P)).imag
    image = lambda s: rotating_image(s - 1j * shift, config, bath, continuum, which)  # noqa: E731
    pos = t > 0
    vals = np.empty(t.shape, dtype=complex)
    vals[~pos] = 1.0 if which == "c1" else 0.0
    if method == "talbot":
        vals[pos] = talbot(image, t[pos], nodes)
        check_nodes = nodes - 8 if check_nodes is None else check_nodes
        if check_nodes and pos.any():
            other = talbot(image, t[pos], check_nodes)
            err = float(np.max(np.abs(other - vals[pos])))
            if err > check_tol:
                raise QuadratureError(f"Talbot M={nodes} and M={check_nodes} differ by {err:.3e} > {check_tol:.1e}")
    elif method == "trapezoid":
        if which != "c1":
            raise ConfigError("trapezoid cross-check is implemented for C1 only")
        vals[pos] = bromwich_trapezoid(image, t[pos])
    else:
        raise ConfigError(f"unknown inversion method {method!r}")
    return vals * np.exp(-1j * (config.omega_P + shift) * t)
