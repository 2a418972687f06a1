"""Scenario configuration: a typed INI file with one section per concern; unknown keys are errors."""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field

from .errors import ConfigError

SCENARIOS = ("leaky", "damped", "compare", "spectrum")
MODELS = ("full", "effective", "single_mode")

# section -> key -> (attribute, parser)
_BOOL = {"true": True, "yes": True, "1": True, "on": True, "false": False, "no": False, "0": False, "off": False}


def _bool(text: str) -> bool:
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"not a boolean: {text!r}") from None


def _opt_float(text: str):
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("auto", "none", "") else int(text)


def _floats(text: str):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


SCHEMA = {
    "scenario": {"name": ("scenario", str), "model": ("model", str)},
    "model": {
        "omega_21": ("omega_21", float), "omega_31": ("omega_31", float), "delta_P": ("delta_P", float),
        "lambda_P": ("lambda_P", _opt_float), "lambda_S": ("lambda_S", float), "kappa": ("kappa", float),
        "lambda_eff": ("lambda_eff", _opt_float), "raman_detuning": ("raman_detuning", _opt_float),
    },
    "bath": {
        "gamma": ("gamma", float), "window": ("window", float), "n_modes": ("n_modes", _opt_int),
        "profile": ("profile", str), "recurrence_margin": ("recurrence_margin", float),
        "allow_recurrence": ("allow_recurrence", _bool),
    },
    "grid": {"t_max": ("t_max", _opt_float), "n_samples": ("n_samples", _opt_int),
             "horizon_factor": ("horizon_factor", _opt_float)},
    "sweep": {"parameter": ("sweep_parameter", str), "values": ("sweep_values", _floats)},
    "solver": {"rtol": ("rtol", float), "atol": ("atol", float), "method": ("method", str),
               "window_gaps": ("window_gaps", _opt_int), "spectral_budget": ("spectral_budget", float)},
    "analytic": {"talbot_nodes": ("talbot_nodes", int), "c2_form": ("c2_form", str)},
    "output": {"directory": ("out_dir", str), "plot_script": ("emit_plot_script", _bool),
               "overlay_eq19": ("overlay_analytic", _bool), "workers": ("workers", int)},
}

SWEEPABLE = ("delta_P", "kappa", "lambda_P", "lambda_S", "lambda_eff", "raman_detuning")


@dataclass
class ScenarioConfig:
    """Everything a CLI run needs.  ``None`` means "pick the scenario default"."""

    scenario: str = "leaky"
    model: str | None = None
    omega_21: float = 100.0
    omega_31: float = 40.0
    delta_P: float = 0.0
    lambda_P: float | None = None
    lambda_S: float = 1.0
    kappa: float = 0.0
    lambda_eff: float | None = None
    raman_detuning: float | None = None
    gamma: float = 1.0
    window: float = 20.0
    n_modes: int | None = None
    profile: str = "flat"
    recurrence_margin: float = 1.25
    allow_recurrence: bool = False
    t_max: float | None = None
    n_samples: int | None = None
    horizon_factor: float | None = None
    sweep_parameter: str | None = None
    sweep_values: tuple = ()
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "auto"
    window_gaps: int | None = None
    spectral_budget: float = 1e-4
    talbot_nodes: int = 32
    c2_form: str = "printed"
    out_dir: str = "out"
    emit_plot_script: bool = False
    overlay_analytic: bool = False
    workers: int = 1
    fast: bool = False
    explicit: set = field(default_factory=set)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("explicit")
        d["sweep_values"] = list(self.sweep_values)
        return d


def load_config(path: str | None, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read an INI file on top of ``base``; unknown sections or keys raise ConfigError."""
    cfg = base or ScenarioConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep delta_P etc. case-sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    changes, explicit = {}, set(cfg.explicit)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            attr, conv = SCHEMA[section][key]
            try:
                changes[attr] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from None
            explicit.add(attr)
    return cfg.replace(**changes, explicit=explicit)


def validate(cfg: ScenarioConfig) -> None:
    """Check static preconditions before any file is written."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}")
    if cfg.model is not None and cfg.model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}")
    if cfg.profile not in ("flat", "lorentzian"):
        raise ConfigError("bath profile must be flat or lorentzian")
    if cfg.gamma <= 0 or cfg.window <= 0:
        raise ConfigError("gamma and window must be positive")
    if cfg.n_modes is not None and cfg.n_modes < 2:
        raise ConfigError("n_modes must be >= 2")
    if cfg.recurrence_margin < 1:
        raise ConfigError("recurrence_margin must be >= 1")
    if cfg.t_max is not None and not (cfg.t_max > 0 and math.isfinite(cfg.t_max)):
        raise ConfigError("t_max must be positive")
    if cfg.n_samples is not None and cfg.n_samples < 5:
        raise ConfigError("n_samples must be >= 5")
    if cfg.sweep_parameter is not None and cfg.sweep_parameter not in SWEEPABLE:
        raise ConfigError(f"sweep parameter must be one of {SWEEPABLE}")
    if cfg.sweep_parameter is not None and not cfg.sweep_values:
        raise ConfigError("sweep needs at least one value")
    if cfg.method not in ("auto", "rk", "spectral"):
        raise ConfigError("solver method must be auto, rk or spectral")
    if cfg.c2_form not in ("printed", "i_corrected"):
        raise ConfigError("c2_form must be printed or i_corrected")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.talbot_nodes < 16:
        raise ConfigError("talbot_nodes must be >= 16")
