"""Command-line front end: run scenarios and sweeps, write CSV series and run metadata.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 invariant-budget violation.  On failure every file of the run is removed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analytic import AnalyticParams, approx_amplitudes, decay_rate, inverse_laplace
from .config import ScenarioConfig, load_config, validate
from .dynamics import Tolerances, propagate_amplitudes, propagate_damped, propagate_effective
from .errors import ConfigError, IntegrationError, InvariantViolation
from .models import (
    BathSpec,
    ModelConfig,
    bath_for_horizon,
    collapse_operator,
    discretize_bath,
    dressed_states,
    effective_hamiltonian,
    single_mode_hamiltonian,
)
from .observables import ObservableSeries, entanglement_probability, fit_decay_rate, rabi_period, rho44, stairs_metric
from .statespace import build_effective_basis, build_sector_basis

log = logging.getLogger("lambdacavity")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4
NORM_BUDGET = 1e-6
# windowed spectral search kicks in above this many bath modes
WINDOW_THRESHOLD = 200_000
DEFAULT_WINDOW_GAPS = 20_000

LEAKY_COLUMNS = ["t", "P_entangled_direct", "P_entangled_derivform", "abs_C1_sq", "abs_C2_sq", "norm"]
OVERLAY_COLUMNS = ["C1_eq19_re", "C1_eq19_im", "abs_C1_sq_eq19"]
DAMPED_COLUMNS = ["t", "rho44", "rho11", "rho22", "rho33", "trace", "min_eigenvalue"]
COMPARE_COLUMNS = ["t", "P_full", "P_effective", "P_eq19", "P_laplace",
                   "abs_C1_sq_full", "abs_C1_sq_eq19", "abs_C1_sq_laplace"]
SPECTRUM_COLUMNS = ["label", "eigenvalue", "analytic_eigenvalue", "residual", "psi1", "psi2", "psi3", "psi4"]


# ---------------------------------------------------------------- defaults

def resolve_defaults(cfg: ScenarioConfig) -> ScenarioConfig:
    """Fill scenario-dependent defaults for every field left unset."""
    ch = {}
    sc = cfg.scenario
    if cfg.model is None:
        ch["model"] = "single_mode" if sc in ("damped", "spectrum") else "full"
    if cfg.lambda_P is None:
        ch["lambda_P"] = {"leaky": 0.05 if cfg.fast else 0.001, "compare": 0.05}.get(sc, 1.0)
    if sc in ("damped", "spectrum") and "lambda_S" not in cfg.explicit:
        ch["lambda_S"] = 1.0
    if cfg.sweep_parameter is None:
        if sc == "leaky" and "delta_P" not in cfg.explicit:
            ch.update(sweep_parameter="delta_P", sweep_values=(0.0, 1.0, 2.0, 4.0))
        elif sc == "damped" and "kappa" not in cfg.explicit:
            ch.update(sweep_parameter="kappa", sweep_values=(0.01, 0.1))
    if cfg.horizon_factor is None:
        ch["horizon_factor"] = {"leaky": 5.0, "compare": 10.0, "damped": 8.0}.get(sc, 1.0)
    return cfg.replace(**ch)


def _model_config(cfg: ScenarioConfig, **over) -> ModelConfig:
    vals = dict(omega_21=cfg.omega_21, omega_31=cfg.omega_31, delta_P=cfg.delta_P, lambda_P=cfg.lambda_P,
                lambda_S=cfg.lambda_S, kappa=cfg.kappa, lambda_eff=cfg.lambda_eff,
                raman_detuning=cfg.raman_detuning)
    vals.update(over)
    return ModelConfig(**vals)


def _sweep(cfg: ScenarioConfig):
    """(label, overrides) per sweep entry; a single unlabeled entry without a sweep."""
    if cfg.sweep_parameter is None:
        return [("", {})]
    return [(f"{cfg.sweep_parameter}_{v:g}", {cfg.sweep_parameter: v}) for v in cfg.sweep_values]


def _effective_defaults(cfg: ScenarioConfig, mc: ModelConfig) -> ModelConfig:
    """Pick the two-photon coupling when neither lambda_eff nor raman_detuning is given.

    Leaky/compare: |Γ − iΔ_P|, which gives the effective model the same
    golden-rule decay rate as the full model.  Damped: 50 λ_P, a far
    detuned Raman process.
    """
    if mc.lambda_eff is not None or mc.raman_detuning is not None:
        return mc
    if cfg.scenario == "damped":
        return mc.replace(raman_detuning=50.0 * mc.lambda_P)
    return mc.replace(raman_detuning=math.hypot(cfg.gamma, mc.delta_P))


def _tolerances(cfg: ScenarioConfig) -> Tolerances:
    return Tolerances(rtol=cfg.rtol, atol=cfg.atol, spectral_budget=cfg.spectral_budget)


def _grid(t_max: float, n_samples: int) -> np.ndarray:
    return np.linspace(0.0, t_max, n_samples)


def _leaky_bath(cfg: ScenarioConfig, t_max: float) -> BathSpec:
    if cfg.n_modes is not None:
        bath = discretize_bath(cfg.gamma, cfg.window, cfg.n_modes, cfg.profile)
    else:
        bath = bath_for_horizon(cfg.gamma, cfg.window, t_max, margin=cfg.recurrence_margin, profile=cfg.profile)
    if not cfg.allow_recurrence and t_max >= bath.recurrence_time:
        raise ConfigError(f"horizon {t_max:.6g} reaches the bath recurrence time {bath.recurrence_time:.6g}; "
                          "drop --n-modes, shorten --t-max or pass --allow-recurrence")
    return bath


def _leaky_horizon(cfg: ScenarioConfig, mc: ModelConfig) -> float:
    if cfg.t_max is not None:
        return cfg.t_max
    gam = decay_rate(AnalyticParams(mc.lambda_P, cfg.gamma, mc.delta_P))
    if gam == 0:
        raise ConfigError("lambda_P = 0 gives no decay; set t_max explicitly")
    return cfg.horizon_factor / gam


def _window(cfg: ScenarioConfig, bath: BathSpec):
    if cfg.window_gaps is not None:
        return cfg.window_gaps
    return DEFAULT_WINDOW_GAPS if bath.n_modes > WINDOW_THRESHOLD and bath.is_uniform_flat else None


# ---------------------------------------------------------------- output

def write_csv(path: str, columns, rows) -> None:
    """Deterministic CSV: 17 significant digits, '.' decimal point, '\\n' line endings."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else "%.17g" % v for v in row) + "\n")


def write_table(path: str, columns, table: np.ndarray) -> None:
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(columns), comments="", newline="\n")


def _check_norm(norm: np.ndarray, what: str):
    drift = float(np.max(np.abs(1.0 - norm)))
    if drift > NORM_BUDGET:
        raise InvariantViolation(f"{what}: norm drift {drift:.3e} exceeds budget {NORM_BUDGET:.0e}")
    return drift


# ---------------------------------------------------------------- scenarios

def _run_leaky_entry(cfg: ScenarioConfig, overrides: dict, path: str) -> dict:
    mc = _model_config(cfg, **overrides)
    t_max = _leaky_horizon(cfg, mc)
    n = cfg.n_samples or 2001
    t = _grid(t_max, n)
    bath = _leaky_bath(cfg, t_max)
    tol = _tolerances(cfg)
    if cfg.model == "effective":
        mc = _effective_defaults(cfg, mc)
        traj = propagate_effective(mc, t, tol, bath=bath, method=cfg.method, allow_recurrence=cfg.allow_recurrence)
        c1 = traj.amplitude("psi1")
        direct = np.clip(traj.series["bath_population"], 0.0, 1.0)
        deriv = np.full(n, np.nan)
        c2sq = np.zeros(n)
    else:
        traj = propagate_amplitudes(mc, bath, t, tol, method=cfg.method, allow_recurrence=cfg.allow_recurrence,
                                    window_gaps=_window(cfg, bath) if cfg.method != "rk" else None)
        ep = entanglement_probability(traj)
        c1 = traj.amplitude("psi1")
        direct, deriv = ep.direct.values, ep.derivative_form.values
        c2sq = np.abs(traj.amplitude("psi2")) ** 2
    norm = np.asarray(traj.diagnostics["norm"], dtype=float)
    cols = [t, direct, deriv, np.abs(c1) ** 2, c2sq, norm]
    names = list(LEAKY_COLUMNS)
    if cfg.overlay_analytic:
        params = AnalyticParams.from_config(mc, cfg.gamma)
        a1, _ = approx_amplitudes(params, t, cfg.c2_form)
        cols += [a1.real, a1.imag, np.abs(a1) ** 2]
        names += OVERLAY_COLUMNS
    write_table(path, names, np.column_stack(cols))
    drift = _check_norm(norm, os.path.basename(path))
    later = t >= min(20.0 / cfg.gamma, 0.5 * t_max)
    return {"file": os.path.basename(path), "delta_P": mc.delta_P, "lambda_P": mc.lambda_P, "t_max": t_max,
            "n_modes": bath.n_modes, "recurrence_time": bath.recurrence_time, "method": traj.diagnostics["method"],
            "omitted_weight": traj.diagnostics.get("omitted_weight", 0.0), "max_norm_drift": drift,
            "P_final": float(direct[-1]), "P_monotone_after_transient": bool(np.all(np.diff(direct[later]) >= -1e-9)),
            "model": cfg.model}


def slowest_damped_rate(mc: ModelConfig, effective: bool = False) -> float:
    """Slowest population decay rate towards ψ4, from the non-Hermitian sector Hamiltonian."""
    basis = build_effective_basis(1, include_psi4=True) if effective else build_sector_basis()
    h = (effective_hamiltonian(mc, basis) if effective else single_mode_hamiltonian(mc, basis)).dense()
    jump = collapse_operator(basis).dense()
    heff = h - 1j * mc.kappa * (jump.conj().T @ jump)  # dissipator is 2κ D[L]
    keep = [i for i, name in enumerate(basis.names) if name != "psi4"]
    rates = -2.0 * np.linalg.eigvals(heff[np.ix_(keep, keep)]).imag
    return float(max(rates.min(), 0.0))


def _run_damped_entry(cfg: ScenarioConfig, overrides: dict, path: str) -> dict:
    mc = _model_config(cfg, **overrides)
    if cfg.model == "effective":
        mc = _effective_defaults(cfg, mc)
    if cfg.t_max is not None:
        t_max = cfg.t_max
    else:
        slowest = slowest_damped_rate(mc, cfg.model == "effective")
        t_max = cfg.horizon_factor / slowest if slowest > 0 else 40.0
    period = rabi_period(mc.epsilon) if mc.epsilon > 0 else t_max
    n = cfg.n_samples or int(math.ceil(t_max / min(0.05, period / 20.0))) + 1
    t = _grid(t_max, n)
    tol = Tolerances(rtol=min(cfg.rtol, 1e-10), atol=min(cfg.atol, 1e-12), method="DOP853")
    if cfg.model == "effective":
        traj = propagate_effective(mc, t, tol, damped=True)
        pops = [traj.population("psi1"), traj.population("psi3")]
        names = [c for c in DAMPED_COLUMNS if c != "rho22"]
    else:
        traj = propagate_damped(mc, t, tol)
        pops = [traj.population(p) for p in ("psi1", "psi2", "psi3")]
        names = DAMPED_COLUMNS
    r44 = rho44(traj)
    write_table(path, names, np.column_stack([t, r44.values, *pops, traj.diagnostics["trace"],
                                              traj.diagnostics["min_eigenvalue"]]))
    summary = {"file": os.path.basename(path), "kappa": mc.kappa, "t_max": t_max, "n_samples": n,
               "rho44_final": float(r44.values[-1]), "model": cfg.model,
               "max_trace_drift": float(np.max(np.abs(traj.diagnostics["trace"] - 1.0))),
               "min_eigenvalue": float(traj.diagnostics["min_eigenvalue"].min())}
    if mc.kappa > 0 and r44.values[-1] > 0.5:
        summary["kappa_eff_fit"] = fit_decay_rate(r44)
    window = t <= min(t_max, 40.0 / max(mc.lambda_P, 1e-300))
    if window.sum() > 10 and mc.epsilon > 0:
        part = ObservableSeries(t[window], r44.values[window], "rho44")
        try:
            rep = stairs_metric(part, rabi_period=period)
            summary.update(plateau_count=rep.count, plateau_times=[float(x) for x in rep.locations],
                           plateau_rel_prominence=rep.metadata["rel_prominence"],
                           plateau_smoothing_width=rep.smoothing_width)
        except ConfigError as exc:
            summary["plateau_count"] = f"skipped: {exc}"
    return summary


def _run_compare_entry(cfg: ScenarioConfig, overrides: dict, path: str) -> dict:
    mc = _model_config(cfg, **overrides)
    params = AnalyticParams.from_config(mc, cfg.gamma)
    t_max = cfg.t_max or cfg.horizon_factor / decay_rate(params)
    n = cfg.n_samples or 2001
    t = _grid(t_max, n)
    bath = _leaky_bath(cfg, t_max)
    tol = _tolerances(cfg)
    full = propagate_amplitudes(mc, bath, t, tol, method=cfg.method, window_gaps=_window(cfg, bath),
                                allow_recurrence=cfg.allow_recurrence)
    emc = _effective_defaults(cfg, mc)
    eff = propagate_effective(emc, t, tol, bath=bath, method=cfg.method, allow_recurrence=cfg.allow_recurrence)
    a1, a2 = approx_amplitudes(params, t, cfg.c2_form)
    l1 = inverse_laplace(mc, bath, t, nodes=cfg.talbot_nodes)
    l2 = inverse_laplace(mc, bath, t, which="c2", nodes=cfg.talbot_nodes, check_tol=1e-5)
    c1 = full.amplitude("psi1")
    p_full = np.clip(full.series["bath_population"], 0.0, 1.0)
    p_eff = np.clip(eff.series["bath_population"], 0.0, 1.0)
    p_eq19 = 1.0 - np.abs(a1) ** 2 - np.abs(a2) ** 2
    p_lap = 1.0 - np.abs(l1) ** 2 - np.abs(l2) ** 2
    write_table(path, COMPARE_COLUMNS, np.column_stack([t, p_full, p_eff, p_eq19, p_lap, np.abs(c1) ** 2,
                                                        np.abs(a1) ** 2, np.abs(l1) ** 2]))
    pump_period = 2.0 * math.pi / (math.sqrt(2.0) * mc.lambda_P)
    plateaus = {}
    for name, vals in (("full", p_full), ("effective", p_eff)):
        try:
            plateaus[name] = stairs_metric(ObservableSeries(t, vals, name), rabi_period=pump_period).count
        except ConfigError as exc:
            plateaus[name] = f"skipped: {exc}"
    return {"file": os.path.basename(path), "delta_P": mc.delta_P, "lambda_P": mc.lambda_P, "t_max": t_max,
            "n_modes": bath.n_modes, "effective_coupling": emc.effective_lambda(),
            "residuals": {"max_abs_C1_ode_minus_eq19": float(np.max(np.abs(c1 - a1))),
                          "max_abs_C1_ode_minus_laplace": float(np.max(np.abs(c1 - l1))),
                          "max_abs_P_full_minus_eq19": float(np.max(np.abs(p_full - p_eq19))),
                          "max_abs_P_full_minus_laplace": float(np.max(np.abs(p_full - p_lap))),
                          "analytic_valid": params.valid},
            "final": {"P_full": float(p_full[-1]), "P_effective": float(p_eff[-1]),
                      "P_eq19": float(p_eq19[-1]), "P_laplace": float(p_lap[-1])},
            "plateau_counts": plateaus}


def _run_spectrum_entry(cfg: ScenarioConfig, overrides: dict, path: str) -> dict:
    mc = _model_config(cfg, **overrides)
    basis = build_sector_basis()
    h = single_mode_hamiltonian(mc, basis).dense()
    if np.any(h.imag):
        raise InvariantViolation("single-mode Hamiltonian is expected to be real")
    h = h.real
    energies, vecs = np.linalg.eigh(h)
    vecs = vecs * np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(4)])
    residual = np.linalg.norm(h @ vecs - vecs * energies, axis=0)
    rows, notice = [], None
    if mc.is_resonant:
        ds = dressed_states(mc, basis)
        names = list(ds.NAMES)
        analytic = np.array([ds.energies[k] for k in names])
        # match each analytic state to its numerical partner by overlap
        amat = ds.matrix().real
        order = [int(np.argmax(np.abs(amat[:, j] @ vecs))) for j in range(4)]
        if sorted(order) != list(range(4)):
            order = list(np.argsort(analytic).argsort())
        an_res = np.linalg.norm(h @ amat - amat * analytic, axis=0)
        worst = float(max(an_res.max(), np.max(np.abs(energies[order] - analytic))))
        if worst > 1e-10:
            raise InvariantViolation(f"analytic eigensystem mismatch {worst:.3e}")
        if abs(ds.epsilon - math.sqrt(2 * mc.lambda_P**2 + mc.lambda_S**2)) > 1e-12:
            raise InvariantViolation("epsilon mismatch")
        for j, name in enumerate(names):
            v = amat[:, j]
            rows.append([name, energies[order[j]], analytic[j], float(an_res[j]), *(v + 0.0)])
    else:
        notice = "off resonance: analytic eigensystem skipped, numerical eigenpairs only"
        log.warning(notice)
        for j in range(4):
            rows.append([f"E{j}", energies[j], float("nan"), float(residual[j]), *(vecs[:, j] + 0.0)])
    if residual.max() > 1e-10:
        raise InvariantViolation(f"eigenvector residual {residual.max():.3e}")
    write_csv(path, SPECTRUM_COLUMNS, rows)
    return {"file": os.path.basename(path), "resonant": mc.is_resonant, "notice": notice,
            "epsilon": mc.epsilon, "eigenvalues": [float(e) for e in energies],
            "max_numerical_residual": float(residual.max())}


RUNNERS = {"leaky": _run_leaky_entry, "damped": _run_damped_entry,
           "compare": _run_compare_entry, "spectrum": _run_spectrum_entry}


def _entry_path(cfg: ScenarioConfig, label: str) -> str:
    stem = cfg.scenario + ("_effective" if cfg.model == "effective" else "")
    stem = stem if not label else f"{stem}_{label}"
    return os.path.join(cfg.out_dir, stem + ".csv")


def _call(runner, cfg, overrides, path):
    return runner(cfg, overrides, path)


def run_scenario(cfg: ScenarioConfig) -> dict:
    """Validate, run every sweep entry (possibly in parallel) and write metadata.

    Returns the metadata dictionary.  Raises the package exceptions on
    failure after removing every file this run created.
    """
    cfg = resolve_defaults(cfg)
    validate(cfg)
    if cfg.scenario == "damped" and cfg.model == "full":
        cfg = cfg.replace(model="single_mode")
    if cfg.scenario in ("leaky", "compare") and cfg.model == "single_mode":
        raise ConfigError(f"the {cfg.scenario} scenario needs a bath; use model full or effective")
    entries = _sweep(cfg)
    for _, over in entries:
        mc = _model_config(cfg, **over)  # surfaces ModelConfig errors before any output
        if cfg.model == "effective":
            _effective_defaults(cfg, mc).effective_lambda()
    paths = [_entry_path(cfg, label) for label, _ in entries]
    meta_path = _entry_path(cfg, "metadata")[:-4] + ".json"
    os.makedirs(cfg.out_dir, exist_ok=True)
    start = time.perf_counter()
    runner = RUNNERS[cfg.scenario]
    try:
        if cfg.workers > 1 and len(entries) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [pool.submit(_call, runner, cfg, over, p) for (_, over), p in zip(entries, paths)]
                results = [f.result() for f in futures]
        else:
            results = [runner(cfg, over, p) for (_, over), p in zip(entries, paths)]
        meta = {"tool": "lambdacavity", "version": __version__, "scenario": cfg.scenario,
                "config": cfg.echo(), "runs": results,
                "tolerances": {"rtol": cfg.rtol, "atol": cfg.atol, "norm_budget": NORM_BUDGET,
                               "spectral_budget": cfg.spectral_budget},
                "invariants_passed": True,
                "wall_clock_seconds": time.perf_counter() - start}
        files = [meta_path]
        if cfg.emit_plot_script:
            script = os.path.join(cfg.out_dir, "plot_" + os.path.basename(meta_path)[: -len("_metadata.json")] + ".py")
            _write_plot_script(script, cfg.scenario, [os.path.basename(p) for p in paths])
            files.append(script)
            meta["plot_script"] = os.path.basename(script)
        with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        return meta
    except BaseException:
        plot = os.path.join(cfg.out_dir, "plot_" + os.path.basename(meta_path)[: -len("_metadata.json")] + ".py")
        for p in paths + [meta_path, plot]:
            if os.path.exists(p):
                os.remove(p)
        raise


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, set):
        return sorted(obj)
    return str(obj)


_PLOT_TEMPLATE = '''"""Plot the CSV series of a {scenario} run (generated; needs matplotlib)."""
import os
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
FILES = {files!r}
Y = {y!r}

fig, ax = plt.subplots()
for name in FILES:
    data = np.genfromtxt(os.path.join(HERE, name), delimiter=",", names=True, dtype=None, encoding="ascii")
    if Y is None:
        print(data)
        continue
    for col in Y:
        ax.plot(data["t"], data[col], label=f"{{name}}: {{col}}")
ax.set_xlabel("t")
ax.legend()
fig.savefig(os.path.join(HERE, "{scenario}.png"), dpi=150)
'''


def _write_plot_script(path: str, scenario: str, files) -> None:
    y = {"leaky": ["P_entangled_direct"], "damped": ["rho44"],
         "compare": ["P_full", "P_effective", "P_eq19", "P_laplace"], "spectrum": None}[scenario]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_PLOT_TEMPLATE.format(scenario=scenario, files=list(files), y=y))


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lambdacavity", description=__doc__.splitlines()[0])
    p.add_argument("scenario", choices=list(RUNNERS))
    p.add_argument("--config", help="INI file with [model], [bath], [grid], ... sections")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--fast", action="store_true", help="CI-scale leaky run with lambda_P = 0.05")
    p.add_argument("--n-modes", type=int, help="number of Stokes bath modes (default: sized from the horizon)")
    p.add_argument("--window", type=float, help="bath half-width W in units of gamma")
    p.add_argument("--workers", type=int, help="parallel workers for sweeps")
    p.add_argument("--emit-plot-script", action="store_true", help="also write a matplotlib script")
    p.add_argument("--model", choices=["full", "effective", "single_mode"])
    p.add_argument("--t-max", type=float, help="simulation horizon")
    p.add_argument("--overlay-eq19", action="store_true", help="add second-order C1 columns to leaky CSVs")
    p.add_argument("--allow-recurrence", action="store_true",
                   help="permit horizons past the bath recurrence time")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, ScenarioConfig(scenario=args.scenario))
        cfg = cfg.replace(scenario=args.scenario, fast=args.fast or cfg.fast)
        cli = {"out_dir": args.out, "n_modes": args.n_modes, "window": args.window, "workers": args.workers,
               "model": args.model, "t_max": args.t_max}
        cfg = cfg.replace(**{k: v for k, v in cli.items() if v is not None})
        if args.emit_plot_script:
            cfg = cfg.replace(emit_plot_script=True)
        if args.overlay_eq19:
            cfg = cfg.replace(overlay_analytic=True)
        if args.allow_recurrence:
            cfg = cfg.replace(allow_recurrence=True)
        meta = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    for run in meta["runs"]:
        print(os.path.join(meta["config"]["out_dir"], run["file"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
