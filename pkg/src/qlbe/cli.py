"""Scenario orchestration and bit-stable result emission.

Usage:  qlbe <scenario> --config <path> [--out <dir>]

Scenarios
---------
constants   diffusion-limit record (eta, D_pp, D_xx by both routes, CP check)
evolve      time evolution of a configured initial state -> observable CSV
decohere    tau-ladder coherence decay CSV plus fitted decay rates
additivity  generator additivity defects for the linear and sqrt variants
limits      intercollision-time consistency report

Artifacts are CSV files that begin with a ``#``-prefixed header echoing the
full resolved configuration and the library version. Floats are printed in
scientific notation with 17 significant digits, so identical configs yield
byte-identical artifacts. Human-readable summaries (with optional unit
conversions) go to stdout; machine output goes only to files inside the
configured output directory.

Exit codes: 0 success, 2 configuration error, 3 run invalidated by a
physics monitor, 4 quadrature accuracy failure. The environment variable
``QLBE_WORKERS`` caps the thread count used to fan out independent ladder
rungs (default: available parallelism); results are collected in rung
order, so the worker count never affects artifact bytes.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCENARIOS, SCHEMA, ScenarioConfig, parse_config
from .diffusion import (
    constants_for,
    dxx_coefficient_quadrature,
    dxx_from_tau,
    tau_constraint_report,
)
from .errors import AccuracyError, ConfigurationError, DomainError, QlbeError, RunInvalidatedError
from .evolution import EvolutionConfig, RateOperator, classical_lbe_rates, evolve, fit_decay_rate
from .generator import DensityMatrix, additivity_defect, build_channels

__all__ = ["main", "run_scenario"]


def _fmt(value) -> str:
    """Fixed formatting: 17 significant digits for floats, plain ints, lower bools."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    if value is None:
        return "unset"
    return str(value)


def _header_lines(cfg: ScenarioConfig) -> list[str]:
    lines = [f"# qlbe {__version__}"]
    for key in sorted(cfg.raw):
        lines.append(f"# {key} = {_fmt(cfg.raw[key])}")
    return lines


def _write_artifact(path: Path, cfg: ScenarioConfig, columns: list[str],
                    rows: list[list]) -> None:
    lines = _header_lines(cfg)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _snap_index(grid, p: float) -> int:
    return int(np.argmin(np.abs(grid.p_values - p)))


def _workers() -> int:
    env = os.environ.get("QLBE_WORKERS", "")
    if env.strip():
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"QLBE_WORKERS must be an integer, got {env!r}")
        if n < 1:
            raise ConfigurationError("QLBE_WORKERS must be at least 1")
        return n
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# scenario runners
# ---------------------------------------------------------------------------


def _run_constants(cfg: ScenarioConfig, out_dir: Path) -> None:
    gas0 = cfg.gas.components[0]
    qo, ko = cfg["quadrature.q_order"], cfg["quadrature.k_order"]
    consts = constants_for(gas0, cfg.amplitude, cfg.masses, cfg.tau,
                           q_order=qo, k_order=ko,
                           convergence_tol=cfg["quadrature.tol"])
    if consts.d_pp > 0.0:
        d_xx_route = dxx_coefficient_quadrature(gas0, cfg.amplitude, cfg.masses,
                                                cfg.tau, q_order=qo + 16, k_order=ko - 4)
        route_gap = abs(d_xx_route / consts.d_xx - 1.0)
    else:
        d_xx_route = 0.0
        route_gap = 0.0
    columns = ["tau", "beta", "eta", "d_pp", "d_xx", "d_xx_route", "route_rel_gap",
               "cp_satisfied", "cp_margin"]
    row = [cfg.tau, gas0.beta, consts.eta, consts.d_pp, consts.d_xx, d_xx_route,
           route_gap, consts.cp_satisfied, consts.cp_margin]
    _write_artifact(out_dir / "constants.csv", cfg, columns, [row])
    u = cfg.units
    print(f"eta        = {consts.eta:.6e}")
    print(f"D_pp       = {consts.d_pp:.6e}")
    print(f"D_xx       = {consts.d_xx:.6e}  (route: {d_xx_route:.6e}, rel gap {route_gap:.2e})")
    print(f"CP bound   = {'satisfied' if consts.cp_satisfied else 'VIOLATED'} "
          f"(margin {consts.cp_margin:.6e})")
    if u.report_conversions:
        print(f"tau        = {u.to_report(cfg.tau, 'time'):.6e} (report units)")


def _initial_state(cfg: ScenarioConfig) -> DensityMatrix:
    grid = cfg.grid
    kind = cfg["evolve.initial"]
    if kind == "gaussian":
        return DensityMatrix.gaussian_mixed(grid, width=cfg["evolve.width"],
                                            center=cfg["evolve.p"])
    i = _snap_index(grid, cfg["evolve.p"])
    if kind == "eigenstate":
        return DensityMatrix.momentum_eigenstate(grid, i)
    j = _snap_index(grid, -cfg["evolve.p"])
    return DensityMatrix.superposition(grid, i, j)


EVOLVE_COLUMNS = ["time", "trace_error", "coherence_l1", "mean_P", "var_P",
                  "min_eig", "edge_pop"]


def _run_evolve(cfg: ScenarioConfig, out_dir: Path) -> None:
    gen_cfg = cfg.generator_config()
    rate = RateOperator.from_config(gen_cfg, cfg.grid)
    evo = EvolutionConfig(
        dt=cfg["evolve.dt"],
        n_steps=cfg["evolve.n_steps"],
        positivity_tol=cfg["evolve.positivity_tol"],
        edge_population_tol=cfg["evolve.edge_tol"],
        record_every=cfg["evolve.record_every"],
    )
    series, _ = evolve(_initial_state(cfg), evo, rate)
    rows = [
        [t, te, c, mp, vp, me, ep]
        for t, te, c, mp, vp, me, ep in zip(
            series.times, series.trace_error, series.coherence_l1, series.mean_p,
            series.var_p, series.min_eigenvalue, series.edge_population)
    ]
    _write_artifact(out_dir / "evolve.csv", cfg, EVOLVE_COLUMNS, rows)
    u = cfg.units
    t_end = u.to_report(series.times[-1], "time")
    print(f"evolved {cfg['evolve.n_steps']} steps to t = {t_end:.6e}; "
          f"{len(series)} records")
    print(f"final: trace_err = {series.trace_error[-1]:.3e}, "
          f"coherence_l1 = {series.coherence_l1[-1]:.6e}, "
          f"min_eig = {series.min_eigenvalue[-1]:.3e}")


def _decohere_rung(cfg: ScenarioConfig, tau: float):
    grid = cfg.grid
    gen_cfg = cfg.generator_config(coupling=cfg["decohere.coupling"],
                                   include_hamiltonian=False)
    gen_cfg = type(gen_cfg)(**{**gen_cfg.__dict__, "tau": tau})
    rate = RateOperator.from_config(gen_cfg, grid)
    t_max = cfg["decohere.t_max"]
    n_records = max(cfg["decohere.n_records"], 1)
    dt_cap = rate.max_stable_dt()
    per_record = max(1, int(np.ceil(t_max / (n_records * dt_cap))))
    dt = t_max / (n_records * per_record)
    i = _snap_index(grid, cfg["decohere.p"])
    j = _snap_index(grid, -cfg["decohere.p"])
    rho0 = DensityMatrix.superposition(grid, i, j)
    evo = EvolutionConfig(dt=dt, n_steps=n_records * per_record,
                          positivity_tol=cfg["evolve.positivity_tol"],
                          edge_population_tol=1.0,  # superpositions sit anywhere on the grid
                          record_every=per_record)
    series, _ = evolve(rho0, evo, rate)
    rate_fit = fit_decay_rate(series.times, series.coherence_l1)
    return series, rate_fit


def _run_decohere(cfg: ScenarioConfig, out_dir: Path) -> None:
    ladder = cfg["decohere.tau_ladder"]
    with ThreadPoolExecutor(max_workers=min(_workers(), len(ladder))) as pool:
        results = list(pool.map(lambda tau: _decohere_rung(cfg, tau), ladder))
    decay_rows = []
    rate_rows = []
    for tau, (series, rate_fit) in zip(ladder, results):
        for t, c in zip(series.times, series.coherence_l1):
            decay_rows.append([tau, t, c])
        rate_rows.append([tau, rate_fit])
    _write_artifact(out_dir / "decohere_decay.csv", cfg,
                    ["tau", "time", "coherence_l1"], decay_rows)
    _write_artifact(out_dir / "decohere_rates.csv", cfg,
                    ["tau", "decay_rate"], rate_rows)
    print("fitted coherence decay rates:")
    for tau, r in rate_rows:
        print(f"  tau = {tau:g}: rate = {r:.6e}")
    rates = [r for _, r in rate_rows]
    ordered = all(b >= a for a, b in zip(rates, rates[1:]))
    print(f"rate ordering along the ladder: {'nondecreasing' if ordered else 'NOT monotone'}")


def _run_additivity(cfg: ScenarioConfig, out_dir: Path) -> None:
    if len(cfg.gas.components) != 2:
        raise ConfigurationError(
            "additivity scenario needs two gas components (gas.beta2 / gas.n2)")
    gen_cfg = cfg.generator_config()
    d_linear = additivity_defect(gen_cfg, cfg.grid, variant="linear")
    d_sqrt = additivity_defect(gen_cfg, cfg.grid, variant="sqrt")
    _write_artifact(out_dir / "additivity.csv", cfg, ["variant", "defect"],
                    [["linear", d_linear], ["sqrt", d_sqrt]])
    print(f"linear-generator additivity defect: {d_linear:.3e}")
    print(f"sqrt-variant additivity defect:     {d_sqrt:.3e}")


def _run_limits(cfg: ScenarioConfig, out_dir: Path) -> None:
    gas0 = cfg.gas.components[0]
    report = tau_constraint_report(gas0, cfg.amplitude.sigma_total, cfg.masses)
    columns = ["tau", "tau_k_B_T", "threshold", "satisfied", "density_ratio"]
    row = [report.tau, report.tau_kT, report.threshold, report.satisfied,
           report.density_ratio]
    _write_artifact(out_dir / "limits.csv", cfg, columns, [row])
    u = cfg.units
    print(f"tau                 = {report.tau:.6e}"
          + (f"  ({u.to_report(report.tau, 'time'):.6e} report units)"
             if u.report_conversions else ""))
    print(f"tau * k_B T         = {report.tau_kT:.6e} (threshold {report.threshold:.6e})")
    print(f"constraint          = {'satisfied' if report.satisfied else 'VIOLATED'}")
    print(f"sqrt(m k_B T)/sigma n = {report.density_ratio:.6e} "
          "(order-one constant left unresolved)")


_RUNNERS = {
    "constants": _run_constants,
    "evolve": _run_evolve,
    "decohere": _run_decohere,
    "additivity": _run_additivity,
    "limits": _run_limits,
}


def run_scenario(cfg: ScenarioConfig, out_dir: Path | None = None) -> None:
    """Dispatch one scenario; artifacts land in ``out_dir`` (created if needed)."""
    if cfg.scenario not in _RUNNERS:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    out_dir = Path(out_dir) if out_dir is not None else cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.tau_derived:
        print(f"tau derived from gas parameters: tau = {cfg.tau:.6e}")
    _RUNNERS[cfg.scenario](cfg, out_dir)


def _schema_help() -> str:
    lines = ["config keys (key = value per line, '#' comments):"]
    for key, (_parser, default, desc) in SCHEMA.items():
        shown = "unset" if default is None else _fmt(default)
        lines.append(f"  {key:32s} default {shown:12s} {desc}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qlbe",
        description="Momentum-decoherence scenarios on a 1D momentum grid.",
        epilog=_schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="path to the key-value config file")
    parser.add_argument("--out", default=None, help="artifact directory (overrides output.dir)")
    parser.add_argument("--version", action="version", version=f"qlbe {__version__}")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config, scenario=args.scenario)
        run_scenario(cfg, out_dir=Path(args.out) if args.out else None)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RunInvalidatedError as exc:
        print(f"run invalidated: {exc}", file=sys.stderr)
        return 3
    except AccuracyError as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return 4
    except QlbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
