"""Flat key-value scenario configuration.

Config files are plain text, one ``section.key = value`` per line, with
``#`` comments and blank lines ignored. Unknown keys are rejected; every
key has a documented default (see :data:`SCHEMA` or ``qlbe --help``).
Parsing and validation happen before any compute, and validation errors
name the offending key path.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError
from .gas import GasComponent, GasMixture, ScatteringAmplitude
from .generator import GeneratorConfig, MomentumGrid
from .kinematics import Masses, UnitSystem, intercollision_time

__all__ = ["ScenarioConfig", "parse_config", "SCHEMA", "SCENARIOS"]

SCENARIOS = ("constants", "evolve", "decohere", "additivity", "limits")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part.strip()) for part in text.split(",") if part.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part.strip()) for part in text.split(",") if part.strip())


# key -> (parser, default, description); a default of None means "unset".
SCHEMA: dict[str, tuple] = {
    "scenario": (str, None, "optional; must match the CLI scenario if present"),
    "masses.M": (float, 1.0, "particle mass"),
    "masses.m": (float, 1.0, "gas molecule mass"),
    "gas.beta": (float, 1.0, "inverse temperature of the first gas component"),
    "gas.n": (float, 1.0, "number density of the first gas component"),
    "gas.beta2": (float, None, "inverse temperature of the optional second component"),
    "gas.n2": (float, None, "number density of the optional second component"),
    "amplitude.model": (str, "constant", "scattering amplitude model: constant | gaussian"),
    "amplitude.f0": (float, 1.0, "amplitude scale (length)"),
    "amplitude.w": (float, 1.0, "gaussian amplitude momentum width (gaussian model)"),
    "amplitude.sigma": (float, 1.0, "total cross section (feeds the intercollision time)"),
    "tau.value": (float, 1.0, "intercollision time"),
    "tau.derive": (_parse_bool, False, "derive tau from gas/sigma instead of tau.value"),
    "grid.N": (int, 32, "momentum grid points"),
    "grid.dP": (float, 0.25, "momentum grid spacing"),
    "grid.Q_shifts": (_parse_int_list, (1, -1), "transfer shifts in grid units, comma-separated"),
    "generator.k_order": (int, 8, "Gauss-Hermite order for the gas momentum average"),
    "generator.coupling": (float, None, "1D coupling override; default 2 pi/(tau m*^2)"),
    "generator.include_hamiltonian": (_parse_bool, True, "include the free Hamiltonian"),
    "evolve.dt": (float, 1e-3, "integrator step"),
    "evolve.n_steps": (int, 500, "number of steps"),
    "evolve.record_every": (int, 10, "recording stride"),
    "evolve.positivity_tol": (float, 1e-8, "abort when min eigenvalue < -tol"),
    "evolve.edge_tol": (float, 1e-6, "abort when boundary population exceeds tol"),
    "evolve.initial": (str, "gaussian", "initial state: gaussian | eigenstate | superposition"),
    "evolve.width": (float, 1.0, "gaussian initial-state momentum width"),
    "evolve.p": (float, 0.0, "initial momentum (snapped to the grid)"),
    "decohere.tau_ladder": (_parse_float_list, (1.0, 2.0, 4.0), "tau rungs, comma-separated"),
    "decohere.p": (float, 1.125, "superposed momenta +-p (snapped to the grid)"),
    "decohere.coupling": (float, 40.0, "fixed coupling shared across the ladder"),
    "decohere.t_max": (float, 10.0, "evolution horizon per rung"),
    "decohere.n_records": (int, 100, "records per rung"),
    "quadrature.q_order": (int, 64, "radial transfer-quadrature order"),
    "quadrature.k_order": (int, 24, "transverse Gauss-Hermite order"),
    "quadrature.tol": (float, 1e-4, "relative convergence tolerance"),
    "units.energy": (float, None, "report-time energy conversion factor"),
    "units.time": (float, None, "report-time time conversion factor"),
    "units.length": (float, None, "report-time length conversion factor"),
    "output.dir": (str, "qlbe-out", "artifact directory"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved, validated configuration for one CLI scenario run."""

    scenario: str | None
    raw: dict[str, object]  # full resolved key -> value map, echoed in artifacts

    masses: Masses = None
    gas: GasMixture = None
    amplitude: ScatteringAmplitude = None
    tau: float = 1.0
    tau_derived: bool = False
    grid: MomentumGrid = None
    units: UnitSystem = None
    out_dir: Path = None

    def __getitem__(self, key: str):
        return self.raw[key]

    def generator_config(self, coupling: float | None = None,
                         include_hamiltonian: bool | None = None) -> GeneratorConfig:
        if coupling is None:
            coupling = self.raw["generator.coupling"]
        if include_hamiltonian is None:
            include_hamiltonian = self.raw["generator.include_hamiltonian"]
        return GeneratorConfig(
            masses=self.masses,
            gas=self.gas,
            amplitude=self.amplitude,
            tau=self.tau,
            k_order=self.raw["generator.k_order"],
            q_shifts=self.raw["grid.Q_shifts"],
            include_hamiltonian=include_hamiltonian,
            coupling=coupling,
        )


def _fail(key: str, reason: str) -> ConfigurationError:
    return ConfigurationError(f"config key {key}: {reason}")


def _read_pairs(path: Path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = text.split("=", 1)
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _require_positive(values: dict, key: str) -> None:
    v = values[key]
    if v is not None and not v > 0:
        raise _fail(key, f"must be positive, got {v}")


def parse_config(path: str | Path, scenario: str | None = None) -> ScenarioConfig:
    """Parse and validate a config file into a :class:`ScenarioConfig`.

    ``scenario`` is the CLI-selected scenario; if the file also names one,
    the two must agree.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    pairs = _read_pairs(path)

    values: dict[str, object] = {}
    for key, (parser, default, _desc) in SCHEMA.items():
        if key in pairs:
            try:
                values[key] = parser(pairs[key])
            except (ValueError, TypeError) as exc:
                raise _fail(key, f"invalid value {pairs[key]!r} ({exc})") from None
        else:
            values[key] = default

    file_scenario = values["scenario"]
    if file_scenario is not None and file_scenario not in SCENARIOS:
        raise _fail("scenario", f"must be one of {', '.join(SCENARIOS)}")
    if scenario is not None and file_scenario is not None and scenario != file_scenario:
        raise _fail("scenario", f"file says {file_scenario!r} but CLI selected {scenario!r}")
    resolved_scenario = scenario or file_scenario
    values["scenario"] = resolved_scenario

    for key in ("masses.M", "masses.m", "gas.beta", "gas.beta2",
                "amplitude.sigma", "tau.value", "grid.dP", "evolve.dt",
                "evolve.width", "decohere.coupling", "decohere.t_max",
                "quadrature.tol"):
        _require_positive(values, key)
    if values["gas.n2"] is not None and not values["gas.n2"] >= 0:
        raise _fail("gas.n2", "must be nonnegative")
    if not values["gas.n"] >= 0:
        raise _fail("gas.n", "must be nonnegative")
    if (values["gas.beta2"] is None) != (values["gas.n2"] is None):
        raise _fail("gas.beta2", "second component needs both gas.beta2 and gas.n2")
    if values["amplitude.model"] not in ("constant", "gaussian"):
        raise _fail("amplitude.model", "must be constant or gaussian")
    if values["amplitude.model"] == "gaussian":
        _require_positive(values, "amplitude.w")
    if values["grid.N"] < 4:
        raise _fail("grid.N", "needs at least 4 points")
    if values["generator.k_order"] < 2:
        raise _fail("generator.k_order", "must be at least 2")
    if values["generator.coupling"] is not None and values["generator.coupling"] < 0:
        raise _fail("generator.coupling", "must be nonnegative")
    for key in ("evolve.n_steps", "decohere.n_records"):
        if values[key] < 0:
            raise _fail(key, "must be nonnegative")
    if values["evolve.record_every"] < 1:
        raise _fail("evolve.record_every", "must be at least 1")
    if values["evolve.initial"] not in ("gaussian", "eigenstate", "superposition"):
        raise _fail("evolve.initial", "must be gaussian, eigenstate or superposition")
    if any(t <= 0 for t in values["decohere.tau_ladder"]):
        raise _fail("decohere.tau_ladder", "all rungs must be positive")
    if not values["grid.Q_shifts"]:
        raise _fail("grid.Q_shifts", "must not be empty")
    for q in values["grid.Q_shifts"]:
        if q == 0 or abs(q) >= values["grid.N"]:
            raise _fail("grid.Q_shifts", f"shift {q} must be nonzero with |shift| < grid.N")
    for key in ("quadrature.q_order", "quadrature.k_order"):
        if values[key] < 2:
            raise _fail(key, "must be at least 2")
    for key in ("units.energy", "units.time", "units.length"):
        _require_positive(values, key)

    try:
        masses = Masses(M=values["masses.M"], m=values["masses.m"])
        comps = [GasComponent(m=values["masses.m"], beta=values["gas.beta"],
                              n_g=values["gas.n"])]
        if values["gas.beta2"] is not None:
            comps.append(GasComponent(m=values["masses.m"], beta=values["gas.beta2"],
                                      n_g=values["gas.n2"]))
        gas = GasMixture(tuple(comps))
        amplitude = ScatteringAmplitude(
            model=values["amplitude.model"],
            f0=values["amplitude.f0"],
            w=values["amplitude.w"],
            sigma_total=values["amplitude.sigma"],
        )
        grid = MomentumGrid(n=values["grid.N"], dp=values["grid.dP"])
    except Exception as exc:
        raise ConfigurationError(str(exc)) from None

    if values["tau.derive"]:
        if len(gas.components) != 1:
            raise _fail("tau.derive", "tau derivation needs a single-component gas")
        tau = intercollision_time(values["gas.beta"], values["masses.m"],
                                  values["amplitude.sigma"], values["gas.n"])
        values["tau.value"] = tau
    else:
        tau = values["tau.value"]

    conversions = {
        kind: values[f"units.{kind}"]
        for kind in ("energy", "time", "length")
        if values[f"units.{kind}"] is not None
    }
    units = UnitSystem(report_conversions=conversions)

    return ScenarioConfig(
        scenario=resolved_scenario,
        raw=values,
        masses=masses,
        gas=gas,
        amplitude=amplitude,
        tau=tau,
        tau_derived=values["tau.derive"],
        grid=grid,
        units=units,
        out_dir=Path(values["output.dir"]),
    )
