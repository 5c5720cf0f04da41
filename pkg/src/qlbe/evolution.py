"""Fixed-step time evolution, observable recording, and the classical comparison.

The integrator is the classical 4-stage Runge-Kutta scheme with a
conservative a-priori stability guard dt * ||generator|| <= 0.1 (spectral
bound estimated from the channel loss rates). Each step re-hermitizes the
state, which removes integrator-order hermiticity drift without masking
positivity violations; those are monitored separately through eigenvalue
checks on recorded steps only (O(N^3) cost containment).

The classical side discretizes the gain-loss master equation with the
on-shell transition rates that the quantum diagonal dynamics approaches as
tau grows. At finite tau the diagonal rates carry smearing corrections of
order 1/tau; the comparison functions below measure that gap instead of
assuming it away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ContractViolationError, DomainError
from .gas import mixture_density
from .generator import (
    DensityMatrix,
    DissipatorOperator,
    GeneratorConfig,
    MomentumGrid,
    build_channels,
    on_shell_gas_momentum,
)
from .kinematics import Masses

__all__ = [
    "EvolutionConfig",
    "ObservableSeries",
    "RateOperator",
    "step",
    "evolve",
    "classical_lbe_rates",
    "classical_evolve",
    "compare_diagonal",
    "fit_decay_rate",
]

STABILITY_GUARD = 0.1
RateFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    n_steps: int
    positivity_tol: float = 1e-8
    edge_population_tol: float = 1e-6
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.n_steps < 0:
            raise ConfigurationError("n_steps must be nonnegative")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be at least 1")


@dataclass
class ObservableSeries:
    """Per-record observables of one evolution run."""

    times: np.ndarray
    trace_error: np.ndarray
    coherence_l1: np.ndarray
    mean_p: np.ndarray
    var_p: np.ndarray
    min_eigenvalue: np.ndarray
    edge_population: np.ndarray
    diagonals: np.ndarray  # shape (n_records, N)

    def __len__(self) -> int:
        return len(self.times)


class RateOperator:
    """dρ/dt callable assembled from channels plus the optional free Hamiltonian."""

    def __init__(self, channels, masses: Masses | None = None,
                 grid: MomentumGrid | None = None):
        self.dissipator = DissipatorOperator(channels)
        grid = grid if grid is not None else self.dissipator.grid
        if grid is None:
            raise ConfigurationError("RateOperator needs a grid when no channels are given")
        self.grid = grid
        self.masses = masses
        if masses is not None:
            e = grid.p_values**2 / (2.0 * masses.M)
            self._phase = -1j * (e[:, None] - e[None, :])
        else:
            self._phase = None

    @classmethod
    def from_config(cls, cfg: GeneratorConfig, grid: MomentumGrid,
                    channels=None) -> "RateOperator":
        if channels is None:
            channels = build_channels(cfg, grid)
        masses = cfg.masses if cfg.include_hamiltonian else None
        return cls(channels, masses=masses, grid=grid)

    def __call__(self, elements: np.ndarray) -> np.ndarray:
        out = self.dissipator(elements)
        if self._phase is not None:
            out = out + self._phase * elements
        return out

    def norm_bound(self) -> float:
        bound = self.dissipator.norm_bound()
        if self._phase is not None:
            bound += float(np.max(np.abs(self._phase)))
        return bound

    def max_stable_dt(self) -> float:
        b = self.norm_bound()
        return np.inf if b == 0.0 else STABILITY_GUARD / b


def _check_guard(dt: float, norm_bound: float | None) -> None:
    if norm_bound is not None and dt * norm_bound > STABILITY_GUARD:
        raise ConfigurationError(
            f"stability guard violated: dt * bound = {dt * norm_bound:.3e} > {STABILITY_GUARD}"
        )


def step(rho: DensityMatrix, rate_fn: RateFn, dt: float,
         norm_bound: float | None = None) -> DensityMatrix:
    """One RK4 step of drho/dt = rate_fn(rho), re-hermitized afterwards."""
    _check_guard(dt, norm_bound)
    y = rho.elements
    k1 = rate_fn(y)
    k2 = rate_fn(y + 0.5 * dt * k1)
    k3 = rate_fn(y + 0.5 * dt * k2)
    k4 = rate_fn(y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(rho.grid, out)


def evolve(rho0: DensityMatrix, cfg: EvolutionConfig, rate_fn: RateFn,
           norm_bound: float | None = None) -> tuple[ObservableSeries, DensityMatrix]:
    """Repeated stepping with physicality monitors.

    ``norm_bound`` defaults to rate_fn.norm_bound() when available; the
    stability guard is enforced up front. The run aborts with
    :class:`RunInvalidatedError` if, at a recorded step, the smallest
    eigenvalue drops below -positivity_tol or the boundary population
    exceeds edge_population_tol (shift truncation would then bias the run).
    """
    from .errors import RunInvalidatedError

    if norm_bound is None and hasattr(rate_fn, "norm_bound"):
        norm_bound = rate_fn.norm_bound()
    _check_guard(cfg.dt, norm_bound)

    times, tr_err, coh, mean_p, var_p, min_eig, edge, diags = ([] for _ in range(8))

    def record(t: float, rho: DensityMatrix) -> None:
        times.append(t)
        tr_err.append(abs(rho.trace().real - 1.0))
        coh.append(rho.coherence_l1())
        mean_p.append(rho.mean_p())
        var_p.append(rho.var_p())
        min_eig.append(rho.min_eigenvalue())
        edge.append(rho.edge_population())
        diags.append(np.real(np.diag(rho.elements)).copy())
        if min_eig[-1] < -cfg.positivity_tol:
            raise RunInvalidatedError(
                f"positivity monitor tripped at t = {t}: min eig = {min_eig[-1]:.3e}", t)
        if edge[-1] > cfg.edge_population_tol:
            raise RunInvalidatedError(
                f"edge-population monitor tripped at t = {t}: edge = {edge[-1]:.3e}", t)

    rho = rho0
    record(0.0, rho)
    for s in range(1, cfg.n_steps + 1):
        rho = step(rho, rate_fn, cfg.dt)
        if s % cfg.record_every == 0 or s == cfg.n_steps:
            record(s * cfg.dt, rho)

    series = ObservableSeries(
        times=np.array(times),
        trace_error=np.array(tr_err),
        coherence_l1=np.array(coh),
        mean_p=np.array(mean_p),
        var_p=np.array(var_p),
        min_eigenvalue=np.array(min_eig),
        edge_population=np.array(edge),
        diagonals=np.array(diags),
    )
    return series, rho


@dataclass(frozen=True)
class RateTable:
    """Classical transition rates R(P -> P + q dP), one row per shift."""

    grid: MomentumGrid
    q_shifts: tuple[int, ...]
    rates: np.ndarray  # shape (len(q_shifts), N), aligned with grid.p_values

    def rate(self, q: int) -> np.ndarray:
        return self.rates[self.q_shifts.index(q)]


def classical_lbe_rates(grid: MomentumGrid, cfg: GeneratorConfig) -> RateTable:
    """On-shell classical transition rates the quantum diagonal approaches.

    Large-tau reduction of the generator: delta_tau^2 concentrates to
    (tau / 2 pi) * delta(E), the gas integral collapses to the on-shell
    momentum k_root(P, Q) with Jacobian m/|Q|, leaving

        R(P -> P+Q) = coupling * dP * (tau/2 pi) * (m/|Q|) * |f|^2 * n rho_g(k_root).

    The amplitude is evaluated at the on-shell arguments (-Q/2, Q/2).
    """
    from .gas import amplitude_eval

    masses = cfg.masses
    gamma_prime = cfg.coupling_value() * grid.dp * cfg.tau / (2.0 * np.pi)
    p = grid.p_values
    rows = []
    for q in cfg.q_shifts:
        if q == 0:
            raise DomainError("no on-shell density exists for zero momentum transfer")
        Q = q * grid.dp
        k_root = on_shell_gas_momentum(p, Q, masses)
        dens = mixture_density(k_root, cfg.gas, d=1)
        f_on = amplitude_eval(cfg.amplitude, -Q / 2.0, Q / 2.0, d=1)
        rows.append(gamma_prime * (cfg.gas.m / abs(Q)) * f_on**2 * dens)
    return RateTable(grid=grid, q_shifts=tuple(int(q) for q in cfg.q_shifts),
                     rates=np.array(rows))


def _classical_rate_of_change(p: np.ndarray, table: RateTable) -> np.ndarray:
    """Gain-loss rate with the same open-boundary truncation as the dissipator."""
    n = p.shape[0]
    dp = np.zeros_like(p)
    for q, rates in zip(table.q_shifts, table.rates):
        src = np.arange(0, n - q) if q >= 0 else np.arange(-q, n)
        flow = rates[src] * p[src]
        dp[src] -= flow
        dp[src + q] += flow
    return dp


def classical_evolve(p0: np.ndarray, table: RateTable, dt: float,
                     n_steps: int, record_every: int = 1):
    """RK4 stepping of the classical master equation; conserves probability.

    Returns (times, distributions) with distributions of shape
    (n_records, N); the recording stride mirrors :func:`evolve`.
    """
    p0 = np.asarray(p0, dtype=float)
    if np.any(p0 < 0):
        raise DomainError("initial probabilities must be nonnegative")
    times = [0.0]
    dists = [p0.copy()]
    p = p0.copy()
    for s in range(1, n_steps + 1):
        k1 = _classical_rate_of_change(p, table)
        k2 = _classical_rate_of_change(p + 0.5 * dt * k1, table)
        k3 = _classical_rate_of_change(p + 0.5 * dt * k2, table)
        k4 = _classical_rate_of_change(p + dt * k3, table)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if s % record_every == 0 or s == n_steps:
            times.append(s * dt)
            dists.append(p.copy())
    return np.array(times), np.array(dists)


def compare_diagonal(quantum: ObservableSeries, classical_times: np.ndarray,
                     classical_dists: np.ndarray) -> float:
    """Max absolute deviation between quantum diagonals and classical distributions."""
    if quantum.diagonals.shape != classical_dists.shape:
        raise ContractViolationError("series have mismatched grids or record counts")
    if not np.allclose(quantum.times, classical_times, rtol=0.0, atol=1e-12):
        raise ContractViolationError("series have mismatched timelines")
    return float(np.max(np.abs(quantum.diagonals - classical_dists)))


def fit_decay_rate(times: np.ndarray, values: np.ndarray) -> float:
    """Exponential decay rate by least squares on log(values) over the first e-fold.

    If the series never drops below values[0]/e the whole series is used
    (late-time floor effects are avoided by the e-fold cutoff when present).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        raise DomainError("need at least two records to fit a rate")
    if np.any(values <= 0):
        raise DomainError("decay fit needs strictly positive values")
    below = np.nonzero(values < values[0] / np.e)[0]
    end = int(below[0]) if len(below) else len(values) - 1
    end = max(end, 1)
    slope = np.polyfit(times[: end + 1], np.log(values[: end + 1]), 1)[0]
    return float(-slope)
