"""Lindblad generator on a 1D momentum grid.

The dissipator is assembled from collision channels, one per
(gas momentum node, grid shift, gas component). Each channel applies

    V = S_Q  diag(D),       D(P) = f(k*_f(P), k*_i(P)) * delta_tau(E*_fi(P))

where S_Q shifts the particle momentum by Q = q * dP and amplitudes shifted
off the grid are dropped (open boundary). Because the loss operator V^dag V
is computed on the same truncated shift, the Lindblad trace identity holds
exactly on the finite grid, not just in the continuum limit.

The 1D coupling prefactor 2 pi n_g / (tau m*^2) is kept as a single
configurable constant ``coupling`` (per unit density); it carries the
dimensional residue of reducing the 3D transfer integral to a 1D shift sum,
so absolute rates in d = 1 are meaningful up to this overall scale.

A second, deliberately non-additive generator is provided for contrast:
:func:`build_sqrt_variant_channels` builds one channel per shift whose
diagonal factor carries sqrt(n rho_gas(k_on_shell(P))) with an
operator-valued argument. Populations then evolve with the plain on-shell
gas weight, but coherences pick up geometric means of gas densities
evaluated at two different momenta, which is exactly the structure that
breaks additivity over same-molecule gas components at different
temperatures. It is a schematic probe of that structure, not a
reconstruction of any particular published generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolationError, DomainError
from .gas import GasMixture, ScatteringAmplitude, amplitude_eval, gas_quadrature, mixture_density
from .kinematics import Masses, delta_tau, energy_balance_1d

__all__ = [
    "MomentumGrid",
    "DensityMatrix",
    "LindbladChannel",
    "GeneratorConfig",
    "on_shell_gas_momentum",
    "build_channels",
    "build_sqrt_variant_channels",
    "apply_dissipator",
    "apply_hamiltonian",
    "additivity_defect",
    "hermitian_probe_basis",
]


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform symmetric 1D momentum grid with N points and spacing dP."""

    n: int
    dp: float
    d: int = 1

    def __post_init__(self):
        if self.d != 1:
            raise DomainError("evolution grids are one-dimensional")
        if self.n < 4:
            raise DomainError("grid needs at least 4 points")
        if not self.dp > 0:
            raise DomainError("grid spacing must be positive")

    @property
    def p_values(self) -> np.ndarray:
        return (np.arange(self.n) - (self.n - 1) / 2.0) * self.dp


@dataclass(frozen=True)
class DensityMatrix:
    """Particle state <P|rho|P'> dP on a momentum grid (unit trace convention).

    The grid spacing is absorbed into the elements so that the trace is the
    plain diagonal sum. The container itself does not enforce physicality;
    call :meth:`validate` where hermiticity / trace / positivity matter.
    """

    grid: MomentumGrid
    elements: np.ndarray

    def __post_init__(self):
        if self.elements.shape != (self.grid.n, self.grid.n):
            raise ContractViolationError("elements must be N x N for the grid")

    # -- constructors -------------------------------------------------

    @classmethod
    def momentum_eigenstate(cls, grid: MomentumGrid, index: int) -> "DensityMatrix":
        rho = np.zeros((grid.n, grid.n), dtype=complex)
        rho[index, index] = 1.0
        return cls(grid, rho)

    @classmethod
    def superposition(cls, grid: MomentumGrid, i: int, j: int) -> "DensityMatrix":
        """Equal-weight pure superposition of two momentum eigenstates."""
        rho = np.zeros((grid.n, grid.n), dtype=complex)
        for a in (i, j):
            for b in (i, j):
                rho[a, b] = 0.5
        return cls(grid, rho)

    @classmethod
    def maximally_mixed(cls, grid: MomentumGrid) -> "DensityMatrix":
        return cls(grid, np.eye(grid.n, dtype=complex) / grid.n)

    @classmethod
    def gaussian_mixed(cls, grid: MomentumGrid, width: float, center: float = 0.0) -> "DensityMatrix":
        """Diagonal (fully decohered) state with Gaussian momentum populations."""
        if not width > 0:
            raise DomainError("width must be positive")
        p = grid.p_values
        diag = np.exp(-((p - center) ** 2) / (2.0 * width**2))
        diag /= diag.sum()
        return cls(grid, np.diag(diag).astype(complex))

    # -- observables ---------------------------------------------------

    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    def coherence_l1(self) -> float:
        a = np.abs(self.elements)
        return max(0.0, float(a.sum() - np.trace(a)))

    def mean_p(self) -> float:
        return float(np.real(np.sum(self.grid.p_values * np.diag(self.elements))))

    def var_p(self) -> float:
        p = self.grid.p_values
        d = np.real(np.diag(self.elements))
        m1 = float(np.sum(p * d))
        return float(np.sum(p * p * d)) - m1 * m1

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.elements + self.elements.conj().T))[0])

    def edge_population(self) -> float:
        return float(np.real(self.elements[0, 0] + self.elements[-1, -1]))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def validate(self, trace_tol: float = 1e-10, herm_tol: float = 1e-12,
                 psd_tol: float = 1e-8) -> None:
        if self.hermiticity_defect() > herm_tol:
            raise ContractViolationError("density matrix is not hermitian within tolerance")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ContractViolationError("density matrix trace differs from 1")
        if self.min_eigenvalue() < -psd_tol:
            raise ContractViolationError("density matrix is not positive within tolerance")


@dataclass(frozen=True)
class LindbladChannel:
    """One collision channel: rate weight plus shift-by-Q operator data.

    ``diag`` holds D(P) on the grid; the operator is V = S_q diag(D) with
    open-boundary truncation. ``k`` is the gas momentum node the channel was
    built from (None for the sqrt-variant probe, where the gas momentum is
    absorbed into the operator).
    """

    grid: MomentumGrid
    q_index: int
    weight: float
    diag: np.ndarray
    k: float | None = None

    def __post_init__(self):
        if self.weight < 0:
            raise DomainError("channel weight must be nonnegative")
        if self.q_index == 0 or abs(self.q_index) >= self.grid.n:
            raise ConfigurationError("channel shift must be a nonzero on-grid integer")
        if self.diag.shape != (self.grid.n,):
            raise ContractViolationError("diag factor must have one entry per grid point")

    @property
    def q(self) -> float:
        return self.q_index * self.grid.dp

    def survival_mask(self) -> np.ndarray:
        """1 where the shifted index stays on the grid, else 0."""
        n, q = self.grid.n, self.q_index
        mask = np.zeros(n)
        if q >= 0:
            mask[: n - q] = 1.0
        else:
            mask[-q:] = 1.0
        return mask


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything needed to assemble the dissipator on a given grid."""

    masses: Masses
    gas: GasMixture
    amplitude: ScatteringAmplitude
    tau: float
    k_order: int = 8
    q_shifts: tuple[int, ...] = (1, -1)
    include_hamiltonian: bool = True
    coupling: float | None = None  # per-density prefactor; None -> 2 pi/(tau m*^2)

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if len(self.q_shifts) == 0:
            raise ConfigurationError("q_shifts must not be empty")
        for q in self.q_shifts:
            if int(q) != q or q == 0:
                raise ConfigurationError("q_shifts must be nonzero integers")
        if self.coupling is not None and self.coupling < 0:
            raise ConfigurationError("coupling must be nonnegative")

    def coupling_value(self) -> float:
        if self.coupling is not None:
            return self.coupling
        return 2.0 * np.pi / (self.tau * self.masses.m_star**2)


def _validate_shifts(cfg: GeneratorConfig, grid: MomentumGrid) -> None:
    for q in cfg.q_shifts:
        if abs(q) >= grid.n:
            raise ConfigurationError(f"shift {q} is off-grid for N = {grid.n}")


def build_channels(cfg: GeneratorConfig, grid: MomentumGrid) -> list[LindbladChannel]:
    """Assemble the linear-in-rho_gas channel list.

    One channel per (gas component, quadrature node k, shift q), with weight

        coupling * n_c * w_k * dP

    and diagonal factor f(k*_f, k*_i) delta_tau(E*_fi) evaluated on every
    grid point. Components with zero density contribute nothing.
    """
    _validate_shifts(cfg, grid)
    p = grid.p_values
    masses = cfg.masses
    gamma = cfg.coupling_value()
    channels: list[LindbladChannel] = []
    for comp in cfg.gas.components:
        if comp.n_g == 0.0:
            continue
        nodes, weights = gas_quadrature(comp, d=1, order=cfg.k_order)
        for k, w_k in zip(nodes, weights):
            k_star_i = (masses.M / masses.M_star) * k - (masses.m / masses.M_star) * p
            for q in cfg.q_shifts:
                Q = q * grid.dp
                e_fi = energy_balance_1d(k, p, Q, masses)
                amp = amplitude_eval(cfg.amplitude, k_star_i - Q, k_star_i, d=1)
                diag = np.asarray(amp * delta_tau(e_fi, cfg.tau), dtype=complex)
                channels.append(
                    LindbladChannel(
                        grid=grid,
                        q_index=int(q),
                        weight=gamma * comp.n_g * w_k * grid.dp,
                        diag=diag,
                        k=float(k),
                    )
                )
    return channels


def on_shell_gas_momentum(p, Q: float, masses: Masses):
    """Gas momentum solving E*_fi(k, P, Q) = 0 at given particle momentum and shift.

    In d = 1 the balance is linear in k, so the root is closed-form:
    k = (M*/2M) Q + (m/M) P.
    """
    p = np.asarray(p, dtype=float)
    return (masses.M_star / (2.0 * masses.M)) * Q + (masses.m / masses.M) * p


def build_sqrt_variant_channels(cfg: GeneratorConfig, grid: MomentumGrid) -> list[LindbladChannel]:
    """Square-root-kernel probe: one channel per shift, gas density under a sqrt.

    The diagonal factor is

        D(P) = sqrt(tau m / (2 pi |Q|)) * f(-Q/2, Q/2) * sqrt(n rho_mix(k_root(P)))

    normalized so the population (diagonal) rates coincide with the linear
    generator's on-shell rates in the large-tau regime. Off-diagonal
    elements acquire sqrt(rho(k_root(P)) rho(k_root(P'))) weights, the
    geometric-mean structure whose gas-component additivity fails.
    """
    _validate_shifts(cfg, grid)
    if not cfg.tau > 0:
        raise DomainError("tau must be positive")
    p = grid.p_values
    masses = cfg.masses
    gamma = cfg.coupling_value()
    m = cfg.gas.m
    channels: list[LindbladChannel] = []
    for q in cfg.q_shifts:
        Q = q * grid.dp
        k_root = on_shell_gas_momentum(p, Q, masses)
        dens = mixture_density(k_root, cfg.gas, d=1)
        f_on = amplitude_eval(cfg.amplitude, -Q / 2.0, Q / 2.0, d=1)
        scale = np.sqrt(cfg.tau * m / (2.0 * np.pi * abs(Q)))
        diag = np.asarray(scale * f_on * np.sqrt(dens), dtype=complex)
        channels.append(
            LindbladChannel(grid=grid, q_index=int(q), weight=gamma * grid.dp, diag=diag, k=None)
        )
    return channels


def _gain_kernels(channels: list[LindbladChannel]):
    """Group channels by shift: per-shift gain kernel K_q and the total loss vector.

    K_q[i, j] = sum over channels with shift q of  w D_i conj(D_j); the loss
    vector is sum_ch w |D_i|^2 mask_i. Grouping preserves the channel sum
    exactly (fixed accumulation order) and makes repeated application cost
    O(n_shifts N^2) instead of O(n_channels N^2).
    """
    if not channels:
        return {}, None
    n = channels[0].grid.n
    kernels: dict[int, np.ndarray] = {}
    loss = np.zeros(n)
    for ch in channels:
        if ch.grid != channels[0].grid:
            raise ContractViolationError("channels must share one grid")
        K = kernels.setdefault(ch.q_index, np.zeros((n, n), dtype=complex))
        K += ch.weight * np.outer(ch.diag, ch.diag.conj())
        loss += ch.weight * np.abs(ch.diag) ** 2 * ch.survival_mask()
    return kernels, loss


def _apply_kernels(kernels, loss, elements: np.ndarray) -> np.ndarray:
    out = np.zeros_like(elements)
    if loss is None:
        return out
    n = elements.shape[0]
    out -= 0.5 * (loss[:, None] * elements + elements * loss[None, :])
    for q, K in kernels.items():
        gain = K * elements
        if q >= 0:
            out[q:, q:] += gain[: n - q, : n - q]
        else:
            out[:q, :q] += gain[-q:, -q:]
    return out


class DissipatorOperator:
    """Precompiled channel sum: call on raw N x N element arrays.

    Used by the evolution loop so the channel grouping happens once per
    generator instead of once per step. ``norm_bound`` is a crude spectral
    estimate (twice the largest total loss rate) for step-size guards.
    """

    def __init__(self, channels: list[LindbladChannel]):
        self.grid = channels[0].grid if channels else None
        self._kernels, self._loss = _gain_kernels(channels)

    def __call__(self, elements: np.ndarray) -> np.ndarray:
        return _apply_kernels(self._kernels, self._loss, elements)

    def norm_bound(self) -> float:
        if self._loss is None:
            return 0.0
        return 2.0 * float(np.max(self._loss))


def apply_dissipator(channels: list[LindbladChannel], rho: DensityMatrix) -> np.ndarray:
    """Dissipator rate  sum_ch w (V rho V^dag - 1/2 {V^dag V, rho}).

    Returns the N x N rate array (same layout as rho.elements). The output
    is exactly traceless and maps hermitian input to hermitian output, also
    on the truncated grid.
    """
    if channels and channels[0].grid != rho.grid:
        raise ContractViolationError("channels and rho must share the grid")
    kernels, loss = _gain_kernels(channels)
    return _apply_kernels(kernels, loss, rho.elements)


def apply_hamiltonian(rho: DensityMatrix, masses: Masses) -> np.ndarray:
    """Free-evolution rate -i[H, rho] with H = P^2/2M diagonal.

    The gas-induced energy shift is a constant phase convention at this
    level and is set to zero.
    """
    e = rho.grid.p_values**2 / (2.0 * masses.M)
    phase = -1j * (e[:, None] - e[None, :])
    return phase * rho.elements


def hermitian_probe_basis(n: int):
    """Hermitian matrix-unit basis spanning the N x N hermitian matrices.

    Yields E_ii, then (E_ij + E_ji) and i(E_ij - E_ji) for i < j;
    deterministic order.
    """
    for i in range(n):
        probe = np.zeros((n, n), dtype=complex)
        probe[i, i] = 1.0
        yield probe
    for i in range(n):
        for j in range(i + 1, n):
            probe = np.zeros((n, n), dtype=complex)
            probe[i, j] = probe[j, i] = 1.0
            yield probe
            probe = np.zeros((n, n), dtype=complex)
            probe[i, j] = 1j
            probe[j, i] = -1j
            yield probe


def additivity_defect(cfg: GeneratorConfig, grid: MomentumGrid, variant: str = "linear") -> float:
    """Max-element defect between the mixture generator and the per-component sum.

    Requires exactly two gas components. The linear generator is additive by
    construction (its mixture channel list is the concatenation of the
    per-component lists), so the defect is zero up to rounding; the sqrt
    variant develops a strictly positive coherence-sector defect whenever
    the two components differ.
    """
    if len(cfg.gas.components) != 2:
        raise DomainError("additivity defect requires exactly two gas components")
    if variant == "linear":
        build = build_channels
    elif variant == "sqrt":
        build = build_sqrt_variant_channels
    else:
        raise DomainError(f"unknown variant {variant!r}")

    def sub_cfg(comp) -> GeneratorConfig:
        return GeneratorConfig(
            masses=cfg.masses,
            gas=GasMixture.single(comp),
            amplitude=cfg.amplitude,
            tau=cfg.tau,
            k_order=cfg.k_order,
            q_shifts=cfg.q_shifts,
            include_hamiltonian=cfg.include_hamiltonian,
            coupling=cfg.coupling,
        )

    op_mix = DissipatorOperator(build(cfg, grid))
    op_1 = DissipatorOperator(build(sub_cfg(cfg.gas.components[0]), grid))
    op_2 = DissipatorOperator(build(sub_cfg(cfg.gas.components[1]), grid))
    worst = 0.0
    for probe in hermitian_probe_basis(grid.n):
        diff = op_mix(probe) - op_1(probe) - op_2(probe)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst
