"""Maxwell-Boltzmann gas components, mixtures, scattering amplitudes, quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedMixtureError

__all__ = [
    "GasComponent",
    "GasMixture",
    "ScatteringAmplitude",
    "mb_density",
    "mixture_density",
    "amplitude_eval",
    "gas_quadrature",
    "sigma_from_constant_amplitude",
]


@dataclass(frozen=True)
class GasComponent:
    """One Maxwell-Boltzmann gas species slice: molecule mass, inverse temperature, density."""

    m: float
    beta: float
    n_g: float

    def __post_init__(self):
        if not (self.m > 0 and self.beta > 0):
            raise DomainError("m and beta must be positive")
        if self.n_g < 0:
            raise DomainError("n_g must be nonnegative")


@dataclass(frozen=True)
class GasMixture:
    """Number-weighted additive mixture of components with a common molecule mass.

    Components may differ in temperature and density; mixing molecules of
    different mass is rejected because the generator's additivity statement
    is about the same molecules at different temperatures.
    """

    components: tuple[GasComponent, ...]

    def __post_init__(self):
        if len(self.components) == 0:
            raise DomainError("mixture needs at least one component")
        m0 = self.components[0].m
        if any(c.m != m0 for c in self.components):
            raise UnsupportedMixtureError("all components must share the molecule mass")

    @property
    def m(self) -> float:
        return self.components[0].m

    @property
    def n_total(self) -> float:
        return sum(c.n_g for c in self.components)

    @classmethod
    def single(cls, comp: GasComponent) -> "GasMixture":
        return cls((comp,))


@dataclass(frozen=True)
class ScatteringAmplitude:
    """Scattering amplitude model plus the (independent) total cross section.

    model 'constant' ignores the momenta entirely; model 'gaussian' decays
    with the momentum transfer as  f0 exp(-|k_f - k_i|^2 / (2 w^2)).  Both
    are slowly varying and extend off the energy shell trivially.

    sigma_total is a user input rather than being derived from f: the model
    amplitudes are real, so the optical theorem would force sigma = 0, and
    resolving that is out of scope here. It only feeds the intercollision
    time. For the constant model in d = 3 the isotropic convenience value is
    :func:`sigma_from_constant_amplitude`.
    """

    model: str = "constant"
    f0: float = 1.0
    w: float = 1.0
    sigma_total: float = 1.0

    def __post_init__(self):
        if self.model not in ("constant", "gaussian"):
            raise DomainError(f"unknown amplitude model {self.model!r}")
        if self.model == "gaussian" and not self.w > 0:
            raise DomainError("gaussian amplitude width w must be positive")


def sigma_from_constant_amplitude(f0: float) -> float:
    """Isotropic total cross section 4 pi |f0|^2 for the constant model in d = 3."""
    return 4.0 * np.pi * f0 * f0


def mb_density(k, comp: GasComponent, d: int):
    """Maxwell-Boltzmann momentum density (beta/2 pi m)^{d/2} exp(-beta k^2/2m).

    ``k`` is a momentum vector: a scalar (or array of scalars, broadcast) in
    d = 1, or an array whose last axis has length 3 in d = 3.
    """
    if d not in (1, 3):
        raise DomainError("dimension d must be 1 or 3")
    k = np.asarray(k, dtype=float)
    if d == 3:
        if k.shape[-1] != 3:
            raise DomainError("d = 3 requires vectors with last axis of length 3")
        k2 = np.sum(k * k, axis=-1)
    else:
        k2 = k * k
    out = (comp.beta / (2.0 * np.pi * comp.m)) ** (d / 2.0) * np.exp(
        -comp.beta * k2 / (2.0 * comp.m)
    )
    return float(out) if np.ndim(out) == 0 else out


def mixture_density(k, mix: GasMixture, d: int):
    """Number-weighted mixture density  sum_c n_c rho_c(k).

    Additive in the components by construction; note the density factor is
    included (this is n_mix * rho_mix, not a normalized distribution).
    """
    total = 0.0
    for c in mix.components:
        total = total + c.n_g * mb_density(k, c, d)
    return total


def amplitude_eval(amp: ScatteringAmplitude, k_f_star, k_i_star, d: int = 1):
    """Evaluate the amplitude at final/initial relative momenta (off-shell allowed).

    Arrays broadcast elementwise in d = 1; in d = 3 the last axis is the
    vector dimension. Model amplitudes are real, so the returned values are
    real floats/arrays (hermitian-symmetric under argument swap).
    """
    if d not in (1, 3):
        raise DomainError("dimension d must be 1 or 3")
    k_f = np.asarray(k_f_star, dtype=float)
    k_i = np.asarray(k_i_star, dtype=float)
    if amp.model == "constant":
        shape = np.broadcast_shapes(k_f.shape, k_i.shape)
        if d == 3:
            if not shape or shape[-1] != 3:
                raise DomainError("d = 3 requires vectors with last axis of length 3")
            shape = shape[:-1]
        out = np.full(shape, float(amp.f0))
        return float(out) if out.ndim == 0 else out
    diff = k_f - k_i
    if d == 3:
        if diff.shape[-1] != 3:
            raise DomainError("d = 3 requires vectors with last axis of length 3")
        q2 = np.sum(diff * diff, axis=-1)
    else:
        q2 = diff * diff
    out = amp.f0 * np.exp(-q2 / (2.0 * amp.w**2))
    return float(out) if np.ndim(out) == 0 else out


def gas_quadrature(comp: GasComponent, d: int, order: int):
    """Gauss-Hermite nodes and weights for averaging over the gas momentum.

    Nodes are scaled to the Maxwell-Boltzmann per-axis variance m/beta, so

        integral dk rho_g(k) h(k)  ~=  sum_j w_j h(k_j),   sum_j w_j = 1.

    Returns ``(nodes, weights)`` with nodes of shape (order,) in d = 1 and
    (order**d, 3) in d = 3 (tensor grid).
    """
    if d not in (1, 3):
        raise DomainError("dimension d must be 1 or 3")
    if order < 2:
        raise DomainError("quadrature order must be at least 2")
    x, w = np.polynomial.hermite.hermgauss(order)
    scale = np.sqrt(2.0 * comp.m / comp.beta)
    nodes_1d = scale * x
    weights_1d = w / np.sqrt(np.pi)
    if d == 1:
        return nodes_1d, weights_1d
    kx, ky, kz = np.meshgrid(nodes_1d, nodes_1d, nodes_1d, indexing="ij")
    nodes = np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=-1)
    weights = (
        weights_1d[:, None, None] * weights_1d[None, :, None] * weights_1d[None, None, :]
    ).ravel()
    return nodes, weights
