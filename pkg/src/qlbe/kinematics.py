"""Natural-units conventions and two-body collision kinematics.

All internal computations use hbar = k_B = 1. Momenta, energies and times
are therefore mutually convertible without explicit constants; optional
scale factors for human-readable output live in :class:`UnitSystem` and are
applied only when reports are emitted.

Conventions
-----------
A collision takes the molecule from momentum ``k`` to ``k - Q`` and the
particle from ``P`` to ``P + Q``; the momentum transfer ``Q`` is counted
positive toward the particle. ``P`` always denotes the particle momentum
*before* the transfer is applied (the momentum at which diagonal operator
factors are evaluated).

Sign convention: the center-of-mass energy balance is defined as

    E*_fi = ((k*_i)^2 - (k*_f)^2) / (2 m*)

i.e. initial minus final relative kinetic energy, which equals the
laboratory-frame energy released by the transfer. The published energy
balance is self-cancelling as printed; this choice reproduces the known
heavy-particle expansion and, because the smoothened delta-function is
even, the generator does not depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, DomainError

__all__ = [
    "UnitSystem",
    "Masses",
    "ComFrame",
    "com_momenta",
    "p_parallel_after",
    "energy_balance_1d",
    "delta_tau",
    "delta_tau_prime",
    "intercollision_time",
]


@dataclass(frozen=True)
class UnitSystem:
    """Natural units with optional report-time conversion factors.

    ``hbar`` and ``k_B`` are fixed at 1; ``report_conversions`` maps any of
    the keys  'energy', 'time', 'length'  to the multiplicative factor that
    turns an internal value into the reporting unit.
    """

    hbar: float = 1.0
    k_B: float = 1.0
    report_conversions: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.hbar != 1.0 or self.k_B != 1.0:
            raise DomainError("internal computations require hbar = k_B = 1")
        for key in self.report_conversions:
            if key not in ("energy", "time", "length"):
                raise DomainError(f"unknown conversion kind {key!r}")

    def to_report(self, value: float, kind: str) -> float:
        """Scale an internal value for display; identity if no factor is set."""
        return value * self.report_conversions.get(kind, 1.0)


@dataclass(frozen=True)
class Masses:
    """Particle mass M and molecule mass m with the derived total/reduced masses."""

    M: float
    m: float

    def __post_init__(self):
        if not (self.M > 0 and self.m > 0):
            raise DomainError("masses must be positive")

    @property
    def M_star(self) -> float:
        return self.M + self.m

    @property
    def m_star(self) -> float:
        return self.M * self.m / (self.M + self.m)


@dataclass(frozen=True)
class ComFrame:
    """Pre/post-collision relative momenta and the c.o.m. energy balance.

    Fields are scalars in d = 1 and length-3 arrays in d = 3.
    """

    k_star_i: np.ndarray | float
    k_star_f: np.ndarray | float
    e_star_fi: float


def _as_vector(x, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.shape[0] not in (1, 3):
        raise ContractViolationError(f"{name} must be a scalar or a 1- or 3-vector")
    return v


def com_momenta(k, P, Q, masses: Masses) -> ComFrame:
    """Center-of-mass momenta before/after a transfer Q and the energy balance.

    k, P, Q are laboratory momenta (gas molecule, particle before the
    transfer, momentum transfer); all three must share the dimension
    d in {1, 3}.
    """
    kv = _as_vector(k, "k")
    pv = _as_vector(P, "P")
    qv = _as_vector(Q, "Q")
    if not (kv.shape == pv.shape == qv.shape):
        raise ContractViolationError("k, P, Q must share dimension d in {1, 3}")
    M, m, M_star, m_star = masses.M, masses.m, masses.M_star, masses.m_star
    k_star_i = (M / M_star) * kv - (m / M_star) * pv
    k_star_f = k_star_i - qv
    e_star_fi = float(k_star_i @ k_star_i - k_star_f @ k_star_f) / (2.0 * m_star)
    if kv.shape[0] == 1:
        return ComFrame(float(k_star_i[0]), float(k_star_f[0]), e_star_fi)
    return ComFrame(k_star_i, k_star_f, e_star_fi)


def p_parallel_after(k_par: float, Q_mag: float, masses: Masses) -> float:
    """Post-collision particle momentum component along the transfer direction.

    Energy conservation ties the parallel component of the outgoing particle
    momentum to the incoming molecule component:

        P_par = (M/m) k_par - (M/m - 1) Q/2
    """
    if not Q_mag > 0:
        raise DomainError("Q_mag must be positive (no transfer direction otherwise)")
    r = masses.M / masses.m
    return r * k_par - (r - 1.0) * (Q_mag / 2.0)


def energy_balance_1d(k, P, Q: float, masses: Masses):
    """Vectorized c.o.m. energy balance in d = 1.

    Closed-form reduction of :func:`com_momenta` for scalar momenta,

        E*_fi = (Q/m)(k - Q/2) - (Q/M)(P + Q/2),

    broadcasting over array-valued ``k`` and/or ``P``. Used by the generator
    to evaluate diagonal operator factors on a whole momentum grid at once.
    """
    k = np.asarray(k, dtype=float)
    P = np.asarray(P, dtype=float)
    return (Q / masses.m) * (k - Q / 2.0) - (Q / masses.M) * (P + Q / 2.0)


# Below |tau*E| < _SERIES_CUTOFF the direct sin form loses digits to 0/0;
# a short even Taylor series keeps the value smooth for quadrature and
# differentiation.
_SERIES_CUTOFF = 1e-4


def delta_tau(E, tau: float):
    """Smoothened energy delta-function  sin(tau E / 2) / (pi E).

    Even in E, peak value tau/(2 pi) at E = 0, unit integral over the real
    line. Accepts scalars or arrays; scalar input returns a float.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    E = np.asarray(E, dtype=float)
    x = 0.5 * tau * E
    small = np.abs(tau * E) < _SERIES_CUTOFF
    x2 = x * x
    series = (tau / (2.0 * np.pi)) * (
        1.0 - x2 / 6.0 + x2**2 / 120.0 - x2**3 / 5040.0 + x2**4 / 362880.0
    )
    E_safe = np.where(small, 1.0, E)
    direct = np.sin(x) / (np.pi * E_safe)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def delta_tau_prime(E, tau: float):
    """Analytic E-derivative of :func:`delta_tau`; odd in E, zero at E = 0."""
    if not tau > 0:
        raise DomainError("tau must be positive")
    E = np.asarray(E, dtype=float)
    x = 0.5 * tau * E
    small = np.abs(tau * E) < _SERIES_CUTOFF
    # d/dx [sin x / x] = -x/3 + x^3/30 - x^5/840 + x^7/45360 - ...
    series = (tau**2 / (4.0 * np.pi)) * (
        -x / 3.0 + x**3 / 30.0 - x**5 / 840.0 + x**7 / 45360.0
    )
    E_safe = np.where(small, 1.0, E)
    direct = (0.5 * tau * np.cos(x) * E_safe - np.sin(x)) / (np.pi * E_safe**2)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def intercollision_time(beta: float, m: float, sigma: float, n_g: float) -> float:
    """Mean free time between collisions,  sqrt(pi beta m) / (sigma n_g)."""
    if not (beta > 0 and m > 0 and sigma > 0 and n_g > 0):
        raise DomainError("beta, m, sigma, n_g must all be positive")
    return float(np.sqrt(np.pi * beta * m) / (sigma * n_g))
