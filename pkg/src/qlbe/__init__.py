"""Momentum-space collision simulator with finite intercollision time.

Builds a Lindblad generator from binary-collision channels against a
Maxwell-Boltzmann gas, evolves 1D momentum-space density matrices, and
computes the diffusion-limit constants together with their
complete-positivity consistency bounds.
"""

__version__ = "0.1.0"

from .diffusion import (
    DiffusionConstants,
    cp_check,
    dpp_quadrature,
    dxx_coefficient_quadrature,
    dxx_from_tau,
    tau_constraint_report,
)
from .errors import (
    AccuracyError,
    ConfigurationError,
    ContractViolationError,
    DomainError,
    QlbeError,
    RunInvalidatedError,
    UnsupportedMixtureError,
)
from .evolution import (
    EvolutionConfig,
    ObservableSeries,
    RateOperator,
    classical_evolve,
    classical_lbe_rates,
    compare_diagonal,
    evolve,
    fit_decay_rate,
    step,
)
from .gas import (
    GasComponent,
    GasMixture,
    ScatteringAmplitude,
    amplitude_eval,
    gas_quadrature,
    mb_density,
    mixture_density,
)
from .generator import (
    DensityMatrix,
    GeneratorConfig,
    LindbladChannel,
    MomentumGrid,
    additivity_defect,
    apply_dissipator,
    apply_hamiltonian,
    build_channels,
    build_sqrt_variant_channels,
    on_shell_gas_momentum,
)
from .kinematics import (
    ComFrame,
    Masses,
    UnitSystem,
    com_momenta,
    delta_tau,
    delta_tau_prime,
    energy_balance_1d,
    intercollision_time,
    p_parallel_after,
)

__all__ = [
    "__version__",
    # kinematics
    "UnitSystem", "Masses", "ComFrame", "com_momenta", "p_parallel_after",
    "energy_balance_1d", "delta_tau", "delta_tau_prime", "intercollision_time",
    # gas
    "GasComponent", "GasMixture", "ScatteringAmplitude", "mb_density",
    "mixture_density", "amplitude_eval", "gas_quadrature",
    # generator
    "MomentumGrid", "DensityMatrix", "LindbladChannel", "GeneratorConfig",
    "build_channels", "build_sqrt_variant_channels", "apply_dissipator",
    "apply_hamiltonian", "additivity_defect", "on_shell_gas_momentum",
    # evolution
    "EvolutionConfig", "ObservableSeries", "RateOperator", "step", "evolve",
    "classical_lbe_rates", "classical_evolve", "compare_diagonal", "fit_decay_rate",
    # diffusion
    "DiffusionConstants", "dpp_quadrature", "dxx_from_tau",
    "dxx_coefficient_quadrature", "cp_check", "tau_constraint_report",
    # errors
    "QlbeError", "DomainError", "ContractViolationError", "ConfigurationError",
    "UnsupportedMixtureError", "AccuracyError", "RunInvalidatedError",
]
