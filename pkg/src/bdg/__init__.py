"""Time-dependent BCS / Bogoliubov-de Gennes dynamics of a 1-D Fermi gas
with contact interaction, full versus linearized."""

from bdg.model_core import (
    BdGState,
    GridSpec,
    PhysicalParams,
    SpectralScalars,
    collocation_transform,
    contact_convolution,
    dispersion,
    inner_product,
    inverse_collocation_transform,
    lattice_coupling,
    mode_eigenvalues,
)
from bdg.equilibrium import (
    EquilibriumData,
    build_initial_state,
    build_reference_pair_state,
    gap_lhs_sum,
    gap_table,
    normal_state,
    solve_critical_temperature,
    solve_gap,
    standard_setup,
)
from bdg.dynamics import (
    IntegrationBlowup,
    StepperConfig,
    SystemKind,
    evolve,
    gamma_from_alpha,
    kinetic_flow,
    reference_evolve,
    rhs_full,
    rhs_linear,
    rhs_reduced,
    strang_step,
)
from bdg.diagnostics import (
    TimeSeries,
    decay_fit,
    energy_condition,
    energy_error,
    entropy,
    free_energy,
    interference_check,
    nondecay_check,
    order_parameter,
    scaled_pair_norm,
)
from bdg.estimator import BdGSimulator

__version__ = "0.1.0"
