"""kfprop: kinetic phase-space propagators with closed-form free kernels.

Numerics for the kinetic diffusion flow on (x, v): stable time profiles and
Gaussian kernels, Hermite spectral checks, grid fields with a partial Fourier
transform in x, free/perturbed propagation by operator splitting, and
decay-rate analysis tooling, plus a batch experiment CLI.
"""

from ._backend import COMPILED, backend_name
from .analysis import (
    BootstrapTrace,
    ConditionReport,
    DecayFit,
    bootstrap_exponents,
    expected_exponent,
    fit_decay_exponent,
    free_norm_1_to_inf,
    norm_lower_bound,
    potential_condition_check,
    stationarity_residual,
)
from .errors import CapabilityError, GridError
from .kernels import (
    KernelPoint,
    TimeProfile,
    fourier_factor,
    free_kernel,
    free_kernel_values,
    gamma_profile,
    harmonic_kernel,
    ho_heat_kernel_reference,
    maxwellian_sqrt,
    omega_profile,
    sigma_profile,
    theta_profile,
    time_profiles,
)
from .phase_space import (
    BoundaryMassWarning,
    Field,
    FourierField,
    NormRecord,
    PhaseGrid,
    VelocityGrid,
    inverse_partial_fourier_x,
    lp_norm,
    pairing,
    partial_fourier_x,
    read_field,
    read_field_csv,
    reflect_v,
    weighted_l2s_norm,
    write_field,
    write_field_csv,
    x_marginal,
)
from .potentials import InversePowerPotential, Potential, ZeroPotential, make_potential
from .propagator import (
    DriftMap,
    FreePropagator,
    PropagatorPlan,
    apply_w,
    born_term,
    drift_step,
    evolve,
    free_step_direct,
    free_step_fourier,
    harmonic_step,
    maxwellian_field,
)
from .spectral import (
    HermiteIndex,
    ShiftedEigenfunction,
    apply_p0_hat,
    biorthogonality_matrix,
    hermite_function,
    hermite_polynomial,
    shifted_eigenfunction,
)

__version__ = "0.1.0"
