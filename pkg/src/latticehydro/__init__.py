"""Spectral simulator for harmonic crystals under hydrodynamic scaling.

Exact microscopic covariance evolution on Z^d and the half-space, the
closed-form limit covariances it converges to, Wigner transport and local
conservation laws.
"""

from .conservation import (
    TestFunction,
    conserved_quantities,
    continuity_residual,
    energy_current_limit,
    energy_density_limit,
)
from .covariance_flow import (
    ScaledQuery,
    empirical_covariance,
    halfspace_covariance,
    propagate_covariance,
)
from .dispersion import (
    InteractionMatrix,
    band_grid,
    build_nearest_neighbor,
    check_conditions,
    fourier_symbol,
    spectral_data,
)
from .errors import LatticeHydroError
from .hydro_limits import (
    equilibrium_residual,
    euler_limit,
    halfspace_euler,
    halfspace_ns,
    higher_correction,
    kernel_free,
    ns_correction,
    ns_kernel,
    ns_kernel_quadrature,
    position_limit,
)
from .lattice_dynamics import FieldState, evolve, evolve_halfspace, green_function, hamiltonian
from .random_fields import (
    BlockCov,
    ConstantProfile,
    CovarianceProfile,
    GaussianBump,
    gibbs_spectral,
    product_profile,
    sample_field,
    verify_profile,
)
from .wigner_transport import a_field, transport_residual, wigner_empirical, wigner_exact, wigner_limit

__version__ = "0.1.0"
