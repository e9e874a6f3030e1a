"""Linear stochastic Volterra equations on a diagonal sectorial operator.

Kernels and scalar Volterra solves live in :mod:`volterra.kernel`, operators
in :mod:`volterra.spectral_operator`, resolvent families in
:mod:`volterra.resolvent`, noise in :mod:`volterra.wiener`, stochastic
convolutions in :mod:`volterra.convolution` and path diagnostics in
:mod:`volterra.regularity`.
"""
from .backend import NAME as BACKEND
from .convolution import (
    CauchyState,
    ConvolutionResult,
    MemoryTerm,
    cauchy_derivative_check,
    convolve_direct,
    convolve_reformulated,
    exponential_euler,
    memory_term,
    mild_identity_residual_bounded,
    mild_solution,
    weak_identity_residual,
)
from .grid import ScalarPath, TimeGrid
from .kernel import (
    Kernel,
    KernelError,
    SingularStepError,
    check_complete_positivity,
    eval_kernel,
    eval_kernel_derivative,
    make_kernel,
    solve_linear_volterra,
)
from .regularity import (
    RegularityReport,
    interpolation_norms,
    maximal_regularity_norms,
    path_modulus,
    spatial_regularity,
)
from .resolvent import ResolventFamily, build_resolvent_family, scalar_resolvent, yosida_resolvent_convergence
from .spectral_operator import (
    OperatorError,
    SpectralOperator,
    apply_A,
    fractional_power_apply,
    make_laplacian_1d,
    make_operator,
    semigroup_apply,
    semigroup_norm_bounds,
    yosida,
)
from .wiener import HilbertPath, NoisePath, QCovariance, covariance_check, sample_ensemble, sample_path

__version__ = "0.1.0"
