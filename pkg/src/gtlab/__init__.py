"""gtlab: a numerical laboratory for Gelfand-Tsetlin pattern combinatorics.

Modules
-------
measure_core      grid measures, quantile curves, Cauchy transforms, free
                  entropy
surface_tension   the bead/GT surface tension sigma and its gradient
bead_exact        exact toric bead-model volumes, partition functions, and
                  determinantal correlations
gt_engine         GT pattern samplers (Gibbs, minor process), Weyl volumes,
                  importance-sampled partition functions
free_compression  complex Burgers characteristics, free compression of
                  measures, quantile flows and their PDE checks
variational       triangle fields, surface-tension energy minimization,
                  LDP band-volume estimates
acceptance        the A1-A12 acceptance criteria as runnable checks
cli               batch command-line front end (``gtlab`` entry point)
"""

from .errors import (
    CapacityError,
    ConvergenceError,
    DomainError,
    FlowError,
    GtlabError,
    InconclusiveError,
    InfeasibleFieldError,
    PoleProximityError,
    PrecisionError,
    SingularDensityError,
)
from .measure_core import (
    GridMeasure,
    QuantileCurve,
    arcsine,
    builtin,
    cauchy_transform,
    free_entropy,
    l1_distance,
    log_energy,
    quantile_of,
    semicircle,
    uniform,
)
from .surface_tension import GradientPair, energy_integral, sigma, sigma_grad, sigma_gt
from .bead_exact import (
    correlation_rho,
    exact_volume,
    mc_volume,
    partition_product,
    partition_series,
)
from .gt_engine import (
    BoundaryField,
    GTPattern,
    estimate_T,
    minor_eigen_process,
    prekopa_leindler_gap,
    sample_uniform,
    weyl_log_volume,
)
from .free_compression import (
    CompressionFlow,
    build_flow,
    compress_measure,
    el_residual,
    export_flow,
)
from .variational import (
    TriangleField,
    compression_surface,
    discrete_energy,
    ldp_log_volume,
    minimize_energy,
    rate_functional,
)

__version__ = "0.1.0"
