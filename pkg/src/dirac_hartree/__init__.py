"""Spectral simulator and verification toolkit for the Dirac-Hartree system in graphene."""

from .fields import (
    DensityField,
    Grid2D,
    IntervalGrid,
    MixedState,
    RectangleGrid,
    SpinorField,
    density,
    gaussian_packet,
    inner_product,
    pauli_apply,
    plane_wave,
    read_field,
    write_field,
)
from .spectral import DyadicPartition, FourierMultiplier, apply_multiplier, dirac_symbol, fractional_laplacian, lp_block
from .propagator import apply_band_projector, apply_bounded_propagator, apply_free_propagator, apply_half_wave
from .poisson import PotentialField, solve_poisson_dirichlet, solve_poisson_torus, verify_kernel_bound
from .dirichlet import (
    DirichletBasis,
    EigenCoefficients,
    counterexample_divergence,
    from_coefficients,
    hs_a_norm,
    mixed_hs_a_norm,
    to_coefficients,
)
from .dynamics import (
    EvolutionConfig,
    PicardConfig,
    RectangleGeometry,
    TorusGeometry,
    contraction_probe,
    hartree_energy,
    picard_solve,
    run_evolution,
    strang_step,
)
from .norms import AdmissibleTriple, NormSpec, besov_norm, sobolev_norm, weighted_norm, xt_norm
from .harnesses import (
    RatioReport,
    hardy_harness,
    nonlinear_bound_harness,
    product_estimate_harness,
    run_harness,
    strichartz_harness,
)

__version__ = "0.1.0"
