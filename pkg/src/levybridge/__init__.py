"""Brownian paths coupled to Levy paths by increment reordering."""

from .coupling import (CoupledPaths, EmpiricalCdf, GammaMartingaleCdf,
                       NormalCdf, Permutation, SkeletonCoupling,
                       TrivariateCoupling, comonotone_increment_coupling,
                       couple_skeletons, empirical_rank_coupling,
                       endpoint_comonotone, hierarchical_coupling,
                       normalized_order_stat_gap, rank_permutation,
                       recommended_k, reorder_coupling)
from .metrics import (CouplingConfig, EstimateWithError, MsmdEstimate,
                      endpoint_rmse, msmd_estimate, ordering_diagnostics,
                      run_replications, sup_distance, wasserstein2_empirical)
from .models import (BrownianMotion, CompoundPoissonDrift, ConstantJumps,
                     ExponentialJumps, FinePath, GammaMartingale,
                     JumpDistribution, LevyModel, ModelMoments, NormalJumps,
                     NumericalGuardError, PerturbedBM, SmallJumpAnnulus,
                     TruncatedStable, UniformJumps, WithBrownianJitter,
                     annulus_preset, increments_on_grid, mlmc_base_preset,
                     parse_model_spec, stable_preset)
from .normal import norm_cdf, norm_quantile

__version__ = "0.1.0"
