"""Robust reduced-rank LCMV beamforming by joint iterative optimization."""
from .array_model import (
    ArrayGeometry,
    MismatchModel,
    SourceSet,
    TrueCovariances,
    presumed_steering,
    steering_vector,
    synthesize_snapshot,
    synthesize_snapshots,
    true_covariances,
)
from .lcmv import (
    FullRankBeamformer,
    ReducedRankBeamformer,
    lcmv_rls_step,
    lcmv_sg_step,
    loaded_lcmv,
    optimal_lcmv,
    reduced_rank_lcmv,
)
from .rank_adapt import RankAdaptState, adapt_step, rank_adapt_init, rank_cost_update, select_rank
from .rjio import (
    RjioHyperParams,
    RjioState,
    rjio_fixed_point,
    rjio_init,
    rjio_output,
    rjio_rls_step,
    rjio_sg_step,
)

__version__ = "0.1.0"
