"""Symbolic cell search space, two-stage Pareto search and front bookkeeping."""

from .pareto import ParetoPoint, dominates, hypervolume_2d, pareto_front, pareto_sweep
from .search import (
    SearchDivergedError,
    Stage1Budget,
    Stage1Result,
    Stage2Budget,
    Stage2Result,
    stage1_search,
    stage2_train,
    total_loss,
)
from .space import (
    ArchLogits,
    DiscreteArch,
    SearchSpace,
    SpaceConfig,
    discrete_latency,
    discretize,
    format_discrete_arch,
    init_search_space,
    one_hot_weights,
)
from .surrogate import OpCostSurrogate, QuadraticSurrogate, SurrogateEvaluator

__all__ = [
    "ArchLogits",
    "DiscreteArch",
    "OpCostSurrogate",
    "ParetoPoint",
    "QuadraticSurrogate",
    "SearchDivergedError",
    "SearchSpace",
    "SpaceConfig",
    "Stage1Budget",
    "Stage1Result",
    "Stage2Budget",
    "Stage2Result",
    "SurrogateEvaluator",
    "discrete_latency",
    "discretize",
    "dominates",
    "format_discrete_arch",
    "hypervolume_2d",
    "init_search_space",
    "one_hot_weights",
    "pareto_front",
    "pareto_sweep",
    "stage1_search",
    "stage2_train",
    "total_loss",
]
