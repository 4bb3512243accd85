from .losses import supervised_infonce
from .memory import ProvenanceError, TamGraph, TamNode, build_memory
from .networks import AffordanceEncoder, GoalAssociator, LocalizationNet
from .pipeline_step import MemoryRetriever, RetrievalStep
from .replan import ReplanConfig, ReplanResult, replan, sign_gradient_step, snap_to_graph
from .retrieval import (
    LearnedLocalizer,
    RawFeatureLocalizer,
    goal_association_score,
    localize,
    retrieve_k_nearest,
    retrieve_k_nearest_to_node,
)
from .training import (
    TamConfig,
    TrainReport,
    cosine_separation,
    holdout_split,
    nearest_centroid_accuracy,
    roc_auc,
    stacked_observations,
    train_affordance,
    train_goal_association,
    train_localization,
)
