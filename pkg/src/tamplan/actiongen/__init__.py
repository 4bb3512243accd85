from .decoder import (
    DecoderConfig,
    LinearPlanner,
    TransformerPlanner,
    cross_entropy_row,
    sinusoidal_table,
)
from .planner import Plan, PlanStep, TamPlanner
from .training import (
    DecoderReport,
    DecoderTrainConfig,
    memory_slot_values,
    next_action_accuracy,
    observation_before,
    precompute_retrievals,
    train_decoder,
    train_linear_head,
)
from .vocab import ActionVocabulary, ground_signature
