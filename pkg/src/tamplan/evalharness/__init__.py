from .harness import (
    ABLATION_VARIANTS,
    EvalConfig,
    OracleReplayPlanner,
    build_test_episodes,
    evaluate_episode,
    run_ablation_suite,
    run_evaluation,
)
from .metrics import (
    executability,
    final_graph_after,
    graph_f1,
    lcs_normalized,
    simulate_signatures,
)
from .protocols import (
    AttackConfig,
    EvalMode,
    InteractiveInterface,
    PureTextInterface,
    StaticInterface,
    StepOutcome,
    TestEpisode,
    make_interface,
)
from .report import CSV_HEADER, EvalReport, save_csv
