from .actions import NotExecutable, apply_action, check_action, executable_actions
from .apartment import SimConfig, generate_apartment
from .demos import (
    Demonstration,
    generate_demonstrations,
    load_dataset,
    replay_demonstration,
    run_expert_episode,
    save_dataset,
)
from .observe import FEATURE_DIM, Observation, encode_state, render_observation
from .snapshot import RELATION_FACT, STATE_FACT, graph_snapshot
from .tasks import GOAL_VOCAB, TASK_TEMPLATES, Goal, TaskTemplate, TemplateUnsatisfiable
from .world import (
    CLASS_SPECS,
    CLASS_VOCAB,
    CORE_ROOMS,
    INVENTORY_CAPACITY,
    ROOM_VOCAB,
    SPAWN_ROOMS,
    STOP_ACTION,
    Action,
    EnvironmentState,
    WorldObject,
)


def execute(state, action, rng=None, sigma: float = 0.0):
    """Apply an action and render its stacked observation.

    Raises NotExecutable (leaving `state` untouched) when a precondition
    fails; the reason names the precondition.
    """
    new_state = apply_action(state, action)
    obs = render_observation(state, new_state, rng, sigma)
    return new_state, obs
