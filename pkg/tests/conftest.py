"""Session-scoped desk dataset and trained networks shared across test modules.

Training the full desk-scale stack once (~15 s) keeps the suite fast while
letting learning-dependent tests and the acceptance module exercise the
same artifacts the pipeline would produce.
"""

import numpy as np
import pytest

from tamplan import homesim as hs
from tamplan import tam

DATASET_SEED = 7
TRAIN_APARTMENT_SEEDS = list(range(100, 200))
N_TRAIN_EPISODES = 200


@pytest.fixture(scope="session")
def desk_demos():
    demos, resamples = hs.generate_demonstrations(
        N_TRAIN_EPISODES, seed=DATASET_SEED, apartment_seeds=TRAIN_APARTMENT_SEEDS)
    assert resamples == 0
    return demos


@pytest.fixture(scope="session")
def tam_config():
    return tam.TamConfig()


@pytest.fixture(scope="session")
def desk_nets(desk_demos, tam_config):
    encoder, aff_report = tam.train_affordance(desk_demos, tam_config, seed=1,
                                               feature_dim=hs.FEATURE_DIM)
    assoc, assoc_report = tam.train_goal_association(desk_demos, encoder,
                                                     tam_config, seed=2)
    localizer, loc_report = tam.train_localization(desk_demos, tam_config, seed=3,
                                                   feature_dim=hs.FEATURE_DIM)
    return {
        "encoder": encoder, "assoc": assoc, "localizer": localizer,
        "reports": {"affordance": aff_report, "assoc": assoc_report,
                    "localization": loc_report},
    }


@pytest.fixture(scope="session")
def desk_memory(desk_demos, desk_nets):
    return tam.build_memory(desk_demos, desk_nets["encoder"],
                            desk_nets["localizer"])


@pytest.fixture(scope="session")
def learned_localizer(desk_nets):
    return tam.LearnedLocalizer(desk_nets["localizer"])
