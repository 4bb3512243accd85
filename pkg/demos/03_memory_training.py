# Training the three memory networks and assembling the memory graph.
# Small step counts keep this demo around a minute; the defaults in
# TamConfig are what the pipeline uses.

import numpy as np

from tamplan import homesim as hs
from tamplan import tam

demos, _ = hs.generate_demonstrations(80, seed=7,
                                      apartment_seeds=list(range(100, 180)))
print(f"{len(demos)} demonstrations, {sum(len(d.steps) for d in demos)} steps")

config = tam.TamConfig(affordance_steps=300, assoc_steps=600, loc_steps=400)

# 1. Affordance encoder: contrastive training pulls together observations
#    whose class-level action matches, across episodes and apartments.
encoder, report = tam.train_affordance(demos, config, seed=1,
                                       feature_dim=hs.FEATURE_DIM)
print("\naffordance:", {k: round(v, 3) for k, v in report.metrics.items()})

# 2. Goal associator: does this pair of encoded observations serve the
#    same goal?  Trained on frozen encoder values.
assoc, report = tam.train_goal_association(demos, encoder, config, seed=2)
print("goal association:", {k: round(v, 3) for k, v in report.metrics.items()})

# 3. Localization: a siamese scorer of whether two frames show the same
#    moment; its branch embeddings become the memory keys.
localizer, report = tam.train_localization(demos, config, seed=3,
                                           feature_dim=hs.FEATURE_DIM)
print("localization:", {k: round(v, 3) for k, v in report.metrics.items()})

# The memory graph holds one node per demonstration step.
memory = tam.build_memory(demos, encoder, localizer)
print(f"\nmemory graph: {len(memory)} nodes, key dim {memory.keys.shape[1]}")

# Query it with a fresh observation from an unseen apartment.
probe = hs.run_expert_episode(hs.TASK_TEMPLATES[1], apartment_seed=5,
                              spawn_room="kitchen", episode_id=0,
                              rng=np.random.default_rng(9), config=hs.SimConfig())
frame = probe.steps[2][0].end_features
learned = tam.LearnedLocalizer(localizer)
for node in tam.retrieve_k_nearest(memory, learned, frame, k=5):
    goal = hs.GOAL_VOCAB[node.goal_id].text
    print(f"  node {node.index:4d}  {str(node.action):28s} goal={goal}")
print("query came from:", probe.steps[2][1], "under goal", probe.goal.text)
