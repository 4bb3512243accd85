# Closed-loop planning with memory retrieval and sign-gradient replanning.
# Uses a compact training run (about two minutes) to keep the demo light.

import numpy as np

from tamplan import actiongen as ag
from tamplan import evalharness as ev
from tamplan import homesim as hs
from tamplan import tam
from tamplan.gradcore import Tape, Tensor, ops

demos, _ = hs.generate_demonstrations(80, seed=7,
                                      apartment_seeds=list(range(100, 180)))
tcfg = tam.TamConfig(affordance_steps=300, assoc_steps=900, loc_steps=400)
encoder, _ = tam.train_affordance(demos, tcfg, seed=1, feature_dim=hs.FEATURE_DIM)
assoc, _ = tam.train_goal_association(demos, encoder, tcfg, seed=2)
localizer, _ = tam.train_localization(demos, tcfg, seed=3, feature_dim=hs.FEATURE_DIM)
memory = tam.build_memory(demos, encoder, localizer)

vocab = ag.ActionVocabulary()
retriever = tam.MemoryRetriever(memory, tam.LearnedLocalizer(localizer), assoc)
decoder, _ = ag.train_decoder(demos, retriever, vocab,
                              ag.DecoderTrainConfig(epochs=10), seed=4)
planner = ag.TamPlanner(decoder, vocab, retriever)

# --- the sign-gradient step in isolation -------------------------------------
# loss (x - 1)^2 at x = 0: gradient is -2, so one clipped signed step of 0.1
# moves the embedding to +0.1
x = Tensor(np.array([[0.0]]), requires_grad=True)
with Tape() as tape:
    diff = ops.add(x, Tensor(np.array([[-1.0]])))
    loss = ops.sum_all(ops.multiply(diff, diff))
tape.backward(loss)
stepped = tam.sign_gradient_step(np.array([0.0]), x.grad.reshape(1),
                                 step_size=0.1, clip_low=-1.0, clip_high=1.0)
print("sign-gradient toy step: 0.0 ->", stepped[0])

# --- plan an episode in a live, unseen apartment ------------------------------
config = ev.EvalConfig(n_episodes=8)
episode = ev.build_test_episodes(config)[0]
interface = ev.make_interface(ev.EvalMode.VIS_INTERACTIVE, episode, config.eval_seed)
plan = planner.plan_episode(episode.goal_id, interface, max_steps=14)

goal_text = hs.GOAL_VOCAB[episode.goal_id].text
print(f"\ngoal '{goal_text}' in apartment {episode.apartment_seed}:")
for step in plan.steps:
    flag = "ok " if step.executed else f"fail({step.failure_reason})"
    print(f"  {flag:24s} {step.predicted_signature}  replan_trials={step.replan_trials}")
print("expert did:        ", episode.gt_signatures)
print("final-graph F1:    ", ev.graph_f1(interface.final_facts(),
                                         episode.gt_demo.final_facts)[0])

# --- the same episode under action substitution -------------------------------
attack = ev.AttackConfig(probability=0.5, seed=0)
interface = ev.make_interface(ev.EvalMode.VIS_INTERACTIVE_ATTACK, episode,
                              config.eval_seed, attack)
plan = planner.plan_episode(episode.goal_id, interface, max_steps=14)
print(f"\nsame goal, attack p={attack.probability}:")
for step in plan.steps:
    mark = "ATTACKED->" + str(step.executed_signature) if step.attacked else ""
    print(f"  pred {str(step.predicted_signature):34s} replans={step.replan_trials} {mark}")
