# The four evaluation protocols and the three metric families, shown on the
# oracle planner (replays the expert) and on simple sanity checks.

from tamplan import evalharness as ev

# --- metric primitives --------------------------------------------------------
print("lcs([A,B,C,D], [B,C]) =", ev.lcs_normalized(list("ABCD"), list("BC")))
print("lcs identical =", ev.lcs_normalized(list("AB"), list("AB")))

pred = [("rel", "plate_0", "on", "table_0")]
gt = [("rel", "plate_0", "on", "table_0"), ("rel", "cup_0", "on", "table_0")]
f1, f1_state, f1_rel = ev.graph_f1(pred, gt)
print(f"graph F1 on a half-set table: overall {f1:.3f}, relations {f1_rel:.3f}")

# --- protocols ------------------------------------------------------------------
# Episodes pair a goal with a held-out apartment; the expert's demonstration
# is the ground truth every protocol compares against.
config = ev.EvalConfig(n_episodes=10)
episodes = ev.build_test_episodes(config)
print(f"\n{len(episodes)} test episodes over apartments "
      f"{sorted({e.apartment_seed for e in episodes})}")

oracle = ev.OracleReplayPlanner(episodes)
for mode in ev.EvalMode:
    attack = config.attack if mode is ev.EvalMode.VIS_INTERACTIVE_ATTACK else None
    report = ev.run_evaluation(oracle, episodes, mode, config, method="oracle")
    agg = report.aggregate()
    print(f"{mode.value:24s} LCS {agg['lcs']:.3f}  exec {agg['executability']:.3f}  "
          f"F1 {agg['f1']:.3f}")

# The oracle scores a perfect 1.0 on LCS and F1 interactively; under attack
# its actions get substituted at random, so LCS and F1 drop even for a
# perfect replayer.  Interactive executability is 1.0 by construction:
# only successfully executed actions count in those protocols.
