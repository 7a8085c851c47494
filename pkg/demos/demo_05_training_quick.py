"""A miniature training run and its reward curve.

Uses 3% of the default iteration budget so it finishes in about a
minute; the full configuration is `TrainConfig()` / `srdarena train`.

Run: python3 demos/demo_05_training_quick.py
"""

import numpy as np

from srdarena.dqn import TrainConfig, train
from srdarena.env import CombatEnv, EpisodeConfig
from srdarena.policies import GreedyDqnPolicy, RandomPolicy, RulesPolicy
from srdarena.tournament import run_fight
from srdarena.battlemap import builtin_map_pool
from srdarena.characters import sheet_for_class
from srdarena.rng import RngStream, derive_seed

config = TrainConfig(iterations=30, seed=3)
print("training: fighter mirror vs the rules AI,"
      f" {config.iterations} iterations x {config.horizon} env steps")

checkpoint = train(
    lambda: CombatEnv(EpisodeConfig(seed=3, adversary=RulesPolicy())),
    config,
    progress=lambda it, mean, frames: print(
        f"  iteration {it + 1:3}  mean reward {mean:+6.2f}  frames {frames}")
    if (it + 1) % 5 == 0 else None,
)

curve = checkpoint.reward_curve
print(f"\ncurve: first 5 {np.round(curve[:5], 2).tolist()} ... "
      f"last 5 {np.round(curve[-5:], 2).tolist()}")

trained = GreedyDqnPolicy(checkpoint.build_network())
fighter = sheet_for_class("fighter")
maps = builtin_map_pool()
rng = RngStream(17)
wins = sum(
    run_fight(trained, RandomPolicy(), rng.choice(maps), fighter, fighter,
              derive_seed(17, k), collect_events=False).winner == "a"
    for k in range(10)
)
print(f"mini-trained agent vs random: {wins}/10 wins")
