"""The reset/step environment: observations, menus, rewards.

Run: python3 demos/demo_04_environment.py
"""

import numpy as np

from srdarena.env import CHANNEL_NAMES, CombatEnv, EpisodeConfig
from srdarena.policies import RulesPolicy
from srdarena.rng import RngStream

env = CombatEnv(EpisodeConfig(class_mode="four_classes", seed=99,
                              adversary=RulesPolicy()))
obs = env.reset()

hero = env.state.entities["hero"]
enemy = env.state.entities["enemy"]
print(f"episode: {hero.sheet.name} ({hero.sheet.char_class}) vs "
      f"{enemy.sheet.name} ({enemy.sheet.char_class}) "
      f"on '{env.state.battle_map.name}'\n")

print("observation tensor: 16 channels x 7 x 7, nonzero cells per channel:")
for i, name in enumerate(CHANNEL_NAMES):
    print(f"  {i:2} {name:18} {int(np.count_nonzero(obs.tiles[i])):2}")
print(f"self features: {np.round(obs.features, 2).tolist()}")

print("\nlegal menu at the first decision:")
for i, line in enumerate(obs.menu):
    print(f"  {i:2}: {line}")

rng = RngStream(5)
total = 0.0
steps = 0
done = False
while not done:
    index = rng.randint(0, len(obs.legal) - 1)
    obs, reward, done, info = env.step(index)
    total += reward
    steps += 1

print(f"\nrandom hero walked {steps} steps; outcome {info['outcome']}, "
      f"episode reward {total:+.2f}")
print("(win pays +10, a loss is scaled by the damage the enemy took,"
      " everything else is 0)")
