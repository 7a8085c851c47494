"""Native-side trace generator for the bindings fidelity suite.

Drives CombatEnv directly through the Python API (not the protocol)
with the same LCG action-selection rule the TypeScript test uses, and
prints the full episode traces as JSON on stdout.
"""

import argparse
import json
import sys

from srdarena.env import CombatEnv, EpisodeConfig
from srdarena.policies import RulesPolicy


class Lcg:
    MOD = 2_147_483_648  # 2**31

    def __init__(self, seed: int):
        self.x = seed % self.MOD

    def pick(self, n: int) -> int:
        self.x = (1103515245 * self.x + 12345) % self.MOD
        return self.x % n


def episode_trace(env: CombatEnv, seed: int, max_steps: int) -> dict:
    lcg = Lcg(seed)
    obs = env.reset(seed)
    steps = []
    for _ in range(max_steps):
        index = lcg.pick(len(obs.legal))
        obs, reward, done, info = env.step(index)
        steps.append({
            "index": index,
            "reward": reward,
            "done": done,
            "outcome": info["outcome"],
            "round": info["round"],
            "events": len(info["events"]),
            "observation": obs.to_json(),
        })
        if done:
            break
    return {"seed": seed, "steps": steps}


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--episodes", type=int, default=100)
    parser.add_argument("--base-seed", type=int, default=1000)
    parser.add_argument("--max-rounds", type=int, default=30)
    parser.add_argument("--max-steps", type=int, default=400)
    args = parser.parse_args()

    env = CombatEnv(EpisodeConfig(
        class_mode="fighter_only",
        seed=0,
        adversary=RulesPolicy(),
        max_rounds=args.max_rounds,
    ))
    traces = [
        episode_trace(env, args.base_seed + i, args.max_steps)
        for i in range(args.episodes)
    ]
    json.dump(traces, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
