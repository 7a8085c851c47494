"""Line-delimited JSON protocol exposing environments over stdio.

One request per line, one response per line; external bindings (or any
process that can spawn a child) drive episodes through this surface.

Requests:
    {"op": "make",  "config": {...}}                -> {"ok": true, "handle": 0}
    {"op": "reset", "handle": 0, "seed": 7}         -> {"ok": true, "observation": {...}}
    {"op": "step",  "handle": 0, "action": 3}       -> {"ok": true, "observation": ..,
                                                        "reward": .., "done": .., "info": ..}
    {"op": "mask",  "handle": 0}                    -> {"ok": true, "mask": [..],
                                                        "menu_to_global": [..],
                                                        "global_actions": N}
    {"op": "close", "handle": 0}                    -> {"ok": true}
Failures are {"ok": false, "error": "..."} and never kill the server.
"""

from __future__ import annotations

import json
import sys

from .engine import enumerate_actions, is_terminal, Outcome
from .env import (
    GLOBAL_ACTIONS,
    CombatEnv,
    EpisodeConfig,
    global_action_id,
)

CONFIG_KEYS = {"class_mode", "map_pool", "seed", "max_rounds", "adversary"}


def _make_env(config: dict) -> CombatEnv:
    unknown = set(config) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    adversary = None
    kind = config.get("adversary", "rules")
    if kind == "rules":
        from .policies import RulesPolicy
        adversary = RulesPolicy()
    elif kind == "random":
        from .policies import RandomPolicy
        adversary = RandomPolicy()
    elif kind == "inert":
        from .policies import InertPolicy
        adversary = InertPolicy()
    else:
        raise ValueError(f"unknown adversary kind {kind!r}")
    return CombatEnv(EpisodeConfig(
        class_mode=config.get("class_mode", "fighter_only"),
        map_pool=tuple(config.get("map_pool", ())),
        seed=int(config.get("seed", 0)),
        max_rounds=int(config.get("max_rounds", 500)),
        adversary=adversary,
    ))


class EnvServer:
    def __init__(self):
        self._envs: dict[int, CombatEnv] = {}
        self._next_handle = 0

    def handle_request(self, request: dict) -> dict:
        try:
            op = request.get("op")
            if op == "make":
                return self._op_make(request)
            if op == "reset":
                return self._op_reset(request)
            if op == "step":
                return self._op_step(request)
            if op == "mask":
                return self._op_mask(request)
            if op == "close":
                return self._op_close(request)
            raise ValueError(f"unknown op {op!r}")
        except Exception as exc:  # noqa: BLE001 - protocol errors must not kill the loop
            return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}

    def _env(self, request: dict) -> CombatEnv:
        handle = request.get("handle")
        env = self._envs.get(handle)
        if env is None:
            raise KeyError(f"no open environment with handle {handle!r}")
        return env

    def _op_make(self, request: dict) -> dict:
        env = _make_env(request.get("config", {}))
        handle = self._next_handle
        self._next_handle += 1
        self._envs[handle] = env
        return {"ok": True, "handle": handle}

    def _op_reset(self, request: dict) -> dict:
        env = self._env(request)
        obs = env.reset(request.get("seed"))
        return {"ok": True, "observation": obs.to_json()}

    def _op_step(self, request: dict) -> dict:
        env = self._env(request)
        obs, reward, done, info = env.step(int(request["action"]))
        return {
            "ok": True,
            "observation": obs.to_json(),
            "reward": reward,
            "done": done,
            "info": {"outcome": info["outcome"], "round": info["round"],
                     "events": len(info["events"])},
        }

    def _op_mask(self, request: dict) -> dict:
        env = self._env(request)
        mask = [False] * len(GLOBAL_ACTIONS)
        menu_to_global: list[int] = []
        if (env.state is not None and not env.done
                and is_terminal(env.state) is Outcome.ONGOING):
            for action in enumerate_actions(env.state):
                gid = global_action_id(env.state, action)
                mask[gid] = True
                menu_to_global.append(gid)
        return {"ok": True, "mask": mask, "menu_to_global": menu_to_global,
                "global_actions": len(GLOBAL_ACTIONS)}

    def _op_close(self, request: dict) -> dict:
        handle = request.get("handle")
        if handle not in self._envs:
            raise KeyError(f"no open environment with handle {handle!r}")
        del self._envs[handle]
        return {"ok": True}


def serve(stdin=None, stdout=None) -> None:
    """Blocking request loop; exits on EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    server = EnvServer()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"ok": False, "error": f"bad JSON: {exc}"}
        else:
            response = server.handle_request(request)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
