"""Line-delimited combat logs and deterministic replay.

A log starts with a ``fight_start`` header carrying everything needed to
rebuild the initial state (map text, both sheets, seed, round cap), then
one record per event.  Because all dice live in the engine's RngStream,
re-applying the logged actions reproduces every roll; replay verifies
the final state hash recorded in the ``fight_end`` footer.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable

from .battlemap import load_map
from .characters import load_sheet
from .engine import (
    Action,
    GameState,
    IllegalActionError,
    Outcome,
    apply_action,
    is_terminal,
    new_fight,
)
from .rng import RngStream

LOG_SCHEMA_VERSION = 1


class ReplayError(RuntimeError):
    """Raised when a log is truncated, corrupt, or fails verification."""


def state_hash(state: GameState) -> str:
    blob = json.dumps(state.snapshot(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def fight_start_record(state: GameState, seed: int) -> dict:
    hero = state.entities[state.hero_id]
    foes = [e for e in state.entities.values() if e.team != hero.team]
    return {
        "type": "fight_start",
        "schema": LOG_SCHEMA_VERSION,
        "seed": seed,
        "rng_seed": state.rng.seed,  # the fight stream, not the base seed
        "map_name": state.battle_map.name,
        "map_text": state.battle_map.to_text(),
        "max_rounds": state.max_rounds,
        "hero_sheet": hero.sheet.to_dict(),
        "enemy_sheet": foes[0].sheet.to_dict(),
    }


def fight_end_record(state: GameState, outcome: Outcome, rounds: int) -> dict:
    return {
        "type": "fight_end",
        "outcome": outcome.value,
        "rounds": rounds,
        "state_hash": state_hash(state),
    }


def write_log(path: str | Path, events: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")


def read_log(path: str | Path) -> list[dict]:
    events = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ReplayError(f"line {i + 1} is not valid JSON: {exc}") from None
    return events


def events_to_text(events: list[dict]) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)


def rebuild_initial_state(header: dict) -> GameState:
    if header.get("type") != "fight_start":
        raise ReplayError("log does not begin with a fight_start header")
    battle_map = load_map(header["map_text"], name=header.get("map_name", "replayed"))
    hero_sheet = load_sheet(header["hero_sheet"])
    enemy_sheet = load_sheet(header["enemy_sheet"])
    state, _ = new_fight(
        battle_map, hero_sheet, enemy_sheet,
        RngStream(header["rng_seed"]), max_rounds=header["max_rounds"],
    )
    return state


def replay_log(events: list[dict], frame_hook=None) -> GameState:
    """Re-simulate a combat log, verifying the recorded final-state hash.

    ``frame_hook(state, event)`` is invoked after every applied action,
    letting callers render frames as the replay advances.
    """
    if not events:
        raise ReplayError("empty log")
    state = rebuild_initial_state(events[0])
    saw_end = False
    for event in events[1:]:
        if event["type"] == "action":
            action = Action.from_json(event["action"])
            try:
                state, _ = apply_action(state, action)
            except IllegalActionError as exc:
                raise ReplayError(f"corrupt log: {exc}") from None
            if frame_hook is not None:
                frame_hook(state, event)
        elif event["type"] == "fight_end":
            saw_end = True
            recorded = event["state_hash"]
            actual = state_hash(state)
            if recorded != actual:
                raise ReplayError(
                    f"final state hash mismatch: log {recorded[:12]}.. "
                    f"vs replay {actual[:12]}.."
                )
            if event["outcome"] != is_terminal(state).value:
                raise ReplayError("recorded outcome does not match replayed state")
    if not saw_end:
        raise ReplayError("log is truncated: no fight_end record")
    return state
