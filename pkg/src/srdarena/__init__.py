"""srdarena: deterministic SRD 5E grid combat as an RL environment.

Library layers, bottom up: dice and rules, character sheets, battle
maps, the combat engine, the reset/step environment, a from-scratch DQN,
scripted and LLM-backed adversaries, and a tournament harness.
"""

from .battlemap import BattleMap, Sight, line_of_sight, load_map, render_ascii
from .characters import CharacterSheet, builtin_roster, load_sheet, sheet_for_class
from .dice import Advantage, D20Outcome, RollSpec, ability_modifier, roll
from .engine import (
    Action,
    ActionKind,
    EntityState,
    GameState,
    IllegalActionError,
    Outcome,
    apply_action,
    enumerate_actions,
    is_terminal,
    new_fight,
)
from .env import ActionEncoding, CombatEnv, EpisodeConfig, Observation, compute_reward
from .rng import RngStream, derive_seed

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionEncoding",
    "ActionKind",
    "Advantage",
    "BattleMap",
    "CharacterSheet",
    "CombatEnv",
    "D20Outcome",
    "EntityState",
    "EpisodeConfig",
    "GameState",
    "IllegalActionError",
    "Observation",
    "Outcome",
    "RngStream",
    "RollSpec",
    "Sight",
    "ability_modifier",
    "apply_action",
    "builtin_roster",
    "compute_reward",
    "derive_seed",
    "enumerate_actions",
    "is_terminal",
    "line_of_sight",
    "load_map",
    "load_sheet",
    "new_fight",
    "render_ascii",
    "roll",
    "sheet_for_class",
    "__version__",
]
