"""Reset/step environment: observation tensors, action encodings, rewards.

The hero is the learning agent; adversary turns are folded inside
``step`` so the caller only ever decides at the hero's decision points.
Observations combine a 16-channel 7x7 viewport around the hero, 13
scalar self features, class ids, and the encoded legal-action menu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import battlemap as bm
from .battlemap import BattleMap, chebyshev
from .characters import CLASSES, CharacterSheet, sheet_for_class
from .engine import (
    ENEMY_ID,
    Action,
    ActionKind,
    GameState,
    Outcome,
    apply_action,
    action_text,
    enumerate_actions,
    is_terminal,
    new_fight,
)
from .rng import RngStream, derive_seed

VIEW = 7
VIEW_R = VIEW // 2
CHANNELS = 16
SELF_FEATURES = 13

WIN_REWARD = 10.0
LOSS_REWARD = -10.0

CHANNEL_NAMES = (
    "passable", "wall", "out_of_map", "barrel", "water",
    "occupied_self", "occupied_enemy", "occupied_ally",
    "in_los", "enemy_hp_fraction", "enemy_prone", "enemy_dodging",
    "reachable_this_turn", "threatened", "cover_from_enemy",
    "distance_to_enemy",
)

# ---------------------------------------------------------------------------
# Encoding vocabularies
# ---------------------------------------------------------------------------

ACTION_TYPES = tuple(kind.value for kind in ActionKind)
ACTION_TYPE_ID = {name: i for i, name in enumerate(ACTION_TYPES)}

WEAPON_OR_SPELL_TYPES = (
    "none",
    "dagger", "rapier", "warhammer", "longbow",
    "fire_bolt", "magic_missile", "burning_hands", "shield",
    "sacred_flame", "guiding_bolt", "cure_wounds",
)
WEAPON_TYPE_ID = {name: i for i, name in enumerate(WEAPON_OR_SPELL_TYPES)}

ENTITY_TYPES = ("none",) + CLASSES
ENTITY_TYPE_ID = {name: i for i, name in enumerate(ENTITY_TYPES)}

TERRAIN_TYPES = ("none", bm.FLOOR, bm.WALL, bm.BARREL, bm.WATER, bm.OUT_OF_MAP)
TERRAIN_TYPE_ID = {name: i for i, name in enumerate(TERRAIN_TYPES)}

DIRECTION_ID = {None: 0, **{d: i + 1 for i, d in enumerate(bm.DIRECTIONS)}}

# per-kind variant: direction for moves, weapon slot for attacks, loadout
# index for spells; keeps twin weapons distinguishable without a separate
# direction embedding table
SUBTYPE_VOCAB = 9

VOCAB_SIZES = {
    "action_type": len(ACTION_TYPES),
    "binary_action": 2,
    "binary_subtype": SUBTYPE_VOCAB,
    "weapon_type": len(WEAPON_OR_SPELL_TYPES),
    "entity_type": len(ENTITY_TYPES),
    "terrain_type": len(TERRAIN_TYPES),
    "direction": len(DIRECTION_ID),
}


@dataclass(frozen=True)
class ActionEncoding:
    """Integer view of one engine action, ready for embedding lookups."""

    action_type: int
    binary_action: int
    binary_subtype: int
    weapon_type: int
    entity_type: int
    terrain_type: int
    direction: int

    def as_ids(self) -> tuple[int, ...]:
        return (
            self.action_type, self.binary_action, self.binary_subtype,
            self.weapon_type, self.entity_type, self.terrain_type,
            self.direction,
        )

    def to_json(self) -> dict:
        return {
            "action_type": self.action_type,
            "binary_action": self.binary_action,
            "binary_subtype": self.binary_subtype,
            "weapon_type": self.weapon_type,
            "entity_type": self.entity_type,
            "terrain_type": self.terrain_type,
            "direction": self.direction,
        }


def encode_action(state: GameState, action: Action) -> ActionEncoding:
    me = state.active
    weapon_type = 0
    subtype = 0
    if action.weapon_slot is not None:
        weapon_type = WEAPON_TYPE_ID[me.sheet.equipment[action.weapon_slot]]
        subtype = 1 + action.weapon_slot
    if action.spell is not None:
        weapon_type = WEAPON_TYPE_ID[action.spell]
        subtype = 1 + me.sheet.spell_loadout.index(action.spell)
    direction = DIRECTION_ID[action.direction]
    if action.direction is not None:
        subtype = direction
    entity_type = 0
    terrain_type = 0
    if action.target is not None:
        target = state.entities[action.target]
        entity_type = ENTITY_TYPE_ID[target.sheet.char_class]
        terrain_type = TERRAIN_TYPE_ID[state.battle_map.terrain(target.pos)]
    elif action.direction is not None:
        dst = (me.pos[0] + action.direction[0], me.pos[1] + action.direction[1])
        terrain_type = TERRAIN_TYPE_ID[state.battle_map.terrain(dst)]
    return ActionEncoding(
        action_type=ACTION_TYPE_ID[action.kind.value],
        binary_action=1 if action.bonus else 0,
        binary_subtype=subtype,
        weapon_type=weapon_type,
        entity_type=entity_type,
        terrain_type=terrain_type,
        direction=direction,
    )


def decode_action(state: GameState, encoding: ActionEncoding) -> Action:
    """Inverse of encode_action within the current legal menu."""
    for action in enumerate_actions(state):
        if encode_action(state, action) == encoding:
            return action
    raise KeyError(f"encoding does not match any legal action: {encoding}")


# global (state-independent) action vocabulary for mask-style APIs
def global_action_table() -> list[tuple]:
    """Every action variant the arena can ever offer, as stable tuples."""
    table: list[tuple] = [("end_turn",)]
    for kind in ("melee_attack", "ranged_attack", "offhand_attack"):
        for slot in range(4):
            table.append((kind, slot))
    for slot in range(4):
        table.append(("cast_spell", slot))
    table.extend([
        ("dash", 0), ("dash", 1), ("disengage", 0), ("disengage", 1),
        ("dodge",),
    ])
    for d in bm.DIRECTIONS:
        table.append(("move", d))
    table.extend([("prone",), ("stand",), ("second_wind",), ("action_surge",)])
    return table


GLOBAL_ACTIONS = global_action_table()
GLOBAL_ACTION_INDEX = {key: i for i, key in enumerate(GLOBAL_ACTIONS)}


def global_action_id(state: GameState, action: Action) -> int:
    kind = action.kind
    if kind in (ActionKind.MELEE_ATTACK, ActionKind.RANGED_ATTACK,
                ActionKind.OFFHAND_ATTACK):
        key = (kind.value, action.weapon_slot)
    elif kind is ActionKind.CAST_SPELL:
        key = (kind.value, state.active.sheet.spell_loadout.index(action.spell))
    elif kind in (ActionKind.DASH, ActionKind.DISENGAGE):
        key = (kind.value, 1 if action.bonus else 0)
    elif kind is ActionKind.MOVE:
        key = (kind.value, action.direction)
    else:
        key = (kind.value,)
    return GLOBAL_ACTION_INDEX[key]


# ---------------------------------------------------------------------------
# Observation
# ---------------------------------------------------------------------------


@dataclass
class Observation:
    tiles: np.ndarray  # (16, 7, 7) float32 in [0, 1]
    features: np.ndarray  # (13,) float32
    class_ids: np.ndarray  # (2,) int64: own class, enemy class
    legal: list[ActionEncoding]
    menu: list[str]

    def to_json(self) -> dict:
        return {
            "tiles": self.tiles.tolist(),
            "features": self.features.tolist(),
            "class_ids": self.class_ids.tolist(),
            "legal": [enc.to_json() for enc in self.legal],
            "menu": list(self.menu),
        }


_STATIC_CHANNEL_CACHE: dict = {}


def _static_channels(battle_map: BattleMap) -> np.ndarray:
    """Padded terrain channels 0..4, precomputed once per map."""
    key = (battle_map.width, battle_map.height, battle_map.tiles)
    cached = _STATIC_CHANNEL_CACHE.get(key)
    if cached is not None:
        return cached
    h, w = battle_map.height, battle_map.width
    pad = VIEW_R
    grid = np.zeros((5, h + 2 * pad, w + 2 * pad), dtype=np.float32)
    grid[2, :, :] = 1.0  # everything is out_of_map until proven otherwise
    for y in range(h):
        for x in range(w):
            terrain = battle_map.terrain((x, y))
            gy, gx = y + pad, x + pad
            grid[2, gy, gx] = 0.0
            if terrain in (bm.FLOOR, bm.WATER):
                grid[0, gy, gx] = 1.0
            if terrain == bm.WALL:
                grid[1, gy, gx] = 1.0
            if terrain == bm.BARREL:
                grid[3, gy, gx] = 1.0
            if terrain == bm.WATER:
                grid[4, gy, gx] = 1.0
    _STATIC_CHANNEL_CACHE[key] = grid
    return grid


def encode_observation(state: GameState, pov_id: str) -> Observation:
    """16x7x7 viewport centered on the pov entity plus self features."""
    me = state.entities[pov_id]
    grid = state.battle_map
    px, py = me.pos
    pad = VIEW_R

    tiles = np.zeros((CHANNELS, VIEW, VIEW), dtype=np.float32)
    static = _static_channels(grid)
    tiles[0:5] = static[:, py:py + VIEW, px:px + VIEW]
    tiles[5, VIEW_R, VIEW_R] = 1.0

    sight = bm.sight_table(grid)
    window_origin = (px - pad, py - pad)

    def in_window(pos):
        wx, wy = pos[0] - window_origin[0], pos[1] - window_origin[1]
        return (wx, wy) if 0 <= wx < VIEW and 0 <= wy < VIEW else None

    # channel 8: line of sight over the window
    for wy in range(VIEW):
        for wx in range(VIEW):
            pos = (window_origin[0] + wx, window_origin[1] + wy)
            if pos == me.pos or (grid.in_bounds(pos) and sight[(me.pos, pos)]):
                tiles[8, wy, wx] = 1.0

    visible_enemies = []
    for ent in state.entities.values():
        if not ent.alive or ent.eid == pov_id:
            continue
        seen = sight[(me.pos, ent.pos)]
        cell = in_window(ent.pos)
        if ent.team == me.team:
            if cell is not None:
                tiles[7, cell[1], cell[0]] = 1.0
            continue
        if not seen:
            continue  # fog: unseen enemies are absent from the tensor
        visible_enemies.append(ent)
        if cell is not None:
            wx, wy = cell
            tiles[6, wy, wx] = 1.0
            tiles[9, wy, wx] = ent.hp / ent.sheet.max_hp
            tiles[10, wy, wx] = 1.0 if ent.prone else 0.0
            tiles[11, wy, wx] = 1.0 if ent.dodging else 0.0

    # channel 12: tiles reachable with the current movement budget
    costs = bm.reachable(grid, me.pos, me.movement_left,
                         occupied=state.occupied(excluding=pov_id),
                         crawling=me.prone)
    for pos in costs:
        cell = in_window(pos)
        if cell is not None:
            tiles[12, cell[1], cell[0]] = 1.0

    # channels 13..15 relate window tiles to the visible enemies
    norm = float(max(grid.width, grid.height))
    if visible_enemies:
        for wy in range(VIEW):
            for wx in range(VIEW):
                pos = (window_origin[0] + wx, window_origin[1] + wy)
                if not grid.in_bounds(pos):
                    continue
                dmin = min(chebyshev(pos, e.pos) for e in visible_enemies)
                tiles[15, wy, wx] = min(1.0, dmin / norm)
                if dmin <= 1:
                    tiles[13, wy, wx] = 1.0
                if any(bm.cover_bonus(grid, e.pos, pos) > 0 for e in visible_enemies):
                    tiles[14, wy, wx] = 1.0

    features = np.zeros(SELF_FEATURES, dtype=np.float32)
    features[0] = me.hp / me.sheet.max_hp
    features[1] = min(1.0, me.movement_left / (2 * me.speed))
    features[2] = float(me.action > 0)
    features[3] = float(me.bonus > 0)
    features[4] = float(me.reaction > 0)
    features[5] = float(me.feature_uses.get("second_wind", 0) > 0)
    features[6] = float(me.feature_uses.get("action_surge", 0) > 0)
    max_slots = me.sheet.max_spell_slots
    features[7] = me.spell_slots / max_slots if max_slots else 0.0
    features[8] = px / max(1, grid.width - 1)
    features[9] = py / max(1, grid.height - 1)
    features[10] = min(1.0, state.round / state.max_rounds)
    features[11] = float(me.prone)
    features[12] = float(me.dodging)

    menu_actions = []
    if (is_terminal(state) is Outcome.ONGOING and me.alive
            and state.active_id == pov_id):
        menu_actions = enumerate_actions(state)
    legal = [encode_action(state, a) for a in menu_actions]
    menu = [action_text(state, a) for a in menu_actions]

    enemy = next(
        (e for e in state.entities.values() if e.team != me.team and e.alive),
        None,
    )
    class_ids = np.array(
        [
            ENTITY_TYPE_ID[me.sheet.char_class],
            ENTITY_TYPE_ID[enemy.sheet.char_class] if enemy else 0,
        ],
        dtype=np.int64,
    )
    return Observation(tiles=tiles, features=features, class_ids=class_ids,
                       legal=legal, menu=menu)


# ---------------------------------------------------------------------------
# Reward
# ---------------------------------------------------------------------------


def compute_reward(outcome: Outcome, adversary) -> float:
    """+10 on a win, 0 otherwise, with losses scaled by the damage the
    adversary has already taken: -10 * hp / max_hp."""
    if outcome is Outcome.HERO_WON:
        return WIN_REWARD
    if outcome is Outcome.HERO_LOST:
        return LOSS_REWARD * adversary.hp / adversary.sheet.max_hp
    return 0.0


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------

FIGHTER_ONLY = "fighter_only"
FOUR_CLASSES = "four_classes"

MAX_ACTIONS_PER_TURN = 128  # safety valve against pathological policies


@dataclass
class EpisodeConfig:
    class_mode: str = FIGHTER_ONLY
    map_pool: tuple[str, ...] = ()  # empty = all bundled maps
    seed: int = 0
    adversary: object = None  # policy object or factory, see policies module
    max_rounds: int = 500
    hero_sheet: CharacterSheet | None = None  # overrides class sampling
    enemy_sheet: CharacterSheet | None = None

    def __post_init__(self):
        if self.class_mode not in (FIGHTER_ONLY, FOUR_CLASSES):
            raise ValueError(f"unknown class_mode {self.class_mode!r}")


class EpisodeDone(RuntimeError):
    """step() was called on a finished episode."""


class CombatEnv:
    """Single-agent contract over the two-sided combat engine."""

    def __init__(self, config: EpisodeConfig):
        self.config = config
        if config.map_pool:
            self.maps = [bm.load_builtin_map(n) for n in config.map_pool]
        else:
            self.maps = bm.builtin_map_pool()
        self.episode_index = -1
        self.state: GameState | None = None
        self.done = True
        self.outcome = Outcome.ONGOING
        self._adversary = None
        self._pending_events: list[dict] = []
        self._obs: Observation | None = None

    # -- episode lifecycle -------------------------------------------------

    def reset(self, seed: int | None = None) -> Observation:
        """Start a fresh episode and return the hero's first observation.

        If the adversary wins initiative and ends the fight before the
        hero's first decision (a lucky alpha strike), the episode is
        deterministically resampled from a derived seed so reset always
        lands on a decision point.
        """
        self.episode_index += 1
        if seed is None:
            seed = derive_seed(self.config.seed, self.episode_index)

        for attempt in range(100):
            episode_seed = seed if attempt == 0 else derive_seed(seed, 0x5EED, attempt)
            rng = RngStream(derive_seed(episode_seed, 0xE9))
            battle_map = rng.choice(self.maps)
            hero_sheet = self.config.hero_sheet or self._sample_sheet(rng)
            enemy_sheet = self.config.enemy_sheet or self._sample_sheet(rng)

            self.state, events = new_fight(
                battle_map, hero_sheet, enemy_sheet,
                RngStream(derive_seed(episode_seed, 0xF1)),
                max_rounds=self.config.max_rounds,
            )
            self._pending_events = events
            self._adversary = self._make_adversary(episode_seed)
            self._adv_rng = RngStream(derive_seed(episode_seed, 0xAD))
            self.done = False
            self.outcome = Outcome.ONGOING

            self._run_adversary_turns()
            if not self._check_terminal():
                break

        self._obs = encode_observation(self.state, self.state.hero_id)
        return self._obs

    def _sample_sheet(self, rng: RngStream) -> CharacterSheet:
        if self.config.class_mode == FIGHTER_ONLY:
            return sheet_for_class("fighter")
        return sheet_for_class(rng.choice(CLASSES))

    def _make_adversary(self, seed: int):
        adv = self.config.adversary
        if adv is None:
            from .policies import RulesPolicy
            return RulesPolicy()
        if callable(adv) and not hasattr(adv, "choose"):
            return adv(self.episode_index, seed)  # per-episode factory
        return adv

    # -- stepping ----------------------------------------------------------

    @property
    def legal_actions(self) -> list[ActionEncoding]:
        return self._obs.legal if self._obs else []

    def step(self, action_index: int) -> tuple[Observation, float, bool, dict]:
        if self.done:
            raise EpisodeDone("episode is over; call reset()")
        menu = enumerate_actions(self.state)
        if not 0 <= action_index < len(menu):
            raise IndexError(
                f"action index {action_index} out of range 0..{len(menu) - 1}"
            )
        self.state, events = apply_action(self.state, menu[action_index])
        self._pending_events.extend(events)

        if not self._check_terminal() and self.state.active_id != self.state.hero_id:
            self._run_adversary_turns()
            self._check_terminal()

        reward = 0.0
        if self.done:
            reward = compute_reward(self.outcome, self.state.entities[ENEMY_ID])
        self._obs = encode_observation(self.state, self.state.hero_id)
        info = {
            "events": self._drain_events(),
            "outcome": self.outcome.value,
            "round": self.state.round,
        }
        return self._obs, reward, self.done, info

    def _check_terminal(self) -> bool:
        self.outcome = is_terminal(self.state)
        self.done = self.outcome is not Outcome.ONGOING
        return self.done

    def _run_adversary_turns(self) -> None:
        """Let the adversary act until the hero's turn or a terminal state."""
        while (is_terminal(self.state) is Outcome.ONGOING
               and self.state.active_id != self.state.hero_id):
            actor = self.state.active_id
            for _ in range(MAX_ACTIONS_PER_TURN):
                action = self._adversary.choose(self.state, self._adv_rng)
                self.state, events = apply_action(self.state, action)
                self._pending_events.extend(events)
                if (is_terminal(self.state) is not Outcome.ONGOING
                        or self.state.active_id != actor):
                    break
            else:
                self.state, events = apply_action(
                    self.state, Action(ActionKind.END_TURN))
                self._pending_events.extend(events)

    def _drain_events(self) -> list[dict]:
        out = self._pending_events
        self._pending_events = []
        return out
