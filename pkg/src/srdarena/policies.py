"""Scripted adversaries and the policy registry used by tournaments.

Every policy exposes ``choose(state, rng) -> Action`` and only ever
returns actions from the current legal menu; dice live in the engine,
so the rules policy is a pure function of the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import battlemap as bm
from .battlemap import chebyshev
from .characters import SPELLS, WEAPONS
from .engine import (
    Action,
    ActionKind,
    EntityState,
    GameState,
    enumerate_actions,
    hit_probability,
    weapon_damage_spec,
)
from .rng import RngStream


@dataclass(frozen=True)
class PolicyRef:
    """Serializable policy description for rosters and manifests."""

    id: str
    kind: str  # rules | random | inert | dqn_checkpoint | llm
    params: dict = field(default_factory=dict, hash=False)

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json(cls, doc: dict) -> "PolicyRef":
        return cls(id=doc["id"], kind=doc["kind"], params=doc.get("params", {}))


def build_policy(ref: PolicyRef):
    if ref.kind == "rules":
        return RulesPolicy()
    if ref.kind == "random":
        return RandomPolicy()
    if ref.kind == "inert":
        return InertPolicy()
    if ref.kind == "dqn_checkpoint":
        from .dqn import Checkpoint
        return GreedyDqnPolicy.from_checkpoint(
            Checkpoint.load(ref.params["path"]),
            epsilon=ref.params.get("epsilon", 0.01))
    if ref.kind == "llm":
        from .llm import LlmPolicy
        return LlmPolicy.from_params(ref.params)
    raise ValueError(f"unknown policy kind {ref.kind!r}")


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


class RandomPolicy:
    """Uniform choice over the legal menu."""

    def choose(self, state: GameState, rng: RngStream) -> Action:
        return rng.choice(enumerate_actions(state))


class InertPolicy:
    """Always ends the turn; useful as a punching bag in tests."""

    def choose(self, state: GameState, rng: RngStream) -> Action:
        return Action(ActionKind.END_TURN)


def _expected_damage(state: GameState, me: EntityState, action: Action) -> float:
    """Deterministic ranking value for attack-like menu entries."""
    target = state.entities[action.target]
    if action.kind in (ActionKind.MELEE_ATTACK, ActionKind.RANGED_ATTACK,
                       ActionKind.OFFHAND_ATTACK):
        weapon = WEAPONS[me.sheet.equipment[action.weapon_slot]]
        ranged = action.kind is ActionKind.RANGED_ATTACK or (
            action.kind is ActionKind.OFFHAND_ATTACK
            and chebyshev(me.pos, target.pos) > 1
        )
        from .engine import attack_ability_mod
        mod = attack_ability_mod(me.sheet, weapon, ranged)
        avg = weapon_damage_spec(me.sheet, weapon).average
        if action.kind is not ActionKind.OFFHAND_ATTACK:
            avg += mod
        p = hit_probability(state, me, target, mod + me.sheet.proficiency_bonus, ranged)
        return p * max(0.0, avg)
    if action.kind is ActionKind.CAST_SPELL:
        spell = SPELLS[action.spell]
        if spell.template == "heal" or spell.dice is None:
            return 0.0
        avg = spell.dice.average
        if spell.template == "auto":
            return avg
        if spell.template == "attack":
            p = hit_probability(state, me, target,
                                me.sheet.spell_attack_bonus, ranged=True)
            return p * avg
        # saving throw: damage on fail, half or none on save
        dc = me.sheet.spell_save_dc
        save_mod = target.sheet.save_modifier(spell.save_ability)
        p_fail = min(0.95, max(0.05, (dc - save_mod - 1) / 20.0))
        saved_part = avg / 2 if spell.half_on_save else 0.0
        return p_fail * avg + (1 - p_fail) * saved_part
    return 0.0


class RulesPolicy:
    """Baseline scripted opponent.

    Priorities: action surge once an attack has landed and the action is
    spent, otherwise the strongest available attack on the nearest
    visible enemy, then second wind below half health, then a greedy
    step along the cheapest path toward the enemy, then end turn.
    """

    def choose(self, state: GameState, rng: RngStream = None) -> Action:
        menu = enumerate_actions(state)
        me = state.active

        surge = Action(ActionKind.ACTION_SURGE)
        if surge in menu and me.attack_landed and me.action == 0:
            return surge

        attacks = [
            a for a in menu
            if a.kind in (ActionKind.MELEE_ATTACK, ActionKind.RANGED_ATTACK,
                          ActionKind.OFFHAND_ATTACK)
            or (a.kind is ActionKind.CAST_SPELL
                and SPELLS[a.spell].template != "heal")
        ]
        if attacks:
            nearest = min(
                (state.entities[a.target] for a in attacks),
                key=lambda e: chebyshev(me.pos, e.pos),
            )
            on_nearest = [a for a in attacks if a.target == nearest.eid]
            best = max(enumerate(on_nearest),
                       key=lambda ia: (_expected_damage(state, me, ia[1]), -ia[0]))
            return best[1]

        second_wind = Action(ActionKind.SECOND_WIND, bonus=True)
        if second_wind in menu and me.hp * 2 < me.sheet.max_hp:
            return second_wind

        step = self._step_toward_enemy(state, me, menu)
        if step is not None:
            return step
        return Action(ActionKind.END_TURN)

    def _step_toward_enemy(self, state: GameState, me: EntityState,
                           menu: list[Action]) -> Action | None:
        moves = [a for a in menu if a.kind is ActionKind.MOVE]
        if not moves:
            return None
        enemies = state.enemies_of(me.eid)
        if not enemies:
            return None
        target = min(enemies, key=lambda e: chebyshev(me.pos, e.pos))
        # distance field from the enemy; my best step shrinks it
        costs = bm.distance_field(
            state.battle_map, target.pos,
            occupied=frozenset(
                e.pos for e in state.living()
                if e.eid not in (me.eid, target.eid)
            ),
        )
        here = costs.get(me.pos)
        best_action = None
        best_cost = here if here is not None else float("inf")
        for action in moves:
            dst = (me.pos[0] + action.direction[0], me.pos[1] + action.direction[1])
            cost = costs.get(dst)
            if cost is not None and cost < best_cost:
                best_cost = cost
                best_action = action
        return best_action


class GreedyDqnPolicy:
    """Argmax over a trained value network.

    Evaluation keeps the schedule's final exploration rate by default
    (epsilon 0.01): a purely greedy reactive policy can stall forever on
    maps whose spawns lack line of sight, which says nothing about the
    learned values.
    """

    def __init__(self, network, epsilon: float = 0.01):
        self.network = network
        self.epsilon = epsilon

    @classmethod
    def from_checkpoint(cls, checkpoint, epsilon: float = 0.01):
        return cls(checkpoint.build_network(), epsilon=epsilon)

    def choose(self, state: GameState, rng: RngStream = None) -> Action:
        import numpy as np

        from .env import encode_observation

        menu = enumerate_actions(state)
        if rng is not None and self.epsilon > 0 and rng.random() < self.epsilon:
            return rng.choice(menu)
        obs = encode_observation(state, state.active_id)
        return menu[int(np.argmax(self.network.q_menu(obs)))]
