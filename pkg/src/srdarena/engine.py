"""Turn state machine: initiative, action economy, legal actions, resolution.

The engine is deterministic given the GameState's RngStream: policies
never roll dice themselves, every stochastic outcome happens inside
``apply_action``.  ``enumerate_actions`` pre-generates the full legal
menu for the active entity; applying anything outside that menu raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import battlemap as bm
from .battlemap import BattleMap, Position, chebyshev, distance_feet
from .characters import (
    SPELLS,
    WEAPONS,
    CharacterSheet,
    CLASS_FEATURES,
    Spell,
    Weapon,
    feature_available,
)
from .dice import Advantage, RollSpec, combine_advantage, roll, roll_d20
from .rng import RngStream

HERO_ID = "hero"
ENEMY_ID = "enemy"
DEFAULT_MAX_ROUNDS = 500
STAND_DIVISOR = 2
SNEAK_DICE = RollSpec(1, 6)


class IllegalActionError(ValueError):
    """An action outside the current legal enumeration was applied."""


class ActionKind(Enum):
    END_TURN = "end_turn"
    MELEE_ATTACK = "melee_attack"
    RANGED_ATTACK = "ranged_attack"
    OFFHAND_ATTACK = "offhand_attack"
    CAST_SPELL = "cast_spell"
    DASH = "dash"
    DISENGAGE = "disengage"
    DODGE = "dodge"
    MOVE = "move"
    PRONE = "prone"
    STAND = "stand"
    SECOND_WIND = "second_wind"
    ACTION_SURGE = "action_surge"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    target: str | None = None
    weapon_slot: int | None = None
    spell: str | None = None
    direction: tuple[int, int] | None = None
    bonus: bool = False

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.target is not None:
            out["target"] = self.target
        if self.weapon_slot is not None:
            out["weapon_slot"] = self.weapon_slot
        if self.spell is not None:
            out["spell"] = self.spell
        if self.direction is not None:
            out["direction"] = list(self.direction)
        if self.bonus:
            out["bonus"] = True
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Action":
        return cls(
            kind=ActionKind(doc["kind"]),
            target=doc.get("target"),
            weapon_slot=doc.get("weapon_slot"),
            spell=doc.get("spell"),
            direction=tuple(doc["direction"]) if doc.get("direction") else None,
            bonus=doc.get("bonus", False),
        )


@dataclass
class EntityState:
    eid: str
    team: int
    sheet: CharacterSheet
    hp: int
    pos: Position
    prone: bool = False
    dodging: bool = False
    action: int = 1
    bonus: int = 1
    reaction: int = 1
    movement_left: int = 0
    feature_uses: dict[str, int] = field(default_factory=dict)
    spell_slots: int = 0
    disengaged: bool = False
    shield_ac: int = 0
    sneak_used: bool = False
    attack_landed: bool = False
    light_melee_slot: int | None = None  # slot used with the Attack action

    @property
    def alive(self) -> bool:
        return self.hp > 0

    @property
    def speed(self) -> int:
        return self.sheet.speed

    def conditions(self) -> set[str]:
        out = set()
        if self.prone:
            out.add("prone")
        if self.dodging:
            out.add("dodging")
        if not self.alive:
            out.add("dead")
        return out

    def copy(self) -> "EntityState":
        return EntityState(
            eid=self.eid, team=self.team, sheet=self.sheet, hp=self.hp,
            pos=self.pos, prone=self.prone, dodging=self.dodging,
            action=self.action, bonus=self.bonus, reaction=self.reaction,
            movement_left=self.movement_left,
            feature_uses=dict(self.feature_uses), spell_slots=self.spell_slots,
            disengaged=self.disengaged, shield_ac=self.shield_ac,
            sneak_used=self.sneak_used, attack_landed=self.attack_landed,
            light_melee_slot=self.light_melee_slot,
        )


@dataclass
class GameState:
    battle_map: BattleMap
    entities: dict[str, EntityState]
    rng: RngStream
    initiative_order: list[str] = field(default_factory=list)
    active_index: int = 0
    round: int = 1
    max_rounds: int = DEFAULT_MAX_ROUNDS
    hero_id: str = HERO_ID
    version: int = 0
    _menu: list[Action] | None = field(default=None, repr=False)
    _menu_version: int = -1

    @property
    def active_id(self) -> str:
        return self.initiative_order[self.active_index]

    @property
    def active(self) -> EntityState:
        return self.entities[self.active_id]

    def living(self, team: int | None = None) -> list[EntityState]:
        return [
            e for e in self.entities.values()
            if e.alive and (team is None or e.team == team)
        ]

    def enemies_of(self, eid: str) -> list[EntityState]:
        me = self.entities[eid]
        return [e for e in self.living() if e.team != me.team]

    def occupied(self, excluding: str | None = None) -> frozenset[Position]:
        return frozenset(e.pos for e in self.living() if e.eid != excluding)

    def bump(self) -> None:
        self.version += 1

    def copy(self) -> "GameState":
        return GameState(
            battle_map=self.battle_map,
            entities={k: v.copy() for k, v in self.entities.items()},
            rng=self.rng.clone(),
            initiative_order=list(self.initiative_order),
            active_index=self.active_index,
            round=self.round,
            max_rounds=self.max_rounds,
            hero_id=self.hero_id,
            version=self.version,
        )

    def snapshot(self) -> dict:
        """JSON-stable structural snapshot (used for hashing and replay checks)."""
        return {
            "round": self.round,
            "active_index": self.active_index,
            "initiative": list(self.initiative_order),
            "rng_position": self.rng.position,
            "entities": {
                eid: {
                    "hp": e.hp,
                    "pos": list(e.pos),
                    "conditions": sorted(e.conditions()),
                    "economy": [e.action, e.bonus, e.reaction, e.movement_left],
                    "uses": {k: e.feature_uses[k] for k in sorted(e.feature_uses)},
                    "slots": e.spell_slots,
                    "shield_ac": e.shield_ac,
                    "disengaged": e.disengaged,
                }
                for eid, e in sorted(self.entities.items())
            },
        }


# ---------------------------------------------------------------------------
# Fight setup
# ---------------------------------------------------------------------------


def make_entity(eid: str, team: int, sheet: CharacterSheet, pos: Position) -> EntityState:
    uses = {
        feat.id: feat.uses_per_fight
        for feat in CLASS_FEATURES[sheet.char_class]
        if feat.uses_per_fight is not None
    }
    return EntityState(
        eid=eid, team=team, sheet=sheet, hp=sheet.max_hp, pos=pos,
        feature_uses=uses, spell_slots=sheet.max_spell_slots,
    )


def new_fight(battle_map: BattleMap, hero_sheet: CharacterSheet,
              enemy_sheet: CharacterSheet, rng: RngStream,
              max_rounds: int = DEFAULT_MAX_ROUNDS) -> tuple[GameState, list[dict]]:
    """Set up a 1v1 fight on the map's spawn points and roll initiative."""
    state = GameState(
        battle_map=battle_map,
        entities={
            HERO_ID: make_entity(HERO_ID, 0, hero_sheet, battle_map.hero_spawn),
            ENEMY_ID: make_entity(ENEMY_ID, 1, enemy_sheet, battle_map.enemy_spawn),
        },
        rng=rng,
        max_rounds=max_rounds,
    )
    events = roll_initiative(state, state.rng)
    events.extend(_begin_turn(state))
    return state, events


def roll_initiative(state: GameState, rng: RngStream) -> list[dict]:
    """d20 + DEX modifier, descending; ties by DEX, then a coin flip."""
    rows = []
    for eid in state.entities:
        ent = state.entities[eid]
        if not ent.alive:
            continue
        outcome = roll_d20(rng, ent.sheet.modifier("dex"))
        rows.append([eid, outcome.total, ent.sheet.modifier("dex"), 0])
    # coin flips only for exact (total, dex) ties, drawn in entity order
    keyed: dict[tuple[int, int], list] = {}
    for row in rows:
        keyed.setdefault((row[1], row[2]), []).append(row)
    for group in keyed.values():
        if len(group) > 1:
            for row in group:
                row[3] = rng.next_u64()
    rows.sort(key=lambda r: (-r[1], -r[2], r[3]))
    state.initiative_order = [r[0] for r in rows]
    state.active_index = 0
    state.round = 1
    state.bump()
    return [{
        "type": "initiative",
        "order": state.initiative_order,
        "rolls": {r[0]: r[1] for r in rows},
    }]


# ---------------------------------------------------------------------------
# Terminal check
# ---------------------------------------------------------------------------


class Outcome(Enum):
    ONGOING = "ongoing"
    HERO_WON = "hero_won"
    HERO_LOST = "hero_lost"
    TIE = "tie"


def is_terminal(state: GameState) -> Outcome:
    hero = state.entities[state.hero_id]
    if not hero.alive:
        return Outcome.HERO_LOST
    if not any(e.alive for e in state.entities.values() if e.team != hero.team):
        return Outcome.HERO_WON
    if state.round > state.max_rounds:
        return Outcome.TIE
    return Outcome.ONGOING


# ---------------------------------------------------------------------------
# Attack context helpers
# ---------------------------------------------------------------------------


def weapon_damage_spec(sheet: CharacterSheet, weapon: Weapon) -> RollSpec:
    if weapon.has("versatile") and not sheet.has_shield:
        return RollSpec(weapon.damage.count, 10, weapon.damage.modifier)
    return weapon.damage


def attack_ability_mod(sheet: CharacterSheet, weapon: Weapon, ranged: bool) -> int:
    if weapon.category == "ranged":
        return sheet.modifier("dex")
    if weapon.has("finesse"):
        return max(sheet.modifier("str"), sheet.modifier("dex"))
    if ranged:  # thrown non-finesse still uses STR per SRD
        return sheet.modifier("str")
    return sheet.modifier("str")


def melee_weapons(entity: EntityState) -> list[tuple[int, Weapon]]:
    return [(s, w) for s, w in entity.sheet.weapon_slots if w.category == "melee"]


def best_melee_slot(entity: EntityState) -> tuple[int, Weapon] | None:
    options = melee_weapons(entity)
    if not options:
        return None
    return max(options, key=lambda sw: weapon_damage_spec(entity.sheet, sw[1]).average)


def _attack_advantage(state: GameState, attacker: EntityState,
                      target: EntityState, ranged: bool) -> Advantage:
    adv = False
    dis = False
    dist = chebyshev(attacker.pos, target.pos)
    if target.prone:
        if dist <= 1:
            adv = True
        else:
            dis = True
    if target.dodging:
        dis = True
    if attacker.prone:
        dis = True
    if ranged:
        # hostile adjacent to the shooter spoils the shot
        for foe in state.enemies_of(attacker.eid):
            if chebyshev(foe.pos, attacker.pos) <= 1:
                dis = True
                break
    return combine_advantage(adv, dis)


def effective_ac(state: GameState, attacker: EntityState, target: EntityState) -> int:
    cover = bm.cover_bonus(state.battle_map, attacker.pos, target.pos)
    return target.sheet.armor_class + target.shield_ac + cover


def hit_probability(state: GameState, attacker: EntityState, target: EntityState,
                    bonus: int, ranged: bool) -> float:
    """Expected chance to hit, used by scripted policies for ranking."""
    ac = effective_ac(state, attacker, target)
    need = ac - bonus
    p = min(0.95, max(0.05, (21 - need) / 20.0))
    advantage = _attack_advantage(state, attacker, target, ranged)
    if advantage is Advantage.ADVANTAGE:
        return 1 - (1 - p) ** 2
    if advantage is Advantage.DISADVANTAGE:
        return p * p
    return p


# ---------------------------------------------------------------------------
# Legal action enumeration
# ---------------------------------------------------------------------------


def _visible_enemies(state: GameState, me: EntityState) -> list[EntityState]:
    out = []
    for foe in state.enemies_of(me.eid):
        if bm.visible_fast(state.battle_map, me.pos, foe.pos):
            out.append(foe)
    out.sort(key=lambda e: state.initiative_order.index(e.eid))
    return out


def enumerate_actions(state: GameState) -> list[Action]:
    """Ordered legal menu for the active entity.

    Fixed section order keeps menu indices stable for prompts and
    replays: end turn, attacks, dash/disengage/dodge, moves, prone or
    stand, class features, spells.
    """
    if state._menu is not None and state._menu_version == state.version:
        return state._menu

    me = state.active
    if not me.alive:
        raise IllegalActionError(f"dead entity {me.eid} cannot act")
    grid = state.battle_map
    menu: list[Action] = [Action(ActionKind.END_TURN)]
    enemies = _visible_enemies(state, me)

    # attacks: melee per weapon slot, then ranged/thrown, then off-hand
    if me.action > 0:
        for slot, weapon in me.sheet.weapon_slots:
            if weapon.category != "melee":
                continue
            for foe in enemies:
                if chebyshev(me.pos, foe.pos) <= 1:
                    menu.append(Action(ActionKind.MELEE_ATTACK, target=foe.eid,
                                       weapon_slot=slot))
        for slot, weapon in me.sheet.weapon_slots:
            throwable = weapon.category == "ranged" or weapon.has("thrown")
            if not throwable:
                continue
            for foe in enemies:
                if 0 < distance_feet(me.pos, foe.pos) <= weapon.long_range:
                    menu.append(Action(ActionKind.RANGED_ATTACK, target=foe.eid,
                                       weapon_slot=slot))
    if me.bonus > 0 and me.light_melee_slot is not None:
        # two-weapon fighting: one bonus attack with a different light weapon,
        # in melee when adjacent or thrown when the weapon allows it
        for slot, weapon in melee_weapons(me):
            if slot == me.light_melee_slot or not weapon.has("light"):
                continue
            for foe in enemies:
                dist = distance_feet(me.pos, foe.pos)
                in_reach = chebyshev(me.pos, foe.pos) <= 1
                throwable = weapon.has("thrown") and dist <= weapon.long_range
                if in_reach or throwable:
                    menu.append(Action(ActionKind.OFFHAND_ATTACK, target=foe.eid,
                                       weapon_slot=slot, bonus=True))

    # dash / disengage / dodge family
    has_cunning = any(f.id == "cunning_action" for f in CLASS_FEATURES[me.sheet.char_class])
    if me.action > 0:
        menu.append(Action(ActionKind.DASH))
    if has_cunning and me.bonus > 0:
        menu.append(Action(ActionKind.DASH, bonus=True))
    if me.action > 0:
        menu.append(Action(ActionKind.DISENGAGE))
    if has_cunning and me.bonus > 0:
        menu.append(Action(ActionKind.DISENGAGE, bonus=True))
    if me.action > 0:
        menu.append(Action(ActionKind.DODGE))

    # single-tile moves, canonical direction order
    occupied = state.occupied(excluding=me.eid)
    for direction in bm.DIRECTIONS:
        dst = (me.pos[0] + direction[0], me.pos[1] + direction[1])
        if dst in occupied or not bm.step_allowed(grid, me.pos, dst):
            continue
        cost = bm.movement_budget_cost(grid, me.pos, dst, crawling=me.prone)
        if cost <= me.movement_left:
            menu.append(Action(ActionKind.MOVE, direction=direction))

    # posture
    if not me.prone:
        menu.append(Action(ActionKind.PRONE))
    elif me.movement_left >= me.speed // STAND_DIVISOR:
        menu.append(Action(ActionKind.STAND))

    # limited class features
    if feature_available(me, "second_wind"):
        menu.append(Action(ActionKind.SECOND_WIND, bonus=True))
    if feature_available(me, "action_surge"):
        menu.append(Action(ActionKind.ACTION_SURGE))

    # spells, loadout order
    if me.action > 0:
        for spell_id in me.sheet.spell_loadout:
            spell = SPELLS[spell_id]
            if spell.cost != "action":
                continue  # reactions resolve inside attacks
            if spell.level > 0 and me.spell_slots < 1:
                continue
            if spell.template == "heal":
                menu.append(Action(ActionKind.CAST_SPELL, target=me.eid, spell=spell_id))
                continue
            for foe in enemies:
                if distance_feet(me.pos, foe.pos) <= spell.range_ft:
                    menu.append(Action(ActionKind.CAST_SPELL, target=foe.eid,
                                       spell=spell_id))

    state._menu = menu
    state._menu_version = state.version
    return menu


# ---------------------------------------------------------------------------
# Action application
# ---------------------------------------------------------------------------


def apply_action(state: GameState, action: Action) -> tuple[GameState, list[dict]]:
    """Apply one legal action, returning the successor state and its events.

    Raises IllegalActionError when the action is not in the current
    enumeration; the input state is never mutated.
    """
    if action not in enumerate_actions(state):
        raise IllegalActionError(f"action not legal here: {action}")

    s = state.copy()
    me = s.active
    events: list[dict] = [{
        "type": "action",
        "round": s.round,
        "actor": me.eid,
        "action": action.to_json(),
    }]

    kind = action.kind
    if kind is ActionKind.END_TURN:
        events.extend(_advance_turn(s))
    elif kind is ActionKind.MELEE_ATTACK:
        me.action -= 1
        weapon = WEAPONS[me.sheet.equipment[action.weapon_slot]]
        if weapon.has("light"):
            me.light_melee_slot = action.weapon_slot
        events.extend(_resolve_weapon_attack(s, me, s.entities[action.target],
                                             action.weapon_slot, ranged=False))
    elif kind is ActionKind.RANGED_ATTACK:
        me.action -= 1
        weapon = WEAPONS[me.sheet.equipment[action.weapon_slot]]
        if weapon.category == "melee" and weapon.has("light"):
            me.light_melee_slot = action.weapon_slot  # thrown light weapon
        events.extend(_resolve_weapon_attack(s, me, s.entities[action.target],
                                             action.weapon_slot, ranged=True))
    elif kind is ActionKind.OFFHAND_ATTACK:
        me.bonus -= 1
        target = s.entities[action.target]
        events.extend(_resolve_weapon_attack(s, me, target, action.weapon_slot,
                                             ranged=chebyshev(me.pos, target.pos) > 1,
                                             offhand=True))
    elif kind is ActionKind.CAST_SPELL:
        me.action -= 1
        spell = SPELLS[action.spell]
        if spell.level > 0:
            me.spell_slots -= 1
        events.extend(_resolve_spell(s, me, s.entities[action.target], spell))
    elif kind is ActionKind.DASH:
        if action.bonus:
            me.bonus -= 1
        else:
            me.action -= 1
        me.movement_left += me.speed
    elif kind is ActionKind.DISENGAGE:
        if action.bonus:
            me.bonus -= 1
        else:
            me.action -= 1
        me.disengaged = True
    elif kind is ActionKind.DODGE:
        me.action -= 1
        me.dodging = True
    elif kind is ActionKind.MOVE:
        events.extend(_resolve_move(s, me, action.direction))
    elif kind is ActionKind.PRONE:
        me.prone = True
    elif kind is ActionKind.STAND:
        me.movement_left -= me.speed // STAND_DIVISOR
        me.prone = False
    elif kind is ActionKind.SECOND_WIND:
        me.bonus -= 1
        me.feature_uses["second_wind"] -= 1
        healed = roll(RollSpec(1, 10, me.sheet.level), s.rng)
        me.hp = min(me.sheet.max_hp, me.hp + healed)
        events.append({"type": "heal", "actor": me.eid, "amount": healed,
                       "hp": me.hp, "source": "second_wind"})
    elif kind is ActionKind.ACTION_SURGE:
        me.feature_uses["action_surge"] -= 1
        me.action += 1
    else:  # pragma: no cover - enum is exhaustive
        raise IllegalActionError(f"unhandled action kind {kind}")

    # an opportunity attack can kill the mover on its own turn; removal
    # already shifted active_index onto the next entity
    if not me.alive and is_terminal(s) is Outcome.ONGOING:
        if s.active_index >= len(s.initiative_order):
            s.active_index = 0
            s.round += 1
            events.append({"type": "round_start", "round": s.round})
        events.extend(_begin_turn(s))
    s.bump()
    return s, events


def _advance_turn(state: GameState) -> list[dict]:
    events = []
    state.active_index += 1
    if state.active_index >= len(state.initiative_order):
        state.active_index = 0
        state.round += 1
        events.append({"type": "round_start", "round": state.round})
    events.extend(_begin_turn(state))
    return events


def _begin_turn(state: GameState) -> list[dict]:
    me = state.active
    me.action = 1
    me.bonus = 1
    me.reaction = 1
    me.movement_left = me.speed
    me.dodging = False
    me.disengaged = False
    me.shield_ac = 0
    me.sneak_used = False
    me.attack_landed = False
    me.light_melee_slot = None
    return [{"type": "turn_start", "round": state.round, "actor": me.eid}]


def _apply_damage(state: GameState, target: EntityState, amount: int,
                  damage_type: str, events: list[dict]) -> None:
    target.hp = max(0, target.hp - amount)
    if not target.alive:
        _remove_from_initiative(state, target.eid)
        events.append({"type": "death", "entity": target.eid})


def apply_damage(target: EntityState, amount: int, damage_type: str = "untyped") -> EntityState:
    """Standalone damage rule: hp floors at zero, zero hp is dead."""
    if amount < 0:
        raise ValueError("damage must be >= 0")
    out = target.copy()
    out.hp = max(0, out.hp - amount)
    return out


def _remove_from_initiative(state: GameState, eid: str) -> None:
    idx = state.initiative_order.index(eid)
    state.initiative_order.pop(idx)
    if idx < state.active_index:
        state.active_index -= 1
    # if the active entity itself was removed, active_index now names the
    # next entity in order; apply_action handles the possible wrap


def _try_shield_reaction(state: GameState, target: EntityState,
                         attack_total: int, natural: int, ac: int,
                         events: list[dict]) -> bool:
    """Shield spell turns a hit into a miss when +5 AC would matter."""
    if "shield" not in target.sheet.spell_loadout:
        return False
    if target.reaction < 1 or target.spell_slots < 1 or natural == 20:
        return False
    if attack_total >= ac + 5:
        return False
    target.reaction -= 1
    target.spell_slots -= 1
    target.shield_ac = 5
    events.append({"type": "reaction", "actor": target.eid, "spell": "shield",
                   "ac_bonus": 5})
    return True


def _resolve_weapon_attack(state: GameState, attacker: EntityState,
                           target: EntityState, weapon_slot: int,
                           ranged: bool, offhand: bool = False,
                           opportunity: bool = False) -> list[dict]:
    weapon = WEAPONS[attacker.sheet.equipment[weapon_slot]]
    events: list[dict] = []
    ability_mod = attack_ability_mod(attacker.sheet, weapon, ranged)
    to_hit = ability_mod + attacker.sheet.proficiency_bonus

    advantage = _attack_advantage(state, attacker, target, ranged)
    if ranged and distance_feet(attacker.pos, target.pos) > weapon.normal_range:
        advantage = combine_advantage(advantage is Advantage.ADVANTAGE, True)

    outcome = roll_d20(state.rng, to_hit, advantage)
    ac = effective_ac(state, attacker, target)
    hit = outcome.critical_hit or (not outcome.critical_miss and outcome.total >= ac)
    if hit and _try_shield_reaction(state, target, outcome.total, outcome.natural,
                                    ac, events):
        ac += 5
        hit = outcome.critical_hit or outcome.total >= ac

    record = {
        "type": "attack",
        "attacker": attacker.eid,
        "target": target.eid,
        "weapon": weapon.id,
        "ranged": ranged,
        "offhand": offhand,
        "opportunity": opportunity,
        "natural": outcome.natural,
        "total": outcome.total,
        "advantage": advantage.value,
        "ac": ac,
        "hit": hit,
        "crit": outcome.critical_hit,
    }
    if hit:
        spec = weapon_damage_spec(attacker.sheet, weapon)
        dice = RollSpec(spec.count * (2 if outcome.critical_hit else 1), spec.sides)
        damage = roll(dice, state.rng)
        if not offhand:  # off-hand strikes omit the ability modifier
            damage += ability_mod
        damage += _sneak_attack_bonus(state, attacker, weapon, advantage,
                                      outcome.critical_hit, record)
        damage = max(0, damage)
        _apply_damage(state, target, damage, "weapon", events)
        record["damage"] = damage
        record["target_hp"] = target.hp
        attacker.attack_landed = True
    events.insert(0, record)
    return events


def _sneak_attack_bonus(state: GameState, attacker: EntityState, weapon: Weapon,
                        advantage: Advantage, crit: bool, record: dict) -> int:
    if attacker.sheet.char_class != "rogue" or attacker.sneak_used:
        return 0
    if not (weapon.has("finesse") or weapon.category == "ranged"):
        return 0
    if advantage is not Advantage.ADVANTAGE:
        return 0
    attacker.sneak_used = True
    dice = RollSpec(SNEAK_DICE.count * (2 if crit else 1), SNEAK_DICE.sides)
    extra = roll(dice, state.rng)
    record["sneak_damage"] = extra
    return extra


def _resolve_spell(state: GameState, caster: EntityState, target: EntityState,
                   spell: Spell) -> list[dict]:
    events: list[dict] = []
    record = {
        "type": "spell",
        "caster": caster.eid,
        "target": target.eid,
        "spell": spell.id,
    }
    if spell.template == "heal":
        healed = roll(spell.dice, state.rng)
        if spell.add_casting_mod:
            healed += caster.sheet.casting_modifier
        target.hp = min(target.sheet.max_hp, target.hp + healed)
        record.update(amount=healed, hp=target.hp)
        events.append(record)
        return events

    if spell.template == "auto":
        damage = roll(spell.dice, state.rng)
        _apply_damage(state, target, damage, "spell", events)
        record.update(damage=damage, target_hp=target.hp)
        events.insert(0, record)
        return events

    if spell.template == "attack":
        advantage = _attack_advantage(state, caster, target, ranged=True)
        outcome = roll_d20(state.rng, caster.sheet.spell_attack_bonus, advantage)
        ac = effective_ac(state, caster, target)
        hit = outcome.critical_hit or (not outcome.critical_miss and outcome.total >= ac)
        if hit and _try_shield_reaction(state, target, outcome.total,
                                        outcome.natural, ac, events):
            ac += 5
            hit = outcome.critical_hit or outcome.total >= ac
        record.update(natural=outcome.natural, total=outcome.total, ac=ac,
                      advantage=advantage.value, hit=hit, crit=outcome.critical_hit)
        if hit:
            dice = RollSpec(spell.dice.count * (2 if outcome.critical_hit else 1),
                            spell.dice.sides, spell.dice.modifier)
            damage = roll(dice, state.rng)
            _apply_damage(state, target, damage, "spell", events)
            record.update(damage=damage, target_hp=target.hp)
            caster.attack_landed = True
        events.insert(0, record)
        return events

    # saving-throw template
    dc = caster.sheet.spell_save_dc
    save_mod = target.sheet.save_modifier(spell.save_ability)
    advantage = Advantage.ADVANTAGE if (
        target.dodging and spell.save_ability == "dex"
    ) else Advantage.NORMAL
    outcome = roll_d20(state.rng, save_mod, advantage)
    passed = outcome.total >= dc
    damage = roll(spell.dice, state.rng)
    if passed:
        damage = damage // 2 if spell.half_on_save else 0
    if damage:
        _apply_damage(state, target, damage, "spell", events)
        caster.attack_landed = True
    record.update(save_ability=spell.save_ability, dc=dc, natural=outcome.natural,
                  save_total=outcome.total, saved=passed, damage=damage,
                  target_hp=target.hp)
    events.insert(0, record)
    return events


def saving_throw(entity: EntityState, ability: str, dc: int, rng: RngStream) -> bool:
    """Bare saving throw: d20 + modifier (+ proficiency when proficient) >= dc.

    Natural 20 does not auto-pass a save in the SRD.
    """
    if dc < 1:
        raise ValueError("dc must be >= 1")
    outcome = roll_d20(rng, entity.sheet.save_modifier(ability))
    return outcome.total >= dc


def _resolve_move(state: GameState, mover: EntityState,
                  direction: tuple[int, int]) -> list[dict]:
    events: list[dict] = []
    src = mover.pos
    dst = (src[0] + direction[0], src[1] + direction[1])
    cost = bm.movement_budget_cost(state.battle_map, src, dst, crawling=mover.prone)

    if not mover.disengaged:
        # leaving melee reach provokes; resolved before the move completes
        for eid in list(state.initiative_order):
            foe = state.entities[eid]
            if foe.team == mover.team or not foe.alive or foe.reaction < 1:
                continue
            if chebyshev(foe.pos, src) != 1 or chebyshev(foe.pos, dst) <= 1:
                continue
            if not bm.visible_fast(state.battle_map, foe.pos, src):
                continue
            slot_weapon = best_melee_slot(foe)
            if slot_weapon is None:
                continue
            foe.reaction -= 1
            oa = _resolve_weapon_attack(state, foe, mover, slot_weapon[0],
                                        ranged=False, opportunity=True)
            events.append({"type": "opportunity_attack", "attacker": foe.eid,
                           "target": mover.eid})
            events.extend(oa)
            if not mover.alive:
                return events  # move cancelled, the mover dropped

    mover.movement_left -= cost
    mover.pos = dst
    events.append({"type": "move", "actor": mover.eid, "from": list(src),
                   "to": list(dst), "cost": cost})
    return events


# ---------------------------------------------------------------------------
# Menu text (shared by prompts and replay rendering)
# ---------------------------------------------------------------------------


def action_text(state: GameState, action: Action) -> str:
    """One menu line per action, phrased the way the chat prompt lists them."""
    me = state.active
    kind = action.kind
    if kind is ActionKind.END_TURN:
        return "end my turn"
    if kind is ActionKind.MELEE_ATTACK:
        return f"attack enemy with melee weapon: {me.sheet.equipment[action.weapon_slot]}"
    if kind is ActionKind.RANGED_ATTACK:
        return f"attack enemy with ranged weapon: {me.sheet.equipment[action.weapon_slot]}"
    if kind is ActionKind.OFFHAND_ATTACK:
        return f"attack enemy with off-hand weapon: {me.sheet.equipment[action.weapon_slot]}"
    if kind is ActionKind.CAST_SPELL:
        name = action.spell.replace("_", " ")
        return f"cast spell: {name}"
    if kind is ActionKind.DASH:
        return "dash as bonus action" if action.bonus else "dash action"
    if kind is ActionKind.DISENGAGE:
        return "disengage as bonus action" if action.bonus else "disengage action"
    if kind is ActionKind.DODGE:
        return "dodge action"
    if kind is ActionKind.MOVE:
        return f"move 5ft {bm.DIRECTION_NAMES[action.direction]}"
    if kind is ActionKind.PRONE:
        return "go prone"
    if kind is ActionKind.STAND:
        return "stand up"
    if kind is ActionKind.SECOND_WIND:
        return "use second wind"
    if kind is ActionKind.ACTION_SURGE:
        return "use action surge"
    raise ValueError(f"unknown action kind {kind}")  # pragma: no cover
