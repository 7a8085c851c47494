"""Attack resolution, saving throws, and damage application rules."""

import pytest

from srdarena.characters import load_sheet, sheet_for_class
from srdarena.engine import (
    Action,
    ActionKind,
    apply_action,
    apply_damage,
    make_entity,
    saving_throw,
)

from conftest import ScriptedRng, make_duel

ADJACENT_MAP = """\
......
.PE...
......
......
......
......
"""

# attacker on the west edge, barrel hugging the target's west side
COVER_MAP = """\
......
P..oE.
......
......
......
......
"""

OPEN_MAP = """\
P.....
......
......
......
......
.....E
"""


def sharpshooter_sheet():
    """DEX 30 fighter: to-hit +12, so a natural 1 still beats low ACs."""
    return load_sheet({
        "name": "Sharp", "race": "high_elf", "class": "fighter", "level": 2,
        "max_hp": 20,
        "abilities": {"str": 10, "dex": 30, "con": 10, "int": 10, "wis": 10, "cha": 10},
        "equipment": ["rapier"],
    })


def attack_events(state, action, faces, disarm_shield=True):
    if disarm_shield:
        # the wizard auto-casts shield when it would flip a hit; these
        # tests probe the bare attack rule, so burn its slots first
        state.entities["enemy"].spell_slots = 0
    state.rng = ScriptedRng(faces)
    state.bump()
    new_state, events = apply_action(state, action)
    attack = next(e for e in events if e["type"] == "attack")
    return new_state, attack


def test_gom_rapier_vs_crys_boundary_hit():
    # rapier is finesse: max(STR +1, DEX +5) + proficiency 2 = +7 to hit
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    assert state.entities["enemy"].sheet.armor_class == 12
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    _, attack = attack_events(state, action, faces=[5, 4])
    assert attack["total"] == 12
    assert attack["hit"] is True


def test_gom_rapier_miss_one_below_boundary():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    _, attack = attack_events(state, action, faces=[4])
    assert attack["total"] == 11
    assert attack["hit"] is False


def test_natural_one_always_misses_despite_total():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    state.entities["hero"].sheet = sharpshooter_sheet()
    state.entities["hero"].hp = 20
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    _, attack = attack_events(state, action, faces=[1])
    assert attack["total"] == 13 >= attack["ac"]
    assert attack["hit"] is False


def test_natural_twenty_always_hits_and_crits():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    _, attack = attack_events(state, action, faces=[20, 3, 4])
    assert attack["hit"] is True and attack["crit"] is True
    # critical doubles the weapon dice only, not the ability modifier
    assert attack["damage"] == 3 + 4 + 5


def test_half_cover_shifts_effective_ac_by_two():
    # longbow +7; wizard AC 12 becomes 14 behind the barrel
    state = make_duel(COVER_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.RANGED_ATTACK, target="enemy", weapon_slot=1)
    _, attack = attack_events(state, action, faces=[6])
    assert attack["total"] == 13  # exactly AC + 1 without cover
    assert attack["ac"] == 14
    assert attack["hit"] is False

    state = make_duel(COVER_MAP, hero_class="fighter", enemy_class="wizard")
    _, attack = attack_events(state, action, faces=[7, 5])
    assert attack["total"] == 14
    assert attack["hit"] is True


def test_no_cover_same_roll_hits():
    state = make_duel(OPEN_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.RANGED_ATTACK, target="enemy", weapon_slot=1)
    _, attack = attack_events(state, action, faces=[6, 5])
    assert attack["ac"] == 12
    assert attack["hit"] is True


def test_hit_decision_monotone_in_natural_roll():
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    hits = []
    for face in range(1, 21):
        state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
        _, attack = attack_events(state, action, faces=[face, 1, 1, 1])
        hits.append(attack["hit"])
    assert hits[0] is False  # natural 1 override
    assert hits[19] is True  # natural 20 override
    interior = hits[1:19]
    assert interior == sorted(interior)  # single miss->hit threshold


def test_ranged_attack_adjacent_enemy_has_disadvantage():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.RANGED_ATTACK, target="enemy", weapon_slot=1)
    state.rng = ScriptedRng([15, 4])
    state.bump()
    _, events = apply_action(state, action)
    attack = next(e for e in events if e["type"] == "attack")
    assert attack["advantage"] == "disadvantage"
    assert attack["natural"] == 4  # lower of the two draws


def test_dodge_imposes_disadvantage_until_next_turn():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard",
                      hero_first=False)
    state, _ = apply_action(state, Action(ActionKind.DODGE))
    assert state.entities["enemy"].dodging
    state, _ = apply_action(state, Action(ActionKind.END_TURN))
    assert state.active_id == "hero"
    _, attack = attack_events(
        state, Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0),
        faces=[18, 3, 2])
    assert attack["advantage"] == "disadvantage"


def test_prone_target_gives_melee_advantage_and_ranged_disadvantage():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    state.entities["enemy"].prone = True
    state.bump()
    _, attack = attack_events(
        state, Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0),
        faces=[3, 18, 5])
    assert attack["advantage"] == "advantage"
    assert attack["natural"] == 18

    state = make_duel(OPEN_MAP, hero_class="fighter", enemy_class="wizard")
    state.entities["enemy"].prone = True
    state.bump()
    _, attack = attack_events(
        state, Action(ActionKind.RANGED_ATTACK, target="enemy", weapon_slot=1),
        faces=[18, 3])
    assert attack["advantage"] == "disadvantage"


def test_sneak_attack_fires_once_with_advantage():
    state = make_duel(ADJACENT_MAP, hero_class="rogue", enemy_class="wizard")
    state.entities["enemy"].prone = True  # melee advantage enables sneak attack
    state.bump()
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    _, attack = attack_events(state, action, faces=[10, 12, 2, 6])
    assert attack["hit"] is True
    assert attack["sneak_damage"] == 6
    assert attack["damage"] == 2 + 6 + 5  # d4 + sneak d6 + DEX


def test_saving_throw_boundary_and_proficiency():
    gom = make_entity("g", 0, sheet_for_class("fighter"), (0, 0))
    # CHA 11: +0, fighters not CHA-proficient
    assert saving_throw(gom, "cha", 10, ScriptedRng([10])) is True
    assert saving_throw(gom, "cha", 10, ScriptedRng([9])) is False

    shor = make_entity("s", 0, sheet_for_class("cleric"), (0, 0))
    # WIS 16 (+3), clerics are WIS-proficient (+2): forced 10 passes DC 13
    assert saving_throw(shor, "wis", 13, ScriptedRng([10])) is True
    # DEX 10 (+0), not proficient: forced 10 fails DC 13
    assert saving_throw(shor, "dex", 13, ScriptedRng([10])) is False


def test_natural_twenty_does_not_auto_pass_saves():
    gom = make_entity("g", 0, sheet_for_class("fighter"), (0, 0))
    assert saving_throw(gom, "cha", 30, ScriptedRng([20])) is False


def test_saving_throw_rejects_bad_dc():
    gom = make_entity("g", 0, sheet_for_class("fighter"), (0, 0))
    with pytest.raises(ValueError):
        saving_throw(gom, "cha", 0, ScriptedRng([10]))


def test_apply_damage_identity_floor_and_death():
    crys = make_entity("c", 0, sheet_for_class("wizard"), (0, 0))
    crys.hp = 15
    assert apply_damage(crys, 0).hp == 15
    hit = apply_damage(crys, 20)
    assert hit.hp == 0 and not hit.alive and "dead" in hit.conditions()
    half = apply_damage(make_entity("c", 0, sheet_for_class("wizard"), (0, 0)), 7)
    assert half.hp == 7 and half.hp / half.sheet.max_hp == 0.5


def test_apply_damage_rejects_negative():
    crys = make_entity("c", 0, sheet_for_class("wizard"), (0, 0))
    with pytest.raises(ValueError):
        apply_damage(crys, -1)


def test_shield_reaction_turns_near_hit_into_miss():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    # total 16 vs AC 12: hits, but shield (+5) retroactively beats it
    state, attack = attack_events(state, action, faces=[9], disarm_shield=False)
    assert attack["hit"] is False
    assert attack["ac"] == 17
    wizard = state.entities["enemy"]
    assert wizard.shield_ac == 5
    assert wizard.spell_slots == wizard.sheet.max_spell_slots - 1
    assert wizard.reaction == 0


def test_shield_not_wasted_on_overwhelming_hit():
    state = make_duel(ADJACENT_MAP, hero_class="fighter", enemy_class="wizard")
    action = Action(ActionKind.MELEE_ATTACK, target="enemy", weapon_slot=0)
    # total 19 >= AC + 5, shield would not help, so it is not cast
    state, attack = attack_events(state, action, faces=[12, 5], disarm_shield=False)
    assert attack["hit"] is True
    wizard = state.entities["enemy"]
    assert wizard.spell_slots == wizard.sheet.max_spell_slots
    assert wizard.reaction == 1
