"""Character sheets plus the fixed SRD-subset equipment and spell catalog.

The arena runs level-2 characters only, one of four classes, each with a
fixed loadout.  Sheets live in human-editable JSON files (schema in
docs/character-format.md); the four bundled sheets are the canonical
roster.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dice import RollSpec, ability_modifier

ABILITIES = ("str", "dex", "con", "int", "wis", "cha")
CLASSES = ("fighter", "rogue", "wizard", "cleric")
REQUIRED_LEVEL = 2
PROFICIENCY_AT_LEVEL_2 = 2
MAX_EQUIPMENT = 4
MAX_SPELLS = 4

SPEED_BY_RACE = {
    "mountain_dwarf": 25,
    "lightfoot_halfling": 25,
    "high_elf": 30,
}

SAVE_PROFICIENCIES = {
    "fighter": frozenset({"str", "con"}),
    "rogue": frozenset({"dex", "int"}),
    "wizard": frozenset({"int", "wis"}),
    "cleric": frozenset({"wis", "cha"}),
}

CASTING_ABILITY = {"wizard": "int", "cleric": "wis"}

# level-1 slots at character level 2 (SRD caster tables)
SPELL_SLOTS_BY_CLASS = {"wizard": 3, "cleric": 3}


class SheetError(ValueError):
    """Raised when a character document fails validation."""


# ---------------------------------------------------------------------------
# Equipment catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Weapon:
    id: str
    category: str  # melee | ranged
    damage: RollSpec
    normal_range: int  # feet; thrown band for melee weapons with "thrown"
    long_range: int
    properties: frozenset[str] = frozenset()

    @property
    def reach(self) -> int:
        return 5 if self.category == "melee" else 0

    def has(self, prop: str) -> bool:
        return prop in self.properties


@dataclass(frozen=True)
class Armor:
    id: str
    base_ac: int
    dex_cap: int | None  # None = uncapped
    is_shield: bool = False


WEAPONS: dict[str, Weapon] = {
    w.id: w
    for w in (
        Weapon("dagger", "melee", RollSpec(1, 4), 20, 60,
               frozenset({"finesse", "light", "thrown"})),
        Weapon("rapier", "melee", RollSpec(1, 8), 0, 0, frozenset({"finesse"})),
        Weapon("warhammer", "melee", RollSpec(1, 8), 0, 0, frozenset({"versatile"})),
        Weapon("longbow", "ranged", RollSpec(1, 8), 150, 600,
               frozenset({"two_handed", "heavy", "loading"})),
    )
}

ARMOR: dict[str, Armor] = {
    a.id: a
    for a in (
        Armor("leather_armor", 11, None),
        Armor("scale_mail", 14, 2),
        Armor("shield", 2, None, is_shield=True),
    )
}

# carried but irrelevant to combat resolution
MISC_ITEMS = frozenset({"torch"})


# ---------------------------------------------------------------------------
# Spells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spell:
    id: str
    level: int  # 0 = cantrip
    cost: str  # action | reaction
    range_ft: int
    template: str  # attack | save | auto | heal | reaction_ac
    dice: RollSpec | None = None
    save_ability: str | None = None
    half_on_save: bool = False
    add_casting_mod: bool = False  # add casting modifier to dice total


SPELLS: dict[str, Spell] = {
    s.id: s
    for s in (
        Spell("fire_bolt", 0, "action", 120, "attack", RollSpec(1, 10)),
        Spell("magic_missile", 1, "action", 120, "auto", RollSpec(3, 4, 3)),
        Spell("burning_hands", 1, "action", 15, "save", RollSpec(3, 6),
              save_ability="dex", half_on_save=True),
        Spell("shield", 1, "reaction", 0, "reaction_ac"),
        Spell("sacred_flame", 0, "action", 60, "save", RollSpec(1, 8),
              save_ability="dex"),
        Spell("guiding_bolt", 1, "action", 120, "attack", RollSpec(4, 6)),
        Spell("cure_wounds", 1, "action", 0, "heal", RollSpec(1, 8),
              add_casting_mod=True),
    )
}

# fixed per-class loadouts; classes without entries cast nothing
SPELL_LOADOUTS = {
    "wizard": ("fire_bolt", "magic_missile", "burning_hands", "shield"),
    "cleric": ("sacred_flame", "guiding_bolt", "cure_wounds"),
}


# ---------------------------------------------------------------------------
# Class features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassFeature:
    id: str
    trigger: str  # action | bonus | special | passive
    uses_per_fight: int | None = None  # None = unlimited/passive


CLASS_FEATURES: dict[str, tuple[ClassFeature, ...]] = {
    "fighter": (
        ClassFeature("second_wind", "bonus", 1),
        ClassFeature("action_surge", "special", 1),
    ),
    "rogue": (
        ClassFeature("cunning_action", "passive"),
        ClassFeature("sneak_attack", "passive"),
    ),
    "wizard": (ClassFeature("spellcasting", "passive"),),
    "cleric": (ClassFeature("spellcasting", "passive"),),
}


def class_feature(char_class: str, feature_id: str) -> ClassFeature | None:
    for feat in CLASS_FEATURES.get(char_class, ()):
        if feat.id == feature_id:
            return feat
    return None


# ---------------------------------------------------------------------------
# Sheets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharacterSheet:
    name: str
    race: str
    char_class: str
    level: int
    max_hp: int
    abilities: dict[str, int]
    proficiency_bonus: int = PROFICIENCY_AT_LEVEL_2
    equipment: tuple[str, ...] = ()
    spell_loadout: tuple[str, ...] = ()
    armor_class: int = field(default=0)

    @property
    def speed(self) -> int:
        return SPEED_BY_RACE[self.race]

    def modifier(self, ability: str) -> int:
        return ability_modifier(self.abilities[ability])

    @property
    def weapon_slots(self) -> tuple[tuple[int, Weapon], ...]:
        """(equipment index, weapon) pairs, in sheet order."""
        return tuple(
            (i, WEAPONS[item])
            for i, item in enumerate(self.equipment)
            if item in WEAPONS
        )

    @property
    def has_shield(self) -> bool:
        return any(item in ARMOR and ARMOR[item].is_shield for item in self.equipment)

    @property
    def max_spell_slots(self) -> int:
        return SPELL_SLOTS_BY_CLASS.get(self.char_class, 0)

    @property
    def casting_modifier(self) -> int:
        ability = CASTING_ABILITY.get(self.char_class)
        return self.modifier(ability) if ability else 0

    @property
    def spell_save_dc(self) -> int:
        return 8 + self.proficiency_bonus + self.casting_modifier

    @property
    def spell_attack_bonus(self) -> int:
        return self.proficiency_bonus + self.casting_modifier

    def save_modifier(self, ability: str) -> int:
        bonus = self.modifier(ability)
        if ability in SAVE_PROFICIENCIES[self.char_class]:
            bonus += self.proficiency_bonus
        return bonus

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "race": self.race,
            "class": self.char_class,
            "level": self.level,
            "max_hp": self.max_hp,
            "abilities": dict(self.abilities),
            "equipment": list(self.equipment),
            "spells": list(self.spell_loadout),
            "armor_class": self.armor_class,
        }


def derive_ac(armor_items: list[str], dex_score: int) -> int:
    """SRD armor math: base by worn armor, capped DEX, +2 for a shield."""
    dex_mod = ability_modifier(dex_score)
    body = [ARMOR[i] for i in armor_items if i in ARMOR and not ARMOR[i].is_shield]
    shield = any(i in ARMOR and ARMOR[i].is_shield for i in armor_items)
    if len(body) > 1:
        raise SheetError(f"more than one body armor equipped: {[a.id for a in body]}")
    if body:
        armor = body[0]
        dex_part = dex_mod if armor.dex_cap is None else min(dex_mod, armor.dex_cap)
        ac = armor.base_ac + dex_part
    else:
        ac = 10 + dex_mod
    return ac + (2 if shield else 0)


def load_sheet(document: dict | str | Path) -> CharacterSheet:
    """Validate a character document and build an immutable sheet.

    Accepts a dict, a JSON string, or a path to a JSON file.  Raises
    SheetError naming the offending field on any schema violation.
    """
    if isinstance(document, Path) or (
        isinstance(document, str) and not document.lstrip().startswith("{")
    ):
        document = json.loads(Path(document).read_text())
    elif isinstance(document, str):
        document = json.loads(document)

    doc = dict(document)
    for fieldname in ("name", "race", "class", "level", "max_hp", "abilities"):
        if fieldname not in doc:
            raise SheetError(f"missing field: {fieldname}")

    char_class = doc["class"]
    if char_class not in CLASSES:
        raise SheetError(f"class: unknown class {char_class!r}")
    if doc["race"] not in SPEED_BY_RACE:
        raise SheetError(f"race: unknown race {doc['race']!r}")
    if doc["level"] != REQUIRED_LEVEL:
        raise SheetError(f"level: arena is fixed at level {REQUIRED_LEVEL}, got {doc['level']}")
    if not isinstance(doc["max_hp"], int) or doc["max_hp"] < 1:
        raise SheetError(f"max_hp: must be a positive integer, got {doc['max_hp']!r}")

    abilities = doc["abilities"]
    if set(abilities) != set(ABILITIES):
        raise SheetError(f"abilities: expected keys {ABILITIES}, got {sorted(abilities)}")
    for name, score in abilities.items():
        if not isinstance(score, int) or not 1 <= score <= 30:
            raise SheetError(f"abilities.{name}: score out of range 1..30: {score!r}")

    equipment = tuple(doc.get("equipment", []))
    known = set(WEAPONS) | set(ARMOR) | MISC_ITEMS
    for item in equipment:
        if item not in known:
            raise SheetError(f"equipment: unknown item {item!r}")
    if len(equipment) > MAX_EQUIPMENT:
        # equipment indexes double as stable weapon-slot ids in menus,
        # logs, and action encodings, so the list length is bounded
        raise SheetError(
            f"equipment: at most {MAX_EQUIPMENT} items, got {len(equipment)}")

    spells = tuple(doc.get("spells", SPELL_LOADOUTS.get(char_class, ())))
    for spell_id in spells:
        if spell_id not in SPELLS:
            raise SheetError(f"spells: unknown spell {spell_id!r}")
    if len(spells) > MAX_SPELLS:
        raise SheetError(f"spells: at most {MAX_SPELLS} spells, got {len(spells)}")
    if spells and char_class not in SPELL_SLOTS_BY_CLASS:
        raise SheetError(f"spells: class {char_class!r} cannot cast")

    ac = derive_ac([i for i in equipment if i in ARMOR], abilities["dex"])
    if "armor_class" in doc and doc["armor_class"] != ac:
        raise SheetError(
            f"armor_class: stored {doc['armor_class']} != derived {ac}"
        )

    return CharacterSheet(
        name=doc["name"],
        race=doc["race"],
        char_class=char_class,
        level=doc["level"],
        max_hp=doc["max_hp"],
        abilities=dict(abilities),
        proficiency_bonus=PROFICIENCY_AT_LEVEL_2,
        equipment=equipment,
        spell_loadout=spells,
        armor_class=ac,
    )


def feature_available(entity, feature_id: str) -> bool:
    """True iff the feature is in the entity's kit, has uses left, and the
    action-economy slot for its trigger is still unspent this turn."""
    feat = class_feature(entity.sheet.char_class, feature_id)
    if feat is None:
        return False
    if feat.uses_per_fight is not None and entity.feature_uses.get(feature_id, 0) <= 0:
        return False
    if feat.trigger == "bonus":
        return entity.bonus > 0
    if feat.trigger == "action":
        return entity.action > 0
    return True


# ---------------------------------------------------------------------------
# Bundled roster
# ---------------------------------------------------------------------------


def _data_dir():
    return resources.files("srdarena").joinpath("data", "characters")


def builtin_sheet_names() -> list[str]:
    return sorted(p.name.removesuffix(".json") for p in _data_dir().iterdir())


def load_builtin_sheet(name: str) -> CharacterSheet:
    path = _data_dir().joinpath(f"{name.lower()}.json")
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise SheetError(f"no bundled character named {name!r}") from None
    return load_sheet(json.loads(text))


def builtin_roster() -> dict[str, CharacterSheet]:
    """The four canonical sheets, keyed by class."""
    return {s.char_class: s for s in map(load_builtin_sheet, builtin_sheet_names())}


def sheet_for_class(char_class: str) -> CharacterSheet:
    roster = builtin_roster()
    if char_class not in roster:
        raise SheetError(f"no bundled sheet for class {char_class!r}")
    return roster[char_class]
