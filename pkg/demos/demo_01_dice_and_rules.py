"""Dice, modifiers, and attack math on the bundled sheets.

Run: python3 demos/demo_01_dice_and_rules.py
"""

from srdarena import RngStream, RollSpec, ability_modifier, roll
from srdarena.characters import sheet_for_class

rng = RngStream(seed=2024)

print("== dice ==")
for spec in ("1d20+5", "2d6", "1d10"):
    parsed = RollSpec.parse(spec)
    values = [roll(parsed, rng) for _ in range(5)]
    print(f"{spec:8} -> {values}  (range {parsed.minimum}..{parsed.maximum})")

print("\n== ability modifiers ==")
for score in (8, 10, 14, 20):
    print(f"score {score:2} -> modifier {ability_modifier(score):+d}")

print("\n== the roster's attack math ==")
for name in ("fighter", "rogue", "wizard", "cleric"):
    sheet = sheet_for_class(name)
    slots = ", ".join(w.id for _, w in sheet.weapon_slots)
    print(f"{sheet.name:6} {sheet.char_class:7} hp {sheet.max_hp:2} "
          f"AC {sheet.armor_class:2} speed {sheet.speed:2}ft weapons: {slots}")

gom = sheet_for_class("fighter")
print(f"\nGom's rapier to-hit: DEX {gom.modifier('dex'):+d} "
      f"+ proficiency {gom.proficiency_bonus} = "
      f"{gom.modifier('dex') + gom.proficiency_bonus:+d}")

crys = sheet_for_class("wizard")
print(f"Crys is AC {crys.armor_class} (unarmored 10 + DEX {crys.modifier('dex')})"
      f" with spell save DC {crys.spell_save_dc}")
