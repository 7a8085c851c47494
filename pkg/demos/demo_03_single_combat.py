"""One scripted fight, narrated from the combat log.

Run: python3 demos/demo_03_single_combat.py
"""

from srdarena.battlemap import load_builtin_map, render_ascii
from srdarena.characters import sheet_for_class
from srdarena.eventlog import replay_log
from srdarena.policies import RulesPolicy
from srdarena.tournament import run_fight

record = run_fight(
    RulesPolicy(), RulesPolicy(),
    load_builtin_map("wall"),
    sheet_for_class("rogue"), sheet_for_class("cleric"),
    seed=20240601,
)

print(f"rogue (hero) vs cleric (enemy) on 'wall': "
      f"{'hero' if record.winner == 'a' else 'enemy' if record.winner == 'b' else 'nobody'}"
      f" wins in {record.rounds} rounds\n")

for event in record.events:
    kind = event["type"]
    if kind == "initiative":
        print(f"initiative: {event['order']} {event['rolls']}")
    elif kind == "attack":
        verb = "CRITS" if event["crit"] else "hits" if event["hit"] else "misses"
        extra = f" for {event['damage']}" if event.get("damage") is not None else ""
        tag = " (opportunity)" if event["opportunity"] else ""
        print(f"  {event['attacker']} {verb} {event['target']} "
              f"with {event['weapon']}{extra}{tag} "
              f"[d20 {event['natural']} total {event['total']} vs AC {event['ac']}]")
    elif kind == "spell":
        if event.get("hit") is False:
            outcome = "misses"
        elif event.get("saved"):
            outcome = f"saved (damage {event.get('damage', 0)})"
        else:
            outcome = f"damage {event.get('damage', event.get('amount', 0))}"
        print(f"  {event['caster']} casts {event['spell']} on {event['target']}: "
              f"{outcome}")
    elif kind == "move":
        print(f"  {event['actor']} moves {event['from']} -> {event['to']}")
    elif kind == "death":
        print(f"  {event['entity']} drops!")

final = replay_log(record.events)
viewer = "hero" if final.entities["hero"].alive else "enemy"
print(f"\nfinal board from the {viewer}'s point of view:")
print(render_ascii(final.battle_map, viewer, final))
print("\nreplay verified against the recorded state hash.")
