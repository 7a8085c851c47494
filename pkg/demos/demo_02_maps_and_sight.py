"""Terrain, line of sight, cover, and movement reach on the bundled maps.

Run: python3 demos/demo_02_maps_and_sight.py
"""

from srdarena.battlemap import (
    builtin_map_names,
    line_of_sight,
    load_builtin_map,
    reachable,
)

for name in builtin_map_names():
    grid = load_builtin_map(name)
    print(f"== {name} ({grid.width}x{grid.height}) ==")
    print(grid.to_text())

grid = load_builtin_map("wall")
hero, enemy = grid.hero_spawn, grid.enemy_spawn
sight = line_of_sight(grid, hero, enemy)
print(f"on 'wall', {hero} -> {enemy} is {sight.value} "
      "(the wall run hides the spawns from each other)")

behind_barrel = (6, 2)  # just north of the right-hand barrels
print(f"{hero} -> {behind_barrel}:",
      line_of_sight(grid, hero, behind_barrel).value)

print("\n30 ft of movement from the hero spawn reaches:")
cells = reachable(grid, hero, budget=30)
for budget in (5, 15, 30):
    count = sum(1 for cost in cells.values() if cost <= budget)
    print(f"  within {budget:2} ft: {count:2} tiles")

river = load_builtin_map("river")
cells = reachable(river, river.hero_spawn, budget=30)
wet = [pos for pos in cells if river.terrain(pos) == "water_difficult"]
print(f"\non 'river', 30 ft from spawn enters {len(wet)} water tiles "
      "(each costs 10 ft)")
