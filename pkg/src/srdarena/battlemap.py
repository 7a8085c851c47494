"""Grid terrain: map files, line of sight, cover, movement costs, rendering.

Tiles are 5 ft squares.  Walls block sight and movement, barrels block
movement and grant directional half cover, water is difficult terrain.
Line of sight uses a supercover walk between tile centers, so it is
symmetric and deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

FLOOR = "floor"
WALL = "wall_obstacle"
BARREL = "barrel_cover"
WATER = "water_difficult"
OUT_OF_MAP = "out_of_map"

GLYPH_TO_TERRAIN = {".": FLOOR, "#": WALL, "o": BARREL, "w": WATER}
TERRAIN_TO_FILE_GLYPH = {FLOOR: ".", WALL: "#", BARREL: "o", WATER: "w"}
# render glyphs differ from file glyphs for walls and hidden tiles
TERRAIN_TO_RENDER_GLYPH = {FLOOR: ".", WALL: "*", BARREL: "o", WATER: "~", OUT_OF_MAP: "_"}

RENDER_ALPHABET = frozenset(". P E A ? _ * o ~").union({" "})

TILE_FEET = 5
BASE_MOVE_COST = 5
WATER_MOVE_COST = 10
MIN_DIMENSION = 6

# canonical 8-direction order shared by menus and encodings:
# iterate dx west->east, dy north->south within each column
DIRECTIONS: tuple[tuple[int, int], ...] = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)

DIRECTION_NAMES = {
    (-1, -1): "up and to the left",
    (-1, 0): "to the left",
    (-1, 1): "down and to the left",
    (0, -1): "up",
    (0, 1): "down",
    (1, -1): "up and to the right",
    (1, 0): "to the right",
    (1, 1): "down and to the right",
}


class Sight(Enum):
    CLEAR = "clear"
    HALF_COVER = "half_cover"
    BLOCKED = "blocked"


class MapError(ValueError):
    """Raised for malformed map files or illegal map queries."""


Position = tuple[int, int]  # (x, y), x grows east, y grows south


def chebyshev(a: Position, b: Position) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def distance_feet(a: Position, b: Position) -> int:
    """Grid distance in feet; diagonals count the same as straights."""
    return chebyshev(a, b) * TILE_FEET


@dataclass(frozen=True)
class BattleMap:
    name: str
    width: int
    height: int
    tiles: tuple[str, ...]  # row-major terrain kinds
    hero_spawn: Position
    enemy_spawn: Position

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height

    def terrain(self, pos: Position) -> str:
        if not self.in_bounds(pos):
            return OUT_OF_MAP
        return self.tiles[pos[1] * self.width + pos[0]]

    def passable(self, pos: Position) -> bool:
        return self.terrain(pos) in (FLOOR, WATER)

    def blocks_sight(self, pos: Position) -> bool:
        return self.terrain(pos) == WALL

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == self.hero_spawn:
                    row.append("P")
                elif (x, y) == self.enemy_spawn:
                    row.append("E")
                else:
                    row.append(TERRAIN_TO_FILE_GLYPH[self.terrain((x, y))])
            rows.append("".join(row))
        return "\n".join(rows) + "\n"


def load_map(text: str, name: str = "custom") -> BattleMap:
    """Parse a glyph grid into a BattleMap.

    Glyphs: ``.`` floor, ``#`` wall, ``o`` barrel, ``w`` water,
    ``P``/``E`` hero and enemy spawn points (on floor).
    """
    rows = [line for line in text.splitlines() if line.strip() != ""]
    if not rows:
        raise MapError("empty map")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MapError(f"ragged row {i}: length {len(row)} != {width}")
    height = len(rows)
    if width < MIN_DIMENSION or height < MIN_DIMENSION:
        raise MapError(f"map must be at least {MIN_DIMENSION}x{MIN_DIMENSION}, got {width}x{height}")

    tiles: list[str] = []
    hero = enemy = None
    for y, row in enumerate(rows):
        for x, glyph in enumerate(row):
            if glyph == "P":
                if hero is not None:
                    raise MapError("duplicate hero spawn 'P'")
                hero = (x, y)
                tiles.append(FLOOR)
            elif glyph == "E":
                if enemy is not None:
                    raise MapError("duplicate enemy spawn 'E'")
                enemy = (x, y)
                tiles.append(FLOOR)
            elif glyph in GLYPH_TO_TERRAIN:
                tiles.append(GLYPH_TO_TERRAIN[glyph])
            else:
                raise MapError(f"unknown glyph {glyph!r} at ({x},{y})")
    if hero is None or enemy is None:
        raise MapError("map needs both 'P' and 'E' spawn points")

    return BattleMap(name, width, height, tuple(tiles), hero, enemy)


def load_map_file(path: str | Path) -> BattleMap:
    p = Path(path)
    return load_map(p.read_text(), name=p.stem)


def builtin_map_names() -> list[str]:
    d = resources.files("srdarena").joinpath("data", "maps")
    return sorted(p.name.removesuffix(".map") for p in d.iterdir())


def load_builtin_map(name: str) -> BattleMap:
    path = resources.files("srdarena").joinpath("data", "maps", f"{name}.map")
    try:
        return load_map(path.read_text(), name=name)
    except FileNotFoundError:
        raise MapError(f"no bundled map named {name!r}") from None


def builtin_map_pool() -> list[BattleMap]:
    return [load_builtin_map(n) for n in builtin_map_names()]


# ---------------------------------------------------------------------------
# Line of sight and cover
# ---------------------------------------------------------------------------


def supercover_line(a: Position, b: Position) -> list[Position]:
    """Every tile a segment between the two tile centers passes through.

    When the segment crosses exactly through a tile corner, both
    corner-adjacent tiles are included (they form a "pinch pair" that
    only blocks if both block).
    """
    (x0, y0), (x1, y1) = a, b
    dx, dy = x1 - x0, y1 - y0
    nx, ny = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    x, y = x0, y0
    tiles = [(x, y)]
    ix = iy = 0
    while ix < nx or iy < ny:
        # compare crossing times (ix+0.5)/nx vs (iy+0.5)/ny without division
        tx = (2 * ix + 1) * ny
        ty = (2 * iy + 1) * nx
        if tx == ty:  # exact corner: include both neighbors, then the diagonal
            tiles.append((x + sx, y))
            tiles.append((x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif tx < ty:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        tiles.append((x, y))
    return tiles


def _sight_blocked(battle_map: BattleMap, a: Position, b: Position) -> bool:
    line = supercover_line(a, b)
    i = 1
    n = len(line) - 1  # exclude endpoints from blocking
    while i < n:
        tile = line[i]
        # corner pinch pair shows up as two consecutive tiles sharing no edge
        if i + 1 < n and abs(line[i + 1][0] - tile[0]) + abs(line[i + 1][1] - tile[1]) == 2:
            if battle_map.blocks_sight(tile) and battle_map.blocks_sight(line[i + 1]):
                return True
            i += 2
            continue
        if battle_map.blocks_sight(tile):
            return True
        i += 1
    return False


def cover_bonus(battle_map: BattleMap, attacker: Position, target: Position) -> int:
    """+2 AC when a barrel sits right behind the target on the attacker's side."""
    if attacker == target:
        return 0
    step = (
        target[0] + (1 if attacker[0] > target[0] else -1 if attacker[0] < target[0] else 0),
        target[1] + (1 if attacker[1] > target[1] else -1 if attacker[1] < target[1] else 0),
    )
    return 2 if battle_map.terrain(step) == BARREL else 0


def line_of_sight(battle_map: BattleMap, a: Position, b: Position) -> Sight:
    """Sight classification from a to b: walls block, barrels give half cover."""
    if a == b:
        raise MapError("line_of_sight requires distinct tiles")
    if not battle_map.in_bounds(a) or not battle_map.in_bounds(b):
        raise MapError("line_of_sight positions must be in bounds")
    if _sight_blocked(battle_map, a, b):
        return Sight.BLOCKED
    if cover_bonus(battle_map, a, b) > 0:
        return Sight.HALF_COVER
    return Sight.CLEAR


def visible(battle_map: BattleMap, a: Position, b: Position) -> bool:
    return a == b or not _sight_blocked(battle_map, a, b)


# ---------------------------------------------------------------------------
# Movement
# ---------------------------------------------------------------------------


def step_allowed(battle_map: BattleMap, src: Position, dst: Position) -> bool:
    """Single-step passability, including the wall-corner diagonal rule."""
    if not battle_map.passable(dst):
        return False
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    if dx != 0 and dy != 0:
        # diagonal squeeze: blocked only when both orthogonal neighbors are walls
        side_a = battle_map.terrain((src[0] + dx, src[1]))
        side_b = battle_map.terrain((src[0], src[1] + dy))
        if side_a == WALL and side_b == WALL:
            return False
    return True


def movement_budget_cost(battle_map: BattleMap, src: Position, dst: Position,
                         crawling: bool = False) -> int:
    """Feet spent entering ``dst`` from the adjacent ``src``."""
    if chebyshev(src, dst) != 1:
        raise MapError(f"tiles not adjacent: {src} -> {dst}")
    if not step_allowed(battle_map, src, dst):
        raise MapError(f"impassable destination {dst} ({battle_map.terrain(dst)})")
    cost = WATER_MOVE_COST if battle_map.terrain(dst) == WATER else BASE_MOVE_COST
    if crawling:
        cost += BASE_MOVE_COST  # crawling costs 1 extra foot per foot
    return cost


_ADJACENCY_CACHE: dict = {}


def _adjacency(battle_map: BattleMap) -> list[list[tuple[int, int]]]:
    """Per-tile (neighbor index, entry cost) lists, cached per map."""
    key = (battle_map.width, battle_map.height, battle_map.tiles)
    cached = _ADJACENCY_CACHE.get(key)
    if cached is not None:
        return cached
    w, h = battle_map.width, battle_map.height
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(w * h)]
    for y in range(h):
        for x in range(w):
            src = (x, y)
            if not battle_map.passable(src):
                continue
            edges = adjacency[y * w + x]
            for dx, dy in DIRECTIONS:
                dst = (x + dx, y + dy)
                if not battle_map.in_bounds(dst) or not step_allowed(battle_map, src, dst):
                    continue
                cost = WATER_MOVE_COST if battle_map.terrain(dst) == WATER else BASE_MOVE_COST
                edges.append((dst[1] * w + dst[0], cost))
    _ADJACENCY_CACHE[key] = adjacency
    return adjacency


def reachable(battle_map: BattleMap, start: Position, budget: int,
              occupied: frozenset[Position] = frozenset(),
              crawling: bool = False) -> dict[Position, int]:
    """Cheapest movement cost to every tile affordable within ``budget``.

    Dijkstra over entry costs; occupied tiles can be neither entered nor
    ended on.  The start tile is always included at cost 0.  Crawling
    adds one foot per foot to every entry cost.
    """
    if budget < 0:
        raise MapError("budget must be >= 0")
    w = battle_map.width
    adjacency = _adjacency(battle_map)
    blocked = {pos[1] * w + pos[0] for pos in occupied}
    crawl_extra = BASE_MOVE_COST if crawling else 0
    start_idx = start[1] * w + start[0]
    best: dict[int, int] = {start_idx: 0}
    frontier: list[tuple[int, int]] = [(0, start_idx)]
    while frontier:
        cost, idx = heapq.heappop(frontier)
        if cost > best.get(idx, cost):
            continue
        for nidx, ncost in adjacency[idx]:
            if nidx in blocked:
                continue
            total = cost + ncost + crawl_extra
            if total <= budget and total < best.get(nidx, total + 1):
                best[nidx] = total
                heapq.heappush(frontier, (total, nidx))
    return {(idx % w, idx // w): cost for idx, cost in best.items()}


_DISTANCE_FIELD_CACHE: dict = {}


def distance_field(battle_map: BattleMap, goal: Position,
                   occupied: frozenset[Position] = frozenset()) -> dict[Position, int]:
    """Movement cost from every tile to ``goal``, memoized per map layout.

    Used by scripted policies for greedy approach steps; since maps and
    goals recur across fights, the memo hit rate is near total.
    """
    key = (battle_map.width, battle_map.height, battle_map.tiles, goal, occupied)
    field = _DISTANCE_FIELD_CACHE.get(key)
    if field is None:
        field = reachable(battle_map, goal, budget=10 ** 9, occupied=occupied)
        _DISTANCE_FIELD_CACHE[key] = field
    return field


# ---------------------------------------------------------------------------
# Per-map caches (sight and cover are static once a map is loaded)
# ---------------------------------------------------------------------------

_SIGHT_CACHE: dict[tuple[int, ...], dict[tuple[Position, Position], bool]] = {}


def _map_key(battle_map: BattleMap):
    return (battle_map.width, battle_map.height, battle_map.tiles)


def sight_table(battle_map: BattleMap) -> dict[tuple[Position, Position], bool]:
    """Memoized pairwise visibility for every in-bounds tile pair."""
    key = _map_key(battle_map)
    table = _SIGHT_CACHE.get(key)
    if table is None:
        table = {}
        coords = [(x, y) for y in range(battle_map.height) for x in range(battle_map.width)]
        for i, a in enumerate(coords):
            table[(a, a)] = True
            for b in coords[i + 1:]:
                vis = not _sight_blocked(battle_map, a, b)
                table[(a, b)] = vis
                table[(b, a)] = vis
        _SIGHT_CACHE[key] = table
    return table


def visible_fast(battle_map: BattleMap, a: Position, b: Position) -> bool:
    return sight_table(battle_map)[(a, b)]


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_ascii(battle_map: BattleMap, viewer: str, state) -> str:
    """ASCII sketch of the full map from one entity's point of view.

    Legend: ``.`` floor, ``P`` viewer, ``E`` enemy, ``A`` ally, ``?``
    neutral, ``_`` out of map, ``*`` obstacle, ``o`` barrel, ``~`` water,
    and a space for tiles the viewer has no line of sight to.
    """
    pov = state.entities[viewer]
    table = sight_table(battle_map)
    by_pos: dict[Position, str] = {}
    for ent in state.entities.values():
        if not ent.alive:
            continue
        if ent.eid == viewer:
            by_pos[ent.pos] = "P"
        elif ent.team == pov.team:
            by_pos[ent.pos] = "A"
        elif ent.team < 0:
            by_pos[ent.pos] = "?"
        else:
            by_pos[ent.pos] = "E"

    rows = []
    for y in range(battle_map.height):
        row = []
        for x in range(battle_map.width):
            pos = (x, y)
            if not table[(pov.pos, pos)]:
                row.append(" ")
            elif pos in by_pos:
                row.append(by_pos[pos])
            else:
                row.append(TERRAIN_TO_RENDER_GLYPH[battle_map.terrain(pos)])
        rows.append("".join(row))
    return "\n".join(rows)
