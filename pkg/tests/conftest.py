"""Shared fixtures: scripted dice, canned duels, acceptance reporting."""

from __future__ import annotations

import pytest

from srdarena.battlemap import load_map
from srdarena.characters import sheet_for_class
from srdarena.engine import GameState, _begin_turn, make_entity
from srdarena.rng import RngStream


class ScriptedRng:
    """RngStream stand-in returning pre-chosen die faces.

    ``randint`` pops from ``faces`` (exhaustion falls back to the wrapped
    deterministic stream), so tests can force exact rolls while the
    draw-count accounting stays intact.
    """

    def __init__(self, faces=(), floats=(), seed: int = 0):
        self.faces = list(faces)
        self.floats = list(floats)
        self._fallback = RngStream(seed)
        self.position = 0

    def randint(self, lo: int, hi: int) -> int:
        self.position += 1
        if self.faces:
            value = self.faces.pop(0)
            assert lo <= value <= hi, f"scripted face {value} outside [{lo}, {hi}]"
            return value
        return self._fallback.randint(lo, hi)

    def random(self) -> float:
        self.position += 1
        if self.floats:
            return self.floats.pop(0)
        return self._fallback.random()

    def next_u64(self) -> int:
        self.position += 1
        return self._fallback.next_u64()

    def choice(self, seq):
        return seq[self.next_u64() % len(seq)]

    def clone(self):
        twin = ScriptedRng(self.faces, self.floats)
        twin._fallback = self._fallback.clone()
        twin.position = self.position
        return twin


# map mirroring the published example prompt: rogue above a wall stub,
# wizard below-left, water pooling in the corner
PROMPT_FIGURE_MAP = """\
.......
...P...
.E.#...
.ww.w..
ww.....
ww.....
"""

OPEN_6X6 = """\
P.....
......
......
......
......
.....E
"""


def make_duel(map_text: str, hero_class: str = "fighter",
              enemy_class: str = "fighter", seed: int = 1,
              hero_first: bool = True, max_rounds: int = 500,
              rng=None) -> GameState:
    """Build a ready-to-act 1v1 without rolling initiative."""
    battle_map = load_map(map_text, name="test")
    state = GameState(
        battle_map=battle_map,
        entities={
            "hero": make_entity("hero", 0, sheet_for_class(hero_class),
                                battle_map.hero_spawn),
            "enemy": make_entity("enemy", 1, sheet_for_class(enemy_class),
                                 battle_map.enemy_spawn),
        },
        rng=rng if rng is not None else RngStream(seed),
        initiative_order=["hero", "enemy"] if hero_first else ["enemy", "hero"],
        max_rounds=max_rounds,
    )
    _begin_turn(state)
    state.bump()
    return state


@pytest.fixture
def prompt_figure_state() -> GameState:
    state = make_duel(PROMPT_FIGURE_MAP, hero_class="rogue", enemy_class="wizard")
    state.entities["hero"].hp = 15
    state.bump()
    return state


@pytest.fixture
def open_duel() -> GameState:
    return make_duel(OPEN_6X6)


# ---------------------------------------------------------------------------
# Acceptance criterion reporting
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE.items():
        flag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{flag}] {name}")
