import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srdarena.dice import (
    Advantage,
    RollSpec,
    ability_modifier,
    combine_advantage,
    roll,
    roll_d20,
)
from srdarena.rng import RngStream

from conftest import ScriptedRng

# SRD 5.1 ability-modifier table, frozen as the oracle
SRD_MODIFIERS = {
    1: -5, 2: -4, 3: -4, 4: -3, 5: -3, 6: -2, 7: -2, 8: -1, 9: -1,
    10: 0, 11: 0, 12: 1, 13: 1, 14: 2, 15: 2, 16: 3, 17: 3, 18: 4,
    19: 4, 20: 5, 21: 5, 22: 6, 23: 6, 24: 7, 25: 7, 26: 8, 27: 8,
    28: 9, 29: 9, 30: 10,
}


def test_ability_modifier_matches_srd_table():
    for score, expected in SRD_MODIFIERS.items():
        assert ability_modifier(score) == expected


@pytest.mark.parametrize("score", [0, 31, -3])
def test_ability_modifier_rejects_out_of_range(score):
    with pytest.raises(ValueError):
        ability_modifier(score)


def test_roll_forced_faces():
    assert roll(RollSpec(1, 20, 5), ScriptedRng([10])) == 15
    assert roll(RollSpec(2, 6), ScriptedRng([1, 1])) == 2  # lower bound
    assert roll(RollSpec(2, 6), ScriptedRng([6, 6])) == 12


def test_roll_deterministic_across_fresh_streams():
    spec = RollSpec(3, 8, 2)
    a = [roll(spec, RngStream(42)) for _ in range(1)]
    b = [roll(spec, RngStream(42)) for _ in range(1)]
    assert a == b


def test_roll_advances_rng_by_exactly_count_draws():
    rng = RngStream(1)
    roll(RollSpec(4, 6), rng)
    assert rng.position == 4


@given(
    count=st.integers(1, 8),
    sides=st.sampled_from([4, 6, 8, 10, 12, 20]),
    modifier=st.integers(-5, 10),
    seed=st.integers(0, 2**32),
)
@settings(max_examples=300)
def test_roll_bounds_property(count, sides, modifier, seed):
    spec = RollSpec(count, sides, modifier)
    value = roll(spec, RngStream(seed))
    assert spec.minimum <= value <= spec.maximum


def test_roll_bounds_bulk_fuzz():
    rng = RngStream(77)
    spec = RollSpec(2, 6, 1)
    for _ in range(100_000):
        assert 3 <= roll(spec, rng) <= 13


def test_rollspec_validation():
    with pytest.raises(ValueError):
        RollSpec(0, 6)
    with pytest.raises(ValueError):
        RollSpec(1, 7)


def test_rollspec_parse_and_str():
    assert RollSpec.parse("2d6+1") == RollSpec(2, 6, 1)
    assert RollSpec.parse("1d8-2") == RollSpec(1, 8, -2)
    assert str(RollSpec(1, 10)) == "1d10"
    assert str(RollSpec(3, 4, 3)) == "3d4+3"


def test_d20_critical_flags():
    out = roll_d20(ScriptedRng([20]), modifier=3)
    assert out.critical_hit and not out.critical_miss and out.total == 23
    out = roll_d20(ScriptedRng([1]), modifier=99)
    assert out.critical_miss and not out.critical_hit


def test_d20_advantage_draw_counts_and_selection():
    rng = ScriptedRng([5, 17])
    out = roll_d20(rng, advantage=Advantage.ADVANTAGE)
    assert out.natural == 17 and rng.position == 2
    rng = ScriptedRng([5, 17])
    out = roll_d20(rng, advantage=Advantage.DISADVANTAGE)
    assert out.natural == 5 and rng.position == 2
    rng = ScriptedRng([5])
    assert roll_d20(rng).natural == 5 and rng.position == 1


def test_combine_advantage_cancellation():
    assert combine_advantage(True, True) is Advantage.NORMAL
    assert combine_advantage(True, False) is Advantage.ADVANTAGE
    assert combine_advantage(False, True) is Advantage.DISADVANTAGE
    assert combine_advantage(False, False) is Advantage.NORMAL
