"""Combat log round-trips and replay verification."""

import json

import pytest

from srdarena.battlemap import load_builtin_map
from srdarena.characters import sheet_for_class
from srdarena.eventlog import (
    ReplayError,
    events_to_text,
    read_log,
    replay_log,
    state_hash,
    write_log,
)
from srdarena.policies import RulesPolicy
from srdarena.tournament import run_fight


@pytest.fixture
def fight_events():
    record = run_fight(RulesPolicy(), RulesPolicy(), load_builtin_map("wall"),
                       sheet_for_class("fighter"), sheet_for_class("cleric"),
                       seed=101)
    return record.events


def test_fresh_log_replays_to_matching_hash(fight_events):
    final = replay_log(fight_events)
    footer = fight_events[-1]
    assert footer["type"] == "fight_end"
    assert state_hash(final) == footer["state_hash"]


def test_log_file_round_trip(tmp_path, fight_events):
    path = tmp_path / "fight.jsonl"
    write_log(path, fight_events)
    loaded = read_log(path)
    assert loaded == fight_events
    replay_log(loaded)


def test_same_seed_bitwise_identical_logs():
    args = (RulesPolicy(), RulesPolicy(), load_builtin_map("river"),
            sheet_for_class("rogue"), sheet_for_class("wizard"))
    a = run_fight(*args, seed=7).events
    b = run_fight(*args, seed=7).events
    assert events_to_text(a) == events_to_text(b)


def test_different_seeds_differ():
    args = (RulesPolicy(), RulesPolicy(), load_builtin_map("river"),
            sheet_for_class("rogue"), sheet_for_class("wizard"))
    a = run_fight(*args, seed=7).events
    b = run_fight(*args, seed=8).events
    assert events_to_text(a) != events_to_text(b)


def test_truncated_log_detected(fight_events):
    with pytest.raises(ReplayError, match="truncated"):
        replay_log(fight_events[:-1])


def test_corrupted_action_detected(fight_events):
    tampered = [json.loads(json.dumps(e)) for e in fight_events]
    for event in tampered:
        # redirect one move and the final hash no longer matches
        if event["type"] == "action" and event["action"]["kind"] == "move":
            event["action"]["direction"] = [
                -event["action"]["direction"][0] or 1,
                -event["action"]["direction"][1],
            ]
            break
    else:
        pytest.skip("no move in this log")
    with pytest.raises(ReplayError):
        replay_log(tampered)


def test_bad_json_line_detected(tmp_path, fight_events):
    path = tmp_path / "fight.jsonl"
    write_log(path, fight_events)
    text = path.read_text().splitlines()
    text[3] = "not json {"
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(ReplayError, match="line 4"):
        read_log(path)


def test_empty_log_rejected():
    with pytest.raises(ReplayError, match="empty"):
        replay_log([])


def test_frame_hook_sees_every_action(fight_events):
    frames = []
    replay_log(fight_events, frame_hook=lambda state, event: frames.append(event))
    actions = [e for e in fight_events if e["type"] == "action"]
    assert len(frames) == len(actions)
