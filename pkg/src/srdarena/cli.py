"""Operator entry point: training, tournaments, replays, maps, plots.

Configuration precedence is flags > config file > built-in defaults
(the hyper-parameter defaults match the training table the package
ships with).  Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import battlemap as bm
from . import plotting
from .characters import load_sheet, sheet_for_class
from .engine import is_terminal
from .env import FIGHTER_ONLY, FOUR_CLASSES, CombatEnv, EpisodeConfig
from .eventlog import ReplayError, read_log, rebuild_initial_state, replay_log
from .llm import LlmPolicy, MixSchedule, assign_adversary
from .manifest import RunManifest
from .mockllm import reply, serve_mock, tool_reply
from .policies import PolicyRef, RandomPolicy, RulesPolicy
from .rng import RngStream, derive_seed
from .tournament import round_robin, write_outputs
from .dqn import TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class CliError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _class_mode(value: str) -> str:
    return {"fighter": FIGHTER_ONLY, "four": FOUR_CLASSES}[value]


def _resolve_sheet(spec: str):
    path = Path(spec)
    if path.exists():
        return load_sheet(path)
    return sheet_for_class(spec)


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """flags (non-None) > config file > defaults."""
    file_config = {}
    if getattr(args, "config", None):
        file_config = json.loads(Path(args.config).read_text())
    merged = dict(defaults)
    merged.update({k: v for k, v in file_config.items() if k in defaults})
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

TRAIN_DEFAULTS = {
    "buffer_capacity": 3000,
    "batch_size": 64,
    "iterations": 1000,
    "train_steps_per_iteration": 2,
    "learning_rate": 0.001,
    "gamma": 0.99,
    "epsilon_start": 1.0,
    "epsilon_final": 0.01,
    "epsilon_decay_frames": 1000,
    "target_update_every": 1,
    "horizon": 1024,
    "seed": 0,
    "max_rounds": 500,
    "llm_fraction": 0.2,
    "llm_endpoint": None,
    "llm_model": "primary",
    "llm_secondary_model": None,
    "llm_timeout": 30.0,
}


def _add_train_parser(sub) -> None:
    p = sub.add_parser("train", help="train the value network against an adversary")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--adversary", choices=["rules", "random", "mixed", "llm"],
                   default="rules", help="opponent driving the other side")
    p.add_argument("--classes", choices=["fighter", "four"], default="fighter")
    p.add_argument("--party", help="hero sheet: bundled class name or JSON path")
    p.add_argument("--enemy", help="adversary sheet: bundled class name or JSON path")
    p.add_argument("--maps", nargs="*", default=None, help="bundled map names")
    p.add_argument("--out", default="runs/train", help="output directory")
    p.add_argument("--llm-endpoint", dest="llm_endpoint",
                   help="chat-completions URL for mixed/llm adversaries")
    p.add_argument("--llm-model", dest="llm_model",
                   help="primary (major-decision) model name")
    p.add_argument("--llm-secondary-model", dest="llm_secondary_model",
                   help="model for movement/minor-decision menus")
    p.add_argument("--llm-timeout", dest="llm_timeout", type=float,
                   help="per-request timeout in seconds (default 30)")
    p.add_argument("--llm-fraction", dest="llm_fraction", type=float,
                   help="fraction of episodes against the LLM (default 0.2)")
    p.add_argument("--buffer-capacity", dest="buffer_capacity", type=int,
                   help="replay buffer capacity (default 3000)")
    p.add_argument("--batch-size", dest="batch_size", type=int,
                   help="training batch size (default 64)")
    p.add_argument("--iterations", type=int,
                   help="training iterations (default 1000)")
    p.add_argument("--train-steps-per-iteration", dest="train_steps_per_iteration",
                   type=int, help="gradient steps per iteration (default 2)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float,
                   help="optimizer learning rate (default 0.001)")
    p.add_argument("--gamma", type=float, help="discount factor (default 0.99)")
    p.add_argument("--epsilon-start", dest="epsilon_start", type=float,
                   help="exploration start (default 1.0)")
    p.add_argument("--epsilon-final", dest="epsilon_final", type=float,
                   help="exploration floor (default 0.01)")
    p.add_argument("--epsilon-decay-frames", dest="epsilon_decay_frames", type=int,
                   help="frames to reach the floor (default 1000)")
    p.add_argument("--target-update-every", dest="target_update_every", type=int,
                   help="iterations between target syncs (default 1)")
    p.add_argument("--horizon", type=int,
                   help="env steps collected per iteration (default 1024)")
    p.add_argument("--max-rounds", dest="max_rounds", type=int,
                   help="round cap before a fight ties (default 500)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--quiet", action="store_true")


def _make_training_adversary(args, merged: dict):
    if args.adversary == "rules":
        return RulesPolicy(), None
    if args.adversary == "random":
        return RandomPolicy(), None
    if not merged["llm_endpoint"]:
        raise CliError(f"--adversary {args.adversary} requires --llm-endpoint")
    llm = LlmPolicy.from_params({
        "endpoint": merged["llm_endpoint"],
        "model": merged["llm_model"],
        "secondary_model": merged["llm_secondary_model"],
        "timeout": merged["llm_timeout"],
    })
    if args.adversary == "llm":
        return llm, llm
    rules = RulesPolicy()
    schedule = MixSchedule(merged["llm_fraction"])
    mix_rng = RngStream(derive_seed(merged["seed"], 0x313C))

    def factory(episode_index: int, episode_seed: int):
        kind = assign_adversary(episode_index, schedule, mix_rng)
        return llm if kind == "llm" else rules

    return factory, llm


def _cmd_train(args) -> int:
    merged = _merge_config(args, TRAIN_DEFAULTS)
    adversary, llm = _make_training_adversary(args, merged)
    episode = EpisodeConfig(
        class_mode=_class_mode(args.classes),
        map_pool=tuple(args.maps or ()),
        seed=merged["seed"],
        adversary=adversary,
        max_rounds=merged["max_rounds"],
        hero_sheet=_resolve_sheet(args.party) if args.party else None,
        enemy_sheet=_resolve_sheet(args.enemy) if args.enemy else None,
    )
    cfg = TrainConfig(**{k: merged[k] for k in TrainConfig.__dataclass_fields__})

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(iteration, mean_reward, frames):
        if not args.quiet and (iteration + 1) % 10 == 0:
            print(f"iteration {iteration + 1}/{cfg.iterations} "
                  f"mean_reward {mean_reward:+.2f} frames {frames}")

    checkpoint = train(lambda: CombatEnv(episode), cfg, progress=progress)
    checkpoint.save(out / "checkpoint.npz")
    plotting.write_curve(out / "reward_curve.csv", checkpoint.reward_curve)
    if llm is not None:
        llm.write_telemetry(out / "telemetry.jsonl")
    RunManifest(
        command="train",
        config={**merged, "adversary": args.adversary, "classes": args.classes},
        seed=merged["seed"],
        output_dir=str(out),
    ).write(out)
    if not args.quiet:
        print(f"checkpoint: {out / 'checkpoint.npz'}")
        print(f"reward curve: {out / 'reward_curve.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# tournament
# ---------------------------------------------------------------------------


def _add_tournament_parser(sub) -> None:
    p = sub.add_parser("tournament", help="round-robin evaluation over a roster")
    p.add_argument("--roster", help="JSON file listing policy refs")
    p.add_argument("--agents", nargs="*", default=None,
                   help="shorthand roster entries, e.g. rules random "
                        "dqn:runs/train/checkpoint.npz")
    p.add_argument("--fights", type=int, default=30, help="fights per pairing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", choices=["fighter", "four"], default="fighter")
    p.add_argument("--maps", nargs="*", default=None)
    p.add_argument("--max-rounds", dest="max_rounds", type=int, default=500)
    p.add_argument("--shared-seeds", dest="shared_seeds", action="store_true",
                   help="derive mirrored cells from shared fights "
                        "(exact antisymmetry)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-logs", dest="logs", action="store_false",
                   help="skip writing per-fight combat logs")
    p.add_argument("--out", default="runs/tournament")


def _parse_agent_shorthand(token: str) -> PolicyRef:
    if token in ("rules", "random", "inert"):
        return PolicyRef(id=token, kind=token)
    if token.startswith("dqn:"):
        path = token.split(":", 1)[1]
        return PolicyRef(id=Path(path).parent.name or "dqn",
                         kind="dqn_checkpoint", params={"path": path})
    if token.startswith("llm:"):
        endpoint = token.split(":", 1)[1]
        return PolicyRef(id="llm", kind="llm", params={"endpoint": endpoint})
    raise CliError(f"unrecognized agent shorthand {token!r}")


def _load_roster(args) -> list[PolicyRef]:
    if args.roster:
        docs = json.loads(Path(args.roster).read_text())
        return [PolicyRef.from_json(d) for d in docs]
    if args.agents:
        return [_parse_agent_shorthand(t) for t in args.agents]
    return [PolicyRef(id="rules", kind="rules"), PolicyRef(id="random", kind="random")]


def _cmd_tournament(args) -> int:
    roster = _load_roster(args)
    matrix = round_robin(
        roster,
        fights_per_pair=args.fights,
        seed=args.seed,
        class_mode=_class_mode(args.classes),
        map_pool=tuple(args.maps or ()),
        max_rounds=args.max_rounds,
        shared_seeds=args.shared_seeds,
        collect_events=args.logs,
        workers=args.workers,
    )
    out = Path(args.out)
    write_outputs(out, matrix, write_logs=args.logs)
    RunManifest(
        command="tournament",
        config={
            "roster": [r.to_json() for r in roster],
            "fights": args.fights,
            "classes": args.classes,
            "shared_seeds": args.shared_seeds,
            "max_rounds": args.max_rounds,
        },
        seed=args.seed,
        output_dir=str(out),
    ).write(out)
    print(matrix.to_text())
    print((out / "leaderboard.txt").read_text())
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def _add_replay_parser(sub) -> None:
    p = sub.add_parser("replay", help="re-simulate a combat log and render frames")
    p.add_argument("log", help="JSONL combat log")
    p.add_argument("--turn", type=int, default=None,
                   help="render only this frame (1-based action count)")


def _cmd_replay(args) -> int:
    events = read_log(args.log)
    state0 = rebuild_initial_state(events[0])
    frames: list[str] = []

    def hook(state, event):
        actor = event["actor"]
        action = event["action"]
        frame = (f"frame {len(frames) + 1} | round {event['round']} | "
                 f"{actor}: {json.dumps(action)}\n")
        frame += bm.render_ascii(state.battle_map, state.hero_id, state)
        frames.append(frame)

    final = replay_log(events, frame_hook=hook)
    if args.turn is not None:
        if not 1 <= args.turn <= len(frames):
            raise CliError(f"--turn must be in 1..{len(frames)}")
        print(frames[args.turn - 1])
    else:
        for frame in frames:
            print(frame)
            print()
    print(f"replay verified: outcome {is_terminal(final).value}, "
          f"{len(frames)} actions, hash match")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot / validate-map / mock-llm / env-server
# ---------------------------------------------------------------------------


def _add_plot_parser(sub) -> None:
    p = sub.add_parser("plot", help="plot reward curves from training CSVs")
    p.add_argument("csvs", nargs="+", help="reward_curve.csv files")
    p.add_argument("--out", default="reward_curves.png")
    p.add_argument("--ascii", action="store_true", help="print a text chart instead")


def _cmd_plot(args) -> int:
    if args.ascii:
        for path in args.csvs:
            print(path)
            print(plotting.ascii_curve(path))
        return EXIT_OK
    plotting.plot_curves(args.csvs, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_validate_map(args) -> int:
    battle_map = bm.load_map_file(args.map)
    print(f"ok: {battle_map.name} {battle_map.width}x{battle_map.height}, "
          f"hero spawn {battle_map.hero_spawn}, enemy spawn {battle_map.enemy_spawn}")
    return EXIT_OK


def _cmd_mock_llm(args) -> int:
    behavior = tool_reply(args.action) if args.action is not None else reply(args.reply)
    server = serve_mock(behavior, port=args.port)
    print(f"mock chat endpoint at {server.url} (Ctrl-C to stop)")
    try:
        import time
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        server.stop()
    return EXIT_OK


def _cmd_env_server(_args) -> int:
    from .envserver import serve
    serve()
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="srdarena",
                     description="deterministic SRD combat arena: train, "
                                 "evaluate, replay")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train_parser(sub)
    _add_tournament_parser(sub)
    _add_replay_parser(sub)
    _add_plot_parser(sub)

    p = sub.add_parser("validate-map", help="check a map file loads cleanly")
    p.add_argument("map")

    p = sub.add_parser("mock-llm", help="serve a scripted chat endpoint")
    p.add_argument("--reply", default="0: end my turn")
    p.add_argument("--action", type=int, default=None,
                   help="reply with a tool call for this index instead")
    p.add_argument("--port", type=int, default=0)

    sub.add_parser("env-server", help="serve environments over stdio JSON lines")
    return parser


COMMANDS = {
    "train": _cmd_train,
    "tournament": _cmd_tournament,
    "replay": _cmd_replay,
    "plot": _cmd_plot,
    "validate-map": _cmd_validate_map,
    "mock-llm": _cmd_mock_llm,
    "env-server": _cmd_env_server,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, ReplayError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
