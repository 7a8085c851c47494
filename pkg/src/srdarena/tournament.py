"""Round-robin evaluation: seeded matches, W/L/T matrix, leaderboard.

Each ordered pairing plays a fixed number of fights with seeds derived
from the tournament seed, so reruns reproduce every die roll.  With
``shared_seeds`` the mirrored cell of each pairing is derived from the
same simulated fights, making matrix antisymmetry exact by
construction; the default instead simulates both orderings
independently.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import eventlog
from .battlemap import builtin_map_pool, load_builtin_map
from .characters import CLASSES, sheet_for_class
from .engine import (
    Action,
    ActionKind,
    Outcome,
    apply_action,
    is_terminal,
    new_fight,
)
from .env import FIGHTER_ONLY, MAX_ACTIONS_PER_TURN
from .policies import PolicyRef, build_policy
from .rng import RngStream, derive_seed

DEFAULT_FIGHTS = 30


class TournamentError(ValueError):
    pass


@dataclass
class FightRecord:
    winner: str  # "a" | "b" | "tie"
    rounds: int
    seed: int
    map_name: str
    error: str | None = None
    events: list[dict] = field(default_factory=list, repr=False)


@dataclass
class MatchResult:
    agent_a: str
    agent_b: str
    fights: list[FightRecord]

    @property
    def wins(self) -> int:
        return sum(1 for f in self.fights if f.winner == "a")

    @property
    def losses(self) -> int:
        return sum(1 for f in self.fights if f.winner == "b")

    @property
    def ties(self) -> int:
        return sum(1 for f in self.fights if f.winner == "tie")

    def cell(self) -> str:
        return f"{self.wins}/{self.losses}/{self.ties}"

    def mirrored(self) -> "MatchResult":
        flip = {"a": "b", "b": "a", "tie": "tie"}
        return MatchResult(
            agent_a=self.agent_b,
            agent_b=self.agent_a,
            fights=[
                FightRecord(winner=flip[f.winner], rounds=f.rounds, seed=f.seed,
                            map_name=f.map_name, error=f.error, events=f.events)
                for f in self.fights
            ],
        )


# ---------------------------------------------------------------------------
# Single fights and matches
# ---------------------------------------------------------------------------


def run_fight(policy_a, policy_b, battle_map, sheet_a, sheet_b, seed: int,
              max_rounds: int = 500, collect_events: bool = True) -> FightRecord:
    """One seeded 1v1; policy_a drives the hero-side entity."""
    state, events = new_fight(
        battle_map, sheet_a, sheet_b, RngStream(derive_seed(seed, 1)),
        max_rounds=max_rounds,
    )
    header = eventlog.fight_start_record(state, seed)
    rng_a = RngStream(derive_seed(seed, 2))
    rng_b = RngStream(derive_seed(seed, 3))

    while is_terminal(state) is Outcome.ONGOING:
        actor = state.active_id
        hero_side = actor == state.hero_id
        policy = policy_a if hero_side else policy_b
        rng = rng_a if hero_side else rng_b
        for _ in range(MAX_ACTIONS_PER_TURN):
            action = policy.choose(state, rng)
            state, step_events = apply_action(state, action)
            events.extend(step_events)
            if (is_terminal(state) is not Outcome.ONGOING
                    or state.active_id != actor):
                break
        else:
            state, step_events = apply_action(state, Action(ActionKind.END_TURN))
            events.extend(step_events)

    outcome = is_terminal(state)
    rounds = min(state.round, max_rounds)
    winner = {"hero_won": "a", "hero_lost": "b", "tie": "tie"}[outcome.value]
    record = FightRecord(winner=winner, rounds=rounds, seed=seed,
                         map_name=battle_map.name)
    if collect_events:
        record.events = [header, *events,
                         eventlog.fight_end_record(state, outcome, rounds)]
    return record


def _fight_setup(seed: int, class_mode: str, maps, hero_sheet=None, enemy_sheet=None):
    rng = RngStream(derive_seed(seed, 0xE9))
    battle_map = rng.choice(maps)
    if class_mode == FIGHTER_ONLY:
        a_sheet = hero_sheet or sheet_for_class("fighter")
        b_sheet = enemy_sheet or sheet_for_class("fighter")
    else:
        a_sheet = hero_sheet or sheet_for_class(rng.choice(CLASSES))
        b_sheet = enemy_sheet or sheet_for_class(rng.choice(CLASSES))
    return battle_map, a_sheet, b_sheet


def run_match(ref_a: PolicyRef, ref_b: PolicyRef, fights: int = DEFAULT_FIGHTS,
              base_seed: int = 0, class_mode: str = FIGHTER_ONLY,
              map_pool: tuple[str, ...] = (), max_rounds: int = 500,
              collect_events: bool = False) -> MatchResult:
    """Fixed-length series between two agents; fight k reuses
    derive(base_seed, k) so any single fight can be replayed alone."""
    if fights < 1:
        raise TournamentError("fights must be >= 1")
    maps = ([load_builtin_map(n) for n in map_pool] if map_pool
            else builtin_map_pool())

    def build(ref):
        try:
            return build_policy(ref), None
        except Exception as exc:  # noqa: BLE001 - forfeits must be loud but non-fatal
            return None, f"{type(exc).__name__}: {exc}"

    policy_a, err_a = build(ref_a)
    policy_b, err_b = build(ref_b)

    records = []
    for k in range(fights):
        seed = derive_seed(base_seed, k)
        battle_map, sheet_a, sheet_b = _fight_setup(seed, class_mode, maps)
        if err_a or err_b:
            # error-forfeit: the broken side loses without simulation
            records.append(FightRecord(
                winner="b" if err_a else "a", rounds=0, seed=seed,
                map_name=battle_map.name, error=err_a or err_b))
            continue
        try:
            records.append(run_fight(policy_a, policy_b, battle_map, sheet_a,
                                     sheet_b, seed, max_rounds,
                                     collect_events=collect_events))
        except Exception as exc:  # noqa: BLE001
            records.append(FightRecord(winner="tie", rounds=0, seed=seed,
                                       map_name=battle_map.name,
                                       error=f"{type(exc).__name__}: {exc}"))
    return MatchResult(agent_a=ref_a.id, agent_b=ref_b.id, fights=records)


# ---------------------------------------------------------------------------
# Round robin
# ---------------------------------------------------------------------------


@dataclass
class TournamentMatrix:
    roster: list[str]
    cells: dict[tuple[str, str], MatchResult]

    def cell(self, a: str, b: str) -> MatchResult:
        return self.cells[(a, b)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["agent", *self.roster])
        for a in self.roster:
            row = [a]
            for b in self.roster:
                row.append("-" if a == b else self.cells[(a, b)].cell())
            writer.writerow(row)
        return buf.getvalue()

    def to_text(self) -> str:
        headers = ["Agent", *self.roster]
        rows = [headers]
        for a in self.roster:
            row = [a]
            for b in self.roster:
                row.append("-" if a == b else self.cells[(a, b)].cell())
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        return "\n".join(lines) + "\n"


def _run_match_job(args):
    ref_a, ref_b, fights, seed, class_mode, map_pool, max_rounds, collect = args
    return run_match(ref_a, ref_b, fights, seed, class_mode, map_pool,
                     max_rounds, collect_events=collect)


def round_robin(roster: list[PolicyRef], fights_per_pair: int = DEFAULT_FIGHTS,
                seed: int = 0, class_mode: str = FIGHTER_ONLY,
                map_pool: tuple[str, ...] = (), max_rounds: int = 500,
                shared_seeds: bool = False, collect_events: bool = False,
                workers: int = 1) -> TournamentMatrix:
    """Fill every off-diagonal cell of the pairing matrix.

    Results merge in (pair index) order, so using a worker pool never
    changes the output.
    """
    ids = [ref.id for ref in roster]
    if len(set(ids)) != len(ids):
        raise TournamentError(f"duplicate agent ids in roster: {ids}")
    if len(ids) < 2:
        raise TournamentError("roster needs at least 2 agents")

    by_id = {ref.id: ref for ref in roster}
    if shared_seeds:
        pairs = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]
    else:
        pairs = [(a, b) for a in ids for b in ids if a != b]

    jobs = [
        (by_id[a], by_id[b], fights_per_pair, derive_seed(seed, idx),
         class_mode, map_pool, max_rounds, collect_events)
        for idx, (a, b) in enumerate(pairs)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_match_job, jobs))
    else:
        results = [_run_match_job(job) for job in jobs]

    cells: dict[tuple[str, str], MatchResult] = {}
    for (a, b), result in zip(pairs, results):
        cells[(a, b)] = result
        if shared_seeds:
            cells[(b, a)] = result.mirrored()
    return TournamentMatrix(roster=ids, cells=cells)


# ---------------------------------------------------------------------------
# Leaderboard
# ---------------------------------------------------------------------------


@dataclass
class LeaderboardRow:
    agent: str
    wins: int
    losses: int
    ties: int
    avg_rounds: float


def leaderboard(matrix: TournamentMatrix) -> list[LeaderboardRow]:
    """Row totals across both orderings, sorted by wins descending."""
    rows = []
    for agent in matrix.roster:
        wins = losses = ties = rounds = games = 0
        for (a, b), match in matrix.cells.items():
            if a != agent:
                continue
            wins += match.wins
            losses += match.losses
            ties += match.ties
            rounds += sum(f.rounds for f in match.fights)
            games += len(match.fights)
        rows.append(LeaderboardRow(
            agent=agent, wins=wins, losses=losses, ties=ties,
            avg_rounds=rounds / games if games else 0.0,
        ))
    rows.sort(key=lambda r: (-r.wins, r.losses, r.agent))
    return rows


def leaderboard_csv(rows: list[LeaderboardRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["agent", "wins", "losses", "ties", "avg_rounds"])
    for row in rows:
        writer.writerow([row.agent, row.wins, row.losses, row.ties,
                         f"{row.avg_rounds:.2f}"])
    return buf.getvalue()


def leaderboard_text(rows: list[LeaderboardRow]) -> str:
    table = [["Agent", "Wins", "Losses", "Ties", "AVG Rounds"]]
    for row in rows:
        table.append([row.agent, str(row.wins), str(row.losses), str(row.ties),
                      f"{row.avg_rounds:.2f}"])
    widths = [max(len(r[i]) for r in table) for i in range(5)]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in table
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Output directory
# ---------------------------------------------------------------------------


def write_outputs(out_dir: str | Path, matrix: TournamentMatrix,
                  write_logs: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "matrix.csv").write_text(matrix.to_csv())
    (out / "matrix.txt").write_text(matrix.to_text())
    rows = leaderboard(matrix)
    (out / "leaderboard.csv").write_text(leaderboard_csv(rows))
    (out / "leaderboard.txt").write_text(leaderboard_text(rows))
    if write_logs:
        logs = out / "logs"
        for (a, b), match in matrix.cells.items():
            pair_dir = logs / f"{a}_vs_{b}"
            pair_dir.mkdir(parents=True, exist_ok=True)
            for i, fight in enumerate(match.fights):
                if fight.events:
                    eventlog.write_log(pair_dir / f"fight_{i:03d}.jsonl", fight.events)
