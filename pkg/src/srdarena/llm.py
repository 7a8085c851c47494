"""Chat-endpoint adversary: prompt serialization, parsing, routing, mixing.

The game state is rendered into a fixed-format text prompt (scenario,
health, conditions, economy, ASCII map with its legend, numbered action
menu), sent to an OpenAI-compatible chat-completions endpoint, and the
reply is parsed back into a menu index.  Anything unparseable falls
back to a uniform random legal action so a fight can never stall on a
flaky endpoint.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass

import numpy as np
import requests

from .battlemap import render_ascii
from .engine import (
    Action,
    ActionKind,
    GameState,
    action_text,
    enumerate_actions,
)
from .rng import RngStream

API_KEY_ENV_VARS = ("SRDARENA_API_KEY", "OPENAI_API_KEY")

MAP_LEGEND = """areas with no characters are represented by a dot (.)
the hero character is represented by a (P)
the enemy character is represented by an (E)
Allies or Party Members are represented by an (A)
Neutral characters are represented by a question mark (?)
areas outside of the map are represented by a hash (_), you cannot move to areas with _
areas with obstacles are represented by an asterisk (*)
areas with a barrel are represented by an (o). These provide half-cover if right behind it and attacks are comming from the other side.
areas with water are represented by a tilde (~) and are difficult terrain
areas that the player can't see are just blanks/space
Each tile of the map is 5ft by 5ft."""

ANSWER_INSTRUCTION = """Please choose the number corresponding to the action you would like to take.
Provide your answer using the format, starting with the desired number choice, followed by the colon and the action.
1: attack enemy with ranged weapon
Just provide the action choice, no need to explain."""

ACTION_TOOL_SCHEMA = {
    "type": "function",
    "function": {
        "name": "choose_action",
        "description": "Pick the numbered action to take this turn.",
        "parameters": {
            "type": "object",
            "properties": {"action": {"type": "integer"}},
            "required": ["action"],
        },
    },
}


def _percent(value: float) -> str:
    """Bracketed percentage, matching numpy's 1-element array rendering.

    Print options pinned so user-level set_printoptions cannot change
    the prompt ("[83.33333333]", "[100.]").
    """
    return np.array2string(np.array([value]), precision=8, suppress_small=False)


def build_prompt(state: GameState, pov_id: str) -> str:
    """Full decision prompt for the entity whose turn it is."""
    me = state.entities[pov_id]
    if state.active_id != pov_id:
        raise ValueError("build_prompt requires the pov entity to be active")
    enemy = next(e for e in state.entities.values() if e.team != me.team and e.alive)

    my_pct = _percent(me.hp / me.sheet.max_hp * 100.0)
    enemy_pct = _percent(enemy.hp / enemy.sheet.max_hp * 100.0)
    my_conditions = ", ".join(sorted(me.conditions()))
    enemy_conditions = ", ".join(sorted(enemy.conditions()))

    menu = enumerate_actions(state)
    menu_lines = "\n".join(
        f"{i}: {action_text(state, action)}" for i, action in enumerate(menu)
    )
    movement = np.array2string(np.array([me.movement_left]))

    return (
        "We are playing a game of Dungeons and Dragons 5th Edition. "
        f"It is current your turn and you play as a hero character denoted by P "
        f"(a level {me.sheet.level} {me.sheet.char_class}). "
        f"And you have an enemy donoted by E "
        f"(a level {enemy.sheet.level} {enemy.sheet.char_class}) "
        "which you must defeat.\n"
        f"Your health is at {my_pct}% specifically {me.hp}/{me.sheet.max_hp}\n"
        f"Your Enemies health is at {enemy_pct}%\n"
        f"Your current conditions are:{' ' + my_conditions if my_conditions else ''}\n"
        f"Your enemies current conditions are:"
        f"{' ' + enemy_conditions if enemy_conditions else ''}\n"
        "You have the following available actions and movement available:\n"
        "\n"
        f"Available movement: {movement}ft\n"
        f"Available actions: {me.action}\n"
        f"Bonus actions: {me.bonus}\n"
        f"Reactions: {me.reaction}\n"
        "\n"
        "Here is a rough sketch of the map that considers line of sight to the enemy.\n"
        "Here is the map:\n"
        f"{render_ascii(state.battle_map, pov_id, state)}\n"
        f"{MAP_LEGEND}\n"
        "\n"
        "Here are the available actions you can take, "
        "please choose the number corresponding to the action:\n"
        f"{menu_lines}\n"
        "\n"
        f"{ANSWER_INSTRUCTION}"
    )


_JSON_ACTION = re.compile(r"[{,]\s*['\"]action['\"]\s*:\s*(-?\d+)")
_PREFIXED = re.compile(r"^\s*(-?\d+)\s*:")
_BARE = re.compile(r"^\s*(-?\d+)\s*$")


def parse_response(text: str, menu_size: int) -> int | None:
    """Extract a menu index from a model reply; None means fall back.

    Accepted forms: "N: <anything>", a bare integer, or a JSON-ish
    payload containing "action": N.  Out-of-range indexes also fall
    back rather than raising.
    """
    if menu_size < 1:
        raise ValueError("menu_size must be >= 1")
    if not isinstance(text, str):
        return None
    for pattern in (_JSON_ACTION, _PREFIXED, _BARE):
        match = pattern.search(text)
        if match:
            index = int(match.group(1))
            return index if 0 <= index < menu_size else None
    return None


# ---------------------------------------------------------------------------
# HTTP client
# ---------------------------------------------------------------------------


class ChatTransportError(RuntimeError):
    """Endpoint unreachable or persistently failing."""


@dataclass
class ChatExchange:
    model: str
    reply_text: str | None
    latency: float
    valid: bool = False
    fallback_reason: str | None = None

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "reply": self.reply_text,
            "latency": round(self.latency, 6),
            "valid": self.valid,
            "fallback_reason": self.fallback_reason,
        }


class ChatClient:
    """Minimal OpenAI-compatible chat-completions client with retries."""

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 2,
                 backoff: float = 0.25, temperature: float = 0.0,
                 api_key: str | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.temperature = temperature
        if api_key is None:
            for var in API_KEY_ENV_VARS:
                api_key = os.environ.get(var)
                if api_key:
                    break
        self.api_key = api_key
        self._session = requests.Session()

    def complete(self, messages: list[dict], model: str,
                 use_tools: bool = False) -> tuple[str, float]:
        """POST one completion request, returning (reply text, latency)."""
        body = {
            "model": model,
            "messages": messages,
            "temperature": self.temperature,
        }
        if use_tools:
            body["tools"] = [ACTION_TOOL_SCHEMA]
            body["tool_choice"] = {
                "type": "function",
                "function": {"name": "choose_action"},
            }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        start = time.monotonic()
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._session.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout)
                if response.status_code >= 500:
                    raise ChatTransportError(f"HTTP {response.status_code}")
                response.raise_for_status()
                payload = response.json()
                return self._extract_text(payload), time.monotonic() - start
            except (requests.RequestException, ChatTransportError,
                    ValueError, KeyError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * 2 ** attempt)
        raise ChatTransportError(
            f"chat endpoint failed after {self.retries + 1} attempts: {last_error}"
        ) from last_error

    @staticmethod
    def _extract_text(payload: dict) -> str:
        message = payload["choices"][0]["message"]
        tool_calls = message.get("tool_calls") or []
        if tool_calls:
            return tool_calls[0]["function"]["arguments"]
        content = message.get("content")
        if not isinstance(content, str):
            raise ValueError("completion carried neither content nor tool call")
        return content


# ---------------------------------------------------------------------------
# Decision routing and trajectory mixing
# ---------------------------------------------------------------------------

_MAJOR_ACTION_KINDS = frozenset({
    ActionKind.MELEE_ATTACK, ActionKind.RANGED_ATTACK, ActionKind.CAST_SPELL,
    ActionKind.DODGE, ActionKind.PRONE,
})


def is_major_menu(menu: list[Action]) -> bool:
    """A menu is a major decision when any entry spends the action slot
    (or drops prone); everything else is movement/minor cleanup."""
    for action in menu:
        if action.kind in _MAJOR_ACTION_KINDS:
            return True
        if action.kind in (ActionKind.DASH, ActionKind.DISENGAGE) and not action.bonus:
            return True
    return False


@dataclass(frozen=True)
class RoutingPolicy:
    primary_model: str
    secondary_model: str | None = None

    def model_for(self, menu: list[Action]) -> str:
        if self.secondary_model is None or is_major_menu(menu):
            return self.primary_model
        return self.secondary_model


@dataclass(frozen=True)
class MixSchedule:
    llm_fraction: float = 0.20

    def __post_init__(self):
        if not 0.0 <= self.llm_fraction <= 1.0:
            raise ValueError("llm_fraction must be within [0, 1]")


def assign_adversary(episode_counter: int, schedule: MixSchedule,
                     rng: RngStream) -> str:
    """Per-episode draw: "llm" with the configured fraction, else "rules"."""
    return "llm" if rng.random() < schedule.llm_fraction else "rules"


# ---------------------------------------------------------------------------
# The policy
# ---------------------------------------------------------------------------


class LlmPolicy:
    """Adversary that asks a chat endpoint to pick a menu index.

    Transport errors, garbage replies, and out-of-range picks all
    degrade to a uniform random legal action; every exchange lands in
    ``telemetry``.
    """

    def __init__(self, client: ChatClient, routing: RoutingPolicy,
                 use_tools: bool = False):
        self.client = client
        self.routing = routing
        self.use_tools = use_tools
        self.telemetry: list[ChatExchange] = []

    @classmethod
    def from_params(cls, params: dict) -> "LlmPolicy":
        client = ChatClient(
            endpoint=params["endpoint"],
            timeout=params.get("timeout", 30.0),
            retries=params.get("retries", 2),
            temperature=params.get("temperature", 0.0),
            api_key=params.get("api_key"),
        )
        routing = RoutingPolicy(
            primary_model=params.get("model", "primary"),
            secondary_model=params.get("secondary_model"),
        )
        return cls(client, routing, use_tools=params.get("use_tools", False))

    def choose(self, state: GameState, rng: RngStream) -> Action:
        menu = enumerate_actions(state)
        model = self.routing.model_for(menu)
        prompt = build_prompt(state, state.active_id)
        messages = [{"role": "user", "content": prompt}]

        reply: str | None = None
        latency = 0.0
        reason: str | None = None
        start = time.monotonic()
        try:
            reply, latency = self.client.complete(messages, model,
                                                  use_tools=self.use_tools)
        except ChatTransportError as exc:
            latency = time.monotonic() - start
            reason = f"transport: {exc}"

        index: int | None = None
        if reply is not None:
            index = parse_response(reply, len(menu))
            if index is None:
                reason = "unparseable reply"

        exchange = ChatExchange(model=model, reply_text=reply, latency=latency,
                                valid=index is not None, fallback_reason=reason)
        self.telemetry.append(exchange)
        if index is None:
            return rng.choice(menu)
        return menu[index]

    def validity_rate(self) -> float:
        if not self.telemetry:
            return 0.0
        return sum(1 for e in self.telemetry if e.valid) / len(self.telemetry)

    def write_telemetry(self, path) -> None:
        with open(path, "w") as fh:
            for exchange in self.telemetry:
                fh.write(json.dumps(exchange.to_json(), sort_keys=True) + "\n")
