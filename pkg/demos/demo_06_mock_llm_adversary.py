"""The chat-prompt adversary against a scripted local endpoint.

Shows the exact prompt the adversary receives, then runs fights where
the endpoint cooperates, answers garbage, and errors out; the fight
never stalls because unusable replies fall back to random legal
actions.

Run: python3 demos/demo_06_mock_llm_adversary.py
"""

from srdarena.battlemap import load_builtin_map
from srdarena.characters import sheet_for_class
from srdarena.engine import new_fight
from srdarena.llm import ChatClient, LlmPolicy, RoutingPolicy, build_prompt
from srdarena.mockllm import MockLlmServer, http_error, reply, tool_reply
from srdarena.policies import RulesPolicy
from srdarena.rng import RngStream
from srdarena.tournament import run_fight

grid = load_builtin_map("wall")
state, _ = new_fight(grid, sheet_for_class("rogue"), sheet_for_class("wizard"),
                     RngStream(12))
print("== the prompt, verbatim ==")
print(build_prompt(state, state.active_id))

fighter = sheet_for_class("fighter")
scripts = {
    "cooperative (tool call, always action 1)": tool_reply(1),
    "garbage prose": reply("Hmm, I will ponder my options at length."),
    "flaky (HTTP 500 then text)": [http_error(500), reply("0: end my turn")],
}
for label, script in scripts.items():
    with MockLlmServer(script) as server:
        adversary = LlmPolicy(
            ChatClient(server.url, timeout=2.0, retries=1, backoff=0.01),
            RoutingPolicy("big-model", "small-model"),
        )
        record = run_fight(RulesPolicy(), adversary, grid, fighter, fighter,
                           seed=77, max_rounds=15, collect_events=False)
        print(f"\n== {label} ==")
        print(f"outcome: {record.winner} after {record.rounds} rounds; "
              f"{len(adversary.telemetry)} requests, "
              f"{adversary.validity_rate():.0%} parsed cleanly")
