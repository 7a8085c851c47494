"""A small round robin with matrix and leaderboard output.

Run: python3 demos/demo_07_tournament.py
"""

from srdarena.policies import PolicyRef
from srdarena.tournament import leaderboard, leaderboard_text, round_robin

roster = [
    PolicyRef(id="rules", kind="rules"),
    PolicyRef(id="random", kind="random"),
    PolicyRef(id="inert", kind="inert"),
]

matrix = round_robin(roster, fights_per_pair=10, seed=42, shared_seeds=True,
                     class_mode="four_classes")

print("win/loss/tie matrix (row agent's perspective, shared seeds):\n")
print(matrix.to_text())
print("leaderboard:\n")
print(leaderboard_text(leaderboard(matrix)))
print("with --shared-seeds mirrored cells come from the same fights, so "
      "the matrix is exactly antisymmetric and wins equal losses globally.")
