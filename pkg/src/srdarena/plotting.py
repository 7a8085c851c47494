"""Reward-curve plots from training CSVs."""

from __future__ import annotations

import csv
from pathlib import Path


def read_curve(path: str | Path) -> tuple[list[int], list[float]]:
    iterations: list[int] = []
    rewards: list[float] = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"empty reward csv: {path}")
        if header[:2] != ["iteration", "mean_reward"]:
            raise ValueError(f"unexpected csv header {header} in {path}")
        for row in reader:
            iterations.append(int(row[0]))
            rewards.append(float(row[1]))
    if not iterations:
        raise ValueError(f"no data rows in reward csv: {path}")
    return iterations, rewards


def write_curve(path: str | Path, rewards: list[float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mean_reward"])
        for i, reward in enumerate(rewards):
            writer.writerow([i, f"{reward:.6f}"])


def plot_curves(csv_paths: list[str | Path], out_path: str | Path,
                title: str = "Mean episode reward per iteration") -> None:
    """Overlay one curve per CSV into a PNG (headless backend)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for path in csv_paths:
        iterations, rewards = read_curve(path)
        ax.plot(iterations, rewards, label=Path(path).stem)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean reward")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def ascii_curve(csv_path: str | Path, width: int = 70, height: int = 12) -> str:
    """Terminal-friendly sparkline of one reward curve."""
    _, rewards = read_curve(csv_path)
    if len(rewards) > width:
        # bucket-average down to the target width
        bucket = len(rewards) / width
        rewards = [
            sum(rewards[int(i * bucket):int((i + 1) * bucket) or 1])
            / max(1, len(rewards[int(i * bucket):int((i + 1) * bucket) or 1]))
            for i in range(width)
        ]
    lo, hi = min(rewards), max(rewards)
    span = (hi - lo) or 1.0
    grid = [[" "] * len(rewards) for _ in range(height)]
    for x, value in enumerate(rewards):
        y = int((value - lo) / span * (height - 1))
        grid[height - 1 - y][x] = "*"
    lines = ["".join(row) for row in grid]
    lines.append(f"min {lo:.2f}  max {hi:.2f}  n {len(rewards)}")
    return "\n".join(lines)
