"""State-action value network, replay buffer, and the training loop.

The network scores one (observation, encoded action) pair at a time:
three 3x3 valid convolutions collapse the 16x7x7 viewport to 64
features, six embedding tables cover the action encoding, and a
269-64-32-16-1 head emits the scalar value.  Menus are scored by
computing the conv features once and batching the head across actions.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .env import CHANNELS, SELF_FEATURES, VOCAB_SIZES, CombatEnv, Observation
from .rng import RngStream, derive_seed

CONV_FLAT = 64
EMBED_DIMS = {
    "action_type": 64,
    "binary_action": 16,
    "binary_subtype": 16,
    "weapon_type": 32,
    "entity_type": 32,
    "terrain_type": 32,
}
EMBED_ORDER = tuple(EMBED_DIMS)
HEAD_INPUT = CONV_FLAT + sum(EMBED_DIMS.values()) + SELF_FEATURES  # 269
HEAD_WIDTHS = (64, 32, 16, 1)

CHECKPOINT_VERSION = 1


class QNetwork:
    """Q(s, a) scorer with explicit forward/backward passes."""

    def __init__(self, seed: int = 0):
        rng = np.random.default_rng(seed)
        p: dict[str, np.ndarray] = {}
        p["conv1_w"] = nn.he_uniform(rng, (16, CHANNELS, 3, 3), CHANNELS * 9)
        p["conv1_b"] = np.zeros(16)
        p["conv2_w"] = nn.he_uniform(rng, (32, 16, 3, 3), 16 * 9)
        p["conv2_b"] = np.zeros(32)
        p["conv3_w"] = nn.he_uniform(rng, (64, 32, 3, 3), 32 * 9)
        p["conv3_b"] = np.zeros(64)
        for name, dim in EMBED_DIMS.items():
            p[f"emb_{name}"] = rng.uniform(-0.05, 0.05, (VOCAB_SIZES[name], dim))
        widths = (HEAD_INPUT,) + HEAD_WIDTHS
        for i in range(len(HEAD_WIDTHS)):
            p[f"fc{i + 1}_w"] = nn.he_uniform(rng, (widths[i], widths[i + 1]), widths[i])
            p[f"fc{i + 1}_b"] = np.zeros(widths[i + 1])
        # zero output layer: initial Q is exactly 0, so early TD targets
        # reduce to the observed rewards and greedy ties start at index 0
        p["fc4_w"][:] = 0.0
        self.params = p

    # -- evaluation paths (no caches kept) ----------------------------------

    def conv_features(self, tiles: np.ndarray) -> np.ndarray:
        """(B,16,7,7) -> (B,64) through the conv stack."""
        h = tiles
        for i in (1, 2, 3):
            h, _ = nn.conv2d_forward(h, self.params[f"conv{i}_w"], self.params[f"conv{i}_b"])
            h, _ = nn.relu_forward(h)
        return h.reshape(h.shape[0], CONV_FLAT)

    def _embed(self, ids: np.ndarray) -> np.ndarray:
        parts = [
            self.params[f"emb_{name}"][ids[:, col]]
            for col, name in enumerate(EMBED_ORDER)
        ]
        return np.concatenate(parts, axis=1)

    def head_q(self, conv_flat: np.ndarray, ids: np.ndarray,
               feats: np.ndarray) -> np.ndarray:
        z = np.concatenate([conv_flat, self._embed(ids), feats], axis=1)
        h = z
        for i in range(1, len(HEAD_WIDTHS) + 1):
            h, _ = nn.linear_forward(h, self.params[f"fc{i}_w"], self.params[f"fc{i}_b"])
            if i < len(HEAD_WIDTHS):
                h, _ = nn.relu_forward(h)
        return h[:, 0]

    def q_batch(self, tiles: np.ndarray, ids: np.ndarray,
                feats: np.ndarray) -> np.ndarray:
        return self.head_q(self.conv_features(tiles), ids, feats)

    def q_menu(self, observation: Observation) -> np.ndarray:
        """Score every legal action of one observation in a single pass."""
        legal = observation.legal
        tiles = observation.tiles.astype(np.float64)[None]
        conv = self.conv_features(tiles)  # (1, 64)
        n = len(legal)
        ids = np.array([enc.as_ids()[:6] for enc in legal], dtype=np.int64)
        feats = np.repeat(observation.features.astype(np.float64)[None], n, axis=0)
        return self.head_q(np.repeat(conv, n, axis=0), ids, feats)

    def q_value(self, observation: Observation, encoding) -> float:
        ids = np.array([encoding.as_ids()[:6]], dtype=np.int64)
        for col, name in enumerate(EMBED_ORDER):
            if not 0 <= ids[0, col] < VOCAB_SIZES[name]:
                raise ValueError(f"{name} id {ids[0, col]} outside vocabulary")
        tiles = observation.tiles.astype(np.float64)[None]
        feats = observation.features.astype(np.float64)[None]
        return float(self.head_q(self.conv_features(tiles), ids, feats)[0])

    # -- training path -------------------------------------------------------

    def forward(self, tiles: np.ndarray, ids: np.ndarray, feats: np.ndarray):
        caches = {}
        h = tiles
        for i in (1, 2, 3):
            h, caches[f"conv{i}"] = nn.conv2d_forward(
                h, self.params[f"conv{i}_w"], self.params[f"conv{i}_b"])
            h, caches[f"conv{i}_relu"] = nn.relu_forward(h)
        conv_shape = h.shape
        flat = h.reshape(h.shape[0], CONV_FLAT)

        emb_parts = []
        for col, name in enumerate(EMBED_ORDER):
            part, _ = nn.embedding_forward(self.params[f"emb_{name}"], ids[:, col])
            emb_parts.append(part)
        z = np.concatenate([flat] + emb_parts + [feats], axis=1)

        caches["ids"] = ids
        caches["conv_shape"] = conv_shape
        h = z
        for i in range(1, len(HEAD_WIDTHS) + 1):
            h, caches[f"fc{i}"] = nn.linear_forward(
                h, self.params[f"fc{i}_w"], self.params[f"fc{i}_b"])
            if i < len(HEAD_WIDTHS):
                h, caches[f"fc{i}_relu"] = nn.relu_forward(h)
        return h[:, 0], caches

    def backward(self, caches, dq: np.ndarray) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        dh = dq[:, None]
        for i in range(len(HEAD_WIDTHS), 0, -1):
            dh, dw, db = nn.linear_backward(dh, caches[f"fc{i}"], self.params[f"fc{i}_w"])
            grads[f"fc{i}_w"] = dw
            grads[f"fc{i}_b"] = db
            if i > 1:
                dh = nn.relu_backward(dh, caches[f"fc{i - 1}_relu"])

        offset = 0
        dflat = dh[:, offset:offset + CONV_FLAT]
        offset += CONV_FLAT
        ids = caches["ids"]
        for col, name in enumerate(EMBED_ORDER):
            dim = EMBED_DIMS[name]
            grads[f"emb_{name}"] = nn.embedding_backward(
                dh[:, offset:offset + dim], ids[:, col], VOCAB_SIZES[name])
            offset += dim
        # feats slice carries no parameters

        dc = dflat.reshape(caches["conv_shape"])
        for i in (3, 2, 1):
            dc = nn.relu_backward(dc, caches[f"conv{i}_relu"])
            dc, dw, db = nn.conv2d_backward(dc, caches[f"conv{i}"])
            grads[f"conv{i}_w"] = dw
            grads[f"conv{i}_b"] = db
        return grads

    # -- weight management -----------------------------------------------

    def copy_from(self, other: "QNetwork") -> None:
        for key, value in other.params.items():
            self.params[key] = value.copy()

    def clone(self) -> "QNetwork":
        twin = QNetwork.__new__(QNetwork)
        twin.params = {k: v.copy() for k, v in self.params.items()}
        return twin

    def parameter_count(self) -> int:
        return sum(v.size for v in self.params.values())


# ---------------------------------------------------------------------------
# Replay buffer and transitions
# ---------------------------------------------------------------------------


@dataclass
class Transition:
    tiles: np.ndarray
    feats: np.ndarray
    action_ids: np.ndarray  # (7,) encoded action
    reward: float
    next_tiles: np.ndarray
    next_feats: np.ndarray
    next_legal: np.ndarray  # (N, 7) encodings of the next legal menu
    done: bool

    @classmethod
    def from_step(cls, obs: Observation, encoding, reward: float,
                  next_obs: Observation, done: bool) -> "Transition":
        return cls(
            tiles=obs.tiles.astype(np.float64),
            feats=obs.features.astype(np.float64),
            action_ids=np.array(encoding.as_ids(), dtype=np.int64),
            reward=float(reward),
            next_tiles=next_obs.tiles.astype(np.float64),
            next_feats=next_obs.features.astype(np.float64),
            next_legal=np.array([e.as_ids() for e in next_obs.legal], dtype=np.int64),
            done=bool(done),
        )


class ReplayBuffer:
    """Fixed-capacity ring with uniform sampling."""

    def __init__(self, capacity: int = 3000):
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def insert(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: RngStream) -> list[Transition]:
        if len(self._items) < batch_size:
            raise ValueError(
                f"buffer holds {len(self._items)} < batch size {batch_size}")
        return [self._items[rng.randint(0, len(self._items) - 1)]
                for _ in range(batch_size)]

    def oldest(self) -> Transition:
        if len(self._items) < self.capacity:
            return self._items[0]
        return self._items[self._cursor]


# ---------------------------------------------------------------------------
# Hyper-parameters
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    buffer_capacity: int = 3000
    batch_size: int = 64
    iterations: int = 1000
    train_steps_per_iteration: int = 2
    learning_rate: float = 0.001
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_final: float = 0.01
    epsilon_decay_frames: int = 1000
    target_update_every: int = 1
    horizon: int = 1024
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def epsilon_at(frame: int, config: TrainConfig | None = None) -> float:
    """Linear decay from start to final over the configured frame count."""
    cfg = config or TrainConfig()
    if frame < 0:
        raise ValueError("frame must be >= 0")
    if frame >= cfg.epsilon_decay_frames:
        return cfg.epsilon_final
    span = cfg.epsilon_start - cfg.epsilon_final
    return cfg.epsilon_start - span * frame / cfg.epsilon_decay_frames


def select_action(net: QNetwork, observation: Observation, epsilon: float,
                  rng: RngStream) -> int:
    """Epsilon-greedy over the legal menu; greedy ties go to the lowest index."""
    n = len(observation.legal)
    if n == 0:
        raise ValueError("observation has no legal actions")
    if rng.random() < epsilon:
        return rng.randint(0, n - 1)
    return int(np.argmax(net.q_menu(observation)))


def td_target(batch: list[Transition], target_net: QNetwork,
              gamma: float) -> np.ndarray:
    """r for terminal transitions, else r + gamma * max_a' Q_target(s', a')."""
    targets = np.array([t.reward for t in batch])
    live = [i for i, t in enumerate(batch) if not t.done and len(t.next_legal)]
    if not live:
        return targets
    tiles = np.stack([batch[i].next_tiles for i in live])
    conv = target_net.conv_features(tiles)

    rows_conv = []
    rows_ids = []
    rows_feats = []
    counts = []
    for j, i in enumerate(live):
        t = batch[i]
        n = len(t.next_legal)
        counts.append(n)
        rows_conv.append(np.repeat(conv[j:j + 1], n, axis=0))
        rows_ids.append(t.next_legal[:, :6])
        rows_feats.append(np.repeat(t.next_feats[None], n, axis=0))
    q = target_net.head_q(np.concatenate(rows_conv),
                          np.concatenate(rows_ids).astype(np.int64),
                          np.concatenate(rows_feats))
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    maxes = np.maximum.reduceat(q, offsets)
    for j, i in enumerate(live):
        targets[i] += gamma * maxes[j]
    return targets


def train_step(net: QNetwork, target_net: QNetwork, batch: list[Transition],
               lr: float, adam: nn.Adam, gamma: float) -> float:
    """One optimizer step on mean squared TD error; returns the pre-step loss."""
    targets = td_target(batch, target_net, gamma)
    tiles = np.stack([t.tiles for t in batch])
    ids = np.stack([t.action_ids for t in batch])[:, :6]
    feats = np.stack([t.feats for t in batch])
    q, caches = net.forward(tiles, ids, feats)
    diff = q - targets
    loss = float(np.mean(diff * diff))
    grads = net.backward(caches, 2.0 * diff / len(batch))
    adam.step(net.params, grads, lr)
    return loss


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    frames: int
    config: dict
    reward_curve: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def save(self, path) -> None:
        meta = json.dumps({
            "version": CHECKPOINT_VERSION,
            "frames": self.frames,
            "config": self.config,
        })
        np.savez(
            path,
            __meta__=np.frombuffer(meta.encode(), dtype=np.uint8),
            __curve__=np.array(self.reward_curve, dtype=np.float64),
            __losses__=np.array(self.losses, dtype=np.float64),
            **self.params,
        )

    @classmethod
    def load(cls, path) -> "Checkpoint":
        data = np.load(path)
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        params = {k: data[k] for k in data.files if not k.startswith("__")}
        return cls(params=params, frames=meta["frames"], config=meta["config"],
                   reward_curve=list(data["__curve__"]),
                   losses=list(data["__losses__"]))

    def build_network(self) -> QNetwork:
        net = QNetwork.__new__(QNetwork)
        net.params = {k: v.astype(np.float64).copy() for k, v in self.params.items()}
        return net


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def train(env_factory, config: TrainConfig | None = None,
          progress=None) -> Checkpoint:
    """Collect-then-update loop over the configured iteration count.

    Each iteration collects up to ``horizon`` env steps with the
    current epsilon schedule, applies the configured number of gradient
    steps, then synchronizes the target network.  The per-iteration
    mean terminal reward forms the reward curve.
    """
    cfg = config or TrainConfig()
    env: CombatEnv = env_factory()
    net = QNetwork(seed=derive_seed(cfg.seed, 0x11))
    target = net.clone()
    adam = nn.Adam(net.params)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    act_rng = RngStream(derive_seed(cfg.seed, 0xAC))
    sample_rng = RngStream(derive_seed(cfg.seed, 0x5A))

    frames = 0
    curve: list[float] = []
    losses: list[float] = []
    last_mean = 0.0
    obs = env.reset()

    for iteration in range(cfg.iterations):
        episode_rewards = []
        for _ in range(cfg.horizon):
            epsilon = epsilon_at(frames, cfg)
            index = select_action(net, obs, epsilon, act_rng)
            encoding = obs.legal[index]
            next_obs, reward, done, _ = env.step(index)
            buffer.insert(Transition.from_step(obs, encoding, reward, next_obs, done))
            frames += 1
            if done:
                episode_rewards.append(reward)
                obs = env.reset()
            else:
                obs = next_obs

        if len(buffer) >= cfg.batch_size:
            for _ in range(cfg.train_steps_per_iteration):
                batch = buffer.sample(cfg.batch_size, sample_rng)
                losses.append(train_step(net, target, batch, cfg.learning_rate,
                                         adam, cfg.gamma))
        if (iteration + 1) % cfg.target_update_every == 0:
            target.copy_from(net)

        if episode_rewards:
            last_mean = float(np.mean(episode_rewards))
        curve.append(last_mean)
        if progress is not None:
            progress(iteration, last_mean, frames)

    return Checkpoint(params={k: v.copy() for k, v in net.params.items()},
                      frames=frames, config=cfg.to_json(),
                      reward_curve=curve, losses=losses)
