"""Counter-based deterministic random stream.

Every stochastic operation in the package draws from an injected
RngStream so that a fight, a training run, or a whole tournament is
reproducible from a single 64-bit seed.  Streams can be split into
independent child streams (one per fight, per episode, ...) without
the children ever sharing draws with the parent.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SPLIT_SALT = 0x5851F42D4C957F2D


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into a seed, giving an independent child seed."""
    s = seed & _MASK64
    for k in keys:
        s = _mix64((s ^ (k & _MASK64)) + _SPLIT_SALT & _MASK64)
    return s


class RngStream:
    """Deterministic stream of draws from a 64-bit seed.

    The stream is counter-based: draw ``i`` depends only on
    ``(seed, i)``, so a stream can be reconstructed mid-sequence from
    ``(seed, position)``.
    """

    __slots__ = ("seed", "position")

    def __init__(self, seed: int, position: int = 0):
        self.seed = seed & _MASK64
        self.position = position

    def next_u64(self) -> int:
        self.position += 1
        return _mix64((self.seed + self.position * _GOLDEN) & _MASK64)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], consuming exactly one draw."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        # modulo bias is < span / 2**64, irrelevant for dice-sized spans
        return lo + self.next_u64() % span

    def random(self) -> float:
        """Uniform float in [0, 1), consuming exactly one draw."""
        return (self.next_u64() >> 11) * 2.0**-53

    def choice(self, seq):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.next_u64() % len(seq)]

    def split(self, *keys: int) -> "RngStream":
        """Independent child stream identified by integer keys."""
        return RngStream(derive_seed(self.seed, *keys))

    def clone(self) -> "RngStream":
        return RngStream(self.seed, self.position)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed:#x}, position={self.position})"
