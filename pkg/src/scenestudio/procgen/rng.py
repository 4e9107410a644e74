"""Counter-based random numbers for scene synthesis.

Every draw is a pure function of (seed, stream, counter) built on the
splitmix64 finalizer, so any part of a scene can be regenerated in isolation
and editing one catalog call never shifts the noise feeding another: each
call owns the stream matching its catalog position.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step: increment by the golden gamma, then finalize."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def draw_u64(seed: int, stream: int, counter: int) -> int:
    """The (seed, stream, counter) lattice point as a uniform 64-bit word.

    Each component is avalanched before the next is folded in, so adjacent
    keys land on unrelated outputs.
    """
    x = splitmix64(seed & _MASK)
    x = splitmix64(x ^ (stream & _MASK))
    x = splitmix64(x ^ (counter & _MASK))
    return x


def draw_unit(seed: int, stream: int, counter: int) -> float:
    """Uniform float in [0, 1) with 53 random bits."""
    return (draw_u64(seed, stream, counter) >> 11) * (2.0 ** -53)


class CounterRng:
    """Sequential view over one stream: a stateful counter over draw_unit."""

    def __init__(self, seed: int, stream: int, counter: int = 0):
        self.seed = seed
        self.stream = stream
        self.counter = counter

    def unit(self) -> float:
        v = draw_unit(self.seed, self.stream, self.counter)
        self.counter += 1
        return v

    def uniform(self, lo: float, hi: float) -> float:
        return lo + self.unit() * (hi - lo)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (modulo bias is negligible at 64 bits)."""
        v = draw_u64(self.seed, self.stream, self.counter)
        self.counter += 1
        return lo + v % (hi - lo + 1)
