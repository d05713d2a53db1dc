"""Seeded xoshiro256** generator.

All randomness in the package is drawn from this generator so that runs are
reproducible bit-for-bit across platforms and implementations:

* state initialisation: four successive outputs of splitmix64 applied to the
  64-bit seed;
* uniform doubles: ``(next() >> 11) * 2**-53`` in ``[0, 1)``;
* standard normals: Box-Muller on consecutive uniform pairs ``(u1, u2)``,
  ``r = sqrt(-2 log(1 - u1))``, yielding ``r cos(2 pi u2)`` then
  ``r sin(2 pi u2)``; an odd request discards the unused sine value;
* substreams: the published 2**128-step jump polynomial.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_JUMP = (0x180EC6D33CFD0ABA, 0xD5A61266F0C9392C, 0xA9582618E03FC9AA, 0x39ABDC4529B1661C)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


class Xoshiro256StarStar:
    """xoshiro256** pseudo-random generator (Blackman & Vigna constants)."""

    def __init__(self, seed: int = 0):
        if not 0 <= int(seed) <= _MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        sm = int(seed)
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s

    @classmethod
    def from_state(cls, state) -> "Xoshiro256StarStar":
        obj = cls.__new__(cls)
        obj._s = [int(v) & _MASK for v in state]
        if not any(obj._s):
            raise ValueError("xoshiro256** state must not be all zero")
        return obj

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def jump(self) -> None:
        """Advance the state by 2**128 steps (non-overlapping substream)."""
        acc = [0, 0, 0, 0]
        for word in _JUMP:
            for b in range(64):
                if (word >> b) & 1:
                    acc = [a ^ s for a, s in zip(acc, self._s)]
                self.next_u64()
        self._s = acc

    def substream(self, index: int) -> "Xoshiro256StarStar":
        """Copy of this generator advanced by ``index + 1`` jumps."""
        child = Xoshiro256StarStar.from_state(self._s)
        for _ in range(index + 1):
            child.jump()
        return child

    def random(self, size: int | None = None):
        """Uniform doubles in [0, 1)."""
        if size is None:
            return (self.next_u64() >> 11) * 2.0**-53
        return np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(size)])

    def standard_normal(self, size: int | tuple[int, ...] | None = None):
        if size is None:
            return float(self.standard_normal(1)[0])
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = math.prod(shape)
        out = np.empty(n)
        i = 0
        while i < n:
            u1 = (self.next_u64() >> 11) * 2.0**-53
            u2 = (self.next_u64() >> 11) * 2.0**-53
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            out[i] = r * math.cos(2.0 * math.pi * u2)
            if i + 1 < n:
                out[i + 1] = r * math.sin(2.0 * math.pi * u2)
            i += 2
        return out.reshape(shape)


def as_generator(rng: "Xoshiro256StarStar | int | None") -> Xoshiro256StarStar:
    if isinstance(rng, Xoshiro256StarStar):
        return rng
    return Xoshiro256StarStar(0 if rng is None else int(rng))
