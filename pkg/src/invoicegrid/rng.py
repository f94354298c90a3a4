"""Deterministic seeding primitives shared across the pipeline.

Everything downstream of a seed must be platform-stable, so the two hash
functions here are fixed-width integer recurrences rather than anything from
`hashlib` (whose output would be fine) or `hash()` (whose output would not).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
_SPLITMIX_MUL2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output), both u64."""
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SPLITMIX_MUL1) & _MASK64
    z = ((z ^ (z >> 27)) * _SPLITMIX_MUL2) & _MASK64
    z = z ^ (z >> 31)
    return state, z


class SplitMix64:
    """Tiny streaming wrapper over `splitmix64` for drawing u64s and floats."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state, out = splitmix64(self._state)
        return out

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)


def fnv1a64(data: bytes | str) -> int:
    """FNV-1a 64-bit over bytes; strings are hashed as UTF-8."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mix_seed(base: int, index: int) -> int:
    """Per-document seed: one splitmix64 output of (base + index).

    Adjacent indices land in unrelated parts of the stream, so per-document
    generators never correlate even though indices are sequential.
    """
    _, out = splitmix64((base + index) & _MASK64)
    return out
