"""Deterministic per-path seed derivation.

``derive_seed(master, index)`` applies the SplitMix64 finaliser to
``master + (index + 1) * 0x9E3779B97F4A7C15`` modulo 2**64. Seeds depend only
on ``(master, index)``, never on scheduling.
"""

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    if index < 0:
        raise ValueError("path index must be >= 0")
    return splitmix64((master & _MASK) + (index + 1) * _GAMMA)
