"""Deterministic per-component seed derivation.

All randomness flows from the single run seed. Each component gets
derive_seed(seed, tag) where tag is a fixed string; the derivation is
FNV-1a 64 over the tag, XORed into the seed, finalized by the splitmix64
mix function.
"""

_MASK = (1 << 64) - 1


def fnv1a64(data: str) -> int:
    h = 0xCBF29CE484222325
    for byte in data.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK
    return h


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, tag: str) -> int:
    return splitmix64((seed & _MASK) ^ fnv1a64(tag))
