"""Portable, explicitly seeded random number streams.

Every randomized operation in the engine draws from a Philox counter-based
generator whose 128-bit key is derived from a user seed plus a "path" of
integers or short strings (e.g. ``("tree", 17)``). Philox produces the same
stream on every platform, and independent paths give independent streams, so
serial and parallel execution of the same job are bit-identical.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 mixing function."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fold(state: int, value: int) -> int:
    return splitmix64(state ^ (value & _MASK64))


def derive_key(seed: int, *path: int | str) -> tuple[int, int]:
    """Derive a 128-bit Philox key from a seed and a stream path.

    Path elements may be integers or short ASCII tags; tags are folded in
    byte-wise so distinct tags give unrelated keys.
    """
    state = splitmix64(seed & _MASK64)
    for item in path:
        if isinstance(item, str):
            encoded = item.encode("ascii")
            # tag + length delimit elements so ("ab") != ("a", "b")
            state = _fold(state, 0x53 ^ (len(encoded) << 8))
            for byte in encoded:
                state = _fold(state, byte ^ 0xA5)
        else:
            state = _fold(state, 0x49)
            state = _fold(state, int(item))
    lo = splitmix64(state)
    hi = splitmix64(lo)
    return lo, hi


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Return an independent Generator for (seed, path)."""
    lo, hi = derive_key(seed, *path)
    key = np.array([lo, hi], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *path: int | str) -> int:
    """Collapse (seed, path) to a plain 63-bit integer sub-seed."""
    lo, _ = derive_key(seed, *path)
    return lo >> 1
