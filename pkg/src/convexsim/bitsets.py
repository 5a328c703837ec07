"""Value sets as int bitmasks over identifiers 0..N-1.

Masks are the internal currency of the hull routines (cheap intersection,
hashable memo keys); the public API accepts any iterable of ids and returns
frozensets.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

import numpy as np


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def bits(mask: int) -> Iterator[int]:
    """Yield set bit positions in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_to_set(mask: int) -> frozenset[int]:
    return frozenset(bits(mask))


def mask_to_sorted(mask: int) -> tuple[int, ...]:
    return tuple(bits(mask))


def mask_to_bool(mask: int, n: int) -> np.ndarray:
    raw = mask.to_bytes((n + 7) // 8, "little")
    arr = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return arr[:n].astype(bool)


def bool_to_mask(arr: np.ndarray) -> int:
    packed = np.packbits(arr.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")
