"""Hierarchical, collision-resistant random substreams.

One root seed plus an arbitrary tuple of key parts (ints, strings, enums)
deterministically selects an independent Philox stream.  Streams keyed
differently never share draws, so adding trials or interleaving workers
cannot perturb existing streams.
"""

from __future__ import annotations

import enum
import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _encode(part) -> bytes:
    if isinstance(part, enum.Enum):
        part = part.value
    if isinstance(part, bool):
        part = int(part)
    if isinstance(part, int):
        return b"i" + part.to_bytes(16, "little", signed=True)
    if isinstance(part, str):
        return b"s" + part.encode("utf-8") + b"\x00"
    raise TypeError(f"unsupported substream key part: {part!r}")


def stream_key(seed: int, *parts) -> tuple:
    """128-bit Philox key derived from the seed and key parts."""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(16, "little", signed=True))
    for part in parts:
        h.update(_encode(part))
    digest = h.digest()
    return (
        int.from_bytes(digest[:8], "little") & _MASK64,
        int.from_bytes(digest[8:], "little") & _MASK64,
    )


def substream(seed: int, *parts) -> np.random.Generator:
    """Independent generator for (seed, parts)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *parts)))


class Stream:
    """A substream handle that can spawn child streams by key extension."""

    __slots__ = ("seed", "parts")

    def __init__(self, seed: int, *parts):
        self.seed = int(seed)
        self.parts = parts

    def child(self, *parts) -> "Stream":
        return Stream(self.seed, *self.parts, *parts)

    def generator(self) -> np.random.Generator:
        return substream(self.seed, *self.parts)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Stream(seed={self.seed}, parts={self.parts!r})"
