"""Bit-level PMI packing.

Fields are unsigned big-endian integers of width ``ceil(log2(n_values))``
(zero width when a field has a single value), written in layout order and
padded with zero bits to a whole byte.  A layout is one function that both
writes and reads, so the two directions cannot drift apart.
"""
from __future__ import annotations

from .quantizers import bits_for


class BitWriter:
    def __init__(self):
        self._bits: list[int] = []

    @property
    def n_bits(self) -> int:
        return len(self._bits)

    def uint(self, value, n_values: int) -> int:
        if value is None:
            raise ValueError("missing field value")
        value = int(value)
        if not 0 <= value < n_values:
            raise ValueError(f"field value {value} outside [0, {n_values})")
        width = bits_for(n_values)
        self._bits.extend((value >> (width - 1 - k)) & 1 for k in range(width))
        return value

    def choice(self, value, options) -> int:
        options = list(options)
        if value not in options:
            raise ValueError(f"field value {value} not in {options}")
        return options[self.uint(options.index(value), len(options))]

    def to_bytes(self) -> bytes:
        bits = self._bits + [0] * (-len(self._bits) % 8)
        return bytes(
            sum(b << (7 - k) for k, b in enumerate(bits[i:i + 8])) for i in range(0, len(bits), 8)
        )


class BitReader:
    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0

    @property
    def n_bits(self) -> int:
        return self._pos

    def _bit(self) -> int:
        byte, off = divmod(self._pos, 8)
        if byte >= len(self._data):
            raise ValueError("payload truncated")
        self._pos += 1
        return (self._data[byte] >> (7 - off)) & 1

    def uint(self, _value, n_values: int) -> int:
        width = bits_for(n_values)
        value = 0
        for _ in range(width):
            value = (value << 1) | self._bit()
        if value >= n_values:
            raise ValueError(f"decoded field {value} outside [0, {n_values})")
        return value

    def choice(self, _value, options) -> int:
        options = list(options)
        return options[self.uint(None, len(options))]

    def finish(self) -> None:
        """Require only zero padding after the last field."""
        total = 8 * len(self._data)
        if total - self._pos >= 8:
            raise ValueError(f"{total - self._pos} trailing bits after payload")
        while self._pos < total:
            if self._bit():
                raise ValueError("nonzero padding bit")


def field(pmi, name: str, *index):
    """``pmi.name[index...]`` or None when laying out a read."""
    if pmi is None:
        return None
    value = getattr(pmi, name)
    for i in index:
        value = value[i]
    return value
