"""Symbol alphabets used by the simulator.

Every constellation is normalised to zero mean and unit average energy, so
received power is carried entirely by the channel matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Kind(str, enum.Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"
    PSK8 = "8psk"
    APSK16 = "16apsk"


# DVB-S2 16APSK table (ETSI EN 302 307-1, Fig. 11): label -> (ring, angle in degrees)
_APSK16_TABLE = {
    0b1100: (0, 45.0),
    0b1110: (0, 135.0),
    0b1111: (0, 225.0),
    0b1101: (0, 315.0),
    0b0100: (1, 15.0),
    0b0000: (1, 45.0),
    0b1000: (1, 75.0),
    0b1010: (1, 105.0),
    0b0010: (1, 135.0),
    0b0110: (1, 165.0),
    0b0111: (1, 195.0),
    0b0011: (1, 225.0),
    0b1011: (1, 255.0),
    0b1001: (1, 285.0),
    0b0001: (1, 315.0),
    0b0101: (1, 345.0),
}

DEFAULT_RADIUS_RATIO = 2.85


@dataclass(frozen=True)
class Constellation:
    """A finite symbol alphabet with a bit label per point.

    ``points[i]`` carries the label ``labels[i]`` (an integer whose binary
    expansion, MSB first, is the bit group mapped onto that point).
    """

    kind: Kind
    points: np.ndarray
    labels: np.ndarray
    radius_ratio: float | None = None
    _index_of_label: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=complex)
        labels = np.asarray(self.labels, dtype=np.int64)
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

        k = points.size
        if k not in (2, 4, 8, 16):
            raise ValueError(f"constellation size must be 2, 4, 8 or 16, got {k}")
        if sorted(labels.tolist()) != list(range(k)):
            raise ValueError("bit labels must be a bijection onto all log2(K)-bit words")
        if np.min(np.abs(points[:, None] - points[None, :]) + np.eye(k)) <= 0:
            raise ValueError("constellation points must be pairwise distinct")
        if abs(np.mean(np.abs(points) ** 2) - 1.0) > 1e-12:
            raise ValueError("constellation must have unit average energy")
        if abs(np.mean(points)) > 1e-12:
            raise ValueError("constellation must have zero mean")

        inverse = np.empty(k, dtype=np.int64)
        inverse[labels] = np.arange(k)
        inverse.setflags(write=False)
        object.__setattr__(self, "_index_of_label", inverse)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.size))

    def bits_to_indices(self, bits) -> np.ndarray:
        bits = _as_bits(bits)
        q = self.bits_per_symbol
        if bits.size % q:
            raise ValueError(f"bit count {bits.size} is not a multiple of {q}")
        weights = 1 << np.arange(q - 1, -1, -1)
        words = bits.reshape(-1, q) @ weights
        return self._index_of_label[words]

    def indices_to_bits(self, indices) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        q = self.bits_per_symbol
        words = self.labels[indices.reshape(-1)]
        shifts = np.arange(q - 1, -1, -1)
        return ((words[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)

    def nearest(self, symbols) -> np.ndarray:
        """Index of the closest point for each symbol (lowest index on ties)."""
        symbols = np.asarray(symbols, dtype=complex)
        d = np.abs(symbols[..., None] - self.points) ** 2
        return np.argmin(d, axis=-1)


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError("bit string may only contain '0' and '1'")
        return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    b = np.asarray(bits).reshape(-1)
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ValueError("bits must be 0 or 1")
    return b.astype(np.uint8)


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


def build_constellation(kind, radius_ratio: float = DEFAULT_RADIUS_RATIO) -> Constellation:
    """Build one of the supported alphabets.

    PSK alphabets place point ``i`` at angle ``2*pi*i/K`` with Gray labels.
    16APSK uses the DVB-S2 ring layout and labelling; ``radius_ratio`` is the
    outer-to-inner ring radius ratio and is ignored for PSK.
    """
    kind = Kind(kind.lower() if isinstance(kind, str) else kind)
    if kind is Kind.APSK16:
        if not radius_ratio > 1:
            raise ValueError(f"16APSK radius ratio must exceed 1, got {radius_ratio}")
        inner = np.sqrt(16.0 / (4.0 + 12.0 * radius_ratio**2))
        labels = np.array(sorted(_APSK16_TABLE), dtype=np.int64)
        ring = np.array([_APSK16_TABLE[w][0] for w in labels])
        angle = np.deg2rad([_APSK16_TABLE[w][1] for w in labels])
        radius = np.where(ring == 0, inner, inner * radius_ratio)
        return Constellation(kind, radius * np.exp(1j * angle), labels, float(radius_ratio))

    k = {Kind.BPSK: 2, Kind.QPSK: 4, Kind.PSK8: 8}[kind]
    i = np.arange(k)
    points = np.exp(2j * np.pi * i / k)
    # exact values on the axes keep BPSK at {+1, -1}
    points = np.round(points.real, 15) + 1j * np.round(points.imag, 15)
    return Constellation(kind, points, _gray(i))


def modulate(c: Constellation, bits) -> np.ndarray:
    return c.points[c.bits_to_indices(bits)]


def demap_hard(c: Constellation, symbols) -> np.ndarray:
    return c.indices_to_bits(c.nearest(symbols))
