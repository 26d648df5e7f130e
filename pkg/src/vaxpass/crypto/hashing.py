"""Keccak-256 hashing, 32-byte digests and hash commitments.

The digest function is original Keccak-256 (pad byte 0x01), the variant used
by Ethereum tooling, not the later FIPS-202 SHA3-256 (pad byte 0x06).
Implemented in pure Python because no Keccak-capable package is available in
this environment; hashlib only ships the FIPS variant.
"""

from __future__ import annotations

from dataclasses import dataclass

DIGEST_SIZE = 32

_MASK = (1 << 64) - 1
_RATE = 136  # bytes, for capacity 512

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A,
    0x8000000080008000, 0x000000000000808B, 0x0000000080000001,
    0x8000000080008081, 0x8000000000008009, 0x000000000000008A,
    0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089,
    0x8000000000008003, 0x8000000000008002, 0x8000000000000080,
    0x000000000000800A, 0x800000008000000A, 0x8000000080008081,
    0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# rho rotation offsets indexed x + 5*y
_ROTATIONS = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

# pi permutation: lane (x, y) moves to (y, 2x+3y); dest index for each source
_PI_DEST = tuple((y + 5 * ((2 * x + 3 * y) % 5)) for y in range(5) for x in range(5))
# invert so we can gather: _PI_SRC[dest] = source
_PI_SRC = tuple(_PI_DEST.index(i) for i in range(25))


def _keccak_f(state: list[int]) -> None:
    for rc in _ROUND_CONSTANTS:
        # theta
        c = [state[x] ^ state[x + 5] ^ state[x + 10] ^ state[x + 15] ^ state[x + 20]
             for x in range(5)]
        for x in range(5):
            d = c[(x - 1) % 5] ^ (((c[(x + 1) % 5] << 1) | (c[(x + 1) % 5] >> 63)) & _MASK)
            for y in range(0, 25, 5):
                state[x + y] ^= d
        # rho + pi
        b = [0] * 25
        for i in range(25):
            s = _PI_SRC[i]
            r = _ROTATIONS[s]
            lane = state[s]
            b[i] = ((lane << r) | (lane >> (64 - r))) & _MASK if r else lane
        # chi
        for y in range(0, 25, 5):
            row = b[y:y + 5]
            for x in range(5):
                state[y + x] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5] & _MASK)
        # iota
        state[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Return the 32-byte Keccak-256 digest of ``data``."""
    state = [0] * 25
    # absorb full rate-sized blocks, then the padded final block
    padded = data + b"\x01" + b"\x00" * (_RATE - 1 - len(data) % _RATE)
    padded = padded[:len(padded) - 1] + bytes([padded[-1] | 0x80])
    for off in range(0, len(padded), _RATE):
        block = padded[off:off + _RATE]
        for i in range(_RATE // 8):
            state[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
        _keccak_f(state)
    return b"".join(state[i].to_bytes(8, "little") for i in range(4))


@dataclass(frozen=True, slots=True)
class Digest:
    """A 32-byte hash output, the only payload type contracts accept."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes")

    @classmethod
    def of(cls, data: bytes) -> "Digest":
        return cls(keccak256(data))

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        return cls(bytes.fromhex(text))

    def hex(self) -> str:
        return self.value.hex()

    def __repr__(self) -> str:  # keep logs short
        return f"Digest({self.value.hex()[:16]}…)"


def commit(message: bytes) -> Digest:
    """Commitment to a byte string: plain hash, verified by recomputation."""
    return Digest.of(message)


def commit_verify(commitment: Digest, message: bytes) -> bool:
    return commit(message) == commitment
