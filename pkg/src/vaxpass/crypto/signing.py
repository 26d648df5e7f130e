"""Digital signatures over party key material.

Ed25519 via the ``cryptography`` package: EUF-CMA secure and deterministic,
which keeps event logs replayable byte-for-byte.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from ..errors import DecodeError

SEED_SIZE = 32
SIGNATURE_SIZE = 64


@dataclass(frozen=True, slots=True)
class KeyPair:
    """Signing key pair; ``pk`` is the 32-byte public encoding."""

    sk: bytes
    pk: bytes

    def __repr__(self) -> str:
        return f"KeyPair(pk={self.pk.hex()[:16]}…)"


def keygen(rng: random.Random) -> KeyPair:
    seed = rng.randbytes(SEED_SIZE)
    priv = Ed25519PrivateKey.from_private_bytes(seed)
    return KeyPair(sk=seed, pk=priv.public_key().public_bytes_raw())


def sign(sk: bytes, message: bytes) -> bytes:
    try:
        priv = Ed25519PrivateKey.from_private_bytes(sk)
    except (ValueError, TypeError) as exc:
        raise DecodeError(f"bad signing key: {exc}") from exc
    return priv.sign(message)


def verify(pk: bytes, message: bytes, signature: bytes) -> bool:
    try:
        pub = Ed25519PublicKey.from_public_bytes(pk)
    except (ValueError, TypeError) as exc:
        raise DecodeError(f"bad public key: {exc}") from exc
    if not isinstance(signature, bytes) or len(signature) != SIGNATURE_SIZE:
        return False
    try:
        pub.verify(signature, message)
        return True
    except InvalidSignature:
        return False
