"""Unidirectional single-hop proxy re-encryption.

AFGH-style construction on the supersingular pairing group:

* secret key ``a``, public key ``a·G``
* original ciphertext under A:  ``(r·pkA, K·Z^r)`` with ``Z = ê(G, G)``,
  where ``K ∈ GT`` seeds a symmetric key for the message body
* re-encryption key A→B: ``(1/a)·pkB = (b/a)·G``
* re-encryption: ``ê(r·pkA, rk) = Z^{rb}`` — the result lives in GT, so a
  re-encrypted ciphertext structurally cannot be re-encrypted again
* B decrypts with ``1/b``; A decrypts originals via one pairing

The re-encryption key is a group element, so holding it (even together
with sk_B) reveals nothing about sk_A short of solving discrete log, and
it only transforms ciphertexts in the A→B direction.  The message body is
sealed with ChaCha20-Poly1305 under a key derived from K; any key mismatch
or ciphertext tampering surfaces as ``DecryptFailure``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from ..errors import DecodeError, DecryptFailure, SingleHopViolation
from . import pairing as grp
from .hashing import keccak256
from .signing import KeyPair

ORIGINAL = "original"
REENCRYPTED = "re-encrypted"

_NONCE_SIZE = 12


@dataclass(frozen=True, slots=True)
class ReEncryptionKey:
    """Transforms ciphertexts under one public key for a single target key."""

    material: bytes  # encoded curve point (b/a)·G

    def __repr__(self) -> str:
        return f"ReEncryptionKey({self.material.hex()[:16]}…)"


@dataclass(frozen=True, slots=True)
class Ciphertext:
    """Hybrid ciphertext; ``level`` tracks the single re-encryption hop."""

    level: str
    kem: bytes    # original: curve point r·pkA; re-encrypted: GT element
    blind: bytes  # K·Z^r in GT
    nonce: bytes
    body: bytes   # AEAD-sealed message

    def to_bytes(self) -> bytes:
        tag = b"\x00" if self.level == ORIGINAL else b"\x01"
        parts = [self.kem, self.blind, self.nonce, self.body]
        out = [tag]
        for part in parts:
            out.append(len(part).to_bytes(4, "big"))
            out.append(part)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Ciphertext":
        if not raw:
            raise DecodeError("empty ciphertext")
        level = ORIGINAL if raw[0] == 0 else REENCRYPTED
        parts = []
        off = 1
        for _ in range(4):
            if off + 4 > len(raw):
                raise DecodeError("truncated ciphertext")
            n = int.from_bytes(raw[off:off + 4], "big")
            off += 4
            if off + n > len(raw):
                raise DecodeError("truncated ciphertext")
            parts.append(raw[off:off + n])
            off += n
        if off != len(raw):
            raise DecodeError("trailing bytes in ciphertext")
        return cls(level, *parts)


def pre_keygen(rng: random.Random) -> KeyPair:
    sk = rng.randrange(1, grp.Q)
    pk = grp.ec_mul(sk, grp.GEN)
    return KeyPair(sk=sk.to_bytes(32, "big"), pk=grp.point_to_bytes(pk))


def _sym_key(k_elem: grp.Fp2) -> bytes:
    return keccak256(grp.fp2_to_bytes(k_elem))


def pre_encrypt(pk: bytes, message: bytes, rng: random.Random) -> Ciphertext:
    pk_point = grp.point_from_bytes(pk)
    z = grp.gt_generator()
    r = rng.randrange(1, grp.Q)
    u = rng.randrange(1, grp.Q)
    k_elem = grp.fp2_pow(z, u)
    kem = grp.ec_mul(r, pk_point)
    blind = grp.fp2_mul(k_elem, grp.fp2_pow(z, r))
    nonce = rng.randbytes(_NONCE_SIZE)
    body = ChaCha20Poly1305(_sym_key(k_elem)).encrypt(nonce, message, None)
    return Ciphertext(
        level=ORIGINAL,
        kem=grp.point_to_bytes(kem),
        blind=grp.fp2_to_bytes(blind),
        nonce=nonce,
        body=body,
    )


def pre_rekey(sk_a: bytes, pk_b: bytes) -> ReEncryptionKey:
    a = int.from_bytes(sk_a, "big")
    if not 0 < a < grp.Q:
        raise DecodeError("secret key out of range")
    pk_point = grp.point_from_bytes(pk_b)
    rk_point = grp.ec_mul(pow(a, -1, grp.Q), pk_point)
    return ReEncryptionKey(material=grp.point_to_bytes(rk_point))


def pre_reencrypt(rk: ReEncryptionKey, ct: Ciphertext) -> Ciphertext:
    if ct.level != ORIGINAL:
        raise SingleHopViolation("ciphertext was already re-encrypted")
    kem_point = grp.point_from_bytes(ct.kem)
    rk_point = grp.point_from_bytes(rk.material)
    kem_gt = grp.pairing(kem_point, rk_point)  # Z^{rb}
    return Ciphertext(
        level=REENCRYPTED,
        kem=grp.fp2_to_bytes(kem_gt),
        blind=ct.blind,
        nonce=ct.nonce,
        body=ct.body,
    )


def pre_decrypt(sk: bytes, ct: Ciphertext) -> bytes:
    a = int.from_bytes(sk, "big")
    if not 0 < a < grp.Q:
        raise DecodeError("secret key out of range")
    try:
        if ct.level == ORIGINAL:
            kem_point = grp.point_from_bytes(ct.kem)
            z_r = grp.fp2_pow(grp.pairing(kem_point, grp.GEN), pow(a, -1, grp.Q))
        else:
            kem_gt = grp.fp2_from_bytes(ct.kem)
            z_r = grp.fp2_pow(kem_gt, pow(a, -1, grp.Q))
        k_elem = grp.fp2_mul(grp.fp2_from_bytes(ct.blind), grp.fp2_inv(z_r))
    except DecodeError as exc:
        raise DecryptFailure(f"malformed ciphertext: {exc}") from exc
    try:
        return ChaCha20Poly1305(_sym_key(k_elem)).decrypt(ct.nonce, ct.body, None)
    except InvalidTag as exc:
        raise DecryptFailure("wrong key or tampered ciphertext") from exc
