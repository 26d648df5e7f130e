"""Cryptographic primitives: hashing, commitments, signatures, Merkle
membership proofs, and proxy re-encryption."""

from .hashing import DIGEST_SIZE, Digest, commit, commit_verify, keccak256
from .merkle import (
    LEFT,
    RIGHT,
    MerkleProof,
    MerkleTree,
    fold_proof,
    merkle_build,
    merkle_prove,
    merkle_verify,
)
from .pre import (
    ORIGINAL,
    REENCRYPTED,
    Ciphertext,
    ReEncryptionKey,
    pre_decrypt,
    pre_encrypt,
    pre_keygen,
    pre_reencrypt,
    pre_rekey,
)
from .signing import KeyPair, keygen, sign, verify

__all__ = [
    "DIGEST_SIZE",
    "Digest",
    "commit",
    "commit_verify",
    "keccak256",
    "LEFT",
    "RIGHT",
    "MerkleProof",
    "MerkleTree",
    "fold_proof",
    "merkle_build",
    "merkle_prove",
    "merkle_verify",
    "ORIGINAL",
    "REENCRYPTED",
    "Ciphertext",
    "ReEncryptionKey",
    "pre_decrypt",
    "pre_encrypt",
    "pre_keygen",
    "pre_reencrypt",
    "pre_rekey",
    "KeyPair",
    "keygen",
    "sign",
    "verify",
]
