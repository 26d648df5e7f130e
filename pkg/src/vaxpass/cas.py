"""Content-addressed blob store standing in for IPFS.

Blobs are keyed by their Keccak-256 digest (raw digest, no multihash
framing), so every stored object is self-certifying: re-hashing the bytes
returned by :meth:`ContentStore.get` always reproduces the id.  There is
no delete or update; an optional directory backend persists one file per
content id named by its hex digest.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .crypto.hashing import Digest
from .errors import InvalidArgument, NotFound


@dataclass(frozen=True, slots=True)
class ContentID:
    """Digest-derived address of an immutable blob."""

    digest: Digest

    @classmethod
    def of(cls, blob: bytes) -> "ContentID":
        return cls(Digest.of(blob))

    @classmethod
    def from_hex(cls, text: str) -> "ContentID":
        return cls(Digest.from_hex(text))

    def hex(self) -> str:
        return self.digest.hex()

    def __repr__(self) -> str:
        return f"ContentID({self.hex()[:16]}…)"


class ContentStore:
    """In-memory immutable put/get store with optional directory persistence."""

    def __init__(self, persist_dir: str | Path | None = None):
        self._blobs: dict[bytes, bytes] = {}
        self._dir = Path(persist_dir) if persist_dir is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            for f in self._dir.iterdir():
                if f.is_file():
                    self._blobs[bytes.fromhex(f.name)] = f.read_bytes()

    def put(self, blob: bytes) -> ContentID:
        if not blob:
            raise InvalidArgument("refusing to store an empty blob")
        cid = ContentID.of(blob)
        if cid.digest.value not in self._blobs:
            self._blobs[cid.digest.value] = blob
            if self._dir is not None:
                (self._dir / cid.hex()).write_bytes(blob)
        return cid

    def get(self, cid: ContentID) -> bytes:
        try:
            return self._blobs[cid.digest.value]
        except KeyError:
            raise NotFound(f"unknown content id {cid.hex()}") from None

    def __contains__(self, cid: ContentID) -> bool:
        return cid.digest.value in self._blobs

    def __len__(self) -> int:
        return len(self._blobs)
