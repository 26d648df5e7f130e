"""Sorted-leaf Merkle trees committing to vaccine-vial ID sets.

Leaves are the distinct vial IDs in ascending byte order, hashed
individually; each internal node is the hash of its children's
concatenation.  An unpaired node at any level is paired with a copy of
itself, so tree depth is always ceil(log2(n)).  Membership proofs list the
sibling digest and side for each level, bottom-up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..errors import DuplicateLeaf, InvalidArgument, NotALeaf
from .hashing import Digest, keccak256

LEFT = "L"
RIGHT = "R"


@dataclass(frozen=True, slots=True)
class MerkleProof:
    """Membership proof: leaf value plus bottom-up (side, sibling) path.

    ``side`` is the sibling's position: ``L`` means the sibling is hashed on
    the left of the running node.
    """

    leaf: bytes
    path: tuple[tuple[str, Digest], ...]
    claimed_root: Digest

    def siblings_blob(self) -> bytes:
        """Concatenated sibling digests, the preimage of the on-chain
        proof commitment."""
        return b"".join(d.value for _, d in self.path)

    def to_text(self) -> str:
        lines = [self.leaf.hex()]
        lines += [f"{side}{digest.hex()}" for side, digest in self.path]
        lines.append(self.claimed_root.hex())
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "MerkleProof":
        lines = [ln for ln in text.splitlines() if ln]
        if len(lines) < 2:
            raise InvalidArgument("truncated proof text")
        leaf = bytes.fromhex(lines[0])
        path = []
        for ln in lines[1:-1]:
            side, hexd = ln[0], ln[1:]
            if side not in (LEFT, RIGHT):
                raise InvalidArgument(f"bad side flag {side!r}")
            path.append((side, Digest.from_hex(hexd)))
        return cls(leaf=leaf, path=tuple(path), claimed_root=Digest.from_hex(lines[-1]))


class MerkleTree:
    """Commitment to a set of byte-string IDs with log-size membership proofs."""

    def __init__(self, vial_ids: Iterable[bytes]):
        leaves = list(vial_ids)
        if not leaves:
            raise InvalidArgument("merkle tree needs at least one leaf")
        if len(set(leaves)) != len(leaves):
            raise DuplicateLeaf("duplicate vial ids in tree input")
        self.leaves: list[bytes] = sorted(leaves)
        self.levels: list[list[Digest]] = [[Digest.of(v) for v in self.leaves]]
        while len(self.levels[-1]) > 1:
            prev = self.levels[-1]
            nxt = []
            for i in range(0, len(prev), 2):
                left = prev[i]
                right = prev[i + 1] if i + 1 < len(prev) else prev[i]
                nxt.append(Digest(keccak256(left.value + right.value)))
            self.levels.append(nxt)
        self.root: Digest = self.levels[-1][0]
        self._index: dict[bytes, int] = {leaf: i for i, leaf in enumerate(self.leaves)}

    def __contains__(self, vial_id: bytes) -> bool:
        return vial_id in self._index

    def prove(self, vial_id: bytes) -> MerkleProof:
        idx = self._index.get(vial_id)
        if idx is None:
            raise NotALeaf(f"{vial_id!r} is not a leaf of this tree")
        path: list[tuple[str, Digest]] = []
        for level in self.levels[:-1]:
            sib = idx ^ 1
            if sib >= len(level):
                sib = idx  # unpaired node duplicates itself
            path.append((LEFT if sib < idx else RIGHT, level[sib]))
            idx //= 2
        return MerkleProof(leaf=vial_id, path=tuple(path), claimed_root=self.root)


def merkle_build(vial_ids: Iterable[bytes]) -> MerkleTree:
    return MerkleTree(vial_ids)


def merkle_prove(tree: MerkleTree, vial_id: bytes) -> MerkleProof:
    return tree.prove(vial_id)


def fold_proof(leaf: bytes, path: Iterable[tuple[str, Digest]]) -> Digest:
    """Fold a leaf up a sibling path to the root it implies."""
    node = keccak256(leaf)
    for side, sibling in path:
        if side == LEFT:
            node = keccak256(sibling.value + node)
        else:
            node = keccak256(node + sibling.value)
    return Digest(node)


def merkle_verify(proof: MerkleProof, root: Digest) -> bool:
    try:
        return fold_proof(proof.leaf, proof.path) == root
    except (TypeError, ValueError):
        return False
