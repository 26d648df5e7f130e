"""Deterministic simulated blockchain ledger.

Single-writer: all mutations happen through the methods below, applied in
call order (the paper's contracts assume serial execution, so no mempool
interleaving is modelled).  Time is a logical integer tick clock advanced
explicitly by scenarios.  Funds conservation — sum of balances plus
unreleased escrows equals the genesis total — is re-checked after every
mutating operation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping

from .crypto.hashing import Digest, keccak256
from .errors import EscrowNotFound, InsufficientFunds, InvalidArgument, VaxpassError

ADDRESS_SIZE = 32


@dataclass(frozen=True, slots=True)
class PartyAddress:
    """Opaque 32-byte party identifier derived from a public key."""

    id: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.id, bytes) or len(self.id) != ADDRESS_SIZE:
            raise ValueError(f"address must be {ADDRESS_SIZE} bytes")

    @classmethod
    def from_public_key(cls, pk: bytes) -> "PartyAddress":
        return cls(keccak256(pk))

    def hex(self) -> str:
        return self.id.hex()

    def __repr__(self) -> str:
        return f"PartyAddress({self.hex()[:12]}…)"


@dataclass(frozen=True, slots=True)
class EscrowId:
    id: int

    def __repr__(self) -> str:
        return f"EscrowId({self.id})"


@dataclass(slots=True)
class Escrow:
    escrow_id: EscrowId
    holder: PartyAddress
    amount: int
    purpose: str
    released: bool = False


@dataclass(frozen=True, slots=True)
class Event:
    """One log line: when, who, what, and a digest of the call payload."""

    time: int
    actor: str
    op: str
    payload_digest: str

    def line(self) -> str:
        return f"{self.time} {self.actor} {self.op} {self.payload_digest}"


def payload_digest(payload: Mapping[str, Any]) -> Digest:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return Digest.of(canonical.encode())


class Ledger:
    """Balances, escrow vaults, logical clock and the append-only event log."""

    def __init__(self, genesis: Mapping[PartyAddress, int]):
        # contracts use timestamp 0 as "unset", so the clock starts at 1
        self.now: int = 1
        self.balances: dict[PartyAddress, int] = {}
        self.escrows: dict[EscrowId, Escrow] = {}
        self.events: list[Event] = []
        self._next_escrow_id = 1
        for party, amount in genesis.items():
            if amount < 0:
                raise InvalidArgument("genesis balance must be non-negative")
            self.balances[party] = self.balances.get(party, 0) + amount
            self.log_event(party, "ledger.genesis_mint", {"amount": amount})
        self.genesis_total: int = sum(self.balances.values())

    # -- clock ---------------------------------------------------------

    def advance_time(self, delta: int) -> int:
        if not isinstance(delta, int) or delta <= 0:
            raise InvalidArgument("time advances by positive integer ticks")
        self.now += delta
        return self.now

    # -- funds ---------------------------------------------------------

    def balance(self, party: PartyAddress) -> int:
        return self.balances.get(party, 0)

    def lock_funds(self, party: PartyAddress, amount: int, purpose: str) -> EscrowId:
        if not isinstance(amount, int) or amount <= 0:
            raise InvalidArgument("escrow amount must be a positive integer")
        if self.balance(party) < amount:
            raise InsufficientFunds(
                f"{party.hex()[:12]} holds {self.balance(party)}, cannot lock {amount}")
        self.balances[party] -= amount
        eid = EscrowId(self._next_escrow_id)
        self._next_escrow_id += 1
        self.escrows[eid] = Escrow(eid, party, amount, purpose)
        self.log_event(party, "ledger.lock_funds",
                       {"escrow": eid.id, "amount": amount, "purpose": purpose})
        self._check_conservation()
        return eid

    def release_funds(self, escrow_id: EscrowId, to: PartyAddress) -> None:
        escrow = self.escrows.get(escrow_id)
        if escrow is None or escrow.released:
            raise EscrowNotFound(f"no unreleased escrow {escrow_id!r}")
        escrow.released = True
        self.balances[to] = self.balance(to) + escrow.amount
        self.log_event(to, "ledger.release_funds",
                       {"escrow": escrow_id.id, "amount": escrow.amount,
                        "purpose": escrow.purpose})
        self._check_conservation()

    def transfer(self, frm: PartyAddress, to: PartyAddress, amount: int) -> None:
        if not isinstance(amount, int) or amount < 0:
            raise InvalidArgument("transfer amount must be a non-negative integer")
        if self.balance(frm) < amount:
            raise InsufficientFunds(
                f"{frm.hex()[:12]} holds {self.balance(frm)}, cannot send {amount}")
        self.balances[frm] -= amount
        self.balances[to] = self.balance(to) + amount
        self.log_event(frm, "ledger.transfer",
                       {"to": to.hex(), "amount": amount})
        self._check_conservation()

    # -- escrow queries --------------------------------------------------

    def escrow(self, escrow_id: EscrowId) -> Escrow:
        escrow = self.escrows.get(escrow_id)
        if escrow is None:
            raise EscrowNotFound(f"unknown escrow {escrow_id!r}")
        return escrow

    def retag_escrow(self, escrow_id: EscrowId, purpose: str) -> None:
        escrow = self.escrow(escrow_id)
        if escrow.released:
            raise EscrowNotFound(f"escrow {escrow_id!r} already released")
        old = escrow.purpose
        escrow.purpose = purpose
        self.log_event(escrow.holder, "ledger.retag_escrow",
                       {"escrow": escrow_id.id, "from": old, "to": purpose})

    def open_escrows(self, purpose_prefix: str = "") -> Iterator[Escrow]:
        for escrow in self.escrows.values():
            if not escrow.released and escrow.purpose.startswith(purpose_prefix):
                yield escrow

    def total_escrowed(self) -> int:
        return sum(e.amount for e in self.escrows.values() if not e.released)

    # -- log -------------------------------------------------------------

    def log_event(self, actor: PartyAddress, op: str, payload: Mapping[str, Any]) -> None:
        self.events.append(
            Event(self.now, actor.hex(), op, payload_digest(payload).hex()))

    def events_text(self) -> str:
        return "\n".join(ev.line() for ev in self.events)

    # -- invariants --------------------------------------------------------

    def _check_conservation(self) -> None:
        total = sum(self.balances.values()) + self.total_escrowed()
        if total != self.genesis_total:
            raise VaxpassError(
                f"conservation broken: {total} != genesis {self.genesis_total}")
        if any(v < 0 for v in self.balances.values()):
            raise VaxpassError("negative balance")
