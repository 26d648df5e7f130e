"""Guard helpers shared by the contract state machines."""

from __future__ import annotations

from typing import Any

from ..errors import GuardFailed, Unauthorized, WindowExpired
from ..ledger import Ledger, PartyAddress
from .state import ChainState, ProtocolParams


class ContractBase:
    def __init__(self, ledger: Ledger, params: ProtocolParams, state: ChainState,
                 govt_addr: PartyAddress):
        self.ledger = ledger
        self.params = params
        self.state = state
        self.govt_addr = govt_addr

    # -- guards ----------------------------------------------------------

    @staticmethod
    def _check(condition: bool, message: str) -> None:
        if not condition:
            raise GuardFailed(message)

    @staticmethod
    def _auth(condition: bool, message: str) -> None:
        if not condition:
            raise Unauthorized(message)

    def _require_govt(self, caller: PartyAddress) -> None:
        self._auth(caller == self.govt_addr, "caller is not the government")

    def _within(self, t_prev: int, timeout: int) -> None:
        self._check(t_prev != 0, "previous step not completed")
        if self.ledger.now - t_prev > timeout:
            raise WindowExpired(
                f"window of {timeout} ticks after t={t_prev} has passed "
                f"(now={self.ledger.now})")

    def _expired(self, t_prev: int, timeout: int) -> None:
        self._check(t_prev != 0, "previous step not completed")
        self._check(self.ledger.now - t_prev > timeout,
                    "step window has not expired yet")

    # -- logging -----------------------------------------------------------

    def _log(self, caller: PartyAddress, op: str, **payload: Any) -> None:
        self.ledger.log_event(caller, op, payload)
