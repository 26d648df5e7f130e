"""Chain façade: one ledger, shared contract storage, four contract modules.

The contracts mutate state only through the ledger's serialized call
order, mirroring serial transaction execution.  The façade adds the
read-only endpoints (statistics, passport record query, verification
history) and audit helpers used by the scenario runner's invariant
checks.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

from ..cas import ContentID
from ..crypto.hashing import Digest
from ..errors import Unauthorized
from ..ledger import Ledger, PartyAddress
from .base import ContractBase
from .c_govt import CGovtContract
from .c_vc import CVcContract
from .c_vf import CVfContract
from .state import ChainState, ProtocolParams, VialState
from .vc_govt import VcGovtContract

__all__ = [
    "Chain",
    "ChainState",
    "ProtocolParams",
    "VialState",
    "ContractBase",
    "VcGovtContract",
    "CGovtContract",
    "CVcContract",
    "CVfContract",
]


class Chain:
    def __init__(self, genesis: Mapping[PartyAddress, int],
                 params: ProtocolParams, govt_addr: PartyAddress,
                 govt_sign_pk: bytes):
        self.ledger = Ledger(genesis)
        self.params = params
        self.state = ChainState()
        self.govt_addr = govt_addr
        self.vc_govt = VcGovtContract(self.ledger, params, self.state, govt_addr)
        self.c_govt = CGovtContract(self.ledger, params, self.state, govt_addr,
                                    govt_sign_pk)
        self.c_vc = CVcContract(self.ledger, params, self.state, govt_addr)
        self.c_vf = CVfContract(self.ledger, params, self.state, govt_addr)

    def advance_time(self, delta: int) -> int:
        return self.ledger.advance_time(delta)

    @property
    def now(self) -> int:
        return self.ledger.now

    # ------------------------------------------------------ read endpoints --

    def query_vp_record(self, caller: PartyAddress,
                        token_id: int) -> tuple[Digest, bytes, ContentID]:
        """Passport record triple, gated by the citizen's access grants."""
        if not self.state.access_control.allowed(token_id, caller):
            raise Unauthorized("no access grant for this verifier")
        record = self.state.vp_records.get(token_id)
        if record is None:
            raise Unauthorized("no passport recorded for this token")
        return record.md_vp, record.sigma, record.c_id

    def verification_history(self, token_id: int) -> list[tuple[str, int, bool]]:
        return [(addr.hex(), t, result)
                for addr, t, result in
                self.state.verification_history.get(token_id, [])]

    def stats(self) -> dict[str, Any]:
        citizens = self.state.citizens.values()
        tokened = len(self.state.citizens)
        vaccinated = sum(1 for c in citizens if c.vaccination_status)
        vp_issued = sum(1 for c in self.state.citizens.values() if c.vp_status)
        per_vc = {
            str(vc.vc_id): {
                "vials_in_stock": vc.vials_in_stock,
                "doses_administered": vc.doses_administered,
                "money_earned": vc.money_earned,
            }
            for vc in self.state.vcs.values()
        }
        return {
            "tokened": tokened,
            "vaccinated": vaccinated,
            "vp_issued": vp_issued,
            "vaccinated_fraction": (vaccinated / tokened) if tokened else 0.0,
            "per_vc": per_vc,
        }

    # ------------------------------------------------------------- audits --

    def open_instances(self) -> list[dict[str, Any]]:
        """Every protocol instance still running, with its kind and id."""
        out: list[dict[str, Any]] = []
        for appl in self.state.current_reg_appl.values():
            if appl.under_review:
                out.append({"kind": "registration", "id": appl.reg_appl_id or 0,
                            "party": appl.vc_addr.hex()})
        for appl in self.state.refill_by_id.values():
            if appl.under_process:
                out.append({"kind": "refill", "id": appl.refill_appl_id,
                            "party": appl.vc_addr.hex()})
        for appl in self.state.token_appl_by_id.values():
            if appl.under_review:
                out.append({"kind": "token", "id": appl.token_appl_id,
                            "party": appl.citizen_addr.hex()})
        for inst in self.state.injection_by_id.values():
            if inst.under_process:
                out.append({"kind": "injection", "id": inst.protocol_id,
                            "party": inst.citizen_addr.hex(),
                            "frozen": inst.frozen})
        for appl in self.state.vp_appl_by_id.values():
            if appl.under_process:
                out.append({"kind": "vp", "id": appl.vp_appl_id,
                            "party": appl.citizen_addr.hex()})
        for inst in self.state.verification_by_id.values():
            if inst.under_execution:
                out.append({"kind": "verification", "id": inst.vf_protocol_id,
                            "party": inst.vf_addr.hex()})
        return out

    def escrow_audit_violations(self) -> list[str]:
        """Unreleased escrows referencing an instance that already closed.

        Vault purposes (``stock:``, ``vp_wait:``) outlive instances by
        design and are excluded.
        """
        closed: list[str] = []
        for escrow in self.ledger.open_escrows():
            family = escrow.purpose.split(":", 1)[0]
            if family in ("stock", "vp_wait"):
                continue
            inst_id = int(escrow.purpose.split(":")[1])
            if family == "restock":
                appl = self.state.refill_by_id.get(inst_id)
                still_open = appl is not None and appl.under_process
            elif family == "injection":
                inst = self.state.injection_by_id.get(inst_id)
                still_open = inst is not None and inst.under_process
            elif family == "vp":
                appl = self.state.vp_appl_by_id.get(inst_id)
                still_open = appl is not None and appl.under_process
            elif family == "verification":
                inst = self.state.verification_by_id.get(inst_id)
                still_open = inst is not None and inst.under_execution
            else:
                still_open = False
            if not still_open:
                closed.append(
                    f"escrow {escrow.escrow_id.id} ({escrow.purpose}) "
                    f"outlived its instance")
        return closed

    def sweep_vaults(self) -> int:
        """Scenario-end cleanup: return long-lived vault escrows to their
        holders (undistributed service charges to the government, pending
        citizen deposits to their citizens).  Extension beyond the
        protocols themselves; conservation is unaffected."""
        swept = 0
        for escrow in list(self.ledger.open_escrows("stock:")):
            self.ledger.release_funds(escrow.escrow_id, escrow.holder)
            swept += 1
        for escrow in list(self.ledger.open_escrows("vp_wait:")):
            self.ledger.release_funds(escrow.escrow_id, escrow.holder)
            swept += 1
        self.state.vp_pending_escrow.clear()
        return swept

    def state_dump(self) -> str:
        """Canonical text dump of all on-chain storage (for privacy and
        determinism checks)."""

        def addr(a: PartyAddress | None) -> str | None:
            return a.hex() if a is not None else None

        def dig(d) -> str | None:
            return d.hex() if d is not None else None

        payload: dict[str, Any] = {
            "now": self.ledger.now,
            "balances": {a.hex(): v for a, v in sorted(
                self.ledger.balances.items(), key=lambda kv: kv[0].hex())},
            "escrows": [
                {"id": e.escrow_id.id, "holder": e.holder.hex(),
                 "amount": e.amount, "purpose": e.purpose,
                 "released": e.released}
                for e in self.ledger.escrows.values()
            ],
            "vcs": [
                {"addr": addr(vc.addr), "vc_id": vc.vc_id,
                 "stock": vc.current_stock_id, "vials": vc.vials_in_stock,
                 "earned": vc.money_earned, "doses": vc.doses_administered}
                for vc in self.state.vcs.values()
            ],
            "stocks": [
                {"id": s.stock_id, "owner": s.owner_vc_id,
                 "vials": s.vials_count, "mr": dig(s.stock_mr)}
                for s in self.state.stocks.values()
            ],
            "citizens": [
                {"addr": addr(c.addr), "digest": dig(c.citizen_info_digest),
                 "token": c.token_id, "vaccinated": c.vaccination_status,
                 "vp": c.vp_status, "cid": c.c_id.hex() if c.c_id else None}
                for c in self.state.citizens.values()
            ],
            "vials": {d.hex(): s.value for d, s in self.state.vial_states.items()},
            "vp_records": {
                str(t): {"md": r.md_vp.hex(), "sigma": r.sigma.hex(),
                         "cid": r.c_id.hex()}
                for t, r in self.state.vp_records.items()
            },
            "grants": {
                f"{token}:{vf.hex()}": allowed
                for (token, vf), allowed in
                self.state.access_control.grants.items()
            },
            "history": {
                str(t): [(a.hex(), ts, res) for a, ts, res in entries]
                for t, entries in self.state.verification_history.items()
            },
        }
        return json.dumps(payload, indent=1, sort_keys=True)
