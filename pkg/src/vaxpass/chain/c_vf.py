"""Vaccine-passport verification protocol between a verifier and a citizen.

The verifier stakes a deposit against a passport-holding citizen; the
citizen stakes the same and commits the digest of the re-encryption key it
hands over off-chain.  Access to the passport record is gated by a
citizen-controlled grant matrix keyed by (token, verifier); grants persist
across protocol runs until revoked.  The recorded verification result and
its timestamp form a public history per token.
"""

from __future__ import annotations

from ..cas import ContentID
from ..crypto.hashing import Digest
from ..errors import GuardFailed
from ..ledger import PartyAddress
from .base import ContractBase
from .state import CitizenRecord, VerificationProtocol


class CVfContract(ContractBase):

    def _citizen_with_vp(self, addr: PartyAddress) -> CitizenRecord:
        record = self.state.citizens.get(addr)
        self._check(record is not None, "no valid token for this citizen")
        self._check(record.vaccination_status, "citizen is not vaccinated")
        self._check(record.vp_status, "citizen holds no passport")
        return record

    def _instance(self, vf_protocol_id: int) -> VerificationProtocol:
        inst = self.state.verification_by_id.get(vf_protocol_id)
        self._check(inst is not None, f"unknown protocol id {vf_protocol_id}")
        self._check(inst.under_execution, "protocol is not running")
        return inst

    def _caller_token(self, caller: PartyAddress,
                      inst: VerificationProtocol) -> None:
        record = self.state.citizens.get(caller)
        self._check(record is not None and record.token_id == inst.token_id,
                    "caller is not the citizen of this instance")

    # ---------------------------------------------------------------- ops --

    def lock_money_by_vf(self, caller: PartyAddress, c_addr: PartyAddress,
                         locked: int) -> int:
        citizen = self._citizen_with_vp(c_addr)
        self._check(locked == self.params.verification_deposit,
                    f"deposit must be {self.params.verification_deposit}")
        key = (citizen.token_id, caller)
        current = self.state.current_verification.get(key)
        self._check(current is None or not current.under_execution,
                    "a verification between these parties is already running")
        inst = VerificationProtocol(
            vf_protocol_id=self.state.next_id("verification"),
            token_id=citizen.token_id, citizen_addr=c_addr, vf_addr=caller,
            under_execution=True)
        inst.vf_escrow = self.ledger.lock_funds(
            caller, locked, f"verification:{inst.vf_protocol_id}:vf")
        inst.t_lock_money_by_vf = self.ledger.now
        self.state.current_verification[key] = inst
        self.state.verification_by_id[inst.vf_protocol_id] = inst
        self._log(caller, "c_vf.lock_money_by_vf",
                  vf_protocol_id=inst.vf_protocol_id, locked=locked)
        return inst.vf_protocol_id

    def lock_money_and_commit_rk(self, caller: PartyAddress, vf_protocol_id: int,
                                 commit_rk: Digest, locked: int) -> None:
        inst = self._instance(vf_protocol_id)
        self._caller_token(caller, inst)
        self._check(inst.t_lock_money_and_commit_rk_by_c == 0,
                    "citizen already locked")
        self._within(inst.t_lock_money_by_vf, self.params.verification_timeout)
        self._check(locked == self.params.verification_deposit,
                    f"deposit must be {self.params.verification_deposit}")
        inst.c_escrow = self.ledger.lock_funds(
            caller, locked, f"verification:{inst.vf_protocol_id}:c")
        inst.commit_rk = commit_rk
        inst.t_lock_money_and_commit_rk_by_c = self.ledger.now
        self._log(caller, "c_vf.lock_money_and_commit_rk",
                  vf_protocol_id=vf_protocol_id, digest=commit_rk.hex())

    def provide_consent(self, caller: PartyAddress, vf_protocol_id: int,
                        decision: bool) -> None:
        inst = self._instance(vf_protocol_id)
        self._auth(caller == inst.vf_addr, "caller is not this instance's verifier")
        self._check(inst.t_provide_consent == 0, "consent already provided")
        self._within(inst.t_lock_money_and_commit_rk_by_c,
                     self.params.verification_timeout)
        inst.consent = decision
        inst.t_provide_consent = self.ledger.now
        if not decision:
            self._refund_both(inst)
        self._log(caller, "c_vf.provide_consent",
                  vf_protocol_id=vf_protocol_id, consent=decision)

    def grant_access_permission(self, caller: PartyAddress,
                                vf_protocol_id: int) -> None:
        inst = self._instance(vf_protocol_id)
        self._caller_token(caller, inst)
        self._check(inst.t_provide_consent != 0 and inst.consent,
                    "verifier consent not given")
        self._check(inst.t_grant_access_by_c == 0, "access already granted")
        self._within(inst.t_provide_consent, self.params.verification_timeout)
        self.state.access_control.grants[(inst.token_id, inst.vf_addr)] = True
        inst.t_grant_access_by_c = self.ledger.now
        self._log(caller, "c_vf.grant_access_permission",
                  vf_protocol_id=vf_protocol_id)

    def revoke_access_permission(self, caller: PartyAddress,
                                 vf_addr: PartyAddress) -> None:
        record = self.state.citizens.get(caller)
        self._check(record is not None, "no valid token for this citizen")
        key = (record.token_id, vf_addr)
        self._check(self.state.access_control.grants.get(key, False),
                    "no grant to revoke for this verifier")
        self.state.access_control.grants[key] = False
        self._log(caller, "c_vf.revoke_access_permission", vf=vf_addr.hex())

    def fetch_vp_info(self, caller: PartyAddress,
                      vf_protocol_id: int) -> tuple[Digest, bytes, ContentID]:
        inst = self._instance(vf_protocol_id)
        self._auth(caller == inst.vf_addr, "caller is not this instance's verifier")
        self._check(inst.t_grant_access_by_c != 0, "access not granted on-chain")
        self._check(inst.t_fetch_vp_info == 0, "passport info already fetched")
        self._within(inst.t_grant_access_by_c, self.params.verification_timeout)
        self._auth(self.state.access_control.allowed(inst.token_id, caller),
                   "access permission missing or revoked")
        record = self.state.vp_records.get(inst.token_id)
        self._check(record is not None, "no passport record for this token")
        inst.t_fetch_vp_info = self.ledger.now
        self._log(caller, "c_vf.fetch_vp_info", vf_protocol_id=vf_protocol_id)
        return record.md_vp, record.sigma, record.c_id

    def verification_result(self, caller: PartyAddress, vf_protocol_id: int,
                            result: bool) -> None:
        inst = self._instance(vf_protocol_id)
        self._auth(caller == inst.vf_addr, "caller is not this instance's verifier")
        self._check(inst.t_fetch_vp_info != 0, "passport info not fetched")
        self._check(inst.t_verification_result == 0, "result already recorded")
        self._within(inst.t_fetch_vp_info, self.params.verification_timeout)
        inst.verification_result = result
        inst.t_verification_result = self.ledger.now
        self._refund_both(inst)
        history = self.state.verification_history.setdefault(inst.token_id, [])
        history.append((inst.vf_addr, self.ledger.now, result))
        self._log(caller, "c_vf.verification_result",
                  vf_protocol_id=vf_protocol_id, result=result)

    def exit_stalled(self, caller: PartyAddress, vf_protocol_id: int) -> str:
        """Close a verification stalled past its window; stakes of the
        silent party go to the waiting party."""
        inst = self._instance(vf_protocol_id)
        is_vf = caller == inst.vf_addr
        is_citizen = caller == inst.citizen_addr
        self._auth(is_vf or is_citizen, "caller is not a party to this instance")
        window = self.params.verification_timeout

        if inst.t_lock_money_and_commit_rk_by_c == 0:
            self._auth(is_vf, "waiting on the citizen; only the verifier may exit")
            self._expired(inst.t_lock_money_by_vf, window)
            label = "citizen-silent-before-commit"
        elif inst.t_provide_consent == 0:
            self._auth(is_citizen, "waiting on the verifier")
            self._expired(inst.t_lock_money_and_commit_rk_by_c, window)
            label = "vf-silent-consent"
        elif inst.t_grant_access_by_c == 0:
            self._auth(is_vf, "waiting on the citizen; only the verifier may exit")
            self._expired(inst.t_provide_consent, window)
            label = "citizen-silent-grant"
        elif inst.t_fetch_vp_info == 0:
            self._auth(is_citizen, "waiting on the verifier")
            self._expired(inst.t_grant_access_by_c, window)
            label = "vf-silent-fetch"
        elif inst.t_verification_result == 0:
            self._auth(is_citizen, "waiting on the verifier")
            self._expired(inst.t_fetch_vp_info, window)
            label = "vf-silent-result"
        else:
            raise GuardFailed("instance is not stalled")

        for escrow in (inst.c_escrow, inst.vf_escrow):
            if escrow is not None:
                self.ledger.release_funds(escrow, caller)
        inst.t_unlock_money = self.ledger.now
        inst.under_execution = False
        self._log(caller, "c_vf.exit_stalled",
                  vf_protocol_id=vf_protocol_id, state=label)
        return label

    def _refund_both(self, inst: VerificationProtocol) -> None:
        if inst.vf_escrow is not None:
            self.ledger.release_funds(inst.vf_escrow, inst.vf_addr)
        if inst.c_escrow is not None:
            self.ledger.release_funds(inst.c_escrow, inst.citizen_addr)
        inst.t_unlock_money = self.ledger.now
        inst.under_execution = False
