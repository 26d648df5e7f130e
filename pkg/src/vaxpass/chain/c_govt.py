"""Citizen token issuance and vaccine-passport issuance state machines.

Tokens bind a citizen's address to the digest of their personal data; raw
personal data never reaches this contract.  The passport protocol
cross-checks the citizen's disclosed vial id against the commitments the
citizen consented to during injection, then records the signed passport
digest and its content id.  Issuing the passport also returns the deposit
the citizen left locked at the end of the injection protocol.
"""

from __future__ import annotations

from ..cas import ContentID
from ..crypto.hashing import Digest, commit
from ..crypto.merkle import MerkleProof, fold_proof
from ..crypto.signing import verify
from ..errors import GuardFailed
from ..ledger import Ledger, PartyAddress
from .base import ContractBase
from .state import (
    ChainState,
    CitizenRecord,
    ProtocolParams,
    TokenAppl,
    VialState,
    VPAppl,
    VPRecord,
)

GOVT_FAULTY = "govt-faulty"
CITIZEN_FAULTY = "citizen-faulty"


class CGovtContract(ContractBase):

    def __init__(self, ledger: Ledger, params: ProtocolParams, state: ChainState,
                 govt_addr: PartyAddress, govt_sign_pk: bytes):
        super().__init__(ledger, params, state, govt_addr)
        self.govt_sign_pk = govt_sign_pk

    # -------------------------------------------------------------- token --

    def appl_for_token_id(self, caller: PartyAddress,
                          citizen_info_digest: Digest) -> int:
        self._auth(caller != self.govt_addr, "government cannot apply for a token")
        self._check(caller not in self.state.citizens,
                    "caller already holds a token")
        self._check(citizen_info_digest not in self.state.digest_to_token,
                    "this identity digest already received a token")
        current = self.state.current_token_appl.get(citizen_info_digest)
        self._check(current is None or not current.under_review,
                    "an application for this digest is already open")
        appl = TokenAppl(token_appl_id=self.state.next_id("token_appl"),
                         citizen_addr=caller,
                         citizen_info_digest=citizen_info_digest,
                         under_review=True, t_token_appl=self.ledger.now)
        self.state.current_token_appl[citizen_info_digest] = appl
        self.state.token_appl_by_id[appl.token_appl_id] = appl
        self._log(caller, "c_govt.appl_for_token_id",
                  token_appl_id=appl.token_appl_id,
                  digest=citizen_info_digest.hex())
        return appl.token_appl_id

    def verify_appl(self, caller: PartyAddress, token_appl_id: int,
                    decision: bool) -> int | None:
        self._require_govt(caller)
        appl = self.state.token_appl_by_id.get(token_appl_id)
        self._check(appl is not None, f"unknown token application {token_appl_id}")
        self._check(appl.under_review, "application is not under review")
        self._check(appl.t_result == 0, "application already decided")
        self._within(appl.t_token_appl, self.params.token_timeout)
        self._check(appl.citizen_info_digest not in self.state.digest_to_token,
                    "digest already bound to a token")
        token_id: int | None = None
        if decision:
            token_id = self.state.next_id("token")
            record = CitizenRecord(addr=appl.citizen_addr,
                                   citizen_info_digest=appl.citizen_info_digest,
                                   token_id=token_id)
            self.state.citizens[appl.citizen_addr] = record
            self.state.digest_to_token[appl.citizen_info_digest] = token_id
            self.state.token_to_addr[token_id] = appl.citizen_addr
        appl.result = decision
        appl.t_result = self.ledger.now
        appl.under_review = False
        self._log(caller, "c_govt.verify_appl",
                  token_appl_id=token_appl_id, decision=decision,
                  token_id=token_id)
        return token_id

    def exit_token_appl(self, caller: PartyAddress) -> None:
        """Applicant voids an application the government never reviewed."""
        appl = None
        for candidate in self.state.current_token_appl.values():
            if candidate.citizen_addr == caller and candidate.under_review:
                appl = candidate
                break
        self._check(appl is not None, "no open token application for caller")
        self._check(appl.t_result == 0, "application already decided")
        self._expired(appl.t_token_appl, self.params.token_timeout)
        appl.under_review = False
        self._log(caller, "c_govt.exit_token_appl",
                  token_appl_id=appl.token_appl_id)

    # ----------------------------------------------------------- passport --

    def _citizen_for_vp(self, addr: PartyAddress) -> CitizenRecord:
        record = self.state.citizens.get(addr)
        self._check(record is not None, "no valid token for this citizen")
        self._check(record.vaccination_status, "citizen is not vaccinated")
        self._check(not record.vp_status, "citizen already holds a passport")
        return record

    def _open_vp_appl(self, c_addr: PartyAddress) -> VPAppl:
        appl = self.state.current_vp_appl.get(c_addr)
        self._check(appl is not None and appl.under_process,
                    "no open passport application")
        return appl

    def initiate_vp_appl_and_lock_money(self, caller: PartyAddress,
                                        locked: int) -> int:
        citizen = self._citizen_for_vp(caller)
        self._check(locked == self.params.vp_deposit,
                    f"deposit must be {self.params.vp_deposit}")
        current = self.state.current_vp_appl.get(caller)
        self._check(current is None or not current.under_process,
                    "a passport application is already open")
        appl = VPAppl(vp_appl_id=self.state.next_id("vp_appl"),
                      citizen_addr=caller,
                      applicant_token_id=citizen.token_id,
                      under_process=True)
        appl.c_escrow = self.ledger.lock_funds(
            caller, locked, f"vp:{appl.vp_appl_id}:c")
        appl.t_lock_money_by_c = self.ledger.now
        self.state.current_vp_appl[caller] = appl
        self.state.vp_appl_by_id[appl.vp_appl_id] = appl
        self._log(caller, "c_govt.initiate_vp_appl_and_lock_money",
                  vp_appl_id=appl.vp_appl_id, locked=locked)
        return appl.vp_appl_id

    def lock_money_by_govt(self, caller: PartyAddress, c_addr: PartyAddress,
                           locked: int) -> None:
        self._require_govt(caller)
        self._citizen_for_vp(c_addr)
        appl = self._open_vp_appl(c_addr)
        self._check(appl.t_lock_money_by_govt == 0, "government already locked")
        self._within(appl.t_lock_money_by_c, self.params.vp_timeout)
        self._check(locked == self.params.vp_deposit,
                    f"deposit must be {self.params.vp_deposit}")
        appl.govt_escrow = self.ledger.lock_funds(
            caller, locked, f"vp:{appl.vp_appl_id}:govt")
        appl.t_lock_money_by_govt = self.ledger.now
        self._log(caller, "c_govt.lock_money_by_govt",
                  vp_appl_id=appl.vp_appl_id, locked=locked)

    def send_vaccination_proof(self, caller: PartyAddress, v_id: bytes,
                               commit_mt_proof: Digest) -> None:
        self._citizen_for_vp(caller)
        appl = self._open_vp_appl(caller)
        self._check(appl.t_lock_money_by_govt != 0, "government has not locked")
        self._check(appl.t_provide_vaccination_proof == 0, "proof already provided")
        self._within(appl.t_lock_money_by_govt, self.params.vp_timeout)
        inst = self.state.current_injection.get(caller)
        self._check(inst is not None, "no injection protocol on record")
        self._check(inst.commit_mt_proof == commit_mt_proof,
                    "proof commitment differs from the injection record")
        self._check(inst.commit_vid == Digest.of(v_id),
                    "vial id does not match the committed vial")
        self._check(self.state.vial_state(inst.commit_vid) is VialState.USED,
                    "vial was never marked used")
        appl.disclosed_vial_id = v_id
        appl.t_provide_vaccination_proof = self.ledger.now
        self._log(caller, "c_govt.send_vaccination_proof",
                  vp_appl_id=appl.vp_appl_id, vial=v_id.hex(),
                  digest=commit_mt_proof.hex())

    def send_consent1(self, caller: PartyAddress, c_addr: PartyAddress,
                      consent1: bool) -> None:
        self._require_govt(caller)
        self._citizen_for_vp(c_addr)
        appl = self._open_vp_appl(c_addr)
        self._check(appl.t_provide_vaccination_proof != 0, "no proof provided yet")
        self._check(appl.t_consent1 == 0, "first consent already sent")
        self._within(appl.t_provide_vaccination_proof, self.params.vp_timeout)
        if not consent1:
            self._refund_both(appl)
        appl.consent1 = consent1
        appl.t_consent1 = self.ledger.now
        self._log(caller, "c_govt.send_consent1",
                  vp_appl_id=appl.vp_appl_id, consent=consent1)

    def send_consent2(self, caller: PartyAddress, c_addr: PartyAddress,
                      consent2: bool) -> None:
        self._require_govt(caller)
        self._citizen_for_vp(c_addr)
        appl = self._open_vp_appl(c_addr)
        self._check(appl.t_consent1 != 0 and appl.consent1,
                    "first consent not sent")
        self._check(appl.t_consent2 == 0, "second consent already sent")
        self._within(appl.t_consent1, self.params.vp_timeout)
        # a dissent keeps the instance open: the government must now submit
        # the proof for adjudication within the dispute window
        appl.consent2 = consent2
        appl.t_consent2 = self.ledger.now
        self._log(caller, "c_govt.send_consent2",
                  vp_appl_id=appl.vp_appl_id, consent=consent2)

    def adjudicate_vp_dissent(self, caller: PartyAddress, c_addr: PartyAddress,
                              revealed_proof: MerkleProof) -> str:
        """Government substantiates a second-consent dissent on-chain.

        The submitted proof is checked against the injection-time
        commitments and the stock root.  A proof that verifies means the
        dissent was wrongful (the government pays); a failing proof means
        the citizen's vaccination claim was bogus (the citizen pays).
        """
        self._require_govt(caller)
        self._citizen_for_vp(c_addr)
        appl = self._open_vp_appl(c_addr)
        self._check(appl.t_consent2 != 0 and not appl.consent2,
                    "no dissent to adjudicate")
        self._within(appl.t_consent2, self.params.dispute_window)
        inst = self.state.current_injection.get(c_addr)
        stock = self.state.stocks.get(inst.stock_id) if inst is not None else None
        proof_ok = (
            inst is not None
            and commit(revealed_proof.siblings_blob()) == inst.commit_mt_proof
            and Digest.of(revealed_proof.leaf) == inst.commit_vid
            and stock is not None
            and fold_proof(revealed_proof.leaf, revealed_proof.path) == stock.stock_mr
        )
        winner = c_addr if proof_ok else self.govt_addr
        verdict = GOVT_FAULTY if proof_ok else CITIZEN_FAULTY
        self.ledger.release_funds(appl.c_escrow, winner)
        self.ledger.release_funds(appl.govt_escrow, winner)
        now = self.ledger.now
        if proof_ok:
            appl.t_money_received_by_c = now
        else:
            appl.t_money_received_by_govt = now
        appl.under_process = False
        self._log(caller, "c_govt.adjudicate_vp_dissent",
                  vp_appl_id=appl.vp_appl_id, verdict=verdict)
        return verdict

    def upload_vp_info_and_get_payment(self, caller: PartyAddress,
                                       c_addr: PartyAddress, md_vp: Digest,
                                       sigma: bytes, c_id: ContentID) -> None:
        self._require_govt(caller)
        citizen = self._citizen_for_vp(c_addr)
        appl = self._open_vp_appl(c_addr)
        self._check(appl.t_consent2 != 0 and appl.consent2,
                    "second consent not sent")
        self._check(appl.t_issue_vp == 0, "passport already issued")
        self._within(appl.t_consent2, self.params.vp_timeout)
        self._check(verify(self.govt_sign_pk, md_vp.value, sigma),
                    "signature does not verify over the passport digest")
        self.ledger.release_funds(appl.govt_escrow, self.govt_addr)
        self.ledger.release_funds(appl.c_escrow, c_addr)
        pending = self.state.vp_pending_escrow.pop(citizen.token_id, None)
        if pending is not None:
            self.ledger.release_funds(pending, c_addr)
        now = self.ledger.now
        appl.t_issue_vp = now
        appl.t_money_received_by_c = now
        appl.t_money_received_by_govt = now
        appl.under_process = False
        record = VPRecord(md_vp=md_vp, sigma=sigma, c_id=c_id)
        self.state.vp_records[citizen.token_id] = record
        citizen.vp_status = True
        citizen.c_id = c_id
        self._log(caller, "c_govt.upload_vp_info_and_get_payment",
                  vp_appl_id=appl.vp_appl_id, md=md_vp.hex(),
                  sigma=sigma.hex(), cid=c_id.hex())

    def exit_vp_appl(self, caller: PartyAddress,
                     c_addr: PartyAddress | None = None) -> str:
        """Close a passport application stalled past its window."""
        if c_addr is None:
            c_addr = caller
        appl = self._open_vp_appl(c_addr)
        is_citizen = caller == c_addr
        is_govt = caller == self.govt_addr
        self._auth(is_citizen or is_govt, "caller is not a party to this instance")
        window = self.params.vp_timeout

        if appl.t_lock_money_by_govt == 0:
            self._auth(is_citizen, "waiting on the government")
            self._expired(appl.t_lock_money_by_c, window)
            label = "govt-silent-before-lock"
        elif appl.t_provide_vaccination_proof == 0:
            self._auth(is_govt, "waiting on the citizen")
            self._expired(appl.t_lock_money_by_govt, window)
            label = "citizen-silent-before-proof"
        elif appl.t_consent1 == 0:
            self._auth(is_citizen, "waiting on the government")
            self._expired(appl.t_provide_vaccination_proof, window)
            label = "govt-silent-consent1"
        elif appl.t_consent2 == 0:
            self._auth(is_citizen, "waiting on the government")
            self._expired(appl.t_consent1, window)
            label = "govt-silent-consent2"
        elif not appl.consent2:
            self._auth(is_citizen, "waiting on the government")
            self._expired(appl.t_consent2, self.params.dispute_window)
            label = "govt-silent-in-dispute"
        elif appl.t_issue_vp == 0:
            self._auth(is_citizen, "waiting on the government")
            self._expired(appl.t_consent2, window)
            label = "govt-silent-before-issue"
        else:
            raise GuardFailed("instance is not stalled")

        winner = caller
        for escrow in (appl.c_escrow, appl.govt_escrow):
            if escrow is not None:
                self.ledger.release_funds(escrow, winner)
        now = self.ledger.now
        if is_citizen:
            appl.t_money_received_by_c = now
        else:
            appl.t_money_received_by_govt = now
        appl.under_process = False
        self._log(caller, "c_govt.exit_vp_appl",
                  vp_appl_id=appl.vp_appl_id, state=label)
        return label

    def _refund_both(self, appl: VPAppl) -> None:
        self.ledger.release_funds(appl.govt_escrow, self.govt_addr)
        self.ledger.release_funds(appl.c_escrow, appl.citizen_addr)
        now = self.ledger.now
        appl.t_money_received_by_govt = now
        appl.t_money_received_by_c = now
        appl.under_process = False
