"""Injection protocol between a citizen and a vaccination center.

Both parties stake a deposit, the VC commits the vial's membership proof
and the vial id, the citizen consents three times (proof commitment seen
offline, physical vial matches its commitment, proof folds to the stock's
Merkle root), the VC records the vaccination and the citizen acknowledges.

A third-consent dissent opens a dispute: the VC must reveal the proof to
the contract inside the dispute window and the contract itself folds it,
penalizing whichever party lied.  Every other waiting state has a timeout
exit claimable by the waiting party.  A positive acknowledgement marks the
vial used, pays the VC its deposit plus one per-dose service charge, and
keeps the citizen's deposit locked until passport issuance.
"""

from __future__ import annotations

from ..crypto.hashing import Digest, commit
from ..crypto.merkle import MerkleProof, fold_proof
from ..errors import GuardFailed
from ..ledger import PartyAddress
from .base import ContractBase
from .state import CitizenRecord, InjectingProtocol, VCRecord, VialState

CITIZEN_FAULTY = "citizen-faulty"
VC_FAULTY = "vc-faulty"


class CVcContract(ContractBase):

    # ------------------------------------------------------------ guards --

    def _citizen(self, addr: PartyAddress, must_be_unvaccinated: bool = True
                 ) -> CitizenRecord:
        record = self.state.citizens.get(addr)
        self._check(record is not None, "no valid token for this citizen")
        if must_be_unvaccinated:
            self._check(not record.vaccination_status, "citizen already vaccinated")
        return record

    def _vc_by_caller(self, caller: PartyAddress) -> VCRecord:
        vc = self.state.vcs.get(caller)
        self._auth(vc is not None, "caller is not a registered VC")
        return vc

    def _instance(self, c_addr: PartyAddress) -> InjectingProtocol:
        inst = self.state.current_injection.get(c_addr)
        self._check(inst is not None and inst.under_process,
                    "no open injection protocol for this citizen")
        self._check(not inst.frozen, "instance awaits off-system resolution")
        return inst

    def _match(self, inst: InjectingProtocol, vc_id: int, token_id: int) -> None:
        self._check(inst.vc_id == vc_id, "instance belongs to a different VC")
        self._check(inst.token_id == token_id, "instance belongs to a different token")

    # -------------------------------------------------------------- steps --

    def begin_protocol(self, caller: PartyAddress, vc_id: int) -> int:
        self._check(vc_id in self.state.vc_id_to_addr, "unknown VC id")
        citizen = self._citizen(caller)
        current = self.state.current_injection.get(caller)
        self._check(current is None or not current.under_process,
                    "an injection protocol is already open")
        inst = InjectingProtocol(
            protocol_id=self.state.next_id("injection"),
            citizen_addr=caller, token_id=citizen.token_id, vc_id=vc_id,
            under_process=True, t_protocol_begins=self.ledger.now)
        self.state.current_injection[caller] = inst
        self.state.injection_by_id[inst.protocol_id] = inst
        self._log(caller, "c_vc.begin_protocol",
                  protocol_id=inst.protocol_id, vc_id=vc_id)
        return inst.protocol_id

    def lock_money_by_vc(self, caller: PartyAddress, c_addr: PartyAddress,
                         locked: int) -> None:
        vc = self._vc_by_caller(caller)
        citizen = self._citizen(c_addr)
        inst = self._instance(c_addr)
        self._match(inst, vc.vc_id, citizen.token_id)
        self._check(inst.t_lock_money_by_vc == 0, "VC already locked")
        self._within(inst.t_protocol_begins, self.params.injection_timeout)
        self._check(locked == self.params.injection_deposit,
                    f"deposit must be {self.params.injection_deposit}")
        inst.vc_escrow = self.ledger.lock_funds(
            caller, locked, f"injection:{inst.protocol_id}:vc")
        inst.t_lock_money_by_vc = self.ledger.now
        self._log(caller, "c_vc.lock_money_by_vc",
                  protocol_id=inst.protocol_id, locked=locked)

    def lock_money_by_c(self, caller: PartyAddress, vc_id: int, locked: int) -> None:
        citizen = self._citizen(caller)
        self._check(vc_id in self.state.vc_id_to_addr, "unknown VC id")
        inst = self._instance(caller)
        self._match(inst, vc_id, citizen.token_id)
        self._check(inst.t_lock_money_by_vc != 0, "VC has not locked yet")
        self._check(inst.t_lock_money_by_c == 0, "citizen already locked")
        self._within(inst.t_lock_money_by_vc, self.params.injection_timeout)
        self._check(locked == self.params.injection_deposit,
                    f"deposit must be {self.params.injection_deposit}")
        inst.c_escrow = self.ledger.lock_funds(
            caller, locked, f"injection:{inst.protocol_id}:c")
        inst.t_lock_money_by_c = self.ledger.now
        self._log(caller, "c_vc.lock_money_by_c",
                  protocol_id=inst.protocol_id, locked=locked)

    def commit_mt_proof(self, caller: PartyAddress, c_addr: PartyAddress,
                        commit_mt_proof: Digest) -> None:
        vc = self._vc_by_caller(caller)
        citizen = self._citizen(c_addr)
        inst = self._instance(c_addr)
        self._match(inst, vc.vc_id, citizen.token_id)
        self._check(inst.t_lock_money_by_c != 0, "citizen has not locked yet")
        self._check(inst.t_commit_mt_proof == 0, "proof already committed")
        self._within(inst.t_lock_money_by_c, self.params.injection_timeout)
        inst.commit_mt_proof = commit_mt_proof
        inst.t_commit_mt_proof = self.ledger.now
        inst.stock_id = vc.current_stock_id  # stock the proof claims membership in
        self._log(caller, "c_vc.commit_mt_proof",
                  protocol_id=inst.protocol_id, digest=commit_mt_proof.hex())

    def provide_consent1(self, caller: PartyAddress, vc_id: int,
                         consent1: bool) -> None:
        citizen = self._citizen(caller)
        inst = self._instance(caller)
        self._match(inst, vc_id, citizen.token_id)
        self._check(inst.t_commit_mt_proof != 0, "no proof committed yet")
        self._check(inst.t_consent1 == 0, "first consent already given")
        self._within(inst.t_commit_mt_proof, self.params.injection_timeout)
        if not consent1:
            self._refund_both(inst)
        inst.consent1 = consent1
        inst.t_consent1 = self.ledger.now
        self._log(caller, "c_vc.provide_consent1",
                  protocol_id=inst.protocol_id, consent=consent1)

    def commit_vial_id(self, caller: PartyAddress, c_addr: PartyAddress,
                       commit_vid: Digest) -> None:
        vc = self._vc_by_caller(caller)
        citizen = self._citizen(c_addr)
        inst = self._instance(c_addr)
        self._match(inst, vc.vc_id, citizen.token_id)
        self._check(inst.t_consent1 != 0 and inst.consent1,
                    "first consent not given")
        self._check(inst.t_commit_vid == 0, "vial already committed")
        self._within(inst.t_consent1, self.params.injection_timeout)
        self._check(self.state.vial_state(commit_vid) is VialState.UNUSED,
                    "vial is not fresh")
        inst.commit_vid = commit_vid
        inst.t_commit_vid = self.ledger.now
        self.state.vial_states[commit_vid] = VialState.RESERVED
        self._log(caller, "c_vc.commit_vial_id",
                  protocol_id=inst.protocol_id, digest=commit_vid.hex())

    def provide_consent2(self, caller: PartyAddress, vc_id: int,
                         consent2: bool) -> None:
        citizen = self._citizen(caller)
        inst = self._instance(caller)
        self._match(inst, vc_id, citizen.token_id)
        self._check(inst.t_commit_vid != 0, "no vial committed yet")
        self._check(inst.t_consent2 == 0, "second consent already given")
        self._within(inst.t_commit_vid, self.params.injection_timeout)
        if not consent2:
            self._release_vial(inst)
            self._refund_both(inst)
        inst.consent2 = consent2
        inst.t_consent2 = self.ledger.now
        self._log(caller, "c_vc.provide_consent2",
                  protocol_id=inst.protocol_id, consent=consent2)

    def provide_consent3(self, caller: PartyAddress, vc_id: int,
                         consent3: bool) -> None:
        citizen = self._citizen(caller)
        inst = self._instance(caller)
        self._match(inst, vc_id, citizen.token_id)
        self._check(inst.t_consent2 != 0 and inst.consent2,
                    "second consent not given")
        self._check(inst.t_consent3 == 0, "third consent already given")
        self._within(inst.t_consent2, self.params.injection_timeout)
        # a dissent here does not close the instance: it opens the dispute
        # window in which the VC must reveal the proof on-chain
        inst.consent3 = consent3
        inst.t_consent3 = self.ledger.now
        self._log(caller, "c_vc.provide_consent3",
                  protocol_id=inst.protocol_id, consent=consent3)

    def adjudicate_dispute(self, caller: PartyAddress, c_addr: PartyAddress,
                           revealed_proof: MerkleProof) -> str:
        """VC answers a third-consent dissent by revealing the proof.

        The contract re-checks everything the citizen claimed: the revealed
        siblings must hash to the committed proof digest, the revealed leaf
        must hash to the committed vial id, and the fold must reach the
        stock's Merkle root.  All three holding means the dissent was
        wrongful and the citizen pays; any mismatch convicts the VC.
        """
        vc = self._vc_by_caller(caller)
        citizen = self._citizen(c_addr)
        inst = self._instance(c_addr)
        self._match(inst, vc.vc_id, citizen.token_id)
        self._check(inst.t_consent3 != 0 and not inst.consent3,
                    "no dispute to adjudicate")
        self._within(inst.t_consent3, self.params.dispute_window)
        stock = self.state.stocks.get(inst.stock_id)
        proof_ok = (
            commit(revealed_proof.siblings_blob()) == inst.commit_mt_proof
            and Digest.of(revealed_proof.leaf) == inst.commit_vid
            and stock is not None
            and fold_proof(revealed_proof.leaf, revealed_proof.path) == stock.stock_mr
        )
        vc_addr = self.state.vc_id_to_addr[inst.vc_id]
        winner = vc_addr if proof_ok else c_addr
        verdict = CITIZEN_FAULTY if proof_ok else VC_FAULTY
        self.ledger.release_funds(inst.c_escrow, winner)
        self.ledger.release_funds(inst.vc_escrow, winner)
        self._note_settlement(inst, winner_is_citizen=not proof_ok)
        self._release_vial(inst)
        inst.under_process = False
        self._log(caller, "c_vc.adjudicate_dispute",
                  protocol_id=inst.protocol_id, verdict=verdict)
        return verdict

    def register_vax_timestamp(self, caller: PartyAddress,
                               c_addr: PartyAddress) -> None:
        vc = self._vc_by_caller(caller)
        citizen = self._citizen(c_addr)
        inst = self._instance(c_addr)
        self._match(inst, vc.vc_id, citizen.token_id)
        self._check(inst.t_consent3 != 0 and inst.consent3,
                    "third consent not given")
        self._check(inst.t_vaccination == 0, "vaccination already recorded")
        self._within(inst.t_consent3, self.params.injection_timeout)
        inst.t_vaccination = self.ledger.now
        self._log(caller, "c_vc.register_vax_timestamp",
                  protocol_id=inst.protocol_id)

    def acknowledge_vaccination(self, caller: PartyAddress, vc_id: int,
                                ack: bool) -> None:
        citizen = self._citizen(caller)
        inst = self._instance(caller)
        self._match(inst, vc_id, citizen.token_id)
        self._check(inst.t_vaccination != 0, "no vaccination recorded")
        self._check(inst.t_acknowledgement == 0, "already acknowledged")
        self._within(inst.t_vaccination, self.params.injection_timeout)
        if ack:
            self._settle_completed_dose(inst, citizen)
        else:
            # denial despite the recorded timestamp: out-of-band (legal)
            # resolution; deposits stay locked and the instance freezes
            inst.frozen = True
        inst.acknowledgement = ack
        inst.t_acknowledgement = self.ledger.now
        self._log(caller, "c_vc.acknowledge_vaccination",
                  protocol_id=inst.protocol_id, ack=ack)

    # ------------------------------------------------------- timeout exit --

    def exit_stalled(self, caller: PartyAddress,
                     c_addr: PartyAddress | None = None) -> str:
        """Settle an instance whose responsible party stayed silent.

        The citizen calls with no argument for their own instance; a VC
        names the citizen.  Whoever is waiting at the current step may,
        once the window has expired, close the instance: stakes of the
        silent party go to the waiting party.  A citizen silent after the
        vaccination timestamp forfeits the dose outcome as well: the vial
        counts as used and the VC is paid.
        """
        if c_addr is None:
            c_addr = caller
        inst = self._instance(c_addr)
        vc_addr = self.state.vc_id_to_addr[inst.vc_id]
        citizen_addr = inst.citizen_addr
        is_vc = caller == vc_addr
        is_citizen = caller == citizen_addr
        self._auth(is_vc or is_citizen, "caller is not a party to this instance")
        window = self.params.injection_timeout
        label: str

        if inst.t_lock_money_by_vc == 0:
            self._auth(is_citizen, "waiting on the VC; only the citizen may exit")
            self._expired(inst.t_protocol_begins, window)
            label = "vc-silent-before-lock"
        elif inst.t_lock_money_by_c == 0:
            self._auth(is_vc, "waiting on the citizen; only the VC may exit")
            self._expired(inst.t_lock_money_by_vc, window)
            label = "citizen-silent-before-lock"
        elif inst.t_commit_mt_proof == 0:
            self._auth(is_citizen, "waiting on the VC; only the citizen may exit")
            self._expired(inst.t_lock_money_by_c, window)
            label = "vc-silent-before-proof"
        elif inst.t_consent1 == 0:
            self._auth(is_vc, "waiting on the citizen; only the VC may exit")
            self._expired(inst.t_commit_mt_proof, window)
            label = "citizen-silent-consent1"
        elif inst.t_commit_vid == 0:
            self._auth(is_citizen, "waiting on the VC; only the citizen may exit")
            self._expired(inst.t_consent1, window)
            label = "vc-silent-before-vial"
        elif inst.t_consent2 == 0:
            self._auth(is_vc, "waiting on the citizen; only the VC may exit")
            self._expired(inst.t_commit_vid, window)
            label = "citizen-silent-consent2"
        elif inst.t_consent3 == 0:
            self._auth(is_vc, "waiting on the citizen; only the VC may exit")
            self._expired(inst.t_consent2, window)
            label = "citizen-silent-consent3"
        elif not inst.consent3:
            # dispute opened and the VC never revealed the proof
            self._auth(is_citizen, "waiting on the VC; only the citizen may exit")
            self._expired(inst.t_consent3, self.params.dispute_window)
            label = "vc-silent-in-dispute"
        elif inst.t_vaccination == 0:
            self._auth(is_citizen, "waiting on the VC; only the citizen may exit")
            self._expired(inst.t_consent3, window)
            label = "vc-silent-before-vaccination"
        elif inst.t_acknowledgement == 0:
            self._auth(is_vc, "waiting on the citizen; only the VC may exit")
            self._expired(inst.t_vaccination, window)
            # silent after being vaccinated: outcome is claimed in full
            citizen = self.state.citizens[citizen_addr]
            self._claim_unacknowledged_dose(inst, citizen, vc_addr)
            self._log(caller, "c_vc.exit_stalled",
                      protocol_id=inst.protocol_id, state="citizen-silent-ack")
            return "citizen-silent-ack"
        else:
            raise GuardFailed("instance is not stalled")

        self._settle_timeout(inst, winner=caller, citizen_addr=citizen_addr)
        self._log(caller, "c_vc.exit_stalled",
                  protocol_id=inst.protocol_id, state=label)
        return label

    # ----------------------------------------------------------- internal --

    def _refund_both(self, inst: InjectingProtocol) -> None:
        vc_addr = self.state.vc_id_to_addr[inst.vc_id]
        if inst.c_escrow is not None:
            self.ledger.release_funds(inst.c_escrow, inst.citizen_addr)
        if inst.vc_escrow is not None:
            self.ledger.release_funds(inst.vc_escrow, vc_addr)
        self._note_settlement(inst, winner_is_citizen=None)
        inst.under_process = False

    def _settle_timeout(self, inst: InjectingProtocol, winner: PartyAddress,
                        citizen_addr: PartyAddress) -> None:
        for escrow in (inst.c_escrow, inst.vc_escrow):
            if escrow is not None:
                self.ledger.release_funds(escrow, winner)
        self._note_settlement(inst, winner_is_citizen=winner == citizen_addr)
        self._release_vial(inst)
        inst.under_process = False

    def _settle_completed_dose(self, inst: InjectingProtocol,
                               citizen: CitizenRecord) -> None:
        vc_addr = self.state.vc_id_to_addr[inst.vc_id]
        vc = self.state.vcs[vc_addr]
        stock = self.state.stocks.get(inst.stock_id)
        self._check(stock is not None and stock.charge_escrows,
                    "no service charge left for this stock")
        self._check(vc.vials_in_stock > 0, "stock accounting underflow")
        self.state.vial_states[inst.commit_vid] = VialState.USED
        citizen.vaccination_status = True
        vc.vials_in_stock -= 1
        vc.doses_administered += 1
        self.ledger.release_funds(inst.vc_escrow, vc_addr)
        charge_escrow = stock.charge_escrows.pop(0)
        self.ledger.release_funds(charge_escrow, vc_addr)
        vc.money_earned += self.params.service_charge_per_vial
        inst.t_money_received_by_vc = self.ledger.now
        # the citizen's stake stays locked until the passport is issued
        self.ledger.retag_escrow(inst.c_escrow, f"vp_wait:token:{inst.token_id}")
        self.state.vp_pending_escrow[inst.token_id] = inst.c_escrow
        inst.under_process = False

    def _claim_unacknowledged_dose(self, inst: InjectingProtocol,
                                   citizen: CitizenRecord,
                                   vc_addr: PartyAddress) -> None:
        vc = self.state.vcs[vc_addr]
        stock = self.state.stocks.get(inst.stock_id)
        self._check(stock is not None and stock.charge_escrows,
                    "no service charge left for this stock")
        self._check(vc.vials_in_stock > 0, "stock accounting underflow")
        self.state.vial_states[inst.commit_vid] = VialState.USED
        citizen.vaccination_status = True
        vc.vials_in_stock -= 1
        vc.doses_administered += 1
        self.ledger.release_funds(inst.vc_escrow, vc_addr)
        self.ledger.release_funds(inst.c_escrow, vc_addr)  # forfeited stake
        charge_escrow = stock.charge_escrows.pop(0)
        self.ledger.release_funds(charge_escrow, vc_addr)
        vc.money_earned += self.params.service_charge_per_vial
        inst.t_money_received_by_vc = self.ledger.now
        inst.under_process = False

    def _release_vial(self, inst: InjectingProtocol) -> None:
        if (inst.commit_vid is not None
                and self.state.vial_state(inst.commit_vid) is VialState.RESERVED):
            self.state.vial_states[inst.commit_vid] = VialState.UNUSED

    def _note_settlement(self, inst: InjectingProtocol,
                         winner_is_citizen: bool | None) -> None:
        now = self.ledger.now
        if winner_is_citizen is None:
            inst.t_money_received_by_c = now
            inst.t_money_received_by_vc = now
        elif winner_is_citizen:
            inst.t_money_received_by_c = now
        else:
            inst.t_money_received_by_vc = now
