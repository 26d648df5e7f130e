"""Vaccination-center registration and vaccine-stock refill state machines.

Two protocols between a VC and the government.  Registration carries no
money; refill escrows the per-vial service charge, locked by the
government when it commits the Merkle root of the vial set it is about to
dispatch and paid out per administered dose later.  Every step is guarded
by the previous step's timestamp and a step window; the expired-window
recovery paths are ``take_away_locked_money`` (government reclaims the
service charge from an unresponsive VC) and the ``exit_*`` operations for
the remaining waiting states.
"""

from __future__ import annotations

from ..crypto.hashing import Digest
from ..errors import GuardFailed
from ..ledger import PartyAddress
from .base import ContractBase
from .state import RegAppl, ReStockAppl, VaccineStock, VCRecord


class VcGovtContract(ContractBase):

    # ------------------------------------------------------ registration --

    def timestamp_reg_appl(self, caller: PartyAddress) -> RegAppl:
        self._auth(caller != self.govt_addr, "government cannot apply as a VC")
        self._check(caller not in self.state.vcs, "caller is already a registered VC")
        current = self.state.current_reg_appl.get(caller)
        self._check(current is None or not current.under_review,
                    "an application is already under review")
        appl = RegAppl(vc_addr=caller, under_review=True,
                       t_reg_appl=self.ledger.now)
        self.state.current_reg_appl[caller] = appl
        self._log(caller, "vc_govt.timestamp_reg_appl", t=appl.t_reg_appl)
        return appl

    def reg_appl_hash(self, caller: PartyAddress, vc_addr: PartyAddress,
                      appl_digest: Digest) -> None:
        self._require_govt(caller)
        appl = self._open_reg_appl(vc_addr)
        self._check(appl.t_hash_appl == 0, "application hash already submitted")
        self._within(appl.t_reg_appl, self.params.registration_timeout)
        appl.hash = appl_digest
        appl.t_hash_appl = self.ledger.now
        self._log(caller, "vc_govt.reg_appl_hash",
                  vc=vc_addr.hex(), digest=appl_digest.hex())

    def decide_on_acceptance_hash(self, caller: PartyAddress,
                                  decision: bool) -> int | None:
        appl = self._open_reg_appl(caller)
        self._check(appl.t_decide_on_hash == 0, "hash decision already made")
        self._within(appl.t_hash_appl, self.params.registration_timeout)
        if decision:
            appl.reg_appl_id = self.state.next_id("reg_appl")
            self.state.reg_appl_belongs_to[appl.reg_appl_id] = caller
        else:
            appl.under_review = False
        appl.t_decide_on_hash = self.ledger.now
        self._log(caller, "vc_govt.decide_on_acceptance_hash",
                  decision=decision, reg_appl_id=appl.reg_appl_id)
        return appl.reg_appl_id if decision else None

    def decide_on_acceptance_reg_appl(self, caller: PartyAddress,
                                      reg_appl_id: int,
                                      decision: bool) -> int | None:
        self._require_govt(caller)
        vc_addr = self.state.reg_appl_belongs_to.get(reg_appl_id)
        self._check(vc_addr is not None, f"unknown application id {reg_appl_id}")
        appl = self._open_reg_appl(vc_addr)
        self._check(appl.t_decide_on_appl == 0, "application already decided")
        self._within(appl.t_decide_on_hash, self.params.registration_timeout)
        vc_id: int | None = None
        if decision:
            vc_id = self.state.next_id("vc")
            record = VCRecord(addr=vc_addr, vc_id=vc_id)
            self.state.vcs[vc_addr] = record
            self.state.vc_id_to_addr[vc_id] = vc_addr
        appl.decision = decision
        appl.t_decide_on_appl = self.ledger.now
        appl.under_review = False
        self._log(caller, "vc_govt.decide_on_acceptance_reg_appl",
                  reg_appl_id=reg_appl_id, decision=decision, vc_id=vc_id)
        return vc_id

    def exit_registration(self, caller: PartyAddress,
                          vc_addr: PartyAddress | None = None) -> None:
        """Close a registration stalled past its window.

        Callable by the party that is *waiting*: the applicant when the
        government is silent, the government when the applicant is silent.
        No money is at stake in this protocol, so the penalty is the voided
        application.
        """
        if caller == self.govt_addr:
            self._check(vc_addr is not None, "government must name the applicant")
            appl = self._open_reg_appl(vc_addr)
            # government waits exactly when the hash is in and undecided
            self._check(appl.t_hash_appl != 0 and appl.t_decide_on_hash == 0,
                        "government is not the waiting party here")
            self._expired(appl.t_hash_appl, self.params.registration_timeout)
        else:
            appl = self._open_reg_appl(caller)
            if appl.t_hash_appl == 0:
                self._expired(appl.t_reg_appl, self.params.registration_timeout)
            elif appl.t_decide_on_hash != 0 and appl.t_decide_on_appl == 0:
                self._expired(appl.t_decide_on_hash, self.params.registration_timeout)
            else:
                raise GuardFailed("applicant is not the waiting party here")
        appl.under_review = False
        self._log(caller, "vc_govt.exit_registration", vc=appl.vc_addr.hex())

    def _open_reg_appl(self, vc_addr: PartyAddress) -> RegAppl:
        self._check(vc_addr not in self.state.vcs, "VC is already registered")
        appl = self.state.current_reg_appl.get(vc_addr)
        self._check(appl is not None and appl.under_review,
                    "no open registration application")
        return appl

    # ------------------------------------------------------------ refill --

    def refill_stock_appl(self, caller: PartyAddress) -> int:
        vc = self.state.vcs.get(caller)
        self._auth(vc is not None, "caller is not a registered VC")
        self._check(vc.vials_in_stock == 0, "stock is not empty yet")
        current = self.state.current_refill_appl.get(caller)
        self._check(current is None or not current.under_process,
                    "a refill application is already open")
        appl = ReStockAppl(vc_addr=caller,
                           refill_appl_id=self.state.next_id("refill"),
                           t_refill_appl=self.ledger.now,
                           under_process=True)
        self.state.current_refill_appl[caller] = appl
        self.state.refill_by_id[appl.refill_appl_id] = appl
        self._log(caller, "vc_govt.refill_stock_appl",
                  refill_appl_id=appl.refill_appl_id)
        return appl.refill_appl_id

    def commit_vaccine_set(self, caller: PartyAddress, vc_addr: PartyAddress,
                           vials_count: int, mr: Digest, locked: int) -> None:
        self._require_govt(caller)
        self._check(vc_addr in self.state.vcs, "target is not a registered VC")
        self._check(isinstance(vials_count, int) and vials_count > 0,
                    "vial count must be positive")
        appl = self._open_refill_appl(vc_addr)
        self._check(appl.t_commitment == 0, "a vaccine set was already committed")
        self._within(appl.t_refill_appl, self.params.restock_timeout)
        charge = self.params.service_charge_per_vial
        self._check(locked == charge * vials_count,
                    f"must lock {charge} per vial, got {locked} for {vials_count}")
        # one escrow per vial so each administered dose releases its own charge
        appl.charge_escrows = [
            self.ledger.lock_funds(
                caller, charge, f"restock:{appl.refill_appl_id}:charge:{i}")
            for i in range(vials_count)
        ]
        appl.vials_count = vials_count
        appl.commitment = mr
        appl.t_commitment = self.ledger.now
        self._log(caller, "vc_govt.commit_vaccine_set",
                  vc=vc_addr.hex(), vials=vials_count, mr=mr.hex(), locked=locked)

    def decide_on_acceptance_vaccine_set(self, caller: PartyAddress,
                                         decision: bool) -> int | None:
        vc = self.state.vcs.get(caller)
        self._auth(vc is not None, "caller is not a registered VC")
        appl = self._open_refill_appl(caller)
        self._check(appl.t_accept_vaccine_set == 0, "vaccine set already decided")
        self._within(appl.t_commitment, self.params.restock_timeout)
        stock_id: int | None = None
        if decision:
            stock_id = self.state.next_id("stock")
            stock = VaccineStock(stock_id=stock_id, owner_vc_id=vc.vc_id,
                                 vials_count=appl.vials_count,
                                 stock_mr=appl.commitment,
                                 charge_escrows=list(appl.charge_escrows))
            for i, eid in enumerate(stock.charge_escrows):
                self.ledger.retag_escrow(eid, f"stock:{stock_id}:charge:{i}")
            self.state.stocks[stock_id] = stock
            vc.current_stock_id = stock_id
            vc.vials_in_stock = appl.vials_count
        else:
            for eid in appl.charge_escrows:
                self.ledger.release_funds(eid, self.govt_addr)
        appl.charge_escrows = []
        appl.t_accept_vaccine_set = self.ledger.now
        appl.under_process = False
        self._log(caller, "vc_govt.decide_on_acceptance_vaccine_set",
                  decision=decision, stock_id=stock_id)
        return stock_id

    def take_away_locked_money(self, caller: PartyAddress,
                               vc_addr: PartyAddress) -> None:
        self._require_govt(caller)
        self._check(vc_addr in self.state.vcs, "target is not a registered VC")
        appl = self._open_refill_appl(vc_addr)
        self._check(appl.t_commitment != 0, "no vaccine set committed")
        self._check(appl.t_accept_vaccine_set == 0, "vaccine set already decided")
        self._expired(appl.t_commitment, self.params.restock_timeout)
        for eid in appl.charge_escrows:
            self.ledger.release_funds(eid, self.govt_addr)
        appl.charge_escrows = []
        appl.under_process = False
        self._log(caller, "vc_govt.take_away_locked_money", vc=vc_addr.hex())

    def exit_refill(self, caller: PartyAddress) -> None:
        """VC closes a refill application the government never answered."""
        self._auth(caller in self.state.vcs, "caller is not a registered VC")
        appl = self._open_refill_appl(caller)
        self._check(appl.t_commitment == 0,
                    "set already committed; decide or let the government reclaim")
        self._expired(appl.t_refill_appl, self.params.restock_timeout)
        appl.under_process = False
        self._log(caller, "vc_govt.exit_refill",
                  refill_appl_id=appl.refill_appl_id)

    def _open_refill_appl(self, vc_addr: PartyAddress) -> ReStockAppl:
        appl = self.state.current_refill_appl.get(vc_addr)
        self._check(appl is not None and appl.under_process,
                    "no open refill application")
        return appl
