"""On-chain records, mappings and protocol parameters.

Field names follow the contract structs: a timestamp of 0 means "not yet
set", booleans default pessimistically, and every protocol instance keeps
the escrow ids it holds so settlement can be audited per instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..cas import ContentID
from ..crypto.hashing import Digest
from ..ledger import EscrowId, PartyAddress


@dataclass(frozen=True, slots=True)
class ProtocolParams:
    """Timeouts, deposits and charges that the protocols leave to policy."""

    registration_timeout: int = 100
    restock_timeout: int = 100
    token_timeout: int = 100
    injection_timeout: int = 100
    vp_timeout: int = 100
    verification_timeout: int = 100
    dispute_window: int = 50
    injection_deposit: int = 100
    vp_deposit: int = 100
    verification_deposit: int = 100
    service_charge_per_vial: int = 10

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


# ------------------------------------------------------------ module 1/2 --

@dataclass(slots=True)
class RegAppl:
    vc_addr: PartyAddress
    under_review: bool = False
    t_reg_appl: int = 0
    t_hash_appl: int = 0
    hash: Digest | None = None
    t_decide_on_hash: int = 0
    decision: bool = False
    t_decide_on_appl: int = 0
    reg_appl_id: int | None = None


@dataclass(slots=True)
class VCRecord:
    addr: PartyAddress
    vc_id: int
    current_stock_id: int | None = None
    vials_in_stock: int = 0
    money_earned: int = 0
    doses_administered: int = 0


@dataclass(slots=True)
class ReStockAppl:
    vc_addr: PartyAddress
    refill_appl_id: int
    t_refill_appl: int = 0
    under_process: bool = False
    vials_count: int = 0
    commitment: Digest | None = None
    t_commitment: int = 0
    t_accept_vaccine_set: int = 0
    charge_escrows: list[EscrowId] = field(default_factory=list)


@dataclass(slots=True)
class VaccineStock:
    stock_id: int
    owner_vc_id: int
    vials_count: int
    stock_mr: Digest
    charge_escrows: list[EscrowId] = field(default_factory=list)


# ------------------------------------------------------------ module 3/5 --

@dataclass(slots=True)
class CitizenRecord:
    addr: PartyAddress
    citizen_info_digest: Digest
    token_id: int
    vaccination_status: bool = False
    vp_status: bool = False
    c_id: ContentID | None = None


@dataclass(slots=True)
class TokenAppl:
    token_appl_id: int
    citizen_addr: PartyAddress
    citizen_info_digest: Digest
    under_review: bool = False
    t_token_appl: int = 0
    result: bool = False
    t_result: int = 0


@dataclass(slots=True)
class VPAppl:
    vp_appl_id: int
    citizen_addr: PartyAddress
    applicant_token_id: int
    under_process: bool = False
    t_lock_money_by_c: int = 0
    t_lock_money_by_govt: int = 0
    t_provide_vaccination_proof: int = 0
    disclosed_vial_id: bytes | None = None
    consent1: bool = False
    t_consent1: int = 0
    consent2: bool = False
    t_consent2: int = 0
    t_issue_vp: int = 0
    t_money_received_by_c: int = 0
    t_money_received_by_govt: int = 0
    c_escrow: EscrowId | None = None
    govt_escrow: EscrowId | None = None


@dataclass(slots=True)
class VPRecord:
    md_vp: Digest
    sigma: bytes
    c_id: ContentID


# -------------------------------------------------------------- module 4 --

class VialState(str, Enum):
    UNUSED = "Unused"
    RESERVED = "Reserved"
    USED = "Used"


@dataclass(slots=True)
class InjectingProtocol:
    protocol_id: int
    citizen_addr: PartyAddress
    token_id: int
    vc_id: int
    under_process: bool = False
    t_protocol_begins: int = 0
    t_lock_money_by_vc: int = 0
    t_lock_money_by_c: int = 0
    commit_mt_proof: Digest | None = None
    t_commit_mt_proof: int = 0
    consent1: bool = False
    t_consent1: int = 0
    commit_vid: Digest | None = None
    t_commit_vid: int = 0
    consent2: bool = False
    t_consent2: int = 0
    consent3: bool = False
    t_consent3: int = 0
    t_vaccination: int = 0
    acknowledgement: bool = False
    t_acknowledgement: int = 0
    t_money_received_by_c: int = 0
    t_money_received_by_vc: int = 0
    vc_escrow: EscrowId | None = None
    c_escrow: EscrowId | None = None
    stock_id: int | None = None
    frozen: bool = False  # negative acknowledgement: held for off-system resolution


# -------------------------------------------------------------- module 6 --

@dataclass(slots=True)
class VerificationProtocol:
    vf_protocol_id: int
    token_id: int
    citizen_addr: PartyAddress
    vf_addr: PartyAddress
    under_execution: bool = False
    commit_rk: Digest | None = None
    consent: bool = False
    verification_result: bool | None = None
    t_lock_money_by_vf: int = 0
    t_lock_money_and_commit_rk_by_c: int = 0
    t_provide_consent: int = 0
    t_grant_access_by_c: int = 0
    t_fetch_vp_info: int = 0
    t_verification_result: int = 0
    t_unlock_money: int = 0
    vf_escrow: EscrowId | None = None
    c_escrow: EscrowId | None = None


@dataclass(slots=True)
class AccessControlMatrix:
    grants: dict[tuple[int, PartyAddress], bool] = field(default_factory=dict)

    def allowed(self, token_id: int, vf_addr: PartyAddress) -> bool:
        return self.grants.get((token_id, vf_addr), False)


@dataclass(slots=True)
class ChainState:
    """All contract storage, shared across the four contract modules the
    way public mappings are shared between deployed contracts."""

    # module 1/2
    current_reg_appl: dict[PartyAddress, RegAppl] = field(default_factory=dict)
    reg_appl_belongs_to: dict[int, PartyAddress] = field(default_factory=dict)
    vcs: dict[PartyAddress, VCRecord] = field(default_factory=dict)
    vc_id_to_addr: dict[int, PartyAddress] = field(default_factory=dict)
    current_refill_appl: dict[PartyAddress, ReStockAppl] = field(default_factory=dict)
    refill_by_id: dict[int, ReStockAppl] = field(default_factory=dict)
    stocks: dict[int, VaccineStock] = field(default_factory=dict)
    # module 3
    current_token_appl: dict[Digest, TokenAppl] = field(default_factory=dict)
    token_appl_by_id: dict[int, TokenAppl] = field(default_factory=dict)
    citizens: dict[PartyAddress, CitizenRecord] = field(default_factory=dict)
    digest_to_token: dict[Digest, int] = field(default_factory=dict)
    token_to_addr: dict[int, PartyAddress] = field(default_factory=dict)
    # module 4
    current_injection: dict[PartyAddress, InjectingProtocol] = field(default_factory=dict)
    injection_by_id: dict[int, InjectingProtocol] = field(default_factory=dict)
    vial_states: dict[Digest, VialState] = field(default_factory=dict)
    # escrow a citizen keeps locked between vaccination ack and VP issuance
    vp_pending_escrow: dict[int, EscrowId] = field(default_factory=dict)
    # module 5
    current_vp_appl: dict[PartyAddress, VPAppl] = field(default_factory=dict)
    vp_appl_by_id: dict[int, VPAppl] = field(default_factory=dict)
    vp_records: dict[int, VPRecord] = field(default_factory=dict)
    # module 6
    current_verification: dict[tuple[int, PartyAddress], VerificationProtocol] = (
        field(default_factory=dict))
    verification_by_id: dict[int, VerificationProtocol] = field(default_factory=dict)
    access_control: AccessControlMatrix = field(default_factory=AccessControlMatrix)
    verification_history: dict[int, list[tuple[PartyAddress, int, bool]]] = (
        field(default_factory=dict))
    # id counters, one sequence per record family
    counters: dict[str, int] = field(default_factory=dict)

    def next_id(self, family: str) -> int:
        nxt = self.counters.get(family, 0) + 1
        self.counters[family] = nxt
        return nxt

    def vial_state(self, commit_vid: Digest) -> VialState:
        return self.vial_states.get(commit_vid, VialState.UNUSED)
