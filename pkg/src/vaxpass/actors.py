"""Off-chain actors: government, vaccination centers, citizens, verifiers.

Each protocol exchange is an orchestration method on the initiating actor:
it interleaves both parties' contract calls and their off-chain messages
exactly as the sequence flows prescribe, appending human-readable notes to
a caller-owned transcript list (so notes survive an aborting contract
error).  Misbehavior is configured per actor through a behavior tag;
anything not recognized behaves honestly.

Behavior tags
-------------
``honest`` (default)
``silent_at:<stage>``     stop before the named step (see STAGES)
``wrong_mr``              government commits the root of a different vial set
``forged_md``             government signs/upload the digest of a tampered document
``wrong_proof``           VC commits a membership proof for a vial outside the stock
``reuse_vial``            VC prefers an already-used vial when one exists
``pii_tamper``            citizen's off-chain personal data differs from the digest
``wrongful_dissent``      citizen dissents at the third consent despite a valid proof
``negative_ack``          citizen denies receiving the administered dose
``replay_rk:<citizen>``   citizen replays the named citizen's re-encryption key
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field

from .cas import ContentStore
from .chain import Chain, VialState
from .crypto import (
    Ciphertext,
    Digest,
    MerkleProof,
    MerkleTree,
    ReEncryptionKey,
    commit,
    merkle_verify,
    pre_decrypt,
    pre_encrypt,
    pre_keygen,
    pre_reencrypt,
    pre_rekey,
    sign,
    verify,
)
from .crypto.signing import KeyPair, keygen
from .errors import DecodeError, DecryptFailure, GuardFailed, NotFound
from .ledger import PartyAddress

PII_SEPARATOR = "‖"  # ‖ joins the personal-data fields before hashing

STAGES = (
    "reg.hash", "reg.decide_hash", "reg.decide_appl",
    "refill.commit_set", "refill.decide_set",
    "token.verify",
    "inj.vc_lock", "inj.c_lock", "inj.commit_proof", "inj.consent1",
    "inj.commit_vial", "inj.consent2", "inj.consent3", "inj.reveal",
    "inj.vax", "inj.ack",
    "vp.govt_lock", "vp.proof", "vp.consent1", "vp.consent2", "vp.reveal",
    "vp.issue",
    "ver.commit_rk", "ver.consent", "ver.grant", "ver.fetch", "ver.result",
)


@dataclass(frozen=True, slots=True)
class VPDocument:
    """The passport document itself; lives encrypted off-chain."""

    token_id: int
    vial_id: str
    vc_id: int
    vaccination_time: int
    vaccine_name: str
    target_disease: str

    def canonical_bytes(self) -> bytes:
        payload = {
            "token_id": self.token_id,
            "vial_id": self.vial_id,
            "vc_id": self.vc_id,
            "vaccination_time": self.vaccination_time,
            "vaccine_name": self.vaccine_name,
            "target_disease": self.target_disease,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()

    def digest(self) -> Digest:
        return Digest.of(self.canonical_bytes())

    @classmethod
    def from_bytes(cls, raw: bytes) -> "VPDocument":
        try:
            payload = json.loads(raw.decode())
            return cls(**payload)
        except (ValueError, TypeError, KeyError) as exc:
            raise DecodeError(f"not a passport document: {exc}") from exc


@dataclass(slots=True)
class OffchainMessage:
    sender: PartyAddress
    recipient: PartyAddress
    kind: str  # application | merkle-proof | vial-handover | rekey | vp-request
    payload: bytes


class Actor:
    def __init__(self, world: "World", name: str, role: str,
                 behavior: str = "honest"):
        self.world = world
        self.name = name
        self.role = role
        self.behavior = behavior
        self.sign_keys: KeyPair = keygen(world.rng)
        self.enc_keys: KeyPair = pre_keygen(world.rng)
        self.address = PartyAddress.from_public_key(self.sign_keys.pk)
        self.inbox: deque[OffchainMessage] = deque()

    # -- behavior helpers -------------------------------------------------

    def is_behavior(self, tag: str) -> bool:
        return self.behavior == tag or self.behavior.startswith(tag + ":")

    def behavior_arg(self, tag: str) -> str | None:
        if self.behavior.startswith(tag + ":"):
            return self.behavior.split(":", 1)[1]
        return None

    def silent_at(self, stage: str) -> bool:
        return self.behavior == f"silent_at:{stage}"

    # -- off-chain channel -------------------------------------------------

    def send(self, to: "Actor", kind: str, payload: bytes) -> None:
        to.inbox.append(OffchainMessage(self.address, to.address, kind, payload))

    def take(self, kind: str) -> OffchainMessage:
        for i, msg in enumerate(self.inbox):
            if msg.kind == kind:
                del self.inbox[i]
                return msg
        raise NotFound(f"{self.name} has no {kind!r} message")

    def __repr__(self) -> str:
        return f"<{self.role} {self.name} {self.address.hex()[:8]}>"


class Government(Actor):
    def __init__(self, world: "World", name: str, behavior: str = "honest"):
        super().__init__(world, name, "govt", behavior)

    def dispatch_stock(self, vc: "VaccinationCenter",
                       vial_ids: list[bytes] | None = None, count: int = 8,
                       notes: list[str] | None = None) -> int | None:
        """Commit the Merkle root of a vial set, lock the service charge,
        hand the vials over off-chain, and let the VC decide (module 2
        after the VC's refill application)."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        if vial_ids is None:
            vial_ids = [f"VIAL-{world.rng.randrange(16**10):010x}".encode()
                        for _ in range(count)]
        tree = MerkleTree(vial_ids)
        committed_root = tree.root
        if self.is_behavior("wrong_mr"):
            other = [v + b"-NOT-SENT" for v in vial_ids]
            committed_root = MerkleTree(other).root
            notes.append(f"{self.name} commits root of a different set")
        if self.silent_at("refill.commit_set"):
            notes.append(f"{self.name} silent at refill.commit_set")
            return None
        locked = chain.params.service_charge_per_vial * len(vial_ids)
        chain.vc_govt.commit_vaccine_set(self.address, vc.address,
                                         len(vial_ids), committed_root, locked)
        notes.append(f"{self.name} committed set of {len(vial_ids)} vials, "
                     f"locked {locked}")
        self.send(vc, "vial-handover",
                  b"\n".join(sorted(vial_ids)))
        # VC verifies the delivery against the on-chain commitment
        delivered = vc.take("vial-handover").payload.split(b"\n")
        local_tree = MerkleTree(delivered)
        appl = chain.state.current_refill_appl[vc.address]
        match = local_tree.root == appl.commitment
        if vc.silent_at("refill.decide_set"):
            notes.append(f"{vc.name} silent at refill.decide_set")
            return None
        stock_id = chain.vc_govt.decide_on_acceptance_vaccine_set(
            vc.address, match)
        if stock_id is None:
            notes.append(f"{vc.name} rejected the set (root mismatch)")
            return None
        vc.stock_vials[stock_id] = delivered
        vc.stock_trees[stock_id] = local_tree
        notes.append(f"{vc.name} accepted stock {stock_id}")
        return stock_id

    def issue_vp(self, citizen: "Citizen",
                 notes: list[str] | None = None):
        """Step list of passport creation: build the document, sign its
        digest, encrypt for the citizen, store in the content store and
        record the triple on-chain."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        record = chain.state.citizens[citizen.address]
        inst = chain.state.current_injection[citizen.address]
        appl = chain.state.current_vp_appl[citizen.address]
        doc = VPDocument(
            token_id=record.token_id,
            vial_id=appl.disclosed_vial_id.decode(),
            vc_id=inst.vc_id,
            vaccination_time=inst.t_vaccination,
            vaccine_name=world.vaccine_name,
            target_disease=world.target_disease,
        )
        md = doc.digest()
        if self.is_behavior("forged_md"):
            tampered = VPDocument(
                token_id=record.token_id, vial_id=doc.vial_id, vc_id=doc.vc_id,
                vaccination_time=doc.vaccination_time,
                vaccine_name=doc.vaccine_name + "-FORGED",
                target_disease=doc.target_disease)
            md = tampered.digest()
            notes.append(f"{self.name} signs the digest of a tampered document")
        sigma = sign(self.sign_keys.sk, md.value)
        ct = pre_encrypt(citizen.enc_keys.pk, doc.canonical_bytes(), world.rng)
        cid = world.cas.put(ct.to_bytes())
        chain.c_govt.upload_vp_info_and_get_payment(
            self.address, citizen.address, md, sigma, cid)
        notes.append(f"passport issued for token {record.token_id}, "
                     f"cid {cid.hex()[:16]}")
        return chain.state.vp_records[record.token_id]


class VaccinationCenter(Actor):
    def __init__(self, world: "World", name: str, behavior: str = "honest"):
        super().__init__(world, name, "vc", behavior)
        self.vc_id: int | None = None
        self.stock_vials: dict[int, list[bytes]] = {}
        self.stock_trees: dict[int, MerkleTree] = {}

    def register(self, notes: list[str] | None = None) -> int | None:
        """Module 1: apply, receive the application hash, consent, get id."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        govt = world.government
        details = f"vc-application:{self.name}".encode()
        chain.vc_govt.timestamp_reg_appl(self.address)
        self.send(govt, "application", details)
        notes.append(f"{self.name} applied for registration")
        if govt.silent_at("reg.hash"):
            notes.append(f"{govt.name} silent at reg.hash")
            return None
        received = govt.take("application").payload
        chain.vc_govt.reg_appl_hash(govt.address, self.address,
                                    Digest.of(received))
        if self.silent_at("reg.decide_hash"):
            notes.append(f"{self.name} silent at reg.decide_hash")
            return None
        appl = chain.state.current_reg_appl[self.address]
        consent = appl.hash == Digest.of(details)
        reg_appl_id = chain.vc_govt.decide_on_acceptance_hash(
            self.address, consent)
        if reg_appl_id is None:
            notes.append(f"{self.name} rejected the application hash")
            return None
        if govt.silent_at("reg.decide_appl"):
            notes.append(f"{govt.name} silent at reg.decide_appl")
            return None
        vc_id = chain.vc_govt.decide_on_acceptance_reg_appl(
            govt.address, reg_appl_id, True)
        self.vc_id = vc_id
        notes.append(f"{self.name} registered as VC {vc_id}")
        return vc_id

    def request_refill(self, notes: list[str] | None = None) -> int:
        notes = notes if notes is not None else []
        refill_id = self.world.chain.vc_govt.refill_stock_appl(self.address)
        notes.append(f"{self.name} opened refill application {refill_id}")
        return refill_id

    # -- module 4 -----------------------------------------------------------

    def _pick_vial(self, stock_id: int) -> bytes:
        chain = self.world.chain
        vials = self.stock_vials.get(stock_id, [])
        unused = [v for v in vials
                  if chain.state.vial_state(Digest.of(v)) is VialState.UNUSED]
        if self.is_behavior("reuse_vial"):
            used = [v for v in vials
                    if chain.state.vial_state(Digest.of(v)) is VialState.USED]
            if used:
                return sorted(used)[0]
        if not unused:
            raise GuardFailed(f"{self.name} has no unused vial")
        return sorted(unused)[0]

    def administer_dose(self, citizen: "Citizen",
                        notes: list[str] | None = None) -> str:
        """Module 4 exchange; returns a short outcome label."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        deposit = chain.params.injection_deposit

        chain.c_vc.begin_protocol(citizen.address, self.vc_id)
        notes.append(f"{citizen.name} began the injection protocol")
        if self.silent_at("inj.vc_lock"):
            notes.append(f"{self.name} silent at inj.vc_lock")
            return "stalled"
        chain.c_vc.lock_money_by_vc(self.address, citizen.address, deposit)
        if citizen.silent_at("inj.c_lock"):
            notes.append(f"{citizen.name} silent at inj.c_lock")
            return "stalled"
        chain.c_vc.lock_money_by_c(citizen.address, self.vc_id, deposit)
        notes.append("both deposits locked")

        stock_id = chain.state.vcs[self.address].current_stock_id
        vial = self._pick_vial(stock_id)
        tree = self.stock_trees[stock_id]
        if self.is_behavior("wrong_proof"):
            # counterfeit vial: real siblings, alien leaf — the commitment
            # is self-consistent but the fold cannot reach the stock root
            donor = tree.prove(sorted(self.stock_vials[stock_id])[0])
            vial = f"FAKE-{world.rng.randrange(16**8):08x}".encode()
            proof = MerkleProof(leaf=vial, path=donor.path,
                                claimed_root=donor.claimed_root)
            notes.append(f"{self.name} built a proof for a vial outside the stock")
        else:
            proof = tree.prove(vial)
        if self.silent_at("inj.commit_proof"):
            notes.append(f"{self.name} silent at inj.commit_proof")
            return "stalled"
        chain.c_vc.commit_mt_proof(self.address, citizen.address,
                                   commit(proof.siblings_blob()))
        self.send(citizen, "merkle-proof", proof.to_text().encode())
        notes.append(f"{self.name} committed the membership proof")

        if citizen.silent_at("inj.consent1"):
            notes.append(f"{citizen.name} silent at inj.consent1")
            return "stalled"
        received = MerkleProof.from_text(
            citizen.take("merkle-proof").payload.decode())
        citizen.received_proof = received
        inst = chain.state.current_injection[citizen.address]
        ok1 = commit(received.siblings_blob()) == inst.commit_mt_proof
        chain.c_vc.provide_consent1(citizen.address, self.vc_id, ok1)
        notes.append(f"consent1={ok1}")
        if not ok1:
            return "aborted-consent1"

        if self.silent_at("inj.commit_vial"):
            notes.append(f"{self.name} silent at inj.commit_vial")
            return "stalled"
        chain.c_vc.commit_vial_id(self.address, citizen.address, Digest.of(vial))
        self.send(citizen, "vial-handover", vial)
        notes.append(f"{self.name} committed and handed over the vial")

        if citizen.silent_at("inj.consent2"):
            notes.append(f"{citizen.name} silent at inj.consent2")
            return "stalled"
        handed = citizen.take("vial-handover").payload
        citizen.received_vial = handed
        ok2 = Digest.of(handed) == inst.commit_vid  # physical label check
        chain.c_vc.provide_consent2(citizen.address, self.vc_id, ok2)
        notes.append(f"consent2={ok2}")
        if not ok2:
            return "aborted-consent2"

        if citizen.silent_at("inj.consent3"):
            notes.append(f"{citizen.name} silent at inj.consent3")
            return "stalled"
        stock = chain.state.stocks[inst.stock_id]
        ok3 = (merkle_verify(received, stock.stock_mr)
               and received.leaf == handed)
        if citizen.is_behavior("wrongful_dissent") and ok3:
            notes.append(f"{citizen.name} dissents despite a valid proof")
            ok3 = False
        chain.c_vc.provide_consent3(citizen.address, self.vc_id, ok3)
        notes.append(f"consent3={ok3}")

        if not ok3:
            if self.silent_at("inj.reveal"):
                notes.append(f"{self.name} silent at inj.reveal")
                return "stalled-dispute"
            verdict = chain.c_vc.adjudicate_dispute(
                self.address, citizen.address, proof)
            notes.append(f"dispute adjudicated: {verdict}")
            return verdict

        if self.silent_at("inj.vax"):
            notes.append(f"{self.name} silent at inj.vax")
            return "stalled"
        chain.c_vc.register_vax_timestamp(self.address, citizen.address)
        notes.append("vaccination timestamp recorded")
        if citizen.silent_at("inj.ack"):
            notes.append(f"{citizen.name} silent at inj.ack")
            return "stalled"
        ack = not citizen.is_behavior("negative_ack")
        chain.c_vc.acknowledge_vaccination(citizen.address, self.vc_id, ack)
        notes.append(f"acknowledgement={ack}")
        return "vaccinated" if ack else "frozen"


class Citizen(Actor):
    def __init__(self, world: "World", name: str, pii: dict[str, str],
                 behavior: str = "honest"):
        super().__init__(world, name, "citizen", behavior)
        self.pii = pii
        self.token_id: int | None = None
        self.received_vial: bytes | None = None
        self.received_proof: MerkleProof | None = None

    def pii_bytes(self) -> bytes:
        fields = (self.pii["name"], self.pii["addr"],
                  self.pii["dob"], self.pii["citizen_id"])
        return PII_SEPARATOR.join(fields).encode("utf-8")

    def obtain_token(self, notes: list[str] | None = None) -> int | None:
        """Module 3: off-chain personal data, on-chain digest, token issue."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        govt = world.government
        info_digest = Digest.of(self.pii_bytes())
        offchain = self.pii_bytes()
        if self.is_behavior("pii_tamper"):
            offchain = offchain + "-TAMPERED".encode()
            notes.append(f"{self.name} sends tampered personal data off-chain")
        appl_id = chain.c_govt.appl_for_token_id(self.address, info_digest)
        self.send(govt, "application", offchain)
        notes.append(f"{self.name} applied for a token (application {appl_id})")
        if govt.silent_at("token.verify"):
            notes.append(f"{govt.name} silent at token.verify")
            return None
        received = govt.take("application").payload
        ok = Digest.of(received) == info_digest
        token_id = chain.c_govt.verify_appl(govt.address, appl_id, ok)
        if token_id is None:
            notes.append("application rejected (digest mismatch)")
            return None
        self.token_id = token_id
        notes.append(f"{self.name} received token {token_id}")
        return token_id

    def request_vp(self, notes: list[str] | None = None) -> str:
        """Module 5 exchange; the government's side is behavior-driven."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        govt = world.government
        deposit = chain.params.vp_deposit

        chain.c_govt.initiate_vp_appl_and_lock_money(self.address, deposit)
        notes.append(f"{self.name} applied for the passport, locked {deposit}")
        if govt.silent_at("vp.govt_lock"):
            notes.append(f"{govt.name} silent at vp.govt_lock")
            return "stalled"
        chain.c_govt.lock_money_by_govt(govt.address, self.address, deposit)

        if self.silent_at("vp.proof"):
            notes.append(f"{self.name} silent at vp.proof")
            return "stalled"
        proof = self.received_proof
        vial = self.received_vial
        chain.c_govt.send_vaccination_proof(
            self.address, vial, commit(proof.siblings_blob()))
        self.send(govt, "merkle-proof", proof.to_text().encode())
        notes.append(f"{self.name} disclosed vial and recommitted the proof")

        inst = chain.state.current_injection[self.address]
        received = MerkleProof.from_text(
            govt.take("merkle-proof").payload.decode())
        if govt.silent_at("vp.consent1"):
            notes.append(f"{govt.name} silent at vp.consent1")
            return "stalled"
        ok1 = commit(received.siblings_blob()) == inst.commit_mt_proof
        chain.c_govt.send_consent1(govt.address, self.address, ok1)
        notes.append(f"vp consent1={ok1}")
        if not ok1:
            return "aborted-consent1"

        if govt.silent_at("vp.consent2"):
            notes.append(f"{govt.name} silent at vp.consent2")
            return "stalled"
        stock = chain.state.stocks[inst.stock_id]
        ok2 = (merkle_verify(received, stock.stock_mr)
               and received.leaf == vial)
        chain.c_govt.send_consent2(govt.address, self.address, ok2)
        notes.append(f"vp consent2={ok2}")
        if not ok2:
            if govt.silent_at("vp.reveal"):
                notes.append(f"{govt.name} silent at vp.reveal")
                return "stalled-dispute"
            verdict = chain.c_govt.adjudicate_vp_dissent(
                govt.address, self.address, received)
            notes.append(f"vp dissent adjudicated: {verdict}")
            return verdict

        if govt.silent_at("vp.issue"):
            notes.append(f"{govt.name} silent at vp.issue")
            return "stalled"
        govt.issue_vp(self, notes)
        return "issued"


class Verifier(Actor):
    def __init__(self, world: "World", name: str, behavior: str = "honest"):
        super().__init__(world, name, "verifier", behavior)

    def check_vp(self, citizen: Citizen,
                 notes: list[str] | None = None) -> bool | None:
        """Module 6 exchange; returns the recorded result, or None if the
        run stalled before a result could be recorded."""
        notes = notes if notes is not None else []
        world = self.world
        chain = world.chain
        deposit = chain.params.verification_deposit

        vf_id = chain.c_vf.lock_money_by_vf(self.address, citizen.address,
                                            deposit)
        notes.append(f"{self.name} opened verification {vf_id}")

        if citizen.silent_at("ver.commit_rk"):
            notes.append(f"{citizen.name} silent at ver.commit_rk")
            return None
        rk = pre_rekey(citizen.enc_keys.sk, self.enc_keys.pk)
        source = citizen.behavior_arg("replay_rk")
        if source is not None:
            rk = world.rk_log[(source, self.name)]
            notes.append(f"{citizen.name} replays {source}'s re-encryption key")
        chain.c_vf.lock_money_and_commit_rk(
            citizen.address, vf_id, commit(rk.material), deposit)
        citizen.send(self, "rekey", rk.material)
        world.rk_log[(citizen.name, self.name)] = rk
        notes.append(f"{citizen.name} committed and sent the re-encryption key")

        if self.silent_at("ver.consent"):
            notes.append(f"{self.name} silent at ver.consent")
            return None
        rk_received = self.take("rekey").payload
        inst = chain.state.verification_by_id[vf_id]
        consent = commit(rk_received) == inst.commit_rk
        chain.c_vf.provide_consent(self.address, vf_id, consent)
        notes.append(f"verifier consent={consent}")
        if not consent:
            return None

        if citizen.silent_at("ver.grant"):
            notes.append(f"{citizen.name} silent at ver.grant")
            return None
        chain.c_vf.grant_access_permission(citizen.address, vf_id)
        notes.append(f"{citizen.name} granted access")

        if self.silent_at("ver.fetch"):
            notes.append(f"{self.name} silent at ver.fetch")
            return None
        md, sigma, cid = chain.c_vf.fetch_vp_info(self.address, vf_id)
        result = self._validate_passport(md, sigma, cid, rk_received, notes)

        if self.silent_at("ver.result"):
            notes.append(f"{self.name} silent at ver.result")
            return None
        chain.c_vf.verification_result(self.address, vf_id, result)
        notes.append(f"verification result recorded: {result}")
        return result

    def _validate_passport(self, md: Digest, sigma: bytes, cid,
                           rk_material: bytes, notes: list[str]) -> bool:
        """Fetch, re-encrypt, decrypt and compare; any failure is a False."""
        world = self.world
        try:
            blob = world.cas.get(cid)
            ct = Ciphertext.from_bytes(blob)
            transformed = pre_reencrypt(ReEncryptionKey(rk_material), ct)
            plaintext = pre_decrypt(self.enc_keys.sk, transformed)
        except (DecryptFailure, DecodeError, NotFound) as exc:
            notes.append(f"decryption failed: {type(exc).__name__}")
            return False
        digest_ok = Digest.of(plaintext) == md
        sig_ok = verify(world.government.sign_keys.pk, md.value, sigma)
        if not digest_ok:
            notes.append("document digest does not match the on-chain record")
        if not sig_ok:
            notes.append("issuer signature does not verify")
        return digest_ok and sig_ok


@dataclass
class World:
    """Actor runtime: the chain, the content store, seeded randomness and
    the reliable ordered off-chain channel between actors.

    The chain is attached after the actors exist because its genesis and
    government identity derive from their keys.
    """

    chain: Chain | None
    cas: ContentStore
    rng: random.Random
    vaccine_name: str = "VAXPASS-1"
    target_disease: str = "DISEASE-X"
    actors: dict[str, Actor] = field(default_factory=dict)
    rk_log: dict[tuple[str, str], "ReEncryptionKey"] = field(default_factory=dict)
    government: Government | None = None  # set when the government is added

    def add(self, actor: Actor) -> Actor:
        self.actors[actor.name] = actor
        if isinstance(actor, Government):
            self.government = actor
        return actor

    def __getitem__(self, name: str) -> Actor:
        try:
            return self.actors[name]
        except KeyError:
            raise NotFound(f"unknown actor {name!r}") from None
