"""Scenario files, world construction, and the scripted runner.

A scenario is a JSON document declaring parties (with genesis balances,
behaviors and citizens' personal data), protocol parameters, a seed, and
an ordered script of exchanges with explicit time advancement.  The
runner executes the script step by step, checks the ledger and escrow
invariants after every step, and emits a deterministic line-oriented
transcript ending in the final statistics.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .actors import Actor, Citizen, Government, VaccinationCenter, Verifier, World
from .cas import ContentStore
from .chain import Chain, ProtocolParams
from .errors import ScenarioError, VaxpassError
from .ledger import PartyAddress

ROLES = ("govt", "vc", "citizen", "verifier")
OPS = (
    "register_vc", "refill_request", "dispatch_stock", "obtain_token",
    "administer_dose", "request_vp", "check_vp", "exit",
    "take_away_locked_money", "revoke_access", "noop",
)
PII_FIELDS = ("name", "addr", "dob", "citizen_id")


@dataclass(frozen=True, slots=True)
class PartyDecl:
    name: str
    role: str
    balance: int
    behavior: str = "honest"
    pii: dict[str, str] | None = None


@dataclass(frozen=True, slots=True)
class Step:
    actor: str | None
    op: str
    args: dict[str, Any]
    advance: int
    expect_error: str | None


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    name: str
    seed: int
    params: ProtocolParams
    parties: tuple[PartyDecl, ...]
    script: tuple[Step, ...]
    vaccine_name: str
    target_disease: str
    meta: dict[str, Any]

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ScenarioConfig":
        try:
            return cls._parse(raw)
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc

    @classmethod
    def _parse(cls, raw: dict[str, Any]) -> "ScenarioConfig":
        name = str(raw.get("name", "unnamed"))
        seed = int(raw.get("seed", 0))
        params = ProtocolParams(**raw.get("params", {}))
        parties: list[PartyDecl] = []
        names: set[str] = set()
        for p in raw["parties"]:
            decl = PartyDecl(name=str(p["name"]), role=str(p["role"]),
                             balance=int(p["balance"]),
                             behavior=str(p.get("behavior", "honest")),
                             pii=p.get("pii"))
            if decl.role not in ROLES:
                raise ScenarioError(f"unknown role {decl.role!r}")
            if decl.name in names:
                raise ScenarioError(f"duplicate party {decl.name!r}")
            if decl.balance < 0:
                raise ScenarioError("genesis balance must be non-negative")
            if decl.role == "citizen":
                if not decl.pii or set(PII_FIELDS) - set(decl.pii):
                    raise ScenarioError(
                        f"citizen {decl.name!r} needs pii fields {PII_FIELDS}")
            names.add(decl.name)
            parties.append(decl)
        if sum(1 for p in parties if p.role == "govt") != 1:
            raise ScenarioError("exactly one government party required")
        script: list[Step] = []
        for i, s in enumerate(raw.get("script", [])):
            op = str(s.get("op", "noop"))
            if op not in OPS:
                raise ScenarioError(f"step {i}: unknown op {op!r}")
            actor = s.get("actor")
            if op != "noop" and actor not in names:
                raise ScenarioError(f"step {i}: unknown actor {actor!r}")
            for ref_key in ("citizen", "vc", "verifier"):
                ref = s.get("args", {}).get(ref_key)
                if ref is not None and ref not in names:
                    raise ScenarioError(f"step {i}: unknown {ref_key} {ref!r}")
            script.append(Step(actor=actor, op=op,
                               args=dict(s.get("args", {})),
                               advance=int(s.get("advance", 0)),
                               expect_error=s.get("expect_error")))
        return cls(name=name, seed=seed, params=params,
                   parties=tuple(parties), script=tuple(script),
                   vaccine_name=str(raw.get("vaccine_name", "VAXPASS-1")),
                   target_disease=str(raw.get("target_disease", "DISEASE-X")),
                   meta=dict(raw.get("meta", {})))

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_dict(raw)


def build_world(config: ScenarioConfig, seed: int | None = None) -> World:
    """Instantiate actors, mint genesis balances and wire up the chain."""
    rng = random.Random(config.seed if seed is None else seed)
    world = World(chain=None, cas=ContentStore(), rng=rng,
                  vaccine_name=config.vaccine_name,
                  target_disease=config.target_disease)
    genesis: dict[PartyAddress, int] = {}
    for decl in config.parties:
        if decl.role == "govt":
            actor: Actor = Government(world, decl.name, decl.behavior)
        elif decl.role == "vc":
            actor = VaccinationCenter(world, decl.name, decl.behavior)
        elif decl.role == "citizen":
            actor = Citizen(world, decl.name, dict(decl.pii), decl.behavior)
        else:
            actor = Verifier(world, decl.name, decl.behavior)
        world.add(actor)
        genesis[actor.address] = decl.balance
    govt = world.government
    world.chain = Chain(genesis, config.params, govt.address,
                        govt.sign_keys.pk)
    return world


@dataclass
class RunResult:
    exit_code: int
    transcript: str
    stats: dict[str, Any]
    violations: list[str] = field(default_factory=list)


def _dispatch(world: World, actor: Actor, step: Step,
              notes: list[str]) -> None:
    chain = world.chain
    args = step.args
    op = step.op
    if op == "noop":
        return
    if op == "register_vc":
        actor.register(notes=notes)
    elif op == "refill_request":
        actor.request_refill(notes=notes)
    elif op == "dispatch_stock":
        vc = world[args["vc"]]
        vial_ids = ([v.encode() for v in args["vial_ids"]]
                    if "vial_ids" in args else None)
        actor.dispatch_stock(vc, vial_ids=vial_ids,
                             count=int(args.get("count", 8)), notes=notes)
    elif op == "obtain_token":
        actor.obtain_token(notes=notes)
    elif op == "administer_dose":
        outcome = actor.administer_dose(world[args["citizen"]], notes=notes)
        notes.append(f"dose outcome: {outcome}")
    elif op == "request_vp":
        outcome = actor.request_vp(notes=notes)
        notes.append(f"vp outcome: {outcome}")
    elif op == "check_vp":
        result = actor.check_vp(world[args["citizen"]], notes=notes)
        notes.append(f"check outcome: {result}")
    elif op == "take_away_locked_money":
        chain.vc_govt.take_away_locked_money(actor.address,
                                             world[args["vc"]].address)
        notes.append(f"{actor.name} reclaimed the locked service charge")
    elif op == "revoke_access":
        chain.c_vf.revoke_access_permission(actor.address,
                                            world[args["verifier"]].address)
        notes.append(f"{actor.name} revoked access")
    elif op == "exit":
        _dispatch_exit(world, actor, args, notes)
    else:  # pragma: no cover - guarded by config validation
        raise ScenarioError(f"unhandled op {op}")


def _dispatch_exit(world: World, actor: Actor, args: dict[str, Any],
                   notes: list[str]) -> None:
    chain = world.chain
    protocol = args.get("protocol")
    if protocol == "registration":
        vc = world[args["vc"]] if "vc" in args else None
        chain.vc_govt.exit_registration(
            actor.address, vc.address if vc else None)
    elif protocol == "refill":
        chain.vc_govt.exit_refill(actor.address)
    elif protocol == "token":
        chain.c_govt.exit_token_appl(actor.address)
    elif protocol == "injection":
        target = world[args["citizen"]].address if "citizen" in args else None
        state = chain.c_vc.exit_stalled(actor.address, target)
        notes.append(f"injection exit: {state}")
        return
    elif protocol == "vp":
        target = world[args["citizen"]].address if "citizen" in args else None
        state = chain.c_govt.exit_vp_appl(actor.address, target)
        notes.append(f"vp exit: {state}")
        return
    elif protocol == "verification":
        if isinstance(actor, Verifier):
            citizen = world[args["citizen"]]
            token = chain.state.citizens[citizen.address].token_id
            inst = chain.state.current_verification[(token, actor.address)]
        else:
            verifier = world[args["verifier"]]
            token = chain.state.citizens[actor.address].token_id
            inst = chain.state.current_verification[(token, verifier.address)]
        state = chain.c_vf.exit_stalled(actor.address, inst.vf_protocol_id)
        notes.append(f"verification exit: {state}")
        return
    else:
        raise ScenarioError(f"unknown exit protocol {protocol!r}")
    notes.append(f"{protocol} exit: closed")


def run_scenario(config: ScenarioConfig, seed: int | None = None,
                 strict: bool = False) -> RunResult:
    world = build_world(config, seed)
    chain = world.chain
    lines: list[str] = [
        f"SCENARIO {config.name} seed={config.seed if seed is None else seed}"]
    for decl in config.parties:
        actor = world[decl.name]
        lines.append(f"PARTY {decl.name} role={decl.role} "
                     f"addr={actor.address.hex()} balance={decl.balance} "
                     f"behavior={decl.behavior}")
    violations: list[str] = []

    for i, step in enumerate(config.script):
        actor = world[step.actor] if step.actor else None
        lines.append(f"STEP {i} actor={step.actor} op={step.op} "
                     f"args={json.dumps(step.args, sort_keys=True)}")
        notes: list[str] = []
        error: str | None = None
        try:
            if step.op != "noop":
                _dispatch(world, actor, step, notes)
        except VaxpassError as exc:
            error = type(exc).__name__
            notes.append(f"error {error}: {exc}")
        lines.extend(f"NOTE {n}" for n in notes)
        if error is not None and error != step.expect_error:
            violations.append(f"step {i}: unexpected {error}")
        elif error is None and step.expect_error:
            violations.append(
                f"step {i}: expected {step.expect_error}, nothing raised")
        audit = chain.escrow_audit_violations()
        violations.extend(f"step {i}: {v}" for v in audit)
        if step.advance:
            chain.advance_time(step.advance)
            lines.append(f"ADVANCE {step.advance} now={chain.now}")
        if violations:
            break

    open_instances = chain.open_instances()
    if strict:
        for inst in open_instances:
            if not inst.get("frozen"):
                violations.append(f"open instance at end: {inst}")
    swept = chain.sweep_vaults()
    if swept:
        lines.append(f"SWEEP {swept} vault escrows returned to their holders")
    for inst in open_instances:
        lines.append(f"OPEN {json.dumps(inst, sort_keys=True)}")

    lines.append("EVENTS")
    lines.extend(chain.ledger.events_text().splitlines())
    lines.append("BALANCES")
    for decl in config.parties:
        actor = world[decl.name]
        lines.append(f"BALANCE {decl.name} {chain.ledger.balance(actor.address)}")
    stats = chain.stats()
    stats["open_instances"] = len(open_instances)
    lines.append("STATS " + json.dumps(stats, sort_keys=True))
    for v in violations:
        lines.append(f"VIOLATION {v}")
    exit_code = 1 if violations else 0
    lines.append(f"RESULT {exit_code}")
    return RunResult(exit_code=exit_code, transcript="\n".join(lines) + "\n",
                     stats=stats, violations=violations)


def stats_from_transcript(text: str) -> dict[str, Any]:
    for line in text.splitlines():
        if line.startswith("STATS "):
            return json.loads(line[len("STATS "):])
    raise ScenarioError("transcript contains no STATS line")
