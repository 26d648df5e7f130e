"""Deterministic multi-party protocol engine for a blockchain-style
vaccine-passport system: contract state machines over a simulated ledger,
Merkle vial authentication, proxy re-encryption, content-addressed
passport storage, and a scripted scenario runner with honest and
adversarial actors."""

from .cas import ContentID, ContentStore
from .chain import Chain, ProtocolParams, VialState
from .ledger import EscrowId, Ledger, PartyAddress
from .scenario import ScenarioConfig, build_world, run_scenario

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "ContentID",
    "ContentStore",
    "EscrowId",
    "Ledger",
    "PartyAddress",
    "ProtocolParams",
    "ScenarioConfig",
    "VialState",
    "build_world",
    "run_scenario",
    "__version__",
]
