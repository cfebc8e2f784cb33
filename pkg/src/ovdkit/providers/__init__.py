"""Pluggable sources for neural outputs: staged backbones, proposals, fixtures."""

from .backbone import DEFAULT_STAGES, StagedBackbone, StageSpec, StubSpec, make_stub
from .fixtures import FixtureBundle, generate_bundle, load_fixtures
from .proposals import Proposal, ProposalProvider, synthetic_proposals

__all__ = [
    "DEFAULT_STAGES",
    "FixtureBundle",
    "Proposal",
    "ProposalProvider",
    "StagedBackbone",
    "StageSpec",
    "StubSpec",
    "generate_bundle",
    "load_fixtures",
    "make_stub",
    "synthetic_proposals",
]
