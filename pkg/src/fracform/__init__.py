"""Fractional-power formation control of unicycle agents around a moving target."""

from fracform.graph import CommModel, build_adjacency, laplacian, spectral_summary, is_connected
from fracform.vehicle import AgentState, ControlInput, VelocityBounds
from fracform.controller import ControllerParams, FormationSpec, consensus_control, spow

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "CommModel",
    "ControlInput",
    "ControllerParams",
    "FormationSpec",
    "VelocityBounds",
    "build_adjacency",
    "consensus_control",
    "is_connected",
    "laplacian",
    "spectral_summary",
    "spow",
]
