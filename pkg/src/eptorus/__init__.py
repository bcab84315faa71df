"""Pseudospectral Euler-Poincare simulator with blow-up, Besov and peakon checks."""

from .diagnostics import BlowupCertificate, DirectionSpec, riccati_bound
from .dynamics import Outcome, Reason, RhsForm, SimConfig, SimState, integrate, step
from .spectral import Grid

__all__ = [
    "BlowupCertificate",
    "DirectionSpec",
    "Grid",
    "Outcome",
    "Reason",
    "RhsForm",
    "SimConfig",
    "SimState",
    "integrate",
    "riccati_bound",
    "step",
]
