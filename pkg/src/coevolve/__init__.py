"""Projective integration in co-evolving frames for 1-D fields and particle simulators."""

from .field import Field1D, FourierCoeffs, Grid
from .frames import FrameState
from .projector import ProjectiveIntegrator, project_linear, solve_beta, tau_step_from_reports

__version__ = "0.1.0"

__all__ = [
    "Field1D",
    "FourierCoeffs",
    "FrameState",
    "Grid",
    "ProjectiveIntegrator",
    "project_linear",
    "solve_beta",
    "tau_step_from_reports",
]
