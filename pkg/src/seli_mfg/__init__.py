"""Mean-field game of misinformation spread on a degree-structured network.

Nodes sit in one of four states (susceptible, exposed, latent, infected) and
choose how readily to accept incoming information, trading infection risk
against the quality of what they accept.
"""
from .errors import (
    CalibrationFailed, DegenerateQuadratic, GridMismatch, IntegrationDiverged, InvalidConfig,
    InvalidPopulation, NotConverged, ParseError, SeliError, StepTooLarge,
)
from .model import NetworkModel, NodeClassParams, ScenarioConfig, TimeGrid, reference_scenario, validate
from .dynamics import integrate_forward
from .hjb import ControlPolicy, integrate_backward
from .solver import baseline_evaluation, equilibrium_residual, solve_mfe, summary_metrics

__all__ = [
    "CalibrationFailed", "ControlPolicy", "DegenerateQuadratic", "GridMismatch", "IntegrationDiverged",
    "InvalidConfig", "InvalidPopulation", "NetworkModel", "NodeClassParams", "NotConverged", "ParseError",
    "ScenarioConfig", "SeliError", "StepTooLarge", "TimeGrid", "baseline_evaluation", "equilibrium_residual",
    "integrate_backward", "integrate_forward", "reference_scenario", "solve_mfe", "summary_metrics", "validate",
]
__version__ = "0.1.0"
